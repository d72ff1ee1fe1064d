#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfnav/dialogue.hpp"
#include "lfnav/error.hpp"

namespace lfnav {

/// Sum-and-count mean; Undefined (nullopt) when nothing was added.
struct MeanAccumulator {
    long long sum = 0;
    long long count = 0;

    void add(long long v) {
        sum += v;
        ++count;
    }
    std::optional<double> mean() const { return count ? std::optional(double(sum) / double(count)) : std::nullopt; }
};

struct CommStats {
    std::optional<double> push_on_success;
    std::optional<double> push_on_failure;
    std::optional<double> pull_on_success;
    std::optional<double> pull_on_failure;

    friend bool operator==(const CommStats&, const CommStats&) = default;
};

struct RunSummary {
    std::string condition;
    std::size_t n_episodes = 0;
    double success_rate = 0.0;
    std::optional<double> sts;  // Undefined with zero successes
    double spl = 0.0;
    CommStats comm;

    friend bool operator==(const RunSummary&, const RunSummary&) = default;
};

namespace detail {
inline void require_logs(std::span<const TrajectoryLog> logs) {
    if (logs.empty()) throw Error(ErrorCode::EmptyLogs, "no trajectory logs");
}
} // namespace detail

inline double success_rate(std::span<const TrajectoryLog> logs) {
    detail::require_logs(logs);
    const auto n = std::count_if(logs.begin(), logs.end(), [](const auto& l) { return l.success(); });
    return double(n) / double(logs.size());
}

/// Mean steps over successful episodes only.
inline std::optional<double> sts(std::span<const TrajectoryLog> logs) {
    MeanAccumulator acc;
    for (const auto& l : logs) {
        if (l.success()) acc.add(l.steps_taken);
    }
    return acc.mean();
}

/// SPL with both L (optimal_steps) and P (steps_taken) counted in actions.
inline double spl(std::span<const TrajectoryLog> logs) {
    detail::require_logs(logs);
    std::vector<double> terms;
    for (const auto& l : logs) {
        if (l.optimal_steps <= 0) {
            throw Error(ErrorCode::MissingOptimal, "episode " + l.episode_id + " has no optimal_steps");
        }
        if (!l.success()) continue;
        terms.push_back(double(l.optimal_steps) / double(std::max(l.steps_taken, l.optimal_steps)));
    }
    // Summed in sorted order so the result does not depend on log order.
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    return total / double(logs.size());
}

inline CommStats comm_stats(std::span<const TrajectoryLog> logs) {
    MeanAccumulator push_s, push_f, pull_s, pull_f;
    for (const auto& l : logs) {
        (l.success() ? push_s : push_f).add(l.push_count);
        (l.success() ? pull_s : pull_f).add(l.pull_count);
    }
    return {push_s.mean(), push_f.mean(), pull_s.mean(), pull_f.mean()};
}

inline RunSummary summarize(std::string condition, std::span<const TrajectoryLog> logs) {
    return {std::move(condition), logs.size(), success_rate(logs), sts(logs), spl(logs), comm_stats(logs)};
}

struct SuccessGap {
    double points = 0.0;                // percentage points
    std::optional<double> loss_ratio;   // gap as a fraction of the leader-view rate

    friend bool operator==(const SuccessGap&, const SuccessGap&) = default;
};

inline SuccessGap success_gap(const RunSummary& leader_view, const RunSummary& follower_view) {
    const double gap = leader_view.success_rate - follower_view.success_rate;
    SuccessGap out{gap * 100.0, std::nullopt};
    if (leader_view.success_rate > 0.0) out.loss_ratio = gap / leader_view.success_rate;
    return out;
}

/// (after - before) / before; Undefined when before is zero.
inline std::optional<double> relative_improvement(double before, double after) {
    if (before == 0.0) return std::nullopt;
    return (after - before) / before;
}

struct AblationRow {
    std::string condition;
    double sr_low = 0.0;
    double sr_high = 0.0;
    std::optional<double> relative_improvement;
    std::size_t rerun = 0;                  // episodes that failed at the low horizon
    std::size_t recovered = 0;              // of those, successes at the high horizon
    std::size_t recovered_beyond_low = 0;   // recovered episodes that needed more than the low horizon
    std::map<int, int> recovered_steps;     // steps_taken -> count, over recovered episodes

    friend bool operator==(const AblationRow&, const AblationRow&) = default;
};

/// Merges a high-horizon run into a low-horizon run. `high` may hold only the
/// re-run failures or a full fresh run; for each episode the high result
/// replaces the low one when present.
inline AblationRow ablation_report(std::string condition, std::span<const TrajectoryLog> low,
                                   std::span<const TrajectoryLog> high, int low_horizon) {
    detail::require_logs(low);
    std::map<std::string, const TrajectoryLog*, std::less<>> by_id;
    for (const auto& l : high) by_id[l.episode_id] = &l;
    AblationRow row;
    row.condition = std::move(condition);
    row.sr_low = success_rate(low);
    std::size_t merged_successes = 0;
    for (const auto& l : low) {
        const auto it = by_id.find(l.episode_id);
        const TrajectoryLog& merged = it == by_id.end() ? l : *it->second;
        merged_successes += merged.success();
        if (l.success()) continue;
        ++row.rerun;
        if (it == by_id.end() || !merged.success()) continue;
        ++row.recovered;
        ++row.recovered_steps[merged.steps_taken];
        if (merged.steps_taken > low_horizon) ++row.recovered_beyond_low;
    }
    row.sr_high = double(merged_successes) / double(low.size());
    row.relative_improvement = lfnav::relative_improvement(row.sr_low, row.sr_high);
    return row;
}

/// Logs grouped by condition tag, preserving first-seen order of conditions.
inline std::vector<std::pair<std::string, std::vector<TrajectoryLog>>> group_by_condition(std::vector<TrajectoryLog> logs) {
    std::vector<std::pair<std::string, std::vector<TrajectoryLog>>> out;
    for (auto& l : logs) {
        auto it = std::find_if(out.begin(), out.end(), [&](const auto& g) { return g.first == l.condition; });
        if (it == out.end()) {
            out.emplace_back(l.condition, std::vector<TrajectoryLog>{});
            it = std::prev(out.end());
        }
        it->second.push_back(std::move(l));
    }
    return out;
}

} // namespace lfnav
