#pragma once

// Human-readable reports and transcripts, plus the machine-readable summary.

#include <cstdio>
#include <string>
#include <vector>

#include "lfnav/metrics.hpp"
#include "lfnav/serialize.hpp"

namespace lfnav {

namespace detail {

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string percent(double fraction) { return fixed(fraction * 100.0, 1) + "%"; }
inline std::string maybe(const std::optional<double>& v, int digits = 2) { return v ? fixed(*v, digits) : "-"; }

inline Json nullable(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

/// Plain text table: first row is the header, columns padded to fit.
inline std::string text_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    auto rule = [&] {
        std::string s = "+";
        for (auto w : width) s += std::string(w + 2, '-') + "+";
        return s + "\n";
    };
    std::string out = rule();
    for (std::size_t n = 0; n < rows.size(); ++n) {
        out += "|";
        for (std::size_t i = 0; i < width.size(); ++i) {
            const std::string cell = i < rows[n].size() ? rows[n][i] : "";
            out += " " + cell + std::string(width[i] - cell.size(), ' ') + " |";
        }
        out += "\n";
        if (n == 0) out += rule();
    }
    return out + rule();
}

} // namespace detail

// ---- summaries ------------------------------------------------------------

inline std::string render_performance_table(std::span<const RunSummary> summaries) {
    std::vector<std::vector<std::string>> rows{{"Policy Condition", "Episodes", "Success Rate (SR)", "Avg. STS", "SPL"}};
    for (const auto& s : summaries) {
        rows.push_back({s.condition, std::to_string(s.n_episodes), detail::percent(s.success_rate), detail::maybe(s.sts),
                        detail::fixed(s.spl, 2)});
    }
    return detail::text_table(rows);
}

inline std::string render_communication_table(std::span<const RunSummary> summaries) {
    std::vector<std::vector<std::string>> rows{{"Condition", "Instructions (Success)", "Instructions (Failure)",
                                                "Queries (Success)", "Queries (Failure)"}};
    for (const auto& s : summaries) {
        rows.push_back({s.condition, detail::maybe(s.comm.push_on_success), detail::maybe(s.comm.push_on_failure),
                        detail::maybe(s.comm.pull_on_success), detail::maybe(s.comm.pull_on_failure)});
    }
    return detail::text_table(rows);
}

struct ReportOptions {
    std::optional<std::string> leader_view;    // condition names for the success gap
    std::optional<std::string> follower_view;
};

struct RunReport {
    std::vector<RunSummary> summaries;
    std::optional<SuccessGap> gap;
    std::string leader_view;
    std::string follower_view;
};

inline RunReport build_report(std::vector<TrajectoryLog> logs, const ReportOptions& opt) {
    if (logs.empty()) throw Error(ErrorCode::PreconditionViolation, "no trajectory logs to report");
    RunReport r;
    for (auto& [name, group] : group_by_condition(std::move(logs))) r.summaries.push_back(summarize(name, group));
    auto find = [&](const std::string& name) -> const RunSummary* {
        for (const auto& s : r.summaries) {
            if (s.condition == name) return &s;
        }
        throw Error(ErrorCode::ConfigError, "no logs for condition '" + name + "'");
    };
    if (opt.leader_view && opt.follower_view) {
        r.gap = success_gap(*find(*opt.leader_view), *find(*opt.follower_view));
        r.leader_view = *opt.leader_view;
        r.follower_view = *opt.follower_view;
    }
    return r;
}

inline std::string render_report(const RunReport& r) {
    std::string out = "Aggregate performance\n" + render_performance_table(r.summaries);
    out += "\nCommunication (mean count per episode)\n" + render_communication_table(r.summaries);
    if (r.gap) {
        out += "\nSuccess gap (" + r.leader_view + " minus " + r.follower_view + "): " + detail::fixed(r.gap->points, 1) +
               " points";
        out += r.gap->loss_ratio ? ", " + detail::percent(*r.gap->loss_ratio) + " of leader-view successes lost\n"
                                 : ", loss ratio undefined\n";
    }
    return out;
}

inline Json to_json(const RunSummary& s) {
    return Json{{"condition", s.condition},
                {"n_episodes", s.n_episodes},
                {"success_rate", s.success_rate},
                {"sts", detail::nullable(s.sts)},
                {"spl", s.spl},
                {"avg_push_on_success", detail::nullable(s.comm.push_on_success)},
                {"avg_push_on_failure", detail::nullable(s.comm.push_on_failure)},
                {"avg_pull_on_success", detail::nullable(s.comm.pull_on_success)},
                {"avg_pull_on_failure", detail::nullable(s.comm.pull_on_failure)}};
}

inline Json to_json(const RunReport& r) {
    Json conditions = Json::array();
    for (const auto& s : r.summaries) conditions.push_back(to_json(s));
    Json j{{"v", kSchemaVersion}, {"conditions", std::move(conditions)}};
    if (r.gap) {
        j["success_gap"] = Json{{"leader_view", r.leader_view},
                                {"follower_view", r.follower_view},
                                {"points", r.gap->points},
                                {"loss_ratio", detail::nullable(r.gap->loss_ratio)}};
    } else {
        j["success_gap"] = nullptr;
    }
    return j;
}

// ---- ablation -------------------------------------------------------------

inline std::string render_ablation(std::span<const AblationRow> rows, int low, int high) {
    const auto lo = std::to_string(low);
    const auto hi = std::to_string(high);
    std::vector<std::vector<std::string>> table{{"Agent", lo + "-Step SR", hi + "-Step SR", "Relative Imp.", "Re-run",
                                                 "Recovered", "Needed > " + lo}};
    for (const auto& r : rows) {
        std::string imp = "-";
        if (r.relative_improvement) imp = (*r.relative_improvement >= 0 ? "+" : "") + detail::percent(*r.relative_improvement);
        table.push_back({r.condition, detail::percent(r.sr_low), detail::percent(r.sr_high), imp, std::to_string(r.rerun),
                         std::to_string(r.recovered), std::to_string(r.recovered_beyond_low)});
    }
    std::string out = detail::text_table(table);
    for (const auto& r : rows) {
        if (r.recovered_steps.empty()) continue;
        out += "\nRecovered-episode steps, " + r.condition + "\n";
        for (const auto& [steps, count] : r.recovered_steps) {
            out += "  " + std::to_string(steps) + " steps: " + std::string(std::size_t(count), '#') + " " +
                   std::to_string(count) + "\n";
        }
    }
    return out;
}

inline Json to_json(const AblationRow& r) {
    Json hist = Json::array();
    for (const auto& [steps, count] : r.recovered_steps) hist.push_back({{"steps", steps}, {"count", count}});
    return Json{{"condition", r.condition},
                {"sr_low", r.sr_low},
                {"sr_high", r.sr_high},
                {"relative_improvement", detail::nullable(r.relative_improvement)},
                {"rerun", r.rerun},
                {"recovered", r.recovered},
                {"recovered_beyond_low", r.recovered_beyond_low},
                {"recovered_steps", std::move(hist)}};
}

// ---- transcripts ----------------------------------------------------------

inline std::string describe(const Instruction& instruction) {
    return std::visit(
        [](const auto& i) -> std::string {
            using T = std::decay_t<decltype(i)>;
            if constexpr (std::is_same_v<T, Motion>) {
                std::string s = "Move " + std::string(to_string(i.direction)) + " " + std::to_string(i.steps) +
                                (i.steps == 1 ? " step" : " steps");
                s += " [" + std::string(to_string(i.frame.kind));
                if (i.frame.compass) s += " " + std::string(to_string(*i.frame.compass));
                return s + "]";
            } else if constexpr (std::is_same_v<T, GoToLandmark>) {
                std::string s = "Go to the " + i.category;
                if (i.relation) s += " (" + *i.relation + ")";
                return s;
            } else if constexpr (std::is_same_v<T, Rotate>) {
                return "Turn " + std::to_string(90 * i.quarter_turns) + " degrees " +
                       (i.direction == RotationDirection::Left ? "left" : "right");
            } else {
                return "You have arrived";
            }
        },
        instruction);
}

inline std::string describe(const Query& q) {
    std::string seen = q.facing_blocked ? "I see a wall" : "";
    if (!q.visible_landmarks.empty()) {
        seen += seen.empty() ? "I see " : " and ";
        for (std::size_t i = 0; i < q.visible_landmarks.size(); ++i) {
            seen += (i ? ", " : "") + std::string("a ") + q.visible_landmarks[i];
        }
    }
    if (seen.empty()) seen = "I see nothing nearby";
    if (q.ungrounded_reference.landmark) {
        const auto& l = *q.ungrounded_reference.landmark;
        std::string s = seen + ". I do not see the " + l + ". Which direction is the " + l;
        if (!q.visible_landmarks.empty()) s += " from the " + q.visible_landmarks.front();
        return s + "?";
    }
    std::string s = seen + ". I cannot move ";
    s += q.ungrounded_reference.motion ? std::string(to_string(*q.ungrounded_reference.motion)) : "that way";
    return s + ". Which way is the target?";
}

inline std::string describe_actions(std::span<const Action> actions) {
    std::string s;
    for (std::size_t i = 0; i < actions.size(); ++i) s += (i ? ", " : "") + std::string(to_string(actions[i]));
    return s;
}

inline std::pair<std::string, std::string> transcript_row(const Message& m) {
    return std::visit(
        [&](const auto& p) -> std::pair<std::string, std::string> {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Instruction>) {
                return {"Leader", "Instruction: \"" + describe(p) + "\""};
            } else if constexpr (std::is_same_v<T, Query>) {
                return {"Follower", "Query (Pull): \"" + describe(p) + "\""};
            } else if constexpr (std::is_same_v<T, Report>) {
                return {"Follower", "Response: \"" + describe_actions(p.actions) + "\""};
            } else {
                return {"System", "Event: " + std::string(to_string(p.kind)) + (p.detail.empty() ? "" : " (" + p.detail + ")")};
            }
        },
        m.payload);
}

/// Two-column Agent / Message-or-Action transcript of one episode.
inline std::string render_transcript(const TrajectoryLog& log) {
    std::vector<std::vector<std::string>> rows{{"Agent", "Message / Action"}};
    const std::string actor = log.mode ? "Follower" : "Agent";
    auto pose_text = [](const Pose& p) {
        return "(" + std::to_string(p.cell.col) + "," + std::to_string(p.cell.row) + ") " + std::string(to_string(p.heading));
    };
    for (const auto& s : log.steps) {
        Event collision;
        bool collided = false;
        for (const auto& m : s.messages) {
            // Collision events are attached after the action; show them after it.
            if (const auto* e = std::get_if<Event>(&m.payload); e && e->kind == EventKind::Collision) {
                collision = *e;
                collided = true;
                continue;
            }
            auto [who, what] = transcript_row(m);
            rows.push_back({who, what});
        }
        rows.push_back({actor, "Action " + std::to_string(s.step_index) + ": " + std::string(to_string(s.action)) + " -> " +
                                   std::string(to_string(s.action_result)) + ", now at " + pose_text(s.follower_pose)});
        if (collided) rows.push_back({"System", "Event: Collision (" + collision.detail + ")"});
    }
    for (const auto& m : log.tail_messages) {
        auto [who, what] = transcript_row(m);
        rows.push_back({who, what});
    }
    rows.push_back({"System", "Outcome: " + std::string(to_string(log.outcome)) + " after " + std::to_string(log.steps_taken) +
                                  " steps, " + detail::fixed(log.final_distance, 2) + " m from the target"});
    std::string header = "Episode " + log.episode_id + "  scene " + log.scene_id + "  condition " + log.condition;
    if (log.mode) header += "  mode " + std::string(to_string(*log.mode));
    header += "  t_max " + std::to_string(log.t_max) + "  target " + log.target_object_id + "\n";
    return header + detail::text_table(rows);
}

} // namespace lfnav
