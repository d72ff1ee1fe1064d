#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lfnav/grounding.hpp"
#include "lfnav/perception.hpp"
#include "lfnav/policy.hpp"
#include "lfnav/world.hpp"

namespace lfnav {

// ---- leader ---------------------------------------------------------------

/// How the oracle leader phrases directions.
///   Egocentric       - relative to its own fixed reference heading (the biased leader).
///   FollowerCentric  - relative to the follower's true heading (needs leader_knows_heading).
///   LandmarkRelative - "go to the <landmark>" hints when furniture lies along the path.
enum class FrameMode : std::uint8_t { Egocentric, FollowerCentric, LandmarkRelative };

constexpr std::string_view to_string(FrameMode m) {
    switch (m) {
    case FrameMode::Egocentric: return "Egocentric";
    case FrameMode::FollowerCentric: return "FollowerCentric";
    case FrameMode::LandmarkRelative: return "LandmarkRelative";
    }
    return "?";
}
inline FrameMode parse_frame_mode(std::string_view s) {
    return parse_enum(s, std::array{FrameMode::Egocentric, FrameMode::FollowerCentric, FrameMode::LandmarkRelative},
                      "frame mode");
}

struct OracleLeaderOptions {
    FrameMode frame_mode = FrameMode::FollowerCentric;
    Heading reference_heading = Heading::North;
    int landmark_lookahead = 8;  // path cells scanned for landmark hints
    // Egocentric variants, both off by default. announce_target opens the
    // episode with "go to the <target>"; dead_reckon lets the leader turn its
    // assumed follower heading along with the follower's reported rotations.
    bool announce_target = false;
    bool dead_reckon = false;
};

/// Motion instruction for the head of an action plan. Step counts are capped
/// so each instruction unfolds into at most three primitive actions.
inline Instruction instruction_from_plan(std::span<const Action> plan, FrameTag frame) {
    if (plan.empty()) return DeclareArrived{};
    std::size_t i = 0;
    int right = 0;
    int left = 0;
    while (i < plan.size() && plan[i] != Action::MoveAhead) {
        (plan[i] == Action::RotateRight ? right : left)++;
        ++i;
    }
    int moves = 0;
    while (i + std::size_t(moves) < plan.size() && plan[i + std::size_t(moves)] == Action::MoveAhead) ++moves;
    if (moves > 0) {
        if (right == 0 && left == 0) return Motion{RelativeDirection::Forward, std::min(moves, 3), frame};
        if (right == 1 && left == 0) return Motion{RelativeDirection::Right, std::min(moves, 2), frame};
        if (left == 1 && right == 0) return Motion{RelativeDirection::Left, std::min(moves, 2), frame};
        if (right == 2 || left == 2) return Motion{RelativeDirection::Back, 1, frame};
    }
    if (right > 0) return Rotate{RotationDirection::Right, std::min(right, 2)};
    return Rotate{RotationDirection::Left, std::max(1, std::min(left, 2))};
}

/// Leader that plans the true shortest pose path on the global map.
///
/// An Egocentric leader phrases every step as if the follower faced the
/// leader's reference heading. When a query arrives it switches frames: it
/// works out which follower headings are consistent with what the follower
/// reported seeing, then keeps that belief up to date from the follower's
/// action reports and answers in the follower's frame from then on.
class OracleLeader final : public LeaderPolicy {
public:
    explicit OracleLeader(OracleLeaderOptions options = {}) : options_(options) {}

    Instruction propose(const LeaderView& view, const DialogueHistory& dialogue) override {
        track(view, dialogue);
        if (options_.frame_mode == FrameMode::Egocentric && options_.announce_target && !announced_) {
            announced_ = true;
            return GoToLandmark{view.goal.category, view.goal.object_id, std::nullopt};
        }
        const auto [heading, frame] = planning_frame(view);
        const auto plan = plan_or_throw(view, heading);
        if (plan.empty()) return DeclareArrived{};
        if (options_.frame_mode == FrameMode::LandmarkRelative && !switched_) {
            if (auto hint = landmark_hint(view, heading, plan)) return *hint;
        }
        return instruction_from_plan(plan, frame);
    }

    Instruction reground(const LeaderView& view, const Instruction&, const Query& query,
                         const DialogueHistory& dialogue) override {
        track(view, dialogue);
        if (query.ungrounded_reference.landmark) rejected_landmarks_.insert(*query.ungrounded_reference.landmark);
        switch_frame(view, query);
        const Heading heading = options_.frame_mode == FrameMode::FollowerCentric && view.follower_heading
                                    ? *view.follower_heading
                                    : belief_.front().heading;
        const auto plan = plan_or_throw(view, heading);
        if (plan.empty()) return DeclareArrived{};
        if (plan.front() != Action::MoveAhead) {
            const Action turn = plan.front();
            int turns = 0;
            while (std::size_t(turns) < plan.size() && plan[std::size_t(turns)] == turn && turns < 2) ++turns;
            return Rotate{turn == Action::RotateLeft ? RotationDirection::Left : RotationDirection::Right, turns};
        }
        return instruction_from_plan(plan, FrameTag::follower());
    }

    bool frame_switched() const { return switched_; }
    const std::vector<Pose>& belief() const { return belief_; }

private:
    std::vector<Action> plan_or_throw(const LeaderView& view, Heading heading) const {
        const auto& target = view.world.object(view.goal.object_id);
        auto plan = plan_actions(view.world, {view.follower_cell, heading}, target.position);
        if (!plan) throw Error(ErrorCode::NoPath, "success region unreachable from follower position");
        return std::move(*plan);
    }

    std::pair<Heading, FrameTag> planning_frame(const LeaderView& view) const {
        if (options_.frame_mode == FrameMode::FollowerCentric) {
            if (!view.follower_heading) {
                throw Error(ErrorCode::PreconditionViolation, "FollowerCentric leader requires the follower heading");
            }
            return {*view.follower_heading, FrameTag::follower()};
        }
        if (switched_) return {belief_.front().heading, FrameTag::follower()};
        if (options_.frame_mode == FrameMode::LandmarkRelative && view.follower_heading) {
            return {*view.follower_heading, FrameTag::follower()};
        }
        return {options_.dead_reckon ? belief_.front().heading : options_.reference_heading, FrameTag::leader()};
    }

    // Before any query the belief is a single guess: the follower started out
    // facing the reference heading. It only matters with dead_reckon set.
    void track(const LeaderView& view, const DialogueHistory& dialogue) {
        if (belief_.empty()) belief_.push_back({view.follower_cell, options_.reference_heading});
        for (; cursor_ < dialogue.size(); ++cursor_) {
            const auto* report = std::get_if<Report>(&dialogue[cursor_].payload);
            if (!report) continue;
            for (auto& pose : belief_) {
                for (Action a : report->actions) pose = apply_action(view.world, pose, a).pose;
            }
        }
        if (!switched_) {
            belief_.front().cell = view.follower_cell;
            return;
        }
        std::erase_if(belief_, [&](const Pose& p) { return p.cell != view.follower_cell; });
        std::sort(belief_.begin(), belief_.end());
        belief_.erase(std::unique(belief_.begin(), belief_.end()), belief_.end());
        if (belief_.empty()) reset_belief(view.follower_cell);
    }

    void reset_belief(Cell cell) {
        belief_.clear();
        for (Heading h : kHeadings) belief_.push_back({cell, h});
    }

    // Headings under which the follower would have seen what the query reports.
    void switch_frame(const LeaderView& view, const Query& query) {
        std::vector<Pose> consistent;
        for (Heading h : kHeadings) {
            const Pose candidate{view.follower_cell, h};
            const auto obs = observe(view.world, candidate, view.follower_profile);
            if (obs.facing_blocked == query.facing_blocked && visible_landmarks(obs) == query.visible_landmarks) {
                consistent.push_back(candidate);
            }
        }
        if (switched_) {
            std::vector<Pose> both;
            for (const auto& p : belief_) {
                if (std::find(consistent.begin(), consistent.end(), p) != consistent.end()) both.push_back(p);
            }
            if (!both.empty()) consistent = std::move(both);
        }
        belief_ = std::move(consistent);
        if (belief_.empty()) reset_belief(view.follower_cell);
        switched_ = true;
    }

    std::optional<Instruction> landmark_hint(const LeaderView& view, Heading heading, std::span<const Action> plan) const {
        std::vector<Cell> path;
        Pose p{view.follower_cell, heading};
        for (Action a : plan) {
            p = apply_action(view.world, p, a).pose;
            if (a == Action::MoveAhead) path.push_back(p.cell);
            if (int(path.size()) >= options_.landmark_lookahead) break;
        }
        for (const auto& object : view.world.objects()) {
            if (!object.is_landmark || rejected_landmarks_.count(object.category)) continue;
            if (squared_cells(object.position, view.follower_cell) <= 2) continue;
            for (Cell c : path) {
                if (squared_cells(c, object.position) <= 2) {
                    return GoToLandmark{object.category, std::nullopt, std::string("on the way to the ") + view.goal.category};
                }
            }
        }
        return std::nullopt;
    }

    OracleLeaderOptions options_;
    bool switched_ = false;
    bool announced_ = false;
    std::vector<Pose> belief_;
    std::size_t cursor_ = 0;
    std::set<std::string> rejected_landmarks_;
};

// ---- followers ------------------------------------------------------------

/// Executes every instruction as given; never queries.
class ObedientFollower final : public FollowerPolicy {
public:
    FollowerReaction react(const Observation& local, const Instruction& instruction, ProtocolMode) override {
        return ExecuteResolved{resolve_instruction(instruction, local), std::nullopt};
    }
};

/// Verifies instructions against the local view in Pull mode and queries
/// when grounding fails. A sideways or backward Motion is carried out as the
/// turn first; the move leg is verified again once it is in view.
class VerifyingFollower final : public FollowerPolicy {
public:
    explicit VerifyingFollower(bool pull_on_blocked = true) : pull_on_blocked_(pull_on_blocked) {}

    FollowerReaction react(const Observation& local, const Instruction& instruction, ProtocolMode mode) override {
        if (mode == ProtocolMode::Push) return ExecuteResolved{resolve_instruction(instruction, local), std::nullopt};
        const auto verdict = verify(instruction, local);
        const bool ask = verdict.reason == GroundingReason::UnknownLandmark ||
                         (verdict.reason == GroundingReason::BlockedMotion && pull_on_blocked_);
        if (ask) return make_query(instruction, local);
        auto resolution = resolve_instruction(instruction, local);
        const auto* motion = std::get_if<Motion>(&instruction);
        if (!pull_on_blocked_ || !motion || motion->direction == RelativeDirection::Forward) {
            return ExecuteResolved{std::move(resolution), std::nullopt};
        }
        std::erase(resolution.actions, Action::MoveAhead);
        return ExecuteResolved{std::move(resolution), Motion{RelativeDirection::Forward, motion->steps, motion->frame}};
    }

private:
    bool pull_on_blocked_;
};

// ---- solo agents ----------------------------------------------------------

/// The leader's own planner driving a body directly. Requires a global
/// observation (observer pose known).
class OracleSolo final : public SoloPolicy {
public:
    explicit OracleSolo(const GridWorld& world) : world_(&world) {}

    Action act(const Observation& observation, const Goal& goal, const SoloMemory&) override {
        if (!observation.observer_pose) {
            throw Error(ErrorCode::PreconditionViolation, "OracleSolo needs a global observation");
        }
        const auto plan = plan_actions(*world_, *observation.observer_pose, world_->object(goal.object_id).position);
        if (!plan) throw Error(ErrorCode::NoPath, "success region unreachable");
        return plan->empty() ? Action::Stop : plan->front();
    }

private:
    const GridWorld* world_;
};

/// Map-free solo agent: heads for the target once it has been seen, otherwise
/// explores toward the nearest unvisited cell. Works in a private odometry
/// frame (start = origin, facing "North"), so it behaves identically whether
/// or not the observation carries global positions.
class GreedySolo final : public SoloPolicy {
public:
    Action act(const Observation& obs, const Goal& goal, const SoloMemory& memory) override {
        if (!started_) {
            started_ = true;
            visit(odom_.cell);
        } else if (memory.last_action) {
            integrate(*memory.last_action, memory.last_result.value_or(ActionResult::Ok));
        }
        if (obs.facing_blocked) mark_blocked(neighbor(odom_.cell, odom_.heading));
        if (const Percept* p = obs.find_object(goal.object_id)) target_ = estimate(*p);

        std::optional<Heading> dir;
        if (target_) {
            dir = first_step([&](Cell c) { return within_success_radius(c, *target_); });
        } else {
            const Cell ahead = neighbor(odom_.cell, odom_.heading);
            if (!blocked(ahead) && visits(ahead) == 0) return Action::MoveAhead;
            dir = first_step([&](Cell c) { return visits(c) == 0; });
        }
        if (!dir) return Action::RotateRight;
        switch (quarter_turns_between(odom_.heading, *dir)) {
        case 0: return Action::MoveAhead;
        case 1: return Action::RotateRight;
        case 3: return Action::RotateLeft;
        default: return Action::RotateRight;
        }
    }

private:
    static constexpr int kOrigin = 64;
    static constexpr int kSpan = 2 * kOrigin + 1;

    static bool inside(Cell c) { return std::abs(c.col) <= kOrigin && std::abs(c.row) <= kOrigin; }
    static std::size_t slot(Cell c) { return std::size_t(c.row + kOrigin) * kSpan + std::size_t(c.col + kOrigin); }

    bool blocked(Cell c) const { return !inside(c) || blocked_[slot(c)]; }
    int visits(Cell c) const { return inside(c) ? visits_[slot(c)] : 0; }
    void mark_blocked(Cell c) {
        if (inside(c)) blocked_[slot(c)] = true;
    }
    void visit(Cell c) {
        if (inside(c)) ++visits_[slot(c)];
    }

    void integrate(Action a, ActionResult r) {
        switch (a) {
        case Action::RotateLeft: odom_.heading = rotate_left(odom_.heading); break;
        case Action::RotateRight: odom_.heading = rotate_right(odom_.heading); break;
        case Action::MoveAhead:
            if (r == ActionResult::Ok) {
                odom_.cell = neighbor(odom_.cell, odom_.heading);
                visit(odom_.cell);
            } else {
                mark_blocked(neighbor(odom_.cell, odom_.heading));
            }
            break;
        case Action::Stop: break;
        }
    }

    Cell estimate(const Percept& p) const {
        const double rad = p.bearing * std::numbers::pi / 180.0;
        const int fwd = int(std::lround(p.distance * std::cos(rad) / kCellSize));
        const int right = int(std::lround(p.distance * std::sin(rad) / kCellSize));
        const Cell f = step_delta(odom_.heading);
        const Cell r = step_delta(rotate_right(odom_.heading));
        return {odom_.cell.col + fwd * f.col + right * r.col, odom_.cell.row + fwd * f.row + right * r.row};
    }

    // Breadth-first search over cells not known to be blocked (unknown cells
    // are assumed free); returns the first heading of a shortest route to a
    // cell satisfying `goal`. Expansion order N, E, S, W breaks ties.
    template <typename GoalFn>
    std::optional<Heading> first_step(GoalFn goal) const {
        std::vector<int> first(std::size_t(kSpan) * kSpan, -1);
        std::deque<Cell> frontier;
        first[slot(odom_.cell)] = 4;
        frontier.push_back(odom_.cell);
        while (!frontier.empty()) {
            const Cell c = frontier.front();
            frontier.pop_front();
            const int via = first[slot(c)];
            if (c != odom_.cell && goal(c)) return static_cast<Heading>(via);
            for (Heading h : kHeadings) {
                const Cell n = neighbor(c, h);
                if (blocked(n) || first[slot(n)] != -1) continue;
                first[slot(n)] = c == odom_.cell ? static_cast<int>(h) : via;
                frontier.push_back(n);
            }
        }
        return std::nullopt;
    }

    bool started_ = false;
    Pose odom_{{0, 0}, Heading::North};
    std::vector<int> visits_ = std::vector<int>(std::size_t(kSpan) * kSpan, 0);
    std::vector<bool> blocked_ = std::vector<bool>(std::size_t(kSpan) * kSpan, false);
    std::optional<Cell> target_;
};

} // namespace lfnav
