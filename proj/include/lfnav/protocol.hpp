#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lfnav/dialogue.hpp"
#include "lfnav/episodes.hpp"
#include "lfnav/grounding.hpp"
#include "lfnav/perception.hpp"
#include "lfnav/policy.hpp"
#include "lfnav/world.hpp"

namespace lfnav {

struct EpisodeOptions {
    std::string condition;
    bool leader_knows_heading = false;
    Heading leader_heading = Heading::North;  // the leader's notional body faces this way
    SensorProfile follower_profile = lfnav::follower_profile();
    int dialogue_cap_factor = 3;              // message cap = factor * t_max
    int max_regrounds = 2;                    // consecutive re-groundings before a Rotate fallback
};

namespace detail {

inline bool recoverable(const Error& e) {
    switch (e.code()) {
    case ErrorCode::PolicyFailure:
    case ErrorCode::ParseError:
    case ErrorCode::NoPath:
    case ErrorCode::UnresolvableInstruction: return true;
    default: return false;
    }
}

/// Shared bookkeeping for one episode: dialogue, counters, step records.
class EpisodeRecorder {
public:
    EpisodeRecorder(TrajectoryLog& log, DialogueHistory& history) : log_(log), history_(history) {}

    void emit(Message m) {
        if (m.kind() == MessageKind::Instruction) ++log_.push_count;
        if (m.kind() == MessageKind::Query) ++log_.pull_count;
        history_.append(m);
        pending_.push_back(std::move(m));
    }

    StepRecord& record(StepRecord r) {
        r.messages = std::move(pending_);
        pending_.clear();
        log_.steps.push_back(std::move(r));
        return log_.steps.back();
    }

    /// Attaches a message to the most recent step record.
    void emit_on_last_step(Message m) {
        history_.append(m);
        log_.steps.back().messages.push_back(std::move(m));
    }

    void finish() {
        log_.tail_messages = std::move(pending_);
        pending_.clear();
    }

private:
    TrajectoryLog& log_;
    DialogueHistory& history_;
    std::vector<Message> pending_;
};

inline TrajectoryLog start_log(const EpisodeSpec& spec, std::string condition, int t_max, std::uint64_t seed) {
    if (t_max < 1) throw Error(ErrorCode::PreconditionViolation, "t_max must be >= 1");
    TrajectoryLog log;
    log.episode_id = spec.episode_id;
    log.scene_id = spec.scene_id;
    log.condition = std::move(condition);
    log.seed = seed;
    log.t_max = t_max;
    log.start_pose = spec.start_pose;
    log.target_object_id = spec.target_object_id;
    log.optimal_steps = spec.optimal_steps;
    return log;
}

inline void finish_log(TrajectoryLog& log, Pose final_pose, Cell target) {
    log.final_pose = final_pose;
    log.final_distance = euclidean_distance(final_pose.cell, target);
    log.outcome = within_success_radius(final_pose.cell, target) ? Outcome::Success : Outcome::Timeout;
}

} // namespace detail

/// One Leader-Follower episode.
///
/// Each round the leader proposes an instruction. In Pull mode the follower
/// may answer with a query instead of acting; the leader then re-grounds, at
/// most `max_regrounds` times in a row before a Rotate(Right, 1) fallback is
/// substituted. In Push mode any query is a protocol violation. Only executed
/// MoveAhead / Rotate actions consume steps; messages are free but capped.
inline TrajectoryLog run_episode(const EpisodeSpec& spec, const GridWorld& world, LeaderPolicy& leader,
                                 FollowerPolicy& follower, ProtocolMode mode, int t_max, std::uint64_t seed,
                                 const EpisodeOptions& options = {}) {
    TrajectoryLog log = detail::start_log(spec, options.condition, t_max, seed);
    log.mode = mode;
    DialogueHistory history;
    detail::EpisodeRecorder rec(log, history);

    const auto& target = world.object(spec.target_object_id);
    const Goal goal{target.object_id, target.category};
    const Pose leader_pose{spec.start_pose.cell, options.leader_heading};
    const std::size_t cap = std::size_t(options.dialogue_cap_factor) * std::size_t(t_max);
    Pose pose = spec.start_pose;
    bool done = within_success_radius(pose.cell, target.position);

    auto view = [&] {
        return LeaderView{world, observe(world, leader_pose, leader_profile()), pose.cell,
                          options.leader_knows_heading ? std::optional<Heading>(pose.heading) : std::nullopt, goal,
                          options.follower_profile};
    };
    // Every dialogue turn goes through `say`; once the cap is reached the
    // turn is dropped and a single DialogueCap event is recorded instead.
    bool capped = false;
    auto say = [&](Message m) {
        if (capped) return false;
        if (history.size() >= cap) {
            rec.emit(Message::event(log.steps_taken, EventKind::DialogueCap, "dialogue cap of " + std::to_string(cap) + " messages"));
            capped = true;
            return false;
        }
        rec.emit(std::move(m));
        return true;
    };

    try {
        while (!done && log.steps_taken < t_max && !capped) {
            const LeaderView lv = view();
            std::optional<Instruction> current = leader.propose(lv, history);
            validate(*current);
            if (!say(Message::instruction(log.steps_taken, *current))) break;
            int regrounds = 0;
            bool stopped = false;
            while (current && !done && log.steps_taken < t_max) {
                const Observation local = observe(world, pose, options.follower_profile);
                auto reaction = follower.react(local, *current, mode);
                if (const auto* query = std::get_if<Query>(&reaction)) {
                    if (mode == ProtocolMode::Push) {
                        throw Error(ErrorCode::PolicyFailure, "follower queried under Push protocol");
                    }
                    if (!say(Message::query(log.steps_taken, *query))) break;
                    if (regrounds >= options.max_regrounds) {
                        current = Rotate{RotationDirection::Right, 1};
                        if (!say(Message::event(log.steps_taken, EventKind::Fallback, "re-grounding limit reached"))) break;
                    } else {
                        current = leader.reground(view(), *current, *query, history);
                        validate(*current);
                        ++regrounds;
                    }
                    if (!say(Message::instruction(log.steps_taken, *current))) break;
                    continue;
                }
                auto& exec = std::get<ExecuteResolved>(reaction);
                if (exec.resolution.unresolvable) {
                    say(Message::event(log.steps_taken, EventKind::Unresolvable, "instruction references nothing visible"));
                    break;
                }
                if (!exec.resolution.actions.empty() && !say(Message::report(log.steps_taken, Report{exec.resolution.actions}))) {
                    break;
                }
                for (Action a : exec.resolution.actions) {
                    if (a == Action::Stop) {
                        rec.emit(Message::event(log.steps_taken, EventKind::Stopped, "follower stopped"));
                        stopped = true;
                        break;
                    }
                    const auto out = apply_action(world, pose, a);
                    pose = out.pose;
                    ++log.steps_taken;
                    rec.record({log.steps_taken, leader_pose, pose, a, out.result, {}, local});
                    if (out.result == ActionResult::Blocked) {
                        rec.emit_on_last_step(Message::event(log.steps_taken, EventKind::Collision, "MoveAhead blocked"));
                    }
                    done = within_success_radius(pose.cell, target.position);
                    if (done || log.steps_taken >= t_max) break;
                }
                if (stopped) break;
                current = std::move(exec.then_verify);
                if (current) validate(*current);
            }
            if (stopped) break;
        }
    } catch (const Error& e) {
        if (!detail::recoverable(e)) throw;
        log.policy_failure = true;
        rec.emit(Message::event(log.steps_taken, EventKind::PolicyFailure, e.what()));
    }
    rec.finish();
    detail::finish_log(log, pose, target.position);
    leader.episode_end(log.outcome);
    follower.episode_end(log.outcome);
    return log;
}

/// Single-agent episode: the agent senses under `profile` and acts directly.
inline TrajectoryLog run_solo_episode(const EpisodeSpec& spec, const GridWorld& world, SoloPolicy& agent,
                                      const SensorProfile& profile, int t_max, std::uint64_t seed,
                                      const std::string& condition = {}) {
    TrajectoryLog log = detail::start_log(spec, condition, t_max, seed);
    DialogueHistory history;
    detail::EpisodeRecorder rec(log, history);
    const auto& target = world.object(spec.target_object_id);
    const Goal goal{target.object_id, target.category};
    Pose pose = spec.start_pose;
    SoloMemory memory;
    bool done = within_success_radius(pose.cell, target.position);
    try {
        while (!done && log.steps_taken < t_max) {
            const Observation obs = observe(world, pose, profile);
            const Action a = agent.act(obs, goal, memory);
            if (a == Action::Stop) {
                rec.emit(Message::event(log.steps_taken, EventKind::Stopped, "agent stopped"));
                break;
            }
            const auto out = apply_action(world, pose, a);
            pose = out.pose;
            ++log.steps_taken;
            rec.record({log.steps_taken, std::nullopt, pose, a, out.result, {}, obs});
            if (out.result == ActionResult::Blocked) {
                rec.emit_on_last_step(Message::event(log.steps_taken, EventKind::Collision, "MoveAhead blocked"));
            }
            memory = {a, out.result, log.steps_taken};
            done = within_success_radius(pose.cell, target.position);
        }
    } catch (const Error& e) {
        if (!detail::recoverable(e)) throw;
        log.policy_failure = true;
        rec.emit(Message::event(log.steps_taken, EventKind::PolicyFailure, e.what()));
    }
    rec.finish();
    detail::finish_log(log, pose, target.position);
    agent.episode_end(log.outcome);
    return log;
}

} // namespace lfnav
