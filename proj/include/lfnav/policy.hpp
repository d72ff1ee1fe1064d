#pragma once

#include <optional>
#include <string>
#include <variant>

#include "lfnav/dialogue.hpp"
#include "lfnav/grounding.hpp"
#include "lfnav/perception.hpp"
#include "lfnav/world.hpp"

namespace lfnav {

struct Goal {
    std::string object_id;
    std::string category;

    friend bool operator==(const Goal&, const Goal&) = default;
};

/// Everything the Leader is allowed to know: the global map, a full
/// observation, the follower's position, and its heading only when the
/// experiment grants it.
struct LeaderView {
    const GridWorld& world;
    Observation global_observation;
    Cell follower_cell;
    std::optional<Heading> follower_heading;
    Goal goal;
    SensorProfile follower_profile;
};

class LeaderPolicy {
public:
    virtual ~LeaderPolicy() = default;

    virtual Instruction propose(const LeaderView& view, const DialogueHistory& dialogue) = 0;
    virtual Instruction reground(const LeaderView& view, const Instruction& previous, const Query& query,
                                 const DialogueHistory& dialogue) = 0;
    virtual void episode_end(Outcome) {}
};

/// Execute `resolution` now. When `then_verify` is set, the follower wants
/// to re-check that remainder against a fresh observation before moving on
/// (used to verify the move leg of a turn-and-move once the turn has been made).
struct ExecuteResolved {
    Resolution resolution;
    std::optional<Instruction> then_verify;

    friend bool operator==(const ExecuteResolved&, const ExecuteResolved&) = default;
};

using FollowerReaction = std::variant<ExecuteResolved, Query>;

/// The follower only ever sees its own filtered observation and the message;
/// there is no way to hand it the GridWorld.
class FollowerPolicy {
public:
    virtual ~FollowerPolicy() = default;

    virtual FollowerReaction react(const Observation& local, const Instruction& instruction, ProtocolMode mode) = 0;
    virtual void episode_end(Outcome) {}
};

struct SoloMemory {
    std::optional<Action> last_action;
    std::optional<ActionResult> last_result;
    int steps_taken = 0;
};

class SoloPolicy {
public:
    virtual ~SoloPolicy() = default;

    virtual Action act(const Observation& observation, const Goal& goal, const SoloMemory& memory) = 0;
    virtual void episode_end(Outcome) {}
};

} // namespace lfnav
