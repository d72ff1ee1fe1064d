#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lfnav/grounding.hpp"
#include "lfnav/perception.hpp"
#include "lfnav/world.hpp"

namespace lfnav {

inline constexpr int kSchemaVersion = 1;

enum class ProtocolMode : std::uint8_t { Push, Pull };

constexpr std::string_view to_string(ProtocolMode m) { return m == ProtocolMode::Push ? "Push" : "Pull"; }
inline ProtocolMode parse_protocol_mode(std::string_view s) {
    return parse_enum(s, std::array{ProtocolMode::Push, ProtocolMode::Pull}, "protocol mode");
}

enum class Sender : std::uint8_t { Leader, Follower, System };
enum class MessageKind : std::uint8_t { Instruction, Query, Report, Event };

constexpr std::string_view to_string(Sender s) {
    switch (s) {
    case Sender::Leader: return "Leader";
    case Sender::Follower: return "Follower";
    case Sender::System: return "System";
    }
    return "?";
}

constexpr std::string_view to_string(MessageKind k) {
    switch (k) {
    case MessageKind::Instruction: return "Instruction";
    case MessageKind::Query: return "Query";
    case MessageKind::Report: return "Report";
    case MessageKind::Event: return "Event";
    }
    return "?";
}

/// The follower's account of what it is about to execute.
struct Report {
    std::vector<Action> actions;

    friend bool operator==(const Report&, const Report&) = default;
};

enum class EventKind : std::uint8_t { Collision, Unresolvable, Stopped, Fallback, DialogueCap, PolicyFailure };

inline constexpr std::array<EventKind, 6> kEventKinds = {EventKind::Collision,   EventKind::Unresolvable,
                                                         EventKind::Stopped,     EventKind::Fallback,
                                                         EventKind::DialogueCap, EventKind::PolicyFailure};

constexpr std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::Collision: return "Collision";
    case EventKind::Unresolvable: return "Unresolvable";
    case EventKind::Stopped: return "Stopped";
    case EventKind::Fallback: return "Fallback";
    case EventKind::DialogueCap: return "DialogueCap";
    case EventKind::PolicyFailure: return "PolicyFailure";
    }
    return "?";
}

struct Event {
    EventKind kind = EventKind::Collision;
    std::string detail;

    friend bool operator==(const Event&, const Event&) = default;
};

using Payload = std::variant<Instruction, Query, Report, Event>;

struct Message {
    Sender sender = Sender::System;
    int step_index = 0;
    Payload payload;

    MessageKind kind() const { return static_cast<MessageKind>(payload.index()); }

    static Message instruction(int step, Instruction i) { return {Sender::Leader, step, std::move(i)}; }
    static Message query(int step, Query q) { return {Sender::Follower, step, std::move(q)}; }
    static Message report(int step, Report r) { return {Sender::Follower, step, std::move(r)}; }
    static Message event(int step, EventKind kind, std::string detail = {}) {
        return {Sender::System, step, Event{kind, std::move(detail)}};
    }

    friend bool operator==(const Message&, const Message&) = default;
};

/// Ordered shared conversation. Appends enforce the sender/kind pairing and
/// non-decreasing step indices.
class DialogueHistory {
public:
    void append(Message m) {
        const auto kind = m.kind();
        if (kind == MessageKind::Instruction && m.sender != Sender::Leader) {
            throw Error(ErrorCode::PreconditionViolation, "instructions may only come from the Leader");
        }
        if (kind == MessageKind::Query && m.sender != Sender::Follower) {
            throw Error(ErrorCode::PreconditionViolation, "queries may only come from the Follower");
        }
        if (!messages_.empty() && m.step_index < messages_.back().step_index) {
            throw Error(ErrorCode::PreconditionViolation, "step_index must be non-decreasing");
        }
        messages_.push_back(std::move(m));
    }

    const std::vector<Message>& messages() const { return messages_; }
    std::size_t size() const { return messages_.size(); }
    bool empty() const { return messages_.empty(); }
    const Message& operator[](std::size_t i) const { return messages_[i]; }

    friend bool operator==(const DialogueHistory&, const DialogueHistory&) = default;

private:
    std::vector<Message> messages_;
};

enum class Outcome : std::uint8_t { Success, Timeout };

constexpr std::string_view to_string(Outcome o) { return o == Outcome::Success ? "Success" : "Timeout"; }
inline Outcome parse_outcome(std::string_view s) {
    return parse_enum(s, std::array{Outcome::Success, Outcome::Timeout}, "outcome");
}

struct StepRecord {
    int step_index = 0;  // 1-based count of simulation steps after this action
    std::optional<Pose> leader_pose;
    Pose follower_pose;  // pose after the action
    Action action = Action::MoveAhead;
    ActionResult action_result = ActionResult::Ok;
    std::vector<Message> messages;  // messages since the previous step record
    Observation observation;        // what the actor saw when choosing the action

    friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TrajectoryLog {
    std::string episode_id;
    std::string scene_id;
    std::optional<ProtocolMode> mode;  // nullopt for solo runs
    std::string condition;
    std::uint64_t seed = 0;
    int t_max = 0;
    Pose start_pose;
    std::string target_object_id;
    int optimal_steps = 0;
    std::vector<StepRecord> steps;
    std::vector<Message> tail_messages;  // messages after the last step record
    Outcome outcome = Outcome::Timeout;
    int steps_taken = 0;
    int push_count = 0;
    int pull_count = 0;
    double final_distance = 0.0;
    Pose final_pose;
    bool policy_failure = false;

    bool success() const { return outcome == Outcome::Success; }

    /// All messages in emission order.
    std::vector<Message> dialogue() const {
        std::vector<Message> out;
        for (const auto& s : steps) out.insert(out.end(), s.messages.begin(), s.messages.end());
        out.insert(out.end(), tail_messages.begin(), tail_messages.end());
        return out;
    }

    friend bool operator==(const TrajectoryLog&, const TrajectoryLog&) = default;
};

} // namespace lfnav
