#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lfnav/perception.hpp"
#include "lfnav/world.hpp"

namespace lfnav {

/// Egocentric direction; the underlying value is clockwise quarter turns from Forward.
enum class RelativeDirection : std::uint8_t { Forward = 0, Right = 1, Back = 2, Left = 3 };

inline constexpr std::array<RelativeDirection, 4> kRelativeDirections = {
    RelativeDirection::Forward, RelativeDirection::Right, RelativeDirection::Back, RelativeDirection::Left};

enum class RotationDirection : std::uint8_t { Left, Right };

constexpr std::string_view to_string(RelativeDirection d) {
    switch (d) {
    case RelativeDirection::Forward: return "Forward";
    case RelativeDirection::Right: return "Right";
    case RelativeDirection::Back: return "Back";
    case RelativeDirection::Left: return "Left";
    }
    return "?";
}

constexpr std::string_view to_string(RotationDirection d) { return d == RotationDirection::Left ? "Left" : "Right"; }

inline RelativeDirection parse_relative_direction(std::string_view s) {
    return parse_enum(s, kRelativeDirections, "relative direction");
}
inline RotationDirection parse_rotation_direction(std::string_view s) {
    return parse_enum(s, std::array{RotationDirection::Left, RotationDirection::Right}, "rotation direction");
}

/// Which reference frame the speaker meant. Executors never see it: every
/// instruction is carried out in the follower's own frame.
struct FrameTag {
    enum class Kind : std::uint8_t { LeaderFrame, FollowerFrame, Allocentric };
    Kind kind = Kind::FollowerFrame;
    std::optional<Heading> compass;  // set iff kind == Allocentric

    static FrameTag leader() { return {Kind::LeaderFrame, std::nullopt}; }
    static FrameTag follower() { return {Kind::FollowerFrame, std::nullopt}; }
    static FrameTag allocentric(Heading h) { return {Kind::Allocentric, h}; }

    friend bool operator==(const FrameTag&, const FrameTag&) = default;
};

constexpr std::string_view to_string(FrameTag::Kind k) {
    switch (k) {
    case FrameTag::Kind::LeaderFrame: return "LeaderFrame";
    case FrameTag::Kind::FollowerFrame: return "FollowerFrame";
    case FrameTag::Kind::Allocentric: return "Allocentric";
    }
    return "?";
}

struct Motion {
    RelativeDirection direction = RelativeDirection::Forward;
    int steps = 1;
    FrameTag frame;

    friend bool operator==(const Motion&, const Motion&) = default;
};

struct GoToLandmark {
    std::string category;
    std::optional<std::string> object_id;
    std::optional<std::string> relation;  // free-form spatial hint, not interpreted

    friend bool operator==(const GoToLandmark&, const GoToLandmark&) = default;
};

struct Rotate {
    RotationDirection direction = RotationDirection::Right;
    int quarter_turns = 1;

    friend bool operator==(const Rotate&, const Rotate&) = default;
};

struct DeclareArrived {
    friend bool operator==(const DeclareArrived&, const DeclareArrived&) = default;
};

using Instruction = std::variant<Motion, GoToLandmark, Rotate, DeclareArrived>;

/// Throws ParseError when an instruction violates the grammar's value constraints.
inline void validate(const Instruction& instruction) {
    if (const auto* m = std::get_if<Motion>(&instruction)) {
        if (m->steps < 1) throw Error(ErrorCode::ParseError, "Motion.steps must be >= 1");
        if ((m->frame.kind == FrameTag::Kind::Allocentric) != m->frame.compass.has_value()) {
            throw Error(ErrorCode::ParseError, "Allocentric frame requires exactly one compass heading");
        }
    } else if (const auto* r = std::get_if<Rotate>(&instruction)) {
        if (r->quarter_turns != 1 && r->quarter_turns != 2) {
            throw Error(ErrorCode::ParseError, "Rotate.quarter_turns must be 1 or 2");
        }
    } else if (const auto* g = std::get_if<GoToLandmark>(&instruction)) {
        if (g->category.empty()) throw Error(ErrorCode::ParseError, "GoToLandmark.category is empty");
    }
}

/// What a query says could not be grounded: a landmark, or a motion.
struct UngroundedReference {
    std::optional<std::string> landmark;
    std::optional<RelativeDirection> motion;

    friend bool operator==(const UngroundedReference&, const UngroundedReference&) = default;
};

struct Query {
    UngroundedReference ungrounded_reference;
    std::vector<std::string> visible_landmarks;
    bool facing_blocked = false;

    friend bool operator==(const Query&, const Query&) = default;
};

enum class GroundingReason : std::uint8_t { Ok, UnknownLandmark, BlockedMotion };

constexpr std::string_view to_string(GroundingReason r) {
    switch (r) {
    case GroundingReason::Ok: return "Ok";
    case GroundingReason::UnknownLandmark: return "UnknownLandmark";
    case GroundingReason::BlockedMotion: return "BlockedMotion";
    }
    return "?";
}

struct GroundingVerdict {
    GroundingReason reason = GroundingReason::Ok;
    bool grounded() const { return reason == GroundingReason::Ok; }

    friend bool operator==(const GroundingVerdict&, const GroundingVerdict&) = default;
};

namespace detail {

inline const Percept* find_landmark(const GoToLandmark& g, const Observation& obs) {
    if (g.object_id) return obs.find_object(*g.object_id);
    const Percept* best = nullptr;
    for (const auto& p : obs.percepts) {
        if (p.category == g.category && (!best || p.distance < best->distance)) best = &p;
    }
    return best;
}

} // namespace detail

/// Checks an instruction against the follower's local observation only.
inline GroundingVerdict verify(const Instruction& instruction, const Observation& obs) {
    if (const auto* m = std::get_if<Motion>(&instruction)) {
        // Only the facing cell is observable; other directions cannot be pre-checked.
        if (m->direction == RelativeDirection::Forward && obs.facing_blocked) {
            return {GroundingReason::BlockedMotion};
        }
        return {GroundingReason::Ok};
    }
    if (const auto* g = std::get_if<GoToLandmark>(&instruction)) {
        return {detail::find_landmark(*g, obs) ? GroundingReason::Ok : GroundingReason::UnknownLandmark};
    }
    return {GroundingReason::Ok};
}

inline std::vector<std::string> visible_landmarks(const Observation& obs) {
    std::vector<std::string> out;
    for (const auto& p : obs.percepts) {
        if (p.is_landmark) out.push_back(p.category);
    }
    return out;
}

/// Builds the clarification query for an ungrounded instruction. Carries
/// categories only, never positions.
inline Query make_query(const Instruction& instruction, const Observation& obs) {
    const auto verdict = verify(instruction, obs);
    if (verdict.grounded()) {
        throw Error(ErrorCode::PreconditionViolation, "make_query called on a grounded instruction");
    }
    Query q;
    if (verdict.reason == GroundingReason::UnknownLandmark) {
        q.ungrounded_reference.landmark = std::get<GoToLandmark>(instruction).category;
    } else {
        q.ungrounded_reference.motion = std::get<Motion>(instruction).direction;
    }
    q.visible_landmarks = visible_landmarks(obs);
    q.facing_blocked = obs.facing_blocked;
    return q;
}

/// The direction that, executed from `to_heading`, produces the same world
/// displacement as `direction` executed from `from_heading`.
constexpr RelativeDirection translate_frame(RelativeDirection direction, Heading from_heading, Heading to_heading) {
    const Heading world = rotate_by(from_heading, static_cast<int>(direction));
    return static_cast<RelativeDirection>(quarter_turns_between(to_heading, world));
}

/// World heading reached by turning toward `direction` from `heading`.
constexpr Heading world_heading(Heading heading, RelativeDirection direction) {
    return rotate_by(heading, static_cast<int>(direction));
}

struct Resolution {
    std::vector<Action> actions;
    bool unresolvable = false;  // GoToLandmark with no matching percept

    friend bool operator==(const Resolution&, const Resolution&) = default;
};

/// Unfolds an instruction into primitive actions in the follower's own frame.
/// Frame tags are ignored: a LeaderFrame "Left" is executed as the follower's Left.
inline Resolution resolve_instruction(const Instruction& instruction, const Observation& obs) {
    Resolution out;
    std::visit(
        [&](const auto& in) {
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, Motion>) {
                switch (in.direction) {
                case RelativeDirection::Forward: break;
                case RelativeDirection::Right: out.actions.push_back(Action::RotateRight); break;
                case RelativeDirection::Left: out.actions.push_back(Action::RotateLeft); break;
                case RelativeDirection::Back:
                    out.actions.push_back(Action::RotateRight);
                    out.actions.push_back(Action::RotateRight);
                    break;
                }
                out.actions.insert(out.actions.end(), static_cast<std::size_t>(in.steps), Action::MoveAhead);
            } else if constexpr (std::is_same_v<T, Rotate>) {
                const Action a = in.direction == RotationDirection::Left ? Action::RotateLeft : Action::RotateRight;
                out.actions.insert(out.actions.end(), static_cast<std::size_t>(in.quarter_turns), a);
            } else if constexpr (std::is_same_v<T, GoToLandmark>) {
                const Percept* p = detail::find_landmark(in, obs);
                if (!p) {
                    out.unresolvable = true;
                    return;
                }
                // One greedy step toward the percept per protocol round.
                const Action turn = p->bearing >= 0.0 ? Action::RotateRight : Action::RotateLeft;
                if (obs.facing_blocked || std::abs(p->bearing) > 45.0 + 1e-9) {
                    out.actions.push_back(turn);
                } else {
                    out.actions.push_back(Action::MoveAhead);
                }
            } else {
                out.actions.push_back(Action::Stop);
            }
        },
        instruction);
    return out;
}

} // namespace lfnav
