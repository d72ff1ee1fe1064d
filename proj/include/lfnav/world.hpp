#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "lfnav/error.hpp"

namespace lfnav {

inline constexpr double kCellSize = 0.25;        // meters per cell
inline constexpr double kSuccessRadius = 1.0;    // meters
inline constexpr double kMaxExtent = 16.0;       // meters, desk scale
inline constexpr int kSuccessRadiusCells = 4;    // kSuccessRadius / kCellSize

struct Cell {
    int col = 0;
    int row = 0;

    friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

/// Compass heading. North is +row, East is +col.
enum class Heading : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline constexpr std::array<Heading, 4> kHeadings = {Heading::North, Heading::East, Heading::South,
                                                     Heading::West};

constexpr Heading rotate_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }
constexpr Heading rotate_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }
constexpr Heading rotate_by(Heading h, int quarter_turns_right) {
    return static_cast<Heading>(((static_cast<int>(h) + quarter_turns_right) % 4 + 4) % 4);
}
/// Clockwise quarter turns taking `from` to `to`, in [0, 4).
constexpr int quarter_turns_between(Heading from, Heading to) {
    return ((static_cast<int>(to) - static_cast<int>(from)) % 4 + 4) % 4;
}

constexpr Cell step_delta(Heading h) {
    switch (h) {
    case Heading::North: return {0, 1};
    case Heading::East: return {1, 0};
    case Heading::South: return {0, -1};
    case Heading::West: return {-1, 0};
    }
    return {0, 0};
}

constexpr Cell neighbor(Cell c, Heading h) {
    const Cell d = step_delta(h);
    return {c.col + d.col, c.row + d.row};
}

/// Compass angle of a heading in degrees, clockwise from North.
constexpr double heading_degrees(Heading h) { return 90.0 * static_cast<int>(h); }

struct Pose {
    Cell cell;
    Heading heading = Heading::North;

    friend constexpr auto operator<=>(const Pose&, const Pose&) = default;
};

enum class Action : std::uint8_t { MoveAhead, RotateLeft, RotateRight, Stop };
enum class ActionResult : std::uint8_t { Ok, Blocked, Stopped };

constexpr bool is_counted_step(Action a) { return a != Action::Stop; }

enum class CellState : std::uint8_t { Free, Obstacle };

enum class RoomType : std::uint8_t { Kitchen, Bathroom, LivingRoom, Bedroom };

inline constexpr std::array<RoomType, 4> kRoomTypes = {RoomType::Kitchen, RoomType::Bathroom,
                                                       RoomType::LivingRoom, RoomType::Bedroom};

struct PlacedObject {
    std::string object_id;
    std::string category;
    Cell position;
    bool is_landmark = false;

    friend bool operator==(const PlacedObject&, const PlacedObject&) = default;
};

// ---- names ----------------------------------------------------------------

constexpr std::string_view to_string(Heading h) {
    switch (h) {
    case Heading::North: return "North";
    case Heading::East: return "East";
    case Heading::South: return "South";
    case Heading::West: return "West";
    }
    return "?";
}

constexpr std::string_view to_string(Action a) {
    switch (a) {
    case Action::MoveAhead: return "MoveAhead";
    case Action::RotateLeft: return "RotateLeft";
    case Action::RotateRight: return "RotateRight";
    case Action::Stop: return "Stop";
    }
    return "?";
}

constexpr std::string_view to_string(ActionResult r) {
    switch (r) {
    case ActionResult::Ok: return "Ok";
    case ActionResult::Blocked: return "Blocked";
    case ActionResult::Stopped: return "Stopped";
    }
    return "?";
}

constexpr std::string_view to_string(RoomType t) {
    switch (t) {
    case RoomType::Kitchen: return "Kitchen";
    case RoomType::Bathroom: return "Bathroom";
    case RoomType::LivingRoom: return "LivingRoom";
    case RoomType::Bedroom: return "Bedroom";
    }
    return "?";
}

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<Enum, N>& values, std::string_view what) {
    for (Enum v : values) {
        if (to_string(v) == text) return v;
    }
    throw Error(ErrorCode::ParseError, "unknown " + std::string(what) + " '" + std::string(text) + "'");
}

inline Heading parse_heading(std::string_view s) { return parse_enum(s, kHeadings, "heading"); }
inline RoomType parse_room_type(std::string_view s) { return parse_enum(s, kRoomTypes, "room type"); }
inline Action parse_action(std::string_view s) {
    return parse_enum(s, std::array{Action::MoveAhead, Action::RotateLeft, Action::RotateRight, Action::Stop},
                      "action");
}
inline ActionResult parse_action_result(std::string_view s) {
    return parse_enum(s, std::array{ActionResult::Ok, ActionResult::Blocked, ActionResult::Stopped},
                      "action result");
}

// ---- distances ------------------------------------------------------------

constexpr int squared_cells(Cell a, Cell b) {
    const int dc = a.col - b.col;
    const int dr = a.row - b.row;
    return dc * dc + dr * dr;
}

/// Straight-line distance between cell centers, in meters.
inline double euclidean_distance(Cell a, Cell b) { return kCellSize * std::sqrt(double(squared_cells(a, b))); }

/// Exact integer test for euclidean_distance(a, b) <= kSuccessRadius.
constexpr bool within_success_radius(Cell a, Cell b) {
    return squared_cells(a, b) <= kSuccessRadiusCells * kSuccessRadiusCells;
}

// ---- the grid -------------------------------------------------------------

/// Immutable occupancy grid with placed objects. Construction validates the
/// closed-world, desk-scale and object invariants.
class GridWorld {
public:
    GridWorld(std::string scene_id, RoomType room_type, int width, int height, std::vector<CellState> occupancy,
              std::vector<PlacedObject> objects)
        : scene_id_(std::move(scene_id)),
          room_type_(room_type),
          width_(width),
          height_(height),
          occupancy_(std::move(occupancy)),
          objects_(std::move(objects)) {
        validate();
    }

    const std::string& scene_id() const { return scene_id_; }
    RoomType room_type() const { return room_type_; }
    int width() const { return width_; }
    int height() const { return height_; }
    double cell_size() const { return kCellSize; }
    std::span<const PlacedObject> objects() const { return objects_; }
    std::span<const CellState> occupancy() const { return occupancy_; }

    bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }

    CellState at(Cell c) const {
        return in_bounds(c) ? occupancy_[index(c)] : CellState::Obstacle;
    }
    bool is_free(Cell c) const { return at(c) == CellState::Free; }

    std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * width_ + c.col; }
    Cell cell_at(std::size_t idx) const {
        return {static_cast<int>(idx % width_), static_cast<int>(idx / width_)};
    }
    std::size_t cell_count() const { return occupancy_.size(); }

    const PlacedObject* find_object(std::string_view object_id) const {
        for (const auto& o : objects_) {
            if (o.object_id == object_id) return &o;
        }
        return nullptr;
    }

    const PlacedObject& object(std::string_view object_id) const {
        if (const auto* o = find_object(object_id)) return *o;
        throw Error(ErrorCode::PreconditionViolation, "no object '" + std::string(object_id) + "' in scene " + scene_id_);
    }

    std::vector<Cell> free_cells() const {
        std::vector<Cell> out;
        for (std::size_t i = 0; i < occupancy_.size(); ++i) {
            if (occupancy_[i] == CellState::Free) out.push_back(cell_at(i));
        }
        return out;
    }

    friend bool operator==(const GridWorld&, const GridWorld&) = default;

private:
    void validate() const {
        auto fail = [&](const std::string& why) {
            throw Error(ErrorCode::PreconditionViolation, "scene '" + scene_id_ + "': " + why);
        };
        if (width_ < 3 || height_ < 3) fail("grid must be at least 3x3");
        if (kCellSize * std::max(width_, height_) > kMaxExtent) fail("exceeds 16 m desk scale");
        if (occupancy_.size() != static_cast<std::size_t>(width_) * height_) fail("occupancy size mismatch");
        for (int c = 0; c < width_; ++c) {
            if (is_free({c, 0}) || is_free({c, height_ - 1})) fail("boundary cell is free");
        }
        for (int r = 0; r < height_; ++r) {
            if (is_free({0, r}) || is_free({width_ - 1, r})) fail("boundary cell is free");
        }
        std::unordered_set<std::string> ids;
        for (const auto& o : objects_) {
            if (!ids.insert(o.object_id).second) fail("duplicate object id '" + o.object_id + "'");
            if (!in_bounds(o.position)) fail("object '" + o.object_id + "' out of bounds");
            if (!approachable(o.position)) fail("object '" + o.object_id + "' is not approachable");
        }
    }

    bool approachable(Cell p) const {
        for (int dr = -kSuccessRadiusCells; dr <= kSuccessRadiusCells; ++dr) {
            for (int dc = -kSuccessRadiusCells; dc <= kSuccessRadiusCells; ++dc) {
                const Cell q{p.col + dc, p.row + dr};
                if (within_success_radius(p, q) && is_free(q)) return true;
            }
        }
        return false;
    }

    std::string scene_id_;
    RoomType room_type_;
    int width_;
    int height_;
    std::vector<CellState> occupancy_;
    std::vector<PlacedObject> objects_;
};

// ---- motion ---------------------------------------------------------------

struct StepOutcome {
    Pose pose;
    ActionResult result;

    friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

inline StepOutcome apply_action(const GridWorld& world, Pose pose, Action action) {
    switch (action) {
    case Action::RotateLeft: return {{pose.cell, rotate_left(pose.heading)}, ActionResult::Ok};
    case Action::RotateRight: return {{pose.cell, rotate_right(pose.heading)}, ActionResult::Ok};
    case Action::Stop: return {pose, ActionResult::Stopped};
    case Action::MoveAhead: {
        const Cell next = neighbor(pose.cell, pose.heading);
        if (!world.is_free(next)) return {pose, ActionResult::Blocked};
        return {{next, pose.heading}, ActionResult::Ok};
    }
    }
    return {pose, ActionResult::Blocked};
}

// ---- pathing --------------------------------------------------------------

/// Free cells within kSuccessRadius (Euclidean) of `target`.
inline std::vector<Cell> success_region(const GridWorld& world, Cell target) {
    std::vector<Cell> out;
    for (int dr = -kSuccessRadiusCells; dr <= kSuccessRadiusCells; ++dr) {
        for (int dc = -kSuccessRadiusCells; dc <= kSuccessRadiusCells; ++dc) {
            const Cell q{target.col + dc, target.row + dr};
            if (within_success_radius(target, q) && world.is_free(q)) out.push_back(q);
        }
    }
    return out;
}

/// Breadth-first hop counts from `from` over 4-connected free cells; -1 marks unreachable.
inline std::vector<int> hop_distances(const GridWorld& world, Cell from) {
    std::vector<int> dist(world.cell_count(), -1);
    if (!world.is_free(from)) return dist;
    std::deque<Cell> frontier{from};
    dist[world.index(from)] = 0;
    while (!frontier.empty()) {
        const Cell c = frontier.front();
        frontier.pop_front();
        const int d = dist[world.index(c)];
        for (Heading h : kHeadings) {
            const Cell n = neighbor(c, h);
            if (!world.is_free(n) || dist[world.index(n)] >= 0) continue;
            dist[world.index(n)] = d + 1;
            frontier.push_back(n);
        }
    }
    return dist;
}

/// Minimum number of 4-connected hops to any cell of `region`, or nullopt.
inline std::optional<int> geodesic_hops(const GridWorld& world, Cell from, std::span<const Cell> region) {
    if (region.empty()) throw Error(ErrorCode::EmptyRegion, "geodesic target region is empty");
    const auto dist = hop_distances(world, from);
    std::optional<int> best;
    for (Cell c : region) {
        if (!world.in_bounds(c)) continue;
        const int d = dist[world.index(c)];
        if (d >= 0 && (!best || d < *best)) best = d;
    }
    return best;
}

/// Shortest obstacle-respecting path length in meters; nullopt means Unreachable.
inline std::optional<double> geodesic_distance(const GridWorld& world, Cell from, std::span<const Cell> region) {
    const auto hops = geodesic_hops(world, from, region);
    if (!hops) return std::nullopt;
    return kCellSize * *hops;
}

/// Free cells connected to `from`, sorted.
inline std::vector<Cell> reachable_positions(const GridWorld& world, Cell from) {
    const auto dist = hop_distances(world, from);
    std::vector<Cell> out;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] >= 0) out.push_back(world.cell_at(i));
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- pose-graph planning --------------------------------------------------

/// Shortest action sequence (MoveAhead / RotateLeft / RotateRight) from `start`
/// to any pose whose cell is within the success radius of `target`. Rotations
/// count as steps. Returns nullopt if no such pose is reachable.
inline std::optional<std::vector<Action>> plan_actions(const GridWorld& world, Pose start, Cell target) {
    const std::size_t n = world.cell_count() * 4;
    auto key = [&](Pose p) { return world.index(p.cell) * 4 + static_cast<std::size_t>(p.heading); };
    std::vector<std::int32_t> parent(n, -1);
    std::vector<Action> via(n, Action::Stop);
    std::vector<bool> seen(n, false);
    std::deque<Pose> frontier{start};
    seen[key(start)] = true;
    // Expansion order fixes tie-breaking: forward first, then right, then left.
    constexpr std::array<Action, 3> kExpand = {Action::MoveAhead, Action::RotateRight, Action::RotateLeft};
    while (!frontier.empty()) {
        const Pose p = frontier.front();
        frontier.pop_front();
        if (within_success_radius(p.cell, target)) {
            std::vector<Action> path;
            for (std::size_t k = key(p); parent[k] >= 0; k = static_cast<std::size_t>(parent[k])) {
                path.push_back(via[k]);
            }
            std::reverse(path.begin(), path.end());
            return path;
        }
        for (Action a : kExpand) {
            const auto next = apply_action(world, p, a);
            if (next.result != ActionResult::Ok) continue;
            const std::size_t k = key(next.pose);
            if (seen[k]) continue;
            seen[k] = true;
            parent[k] = static_cast<std::int32_t>(key(p));
            via[k] = a;
            frontier.push_back(next.pose);
        }
    }
    return std::nullopt;
}

} // namespace lfnav
