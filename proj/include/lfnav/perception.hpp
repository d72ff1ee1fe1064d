#pragma once

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lfnav/world.hpp"

namespace lfnav {

struct SensorProfile {
    std::optional<double> max_range;  // meters; nullopt = unlimited
    double fov_halfangle = 180.0;     // degrees either side of the heading
    bool occlusion_checked = false;
    bool global_positions = false;    // populate Percept::global_position and observer pose

    friend bool operator==(const SensorProfile&, const SensorProfile&) = default;
};

inline SensorProfile leader_profile() { return {std::nullopt, 180.0, false, true}; }
inline SensorProfile follower_profile(bool occlusion_checked = true) { return {2.0, 45.0, occlusion_checked, false}; }

struct Percept {
    std::string object_id;
    std::string category;
    bool is_landmark = false;
    double distance = 0.0;  // meters
    double bearing = 0.0;   // degrees in (-180, 180], positive clockwise (to the right)
    std::optional<Cell> global_position;

    friend bool operator==(const Percept&, const Percept&) = default;
};

struct Observation {
    std::optional<Pose> observer_pose;  // only under global profiles
    std::vector<Percept> percepts;
    bool facing_blocked = false;

    bool observer_pose_known() const { return observer_pose.has_value(); }

    const Percept* find_category(std::string_view category) const {
        for (const auto& p : percepts) {
            if (p.category == category) return &p;
        }
        return nullptr;
    }
    const Percept* find_object(std::string_view object_id) const {
        for (const auto& p : percepts) {
            if (p.object_id == object_id) return &p;
        }
        return nullptr;
    }

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Bearing of `to` seen from `from` facing `heading`, in (-180, 180].
inline double relative_bearing(Cell from, Heading heading, Cell to) {
    const int dc = to.col - from.col;
    const int dr = to.row - from.row;
    if (dc == 0 && dr == 0) return 0.0;
    // atan2(east, north) gives a compass angle, clockwise from North.
    double b = std::atan2(double(dc), double(dr)) * 180.0 / std::numbers::pi - heading_degrees(heading);
    while (b <= -180.0) b += 360.0;
    while (b > 180.0) b -= 360.0;
    return b;
}

namespace detail {

constexpr long long floor_div(long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}
constexpr long long ceil_div(long long a, long long b) { return -floor_div(-a, b); }

} // namespace detail

/// Visits every cell whose closed square the segment between the two cell
/// centers touches (supercover), column strip by column strip. Arithmetic is
/// exact: coordinates are doubled so cell edges land on odd integers.
template <typename Visit>
void for_each_supercover_cell(Cell a, Cell b, Visit&& visit) {
    if (a.col > b.col) std::swap(a, b);
    const long long dx = b.col - a.col;
    const long long dy = b.row - a.row;
    if (dx == 0) {
        const int lo = std::min(a.row, b.row);
        const int hi = std::max(a.row, b.row);
        for (int r = lo; r <= hi; ++r) visit(Cell{a.col, r});
        return;
    }
    for (int c = a.col; c <= b.col; ++c) {
        // Doubled x range of this strip clipped to the segment.
        const long long xlo = std::max<long long>(2LL * c - 1, 2LL * a.col);
        const long long xhi = std::min<long long>(2LL * c + 1, 2LL * b.col);
        // Doubled y at x, scaled by dx: Y * dx = 2*y0*dx + (X - 2*x0)*dy.
        const long long n1 = 2LL * a.row * dx + (xlo - 2LL * a.col) * dy;
        const long long n2 = 2LL * a.row * dx + (xhi - 2LL * a.col) * dy;
        const long long nlo = std::min(n1, n2);
        const long long nhi = std::max(n1, n2);
        // Row r touched iff (2r - 1) * dx <= nhi and (2r + 1) * dx >= nlo.
        const long long rmin = detail::ceil_div(nlo - dx, 2 * dx);
        const long long rmax = detail::floor_div(nhi + dx, 2 * dx);
        for (long long r = rmin; r <= rmax; ++r) visit(Cell{c, static_cast<int>(r)});
    }
}

/// True iff no Obstacle cell other than the two endpoints lies on the
/// supercover line between the cell centers.
inline bool line_of_sight(const GridWorld& world, Cell from, Cell to) {
    bool clear = true;
    for_each_supercover_cell(from, to, [&](Cell c) {
        if (c == from || c == to) return;
        if (!world.is_free(c)) clear = false;
    });
    return clear;
}

/// Applies the profile's range, field-of-view and occlusion filters to every
/// scene object.
inline Observation observe(const GridWorld& world, Pose pose, const SensorProfile& profile) {
    constexpr double kEps = 1e-9;
    Observation obs;
    if (profile.global_positions) obs.observer_pose = pose;
    obs.facing_blocked = !world.is_free(neighbor(pose.cell, pose.heading));
    for (const auto& object : world.objects()) {
        const double distance = euclidean_distance(pose.cell, object.position);
        if (profile.max_range && distance > *profile.max_range + kEps) continue;
        const double bearing = relative_bearing(pose.cell, pose.heading, object.position);
        if (std::abs(bearing) > profile.fov_halfangle + kEps) continue;
        if (profile.occlusion_checked && !line_of_sight(world, pose.cell, object.position)) continue;
        Percept p{object.object_id, object.category, object.is_landmark, distance, bearing, std::nullopt};
        if (profile.global_positions) p.global_position = object.position;
        obs.percepts.push_back(std::move(p));
    }
    return obs;
}

} // namespace lfnav
