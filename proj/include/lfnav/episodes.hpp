#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lfnav/random.hpp"
#include "lfnav/world.hpp"

namespace lfnav {

inline constexpr double kMinGeodesic = 1.5;  // meters, strict lower bound
inline constexpr int kMinRoomSide = 24;
inline constexpr int kMaxRoomSide = 56;

struct EpisodeSpec {
    std::string episode_id;
    std::string scene_id;
    Pose start_pose;
    std::string target_object_id;
    RoomType room_type = RoomType::Kitchen;
    double geodesic_length = 0.0;  // meters, start cell to nearest success-region cell
    int optimal_steps = 0;         // minimum MoveAhead + rotation actions to success

    friend bool operator==(const EpisodeSpec&, const EpisodeSpec&) = default;
};

struct BenchmarkSet {
    std::vector<EpisodeSpec> episodes;
    std::uint64_t seed = 0;
    std::map<RoomType, int> counts_by_room;

    friend bool operator==(const BenchmarkSet&, const BenchmarkSet&) = default;
};

struct Candidate {
    std::string episode_id;
    std::string scene_id;
    Pose start_pose;
    std::string target_object_id;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

using ScenePtr = std::shared_ptr<const GridWorld>;
using SceneLibrary = std::map<std::string, ScenePtr, std::less<>>;

inline const GridWorld& lookup_scene(const SceneLibrary& scenes, std::string_view scene_id) {
    const auto it = scenes.find(scene_id);
    if (it == scenes.end()) throw Error(ErrorCode::PreconditionViolation, "unknown scene '" + std::string(scene_id) + "'");
    return *it->second;
}

// ---- scene generation -----------------------------------------------------

struct RoomVocabulary {
    std::vector<std::string> landmarks;
    std::vector<std::string> small_objects;
};

inline const RoomVocabulary& room_vocabulary(RoomType type) {
    static const std::map<RoomType, RoomVocabulary> kVocab = {
        {RoomType::Kitchen, {{"Table", "Fridge", "CounterTop", "Cabinet", "Stove"}, {"Apple", "Mug", "Bowl", "Bread", "Knife"}}},
        {RoomType::Bathroom, {{"Toilet", "Sink", "Bathtub", "Cabinet", "Shelf"}, {"Towel", "SoapBar", "ToiletPaper", "Candle", "SprayBottle"}}},
        {RoomType::LivingRoom, {{"Sofa", "TV", "Table", "Armchair", "Shelf"}, {"RemoteControl", "Book", "Vase", "Newspaper", "Laptop"}}},
        {RoomType::Bedroom, {{"Bed", "Dresser", "Desk", "Cabinet", "Armchair"}, {"Pillow", "AlarmClock", "Book", "CellPhone", "Mug"}}},
    };
    return kVocab.at(type);
}

namespace detail {

inline bool free_space_connected(const GridWorld& world) {
    const auto free = world.free_cells();
    if (free.empty()) return false;
    return reachable_positions(world, free.front()).size() == free.size();
}

class SceneBuilder {
public:
    SceneBuilder(int width, int height) : width_(width), height_(height), cells_(std::size_t(width) * height, CellState::Free) {
        for (int c = 0; c < width; ++c) {
            set({c, 0}, CellState::Obstacle);
            set({c, height - 1}, CellState::Obstacle);
        }
        for (int r = 0; r < height; ++r) {
            set({0, r}, CellState::Obstacle);
            set({width - 1, r}, CellState::Obstacle);
        }
    }

    CellState get(Cell c) const { return cells_[std::size_t(c.row) * width_ + c.col]; }
    void set(Cell c, CellState s) { cells_[std::size_t(c.row) * width_ + c.col] = s; }
    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<CellState>& cells() const { return cells_; }
    std::vector<CellState>& cells() { return cells_; }

    bool connected() const {
        // Cheap flood fill over the builder grid, without object validation.
        std::vector<bool> seen(cells_.size(), false);
        std::vector<Cell> stack;
        std::size_t free_count = 0;
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            if (cells_[i] != CellState::Free) continue;
            ++free_count;
            if (stack.empty() && !seen[i]) {
                stack.push_back({int(i % width_), int(i / width_)});
                seen[i] = true;
            }
        }
        std::size_t reached = 0;
        while (!stack.empty()) {
            const Cell c = stack.back();
            stack.pop_back();
            ++reached;
            for (Heading h : kHeadings) {
                const Cell n = neighbor(c, h);
                const std::size_t k = std::size_t(n.row) * width_ + n.col;
                if (get(n) == CellState::Free && !seen[k]) {
                    seen[k] = true;
                    stack.push_back(n);
                }
            }
        }
        return free_count > 0 && reached == free_count;
    }

private:
    int width_;
    int height_;
    std::vector<CellState> cells_;
};

inline std::string category_id(const std::string& category, std::map<std::string, int>& counters) {
    return category + "_" + std::to_string(++counters[category]);
}

inline std::optional<GridWorld> try_generate_scene(RoomType type, std::uint64_t seed, Rng& rng) {
    const int width = int(rng.uniform(kMinRoomSide, kMaxRoomSide));
    const int height = int(rng.uniform(kMinRoomSide, kMaxRoomSide));
    SceneBuilder b(width, height);

    // Interior wall segments, each leaving a doorway so the room stays connected.
    const int n_walls = int(rng.uniform(1, 4));
    int placed_walls = 0;
    for (int attempt = 0; attempt < 40 && placed_walls < n_walls; ++attempt) {
        const bool vertical = rng.coin();
        const int span = vertical ? height : width;
        const int across = vertical ? width : height;
        const int at = int(rng.uniform(4, across - 5));
        const int len = int(rng.uniform(span * 3 / 10, span * 7 / 10));
        const bool from_start = rng.coin();
        const int begin = from_start ? 1 : span - 1 - len;
        std::vector<Cell> cells;
        for (int k = begin; k < begin + len; ++k) cells.push_back(vertical ? Cell{at, k} : Cell{k, at});
        std::vector<Cell> changed;
        for (Cell c : cells) {
            if (b.get(c) == CellState::Free) {
                b.set(c, CellState::Obstacle);
                changed.push_back(c);
            }
        }
        if (b.connected()) {
            ++placed_walls;
        } else {
            for (Cell c : changed) b.set(c, CellState::Free);
        }
    }
    if (placed_walls == 0) return std::nullopt;

    const auto& vocab = room_vocabulary(type);
    std::vector<PlacedObject> objects;
    std::map<std::string, int> counters;

    // Landmarks: rectangular furniture footprints; the object sits on the footprint.
    const int n_landmarks = int(rng.uniform(3, int(vocab.landmarks.size())));
    std::vector<std::string> pool = vocab.landmarks;
    for (int i = 0; i < n_landmarks && !pool.empty(); ++i) {
        const auto pick = std::size_t(rng.uniform(0, std::int64_t(pool.size()) - 1));
        const std::string category = pool[pick];
        pool.erase(pool.begin() + std::ptrdiff_t(pick));
        bool placed = false;
        for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
            const int fw = int(rng.uniform(1, 4));
            const int fh = int(rng.uniform(1, 4));
            const int c0 = int(rng.uniform(2, width - 3 - fw));
            const int r0 = int(rng.uniform(2, height - 3 - fh));
            bool clear = true;
            for (int r = r0 - 1; r <= r0 + fh && clear; ++r) {
                for (int c = c0 - 1; c <= c0 + fw && clear; ++c) clear = b.get({c, r}) == CellState::Free;
            }
            if (!clear) continue;
            for (int r = r0; r < r0 + fh; ++r) {
                for (int c = c0; c < c0 + fw; ++c) b.set({c, r}, CellState::Obstacle);
            }
            if (!b.connected()) {
                for (int r = r0; r < r0 + fh; ++r) {
                    for (int c = c0; c < c0 + fw; ++c) b.set({c, r}, CellState::Free);
                }
                continue;
            }
            objects.push_back({category_id(category, counters), category, {c0 + fw / 2, r0 + fh / 2}, true});
            placed = true;
        }
    }
    if (objects.size() < 2) return std::nullopt;

    // Small target objects on free cells, some next to furniture.
    std::vector<Cell> free;
    for (int r = 1; r < height - 1; ++r) {
        for (int c = 1; c < width - 1; ++c) {
            if (b.get({c, r}) == CellState::Free) free.push_back({c, r});
        }
    }
    const int n_small = int(rng.uniform(2, 5));
    std::vector<Cell> used;
    for (int i = 0; i < n_small; ++i) {
        const auto& category = vocab.small_objects[std::size_t(rng.uniform(0, std::int64_t(vocab.small_objects.size()) - 1))];
        for (int attempt = 0; attempt < 40; ++attempt) {
            const Cell c = free[std::size_t(rng.uniform(0, std::int64_t(free.size()) - 1))];
            if (std::find(used.begin(), used.end(), c) != used.end()) continue;
            used.push_back(c);
            objects.push_back({category_id(category, counters), category, c, false});
            break;
        }
    }

    char id[64];
    std::snprintf(id, sizeof id, "%s-%llu", std::string(to_string(type)).c_str(), static_cast<unsigned long long>(seed));
    return GridWorld(id, type, width, height, std::move(b.cells()), std::move(objects));
}

} // namespace detail

/// Deterministic procedural room for (room_type, seed).
inline GridWorld generate_scene(RoomType room_type, std::uint64_t seed) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(room_type)));
    constexpr int kMaxAttempts = 32;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        if (auto world = detail::try_generate_scene(room_type, seed, rng)) {
            if (detail::free_space_connected(*world)) return std::move(*world);
        }
    }
    throw Error(ErrorCode::SceneGenFailed, "no valid scene after retries for seed " + std::to_string(seed));
}

// ---- episode pipeline -----------------------------------------------------

inline std::string candidate_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ep-%04zu", index);
    return buf;
}

/// Uniform (scene, free start cell, heading, small target object) draws.
inline std::vector<Candidate> generate_candidates(std::span<const ScenePtr> scenes, std::size_t n, std::uint64_t rng_seed) {
    std::vector<Candidate> out;
    if (n == 0) return out;
    if (scenes.empty()) throw Error(ErrorCode::PreconditionViolation, "generate_candidates needs at least one scene");
    std::vector<std::vector<Cell>> free(scenes.size());
    std::vector<std::vector<std::string>> targets(scenes.size());
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        free[s] = scenes[s]->free_cells();
        for (const auto& o : scenes[s]->objects()) {
            if (!o.is_landmark) targets[s].push_back(o.object_id);
        }
        if (targets[s].empty()) {
            for (const auto& o : scenes[s]->objects()) targets[s].push_back(o.object_id);
        }
    }
    Rng rng(rng_seed);
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = std::size_t(rng.uniform(0, std::int64_t(scenes.size()) - 1));
        const Cell start = free[s][std::size_t(rng.uniform(0, std::int64_t(free[s].size()) - 1))];
        const Heading heading = kHeadings[std::size_t(rng.uniform(0, 3))];
        const auto& target = targets[s][std::size_t(rng.uniform(0, std::int64_t(targets[s].size()) - 1))];
        out.push_back({candidate_id(i), scenes[s]->scene_id(), {start, heading}, target});
    }
    return out;
}

/// Computes the reachability/length fields for one candidate. nullopt when the
/// target's success region is unreachable.
inline std::optional<EpisodeSpec> measure_episode(const GridWorld& world, const Candidate& c) {
    const auto& target = world.object(c.target_object_id);
    const auto region = success_region(world, target.position);
    if (region.empty()) return std::nullopt;
    const auto geodesic = geodesic_distance(world, c.start_pose.cell, region);
    if (!geodesic) return std::nullopt;
    const auto plan = plan_actions(world, c.start_pose, target.position);
    if (!plan) return std::nullopt;
    return EpisodeSpec{c.episode_id, c.scene_id, c.start_pose, c.target_object_id, world.room_type(),
                       *geodesic, static_cast<int>(plan->size())};
}

inline bool passes_filters(const EpisodeSpec& e) { return e.geodesic_length > kMinGeodesic; }

/// Keeps candidates whose target is reachable and more than 1.5 m (geodesic) away.
inline std::vector<EpisodeSpec> filter_episodes(std::span<const Candidate> candidates, const SceneLibrary& scenes) {
    std::vector<EpisodeSpec> out;
    for (const auto& c : candidates) {
        const auto& world = lookup_scene(scenes, c.scene_id);
        if (!world.is_free(c.start_pose.cell)) continue;
        if (auto spec = measure_episode(world, c); spec && passes_filters(*spec)) out.push_back(std::move(*spec));
    }
    return out;
}

inline std::vector<EpisodeSpec> filter_episodes(std::span<const EpisodeSpec> episodes, const SceneLibrary& scenes) {
    std::vector<Candidate> candidates;
    for (const auto& e : episodes) candidates.push_back({e.episode_id, e.scene_id, e.start_pose, e.target_object_id});
    return filter_episodes(candidates, scenes);
}

/// Stratified sample: k / 4 per room type, remainder to the first room types.
inline BenchmarkSet sample_benchmark(std::span<const EpisodeSpec> valid, std::size_t k, std::uint64_t seed) {
    BenchmarkSet set;
    set.seed = seed;
    Rng rng(seed);
    for (std::size_t t = 0; t < kRoomTypes.size(); ++t) {
        const RoomType room = kRoomTypes[t];
        const std::size_t want = k / 4 + (t < k % 4 ? 1 : 0);
        std::vector<const EpisodeSpec*> stratum;
        for (const auto& e : valid) {
            if (e.room_type == room) stratum.push_back(&e);
        }
        if (stratum.size() < want) {
            throw Error(ErrorCode::InsufficientEpisodes, std::string(to_string(room)) + " has " +
                                                             std::to_string(stratum.size()) + " valid episodes, need " +
                                                             std::to_string(want));
        }
        for (std::size_t i = 0; i < want; ++i) {
            const auto j = std::size_t(rng.uniform(std::int64_t(i), std::int64_t(stratum.size()) - 1));
            std::swap(stratum[i], stratum[j]);
            set.episodes.push_back(*stratum[i]);
        }
        set.counts_by_room[room] = int(want);
    }
    std::sort(set.episodes.begin(), set.episodes.end(),
              [](const EpisodeSpec& a, const EpisodeSpec& b) { return a.episode_id < b.episode_id; });
    return set;
}

} // namespace lfnav
