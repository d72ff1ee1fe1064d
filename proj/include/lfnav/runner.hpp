#pragma once

// Experiment orchestration: config, policy construction, the worker pool and
// the resumable per-condition log files.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "lfnav/agents.hpp"
#include "lfnav/episodes.hpp"
#include "lfnav/external.hpp"
#include "lfnav/metrics.hpp"
#include "lfnav/protocol.hpp"
#include "lfnav/serialize.hpp"

namespace lfnav {

enum class ConditionKind : std::uint8_t { Solo, Dyad };

/// One row of the condition matrix. Policy names: solo agents "greedy",
/// "oracle" or "external:<endpoint>"; leaders "oracle" or "external:<endpoint>";
/// followers "obedient", "verifying" or "external:<endpoint>".
struct ConditionSpec {
    std::string name;
    ConditionKind kind = ConditionKind::Dyad;
    std::optional<int> t_max;         // fixed horizon
    std::optional<int> t_max_offset;  // or optimal_steps + offset per episode

    std::string agent = "greedy";
    SensorProfile profile = leader_profile();

    std::string leader = "oracle";
    OracleLeaderOptions leader_options{FrameMode::Egocentric};
    std::string follower = "verifying";
    bool pull_on_blocked = true;
    ProtocolMode mode = ProtocolMode::Pull;
    bool leader_knows_heading = false;
    SensorProfile follower_profile = lfnav::follower_profile();

    std::chrono::milliseconds timeout = kDefaultMessageTimeout;

    int horizon(const EpisodeSpec& e) const { return t_max ? *t_max : e.optimal_steps + t_max_offset.value_or(0); }
};

struct ExperimentConfig {
    std::filesystem::path benchmark;
    std::filesystem::path scenes;
    std::uint64_t seed = 0;
    int workers = 1;
    std::filesystem::path output = "out";
    std::vector<ConditionSpec> conditions;
};

// ---- config parsing -------------------------------------------------------

namespace detail {

[[noreturn]] inline void config_fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

inline SensorProfile named_profile(const Json& j) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "full") return leader_profile();
        if (name == "handicapped") return follower_profile();
        if (name == "handicapped-no-occlusion") return follower_profile(false);
        config_fail("unknown profile '" + name + "' (full, handicapped, handicapped-no-occlusion)");
    }
    return profile_from_json(j);
}

inline bool valid_condition_name(std::string_view name) {
    if (name.empty()) return false;
    for (char c : name) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') return false;
    }
    return true;
}

inline ConditionSpec condition_from_json(const Json& j) {
    only_keys(as_object(j, "condition"),
              {"name", "kind", "t_max", "t_max_offset", "agent", "profile", "leader", "frame", "announce_target",
               "dead_reckon", "follower", "pull_on_blocked", "mode", "leader_knows_heading", "follower_profile",
               "timeout_ms"},
              "condition");
    ConditionSpec c;
    c.name = get_string(j, "name");
    if (!valid_condition_name(c.name)) config_fail("condition name '" + c.name + "' must match [A-Za-z0-9._-]+");
    const auto kind = get_string(j, "kind");
    if (kind == "solo") {
        c.kind = ConditionKind::Solo;
    } else if (kind == "dyad") {
        c.kind = ConditionKind::Dyad;
    } else {
        config_fail("condition kind must be solo or dyad");
    }
    if (j.contains("t_max")) c.t_max = get_int32(j, "t_max");
    if (j.contains("t_max_offset")) c.t_max_offset = get_int32(j, "t_max_offset");
    if (c.t_max.has_value() == c.t_max_offset.has_value()) config_fail(c.name + ": give exactly one of t_max, t_max_offset");
    if (c.t_max && *c.t_max < 1) config_fail(c.name + ": t_max must be >= 1");
    if (c.t_max_offset && *c.t_max_offset < 0) config_fail(c.name + ": t_max_offset must be >= 0");
    if (j.contains("timeout_ms")) c.timeout = std::chrono::milliseconds(get_int(j, "timeout_ms"));

    auto check_policy = [&](const std::string& value, std::initializer_list<std::string_view> builtin) {
        if (value.starts_with("external:")) {
            try {
                parse_endpoint(value.substr(std::string_view("external:").size()));
            } catch (const Error& e) {
                config_fail(c.name + ": " + e.what());
            }
            return;
        }
        for (auto b : builtin) {
            if (value == b) return;
        }
        config_fail(c.name + ": unknown policy '" + value + "'");
    };
    if (c.kind == ConditionKind::Solo) {
        for (const char* k : {"leader", "frame", "announce_target", "dead_reckon", "follower", "pull_on_blocked", "mode",
                              "leader_knows_heading", "follower_profile"}) {
            if (j.contains(k)) config_fail(c.name + ": '" + k + "' is a dyad setting");
        }
        c.agent = get_string(j, "agent");
        check_policy(c.agent, {"greedy", "oracle"});
        if (j.contains("profile")) c.profile = named_profile(j["profile"]);
    } else {
        for (const char* k : {"agent", "profile"}) {
            if (j.contains(k)) config_fail(c.name + ": '" + k + "' is a solo setting");
        }
        c.leader = get_opt_string(j, "leader").value_or("oracle");
        check_policy(c.leader, {"oracle"});
        if (j.contains("frame")) c.leader_options.frame_mode = parse_frame_mode(get_string(j, "frame"));
        if (j.contains("announce_target")) c.leader_options.announce_target = get_bool(j, "announce_target");
        if (j.contains("dead_reckon")) c.leader_options.dead_reckon = get_bool(j, "dead_reckon");
        c.follower = get_string(j, "follower");
        check_policy(c.follower, {"obedient", "verifying"});
        if (j.contains("pull_on_blocked")) c.pull_on_blocked = get_bool(j, "pull_on_blocked");
        c.mode = parse_protocol_mode(get_string(j, "mode"));
        if (j.contains("leader_knows_heading")) c.leader_knows_heading = get_bool(j, "leader_knows_heading");
        if (j.contains("follower_profile")) c.follower_profile = named_profile(j["follower_profile"]);
        if (c.leader == "oracle" && c.leader_options.frame_mode == FrameMode::FollowerCentric && !c.leader_knows_heading) {
            config_fail(c.name + ": FollowerCentric leader requires leader_knows_heading");
        }
    }
    return c;
}

inline std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

} // namespace detail

/// Parses a config document. Relative paths resolve against `base_dir`.
inline ExperimentConfig config_from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
    using namespace detail;
    ExperimentConfig cfg;
    try {
        only_keys(as_object(j, "config"), {"v", "benchmark", "scenes", "seed", "workers", "output", "conditions"}, "config");
        check_version(j);
        cfg.benchmark = base_dir / get_string(j, "benchmark");
        cfg.scenes = j.contains("scenes") ? base_dir / get_string(j, "scenes") : cfg.benchmark.parent_path() / "scenes";
        cfg.seed = get_uint64(j, "seed");
        if (j.contains("workers")) cfg.workers = get_int32(j, "workers");
        if (j.contains("output")) cfg.output = base_dir / get_string(j, "output");
        std::set<std::string> names;
        for (const auto& c : get_array(j, "conditions")) {
            cfg.conditions.push_back(condition_from_json(c));
            if (!names.insert(cfg.conditions.back().name).second) {
                config_fail("duplicate condition name '" + cfg.conditions.back().name + "'");
            }
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ParseError) throw;
        config_fail(e.what());
    }
    if (cfg.conditions.empty()) config_fail("config has no conditions");
    if (cfg.workers < 1) config_fail("workers must be >= 1");
    return cfg;
}

/// LFNAV_SEED, LFNAV_WORKERS and LFNAV_OUT override the file.
inline void apply_env_overrides(ExperimentConfig& cfg) {
    try {
        if (auto v = detail::env("LFNAV_SEED")) cfg.seed = std::stoull(*v);
        if (auto v = detail::env("LFNAV_WORKERS")) cfg.workers = std::stoi(*v);
    } catch (const std::exception&) {
        detail::config_fail("LFNAV_SEED / LFNAV_WORKERS must be integers");
    }
    if (auto v = detail::env("LFNAV_OUT")) cfg.output = *v;
    if (cfg.workers < 1) detail::config_fail("workers must be >= 1");
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    Json j;
    try {
        j = detail::parse_json_text(text);
    } catch (const Error& e) {
        detail::config_fail(path.string() + ": " + e.what());
    }
    auto cfg = config_from_json(j, path.parent_path());
    apply_env_overrides(cfg);
    return cfg;
}

// ---- policies -------------------------------------------------------------

namespace detail {
inline std::function<std::unique_ptr<LineTransport>()> connector(const std::string& policy) {
    const auto endpoint = policy.substr(std::string_view("external:").size());
    return [endpoint] { return open_transport(endpoint); };
}
} // namespace detail

inline std::unique_ptr<SoloPolicy> make_solo(const ConditionSpec& c, const GridWorld& world) {
    if (c.agent == "greedy") return std::make_unique<GreedySolo>();
    if (c.agent == "oracle") return std::make_unique<OracleSolo>(world);
    return std::make_unique<ExternalSolo>(detail::connector(c.agent), c.timeout);
}

inline std::unique_ptr<LeaderPolicy> make_leader(const ConditionSpec& c) {
    if (c.leader == "oracle") return std::make_unique<OracleLeader>(c.leader_options);
    return std::make_unique<ExternalLeader>(detail::connector(c.leader), c.timeout);
}

inline std::unique_ptr<FollowerPolicy> make_follower(const ConditionSpec& c) {
    if (c.follower == "obedient") return std::make_unique<ObedientFollower>();
    if (c.follower == "verifying") return std::make_unique<VerifyingFollower>(c.pull_on_blocked);
    return std::make_unique<ExternalFollower>(detail::connector(c.follower), c.timeout);
}

/// Per-episode seed: shared by all conditions so they face identical draws.
inline std::uint64_t episode_seed(std::uint64_t run_seed, std::string_view episode_id) {
    return mix_seed(run_seed, hash_string(episode_id));
}

/// Runs one episode of a condition with fresh policy instances.
inline TrajectoryLog run_condition_episode(const ConditionSpec& c, const EpisodeSpec& e, const GridWorld& world,
                                           std::uint64_t run_seed, std::optional<int> horizon_override = std::nullopt) {
    const int t_max = horizon_override.value_or(c.horizon(e));
    const auto seed = episode_seed(run_seed, e.episode_id);
    if (c.kind == ConditionKind::Solo) {
        auto agent = make_solo(c, world);
        return run_solo_episode(e, world, *agent, c.profile, t_max, seed, c.name);
    }
    auto leader = make_leader(c);
    auto follower = make_follower(c);
    EpisodeOptions options;
    options.condition = c.name;
    options.leader_knows_heading = c.leader_knows_heading;
    options.leader_heading = c.leader_options.reference_heading;
    options.follower_profile = c.follower_profile;
    return run_episode(e, world, *leader, *follower, c.mode, t_max, seed, options);
}

// ---- execution ------------------------------------------------------------

inline void sort_logs(std::vector<TrajectoryLog>& logs) {
    std::sort(logs.begin(), logs.end(), [](const auto& a, const auto& b) { return a.episode_id < b.episode_id; });
}

/// Runs `episodes` on `workers` threads. Results do not depend on the worker
/// count: each episode is independent and the output is sorted by id.
/// `on_done` is called under a lock as each episode finishes.
inline std::vector<TrajectoryLog> run_episodes(const ConditionSpec& c, std::span<const EpisodeSpec> episodes,
                                               const SceneLibrary& scenes, std::uint64_t run_seed, int workers,
                                               std::optional<int> horizon_override = std::nullopt,
                                               const std::function<void(const TrajectoryLog&)>& on_done = {}) {
    std::vector<TrajectoryLog> out;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= episodes.size()) return;
            try {
                auto log = run_condition_episode(c, episodes[i], lookup_scene(scenes, episodes[i].scene_id), run_seed,
                                                 horizon_override);
                std::lock_guard lock(mu);
                if (on_done) on_done(log);
                out.push_back(std::move(log));
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = episodes.size();
                return;
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, int(episodes.size())));
    if (n == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    sort_logs(out);
    return out;
}

inline std::filesystem::path log_path(const std::filesystem::path& out_dir, std::string_view condition,
                                      std::string_view suffix = {}) {
    return out_dir / (std::string(condition) + std::string(suffix) + ".jsonl");
}

/// Writes logs sorted by episode id, replacing the file atomically.
inline void write_logs(const std::filesystem::path& path, std::vector<TrajectoryLog> logs) {
    sort_logs(logs);
    std::string text;
    for (const auto& l : logs) text += log_to_line(l);
    auto tmp = path;
    tmp += ".tmp";
    write_text_file(tmp, text);
    std::filesystem::rename(tmp, path);
}

/// Runs a condition into `path`, resuming: episodes already present in the
/// file are kept, the rest are appended as they finish, and the file is
/// rewritten in canonical order at the end. A torn last line from an
/// interrupted run is dropped.
inline std::vector<TrajectoryLog> run_condition_to_file(const ConditionSpec& c, std::span<const EpisodeSpec> episodes,
                                                        const SceneLibrary& scenes, std::uint64_t run_seed, int workers,
                                                        const std::filesystem::path& path,
                                                        std::optional<int> horizon_override = std::nullopt) {
    std::vector<TrajectoryLog> done;
    std::map<std::string, int, std::less<>> wanted;  // episode id -> horizon
    for (const auto& e : episodes) wanted[e.episode_id] = horizon_override.value_or(c.horizon(e));
    if (std::filesystem::exists(path)) {
        std::istringstream in(read_text_file(path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                auto log = log_from_json(detail::parse_json_text(line));
                // Records from another condition or horizon are stale and rerun.
                const auto it = wanted.find(log.episode_id);
                if (log.condition == c.name && it != wanted.end() && log.t_max == it->second) done.push_back(std::move(log));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::ParseError) throw;
            }
        }
    }
    std::set<std::string, std::less<>> have;
    std::erase_if(done, [&](const TrajectoryLog& l) { return !have.insert(l.episode_id).second; });
    std::vector<EpisodeSpec> todo;
    for (const auto& e : episodes) {
        if (!have.count(e.episode_id)) todo.push_back(e);
    }
    write_logs(path, done);
    if (!todo.empty()) {
        std::ofstream append(path, std::ios::binary | std::ios::app);
        if (!append) throw Error(ErrorCode::IoError, "cannot append to " + path.string());
        auto fresh = run_episodes(c, todo, scenes, run_seed, workers, horizon_override, [&](const TrajectoryLog& l) {
            append << log_to_line(l);
            append.flush();
        });
        append.close();
        for (auto& l : fresh) done.push_back(std::move(l));
    }
    write_logs(path, done);
    sort_logs(done);
    return done;
}

struct LoadedBenchmark {
    BenchmarkSet benchmark;
    SceneLibrary scenes;
};

inline LoadedBenchmark load_benchmark_with_scenes(const std::filesystem::path& benchmark,
                                                  const std::filesystem::path& scenes_dir) {
    LoadedBenchmark out{load_benchmark(benchmark), {}};
    out.scenes = load_scenes_for(out.benchmark.episodes, scenes_dir);
    for (const auto& e : out.benchmark.episodes) {
        const auto& world = lookup_scene(out.scenes, e.scene_id);
        if (!world.find_object(e.target_object_id)) {
            throw Error(ErrorCode::ParseError, e.episode_id + ": target " + e.target_object_id + " not in scene " + e.scene_id);
        }
        if (!world.is_free(e.start_pose.cell)) throw Error(ErrorCode::ParseError, e.episode_id + ": start cell is not free");
    }
    return out;
}

struct RunResult {
    std::vector<std::pair<std::string, std::vector<TrajectoryLog>>> by_condition;

    bool any_policy_failure() const {
        for (const auto& [_, logs] : by_condition) {
            for (const auto& l : logs) {
                if (l.policy_failure) return true;
            }
        }
        return false;
    }
};

/// The `run` subcommand: every condition into <output>/<condition>.jsonl.
inline RunResult run_experiment(const ExperimentConfig& cfg, const LoadedBenchmark& data) {
    std::filesystem::create_directories(cfg.output);
    RunResult result;
    for (const auto& c : cfg.conditions) {
        auto logs = run_condition_to_file(c, data.benchmark.episodes, data.scenes, cfg.seed, cfg.workers,
                                          log_path(cfg.output, c.name));
        result.by_condition.emplace_back(c.name, std::move(logs));
    }
    return result;
}

// ---- ablation -------------------------------------------------------------

struct AblationOptions {
    int low = 30;
    int high = 60;
    bool fresh = false;  // run every episode at `high` instead of re-running failures only
};

struct AblationResult {
    std::vector<AblationRow> rows;
    bool policy_failure = false;
};

/// Each condition is run at `low`, then its failures (or, with `fresh`, all
/// episodes) at `high`; the two are merged per episode. Logs go to
/// <output>/<condition>.t<low>.jsonl and .t<high>.jsonl.
inline AblationResult run_ablation(const ExperimentConfig& cfg, const LoadedBenchmark& data, const AblationOptions& opt) {
    if (opt.low < 1 || opt.high < opt.low) detail::config_fail("ablation horizons must satisfy 1 <= low <= high");
    std::filesystem::create_directories(cfg.output);
    AblationResult result;
    for (const auto& c : cfg.conditions) {
        const auto low_logs = run_condition_to_file(c, data.benchmark.episodes, data.scenes, cfg.seed, cfg.workers,
                                                    log_path(cfg.output, c.name, ".t" + std::to_string(opt.low)), opt.low);
        std::vector<EpisodeSpec> rerun;
        for (const auto& e : data.benchmark.episodes) {
            const auto it = std::find_if(low_logs.begin(), low_logs.end(), [&](const auto& l) { return l.episode_id == e.episode_id; });
            if (opt.fresh || it == low_logs.end() || !it->success()) rerun.push_back(e);
        }
        const auto high_logs = run_condition_to_file(c, rerun, data.scenes, cfg.seed, cfg.workers,
                                                     log_path(cfg.output, c.name, ".t" + std::to_string(opt.high)), opt.high);
        for (const auto* logs : {&low_logs, &high_logs}) {
            for (const auto& l : *logs) result.policy_failure = result.policy_failure || l.policy_failure;
        }
        result.rows.push_back(ablation_report(c.name, low_logs, high_logs, opt.low));
    }
    return result;
}

// ---- generation -----------------------------------------------------------

/// Scene i uses room type i mod 4 and seed `seed + i`.
inline std::vector<GridWorld> generate_scene_set(int count, std::uint64_t seed) {
    if (count < 1) detail::config_fail("scene count must be >= 1");
    std::vector<GridWorld> out;
    for (int i = 0; i < count; ++i) out.push_back(generate_scene(kRoomTypes[std::size_t(i) % 4], seed + std::uint64_t(i)));
    return out;
}

/// Every *.json scene in `dir`, ordered by scene id.
inline std::vector<ScenePtr> load_scene_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
    std::vector<ScenePtr> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") out.push_back(std::make_shared<const GridWorld>(load_scene(entry.path())));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a->scene_id() < b->scene_id(); });
    if (out.empty()) throw Error(ErrorCode::IoError, "no scenes in " + dir.string());
    return out;
}

/// Candidates -> reachability and distance filter -> stratified sample.
inline BenchmarkSet build_benchmark(std::span<const ScenePtr> scenes, std::size_t n_candidates, std::size_t k,
                                    std::uint64_t seed) {
    SceneLibrary lib;
    for (const auto& s : scenes) lib.emplace(s->scene_id(), s);
    const auto candidates = generate_candidates(scenes, n_candidates, seed);
    const auto valid = filter_episodes(std::span<const Candidate>(candidates), lib);
    return sample_benchmark(valid, k, seed);
}

} // namespace lfnav
