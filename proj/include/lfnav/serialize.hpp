#pragma once

// JSON forms for scenes, benchmarks, trajectory logs and the dialogue grammar.
// Every parser is strict: unknown keys, missing keys and wrong types raise
// ParseError. Schema reference: docs/formats.md.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfnav/dialogue.hpp"
#include "lfnav/episodes.hpp"
#include "lfnav/grounding.hpp"
#include "lfnav/perception.hpp"
#include "lfnav/world.hpp"

namespace lfnav {

using Json = nlohmann::ordered_json;

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

inline const Json& as_object(const Json& j, std::string_view what) {
    if (!j.is_object()) parse_fail(std::string(what) + " must be an object");
    return j;
}

/// Rejects keys outside `allowed`.
inline void only_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) parse_fail("unexpected key '" + key + "' in " + std::string(what));
    }
}

inline const Json& field(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) parse_fail(std::string("missing key '") + key + "'");
    return *it;
}

inline std::string get_string(const Json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) parse_fail(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

inline std::optional<std::string> get_opt_string(const Json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return get_string(j, key);
}

inline std::int64_t get_int(const Json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_integer()) parse_fail(std::string("'") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

inline int get_int32(const Json& j, const char* key) {
    const auto v = get_int(j, key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        parse_fail(std::string("'") + key + "' out of range");
    }
    return int(v);
}

inline std::uint64_t get_uint64(const Json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        parse_fail(std::string("'") + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline double get_double(const Json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number()) parse_fail(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

inline bool get_bool(const Json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_boolean()) parse_fail(std::string("'") + key + "' must be a boolean");
    return v.get<bool>();
}

inline const Json& get_array(const Json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_array()) parse_fail(std::string("'") + key + "' must be an array");
    return v;
}

inline void check_version(const Json& j) {
    if (get_int(j, "v") != kSchemaVersion) parse_fail("unsupported schema version");
}

inline Json parse_json_text(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        parse_fail(std::string("malformed JSON: ") + e.what());
    }
}

} // namespace detail

// ---- small types ----------------------------------------------------------

inline Json to_json(Cell c) { return Json{{"col", c.col}, {"row", c.row}}; }

inline Cell cell_from_json(const Json& j) {
    detail::only_keys(detail::as_object(j, "cell"), {"col", "row"}, "cell");
    return {detail::get_int32(j, "col"), detail::get_int32(j, "row")};
}

inline Json to_json(const Pose& p) {
    return Json{{"col", p.cell.col}, {"row", p.cell.row}, {"heading", to_string(p.heading)}};
}

inline Pose pose_from_json(const Json& j) {
    detail::only_keys(detail::as_object(j, "pose"), {"col", "row", "heading"}, "pose");
    return {{detail::get_int32(j, "col"), detail::get_int32(j, "row")}, parse_heading(detail::get_string(j, "heading"))};
}

// ---- scenes ---------------------------------------------------------------

/// Occupancy rows are listed north first, so the text reads like a map.
inline Json to_json(const GridWorld& w) {
    Json rows = Json::array();
    for (int r = w.height() - 1; r >= 0; --r) {
        std::string line(std::size_t(w.width()), '.');
        for (int c = 0; c < w.width(); ++c) {
            if (!w.is_free({c, r})) line[std::size_t(c)] = '#';
        }
        rows.push_back(std::move(line));
    }
    Json objects = Json::array();
    for (const auto& o : w.objects()) {
        objects.push_back({{"id", o.object_id},
                           {"category", o.category},
                           {"col", o.position.col},
                           {"row", o.position.row},
                           {"landmark", o.is_landmark}});
    }
    return Json{{"v", kSchemaVersion},       {"scene_id", w.scene_id()}, {"room_type", to_string(w.room_type())},
                {"width", w.width()},        {"height", w.height()},     {"cell_size", w.cell_size()},
                {"rows", std::move(rows)},   {"objects", std::move(objects)}};
}

inline GridWorld scene_from_json(const Json& j) {
    using namespace detail;
    only_keys(as_object(j, "scene"), {"v", "scene_id", "room_type", "width", "height", "cell_size", "rows", "objects"},
              "scene");
    check_version(j);
    const int width = get_int32(j, "width");
    const int height = get_int32(j, "height");
    if (width < 1 || height < 1) parse_fail("scene dimensions must be positive");
    if (get_double(j, "cell_size") != kCellSize) parse_fail("cell_size must be 0.25");
    const auto& rows = get_array(j, "rows");
    if (rows.size() != std::size_t(height)) parse_fail("scene has " + std::to_string(rows.size()) + " rows, expected height");
    std::vector<CellState> occupancy(std::size_t(width) * std::size_t(height));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].is_string()) parse_fail("scene rows must be strings");
        const auto& line = rows[i].get_ref<const std::string&>();
        if (line.size() != std::size_t(width)) parse_fail("scene row length differs from width");
        const int r = height - 1 - int(i);
        for (int c = 0; c < width; ++c) {
            const char ch = line[std::size_t(c)];
            if (ch != '.' && ch != '#') parse_fail("scene rows may only contain '.' and '#'");
            occupancy[std::size_t(r) * std::size_t(width) + std::size_t(c)] =
                ch == '.' ? CellState::Free : CellState::Obstacle;
        }
    }
    std::vector<PlacedObject> objects;
    for (const auto& o : get_array(j, "objects")) {
        only_keys(as_object(o, "object"), {"id", "category", "col", "row", "landmark"}, "object");
        objects.push_back({get_string(o, "id"), get_string(o, "category"), {get_int32(o, "col"), get_int32(o, "row")},
                           get_bool(o, "landmark")});
    }
    try {
        return GridWorld(get_string(j, "scene_id"), parse_room_type(get_string(j, "room_type")), width, height,
                         std::move(occupancy), std::move(objects));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw;
        parse_fail(std::string("invalid scene: ") + e.what());
    }
}

// ---- perception -----------------------------------------------------------

inline Json to_json(const Percept& p) {
    Json j{{"object_id", p.object_id},
           {"category", p.category},
           {"is_landmark", p.is_landmark},
           {"distance", p.distance},
           {"bearing", p.bearing}};
    if (p.global_position) j["global_position"] = to_json(*p.global_position);
    return j;
}

inline Percept percept_from_json(const Json& j) {
    using namespace detail;
    only_keys(as_object(j, "percept"), {"object_id", "category", "is_landmark", "distance", "bearing", "global_position"},
              "percept");
    Percept p{get_string(j, "object_id"), get_string(j, "category"), get_bool(j, "is_landmark"),
              get_double(j, "distance"), get_double(j, "bearing"), std::nullopt};
    if (j.contains("global_position")) p.global_position = cell_from_json(j["global_position"]);
    return p;
}

inline Json to_json(const Observation& o) {
    Json j = Json::object();
    if (o.observer_pose) j["observer_pose"] = to_json(*o.observer_pose);
    Json percepts = Json::array();
    for (const auto& p : o.percepts) percepts.push_back(to_json(p));
    j["percepts"] = std::move(percepts);
    j["facing_blocked"] = o.facing_blocked;
    return j;
}

inline Observation observation_from_json(const Json& j) {
    using namespace detail;
    only_keys(as_object(j, "observation"), {"observer_pose", "percepts", "facing_blocked"}, "observation");
    Observation o;
    if (j.contains("observer_pose")) o.observer_pose = pose_from_json(j["observer_pose"]);
    for (const auto& p : get_array(j, "percepts")) o.percepts.push_back(percept_from_json(p));
    o.facing_blocked = get_bool(j, "facing_blocked");
    return o;
}

// ---- instructions and queries ---------------------------------------------

inline Json to_json(const FrameTag& f) {
    Json j{{"kind", to_string(f.kind)}};
    if (f.compass) j["compass"] = to_string(*f.compass);
    return j;
}

inline FrameTag frame_from_json(const Json& j) {
    using namespace detail;
    only_keys(as_object(j, "frame"), {"kind", "compass"}, "frame");
    const auto kind = parse_enum(get_string(j, "kind"),
                                 std::array{FrameTag::Kind::LeaderFrame, FrameTag::Kind::FollowerFrame,
                                            FrameTag::Kind::Allocentric},
                                 "frame kind");
    FrameTag f{kind, std::nullopt};
    if (j.contains("compass")) f.compass = parse_heading(get_string(j, "compass"));
    if ((kind == FrameTag::Kind::Allocentric) != f.compass.has_value()) {
        parse_fail("compass is required for Allocentric frames and forbidden otherwise");
    }
    return f;
}

inline Json to_json(const Instruction& instruction) {
    return std::visit(
        [](const auto& i) -> Json {
            using T = std::decay_t<decltype(i)>;
            if constexpr (std::is_same_v<T, Motion>) {
                return Json{{"type", "Motion"},
                            {"direction", to_string(i.direction)},
                            {"steps", i.steps},
                            {"frame", to_json(i.frame)}};
            } else if constexpr (std::is_same_v<T, GoToLandmark>) {
                Json j{{"type", "GoToLandmark"}, {"category", i.category}};
                if (i.object_id) j["object_id"] = *i.object_id;
                if (i.relation) j["relation"] = *i.relation;
                return j;
            } else if constexpr (std::is_same_v<T, Rotate>) {
                return Json{{"type", "Rotate"}, {"direction", to_string(i.direction)}, {"quarter_turns", i.quarter_turns}};
            } else {
                return Json{{"type", "DeclareArrived"}};
            }
        },
        instruction);
}

inline const std::string& payload_type(const Json& j) {
    detail::as_object(j, "payload");
    const auto& t = detail::field(j, "type");
    if (!t.is_string()) detail::parse_fail("'type' must be a string");
    return t.get_ref<const std::string&>();
}

inline Instruction instruction_from_json(const Json& j) {
    using namespace detail;
    const auto& type = payload_type(j);
    Instruction out;
    if (type == "Motion") {
        only_keys(j, {"type", "direction", "steps", "frame"}, "Motion");
        out = Motion{parse_relative_direction(get_string(j, "direction")), get_int32(j, "steps"),
                     frame_from_json(field(j, "frame"))};
    } else if (type == "GoToLandmark") {
        only_keys(j, {"type", "category", "object_id", "relation"}, "GoToLandmark");
        out = GoToLandmark{get_string(j, "category"), get_opt_string(j, "object_id"), get_opt_string(j, "relation")};
    } else if (type == "Rotate") {
        only_keys(j, {"type", "direction", "quarter_turns"}, "Rotate");
        out = Rotate{parse_rotation_direction(get_string(j, "direction")), get_int32(j, "quarter_turns")};
    } else if (type == "DeclareArrived") {
        only_keys(j, {"type"}, "DeclareArrived");
        out = DeclareArrived{};
    } else {
        parse_fail("unknown instruction type '" + type + "'");
    }
    validate(out);
    return out;
}

inline Json to_json(const Query& q) {
    Json ref = Json::object();
    if (q.ungrounded_reference.landmark) ref["landmark"] = *q.ungrounded_reference.landmark;
    if (q.ungrounded_reference.motion) ref["motion"] = to_string(*q.ungrounded_reference.motion);
    return Json{{"type", "Query"},
                {"ungrounded_reference", std::move(ref)},
                {"visible_landmarks", q.visible_landmarks},
                {"facing_blocked", q.facing_blocked}};
}

inline Query query_from_json(const Json& j) {
    using namespace detail;
    if (payload_type(j) != "Query") parse_fail("expected a Query");
    only_keys(j, {"type", "ungrounded_reference", "visible_landmarks", "facing_blocked"}, "Query");
    Query q;
    const auto& ref = as_object(field(j, "ungrounded_reference"), "ungrounded_reference");
    only_keys(ref, {"landmark", "motion"}, "ungrounded_reference");
    q.ungrounded_reference.landmark = get_opt_string(ref, "landmark");
    if (ref.contains("motion")) q.ungrounded_reference.motion = parse_relative_direction(get_string(ref, "motion"));
    for (const auto& v : get_array(j, "visible_landmarks")) {
        if (!v.is_string()) parse_fail("visible_landmarks must be strings");
        q.visible_landmarks.push_back(v.get<std::string>());
    }
    q.facing_blocked = get_bool(j, "facing_blocked");
    return q;
}

inline Json actions_to_json(std::span<const Action> actions) {
    Json a = Json::array();
    for (Action x : actions) a.push_back(to_string(x));
    return a;
}

inline std::vector<Action> actions_from_json(const Json& j) {
    if (!j.is_array()) detail::parse_fail("actions must be an array");
    std::vector<Action> out;
    for (const auto& v : j) {
        if (!v.is_string()) detail::parse_fail("actions must be strings");
        out.push_back(parse_action(v.get<std::string>()));
    }
    return out;
}

inline Json to_json(const Payload& payload) {
    return std::visit(
        [](const auto& p) -> Json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Instruction>) {
                return to_json(p);
            } else if constexpr (std::is_same_v<T, Query>) {
                return to_json(p);
            } else if constexpr (std::is_same_v<T, Report>) {
                return Json{{"type", "Report"}, {"actions", actions_to_json(p.actions)}};
            } else {
                return Json{{"type", "Event"}, {"kind", to_string(p.kind)}, {"detail", p.detail}};
            }
        },
        payload);
}

inline Payload payload_from_json(const Json& j) {
    using namespace detail;
    const auto& type = payload_type(j);
    if (type == "Query") return query_from_json(j);
    if (type == "Report") {
        only_keys(j, {"type", "actions"}, "Report");
        return Report{actions_from_json(field(j, "actions"))};
    }
    if (type == "Event") {
        only_keys(j, {"type", "kind", "detail"}, "Event");
        return Event{parse_enum(get_string(j, "kind"), kEventKinds, "event kind"), get_string(j, "detail")};
    }
    return instruction_from_json(j);
}

inline Json to_json(const Message& m) {
    return Json{{"sender", to_string(m.sender)}, {"step_index", m.step_index}, {"payload", to_json(m.payload)}};
}

inline Message message_from_json(const Json& j) {
    using namespace detail;
    only_keys(as_object(j, "message"), {"sender", "step_index", "payload"}, "message");
    Message m{parse_enum(get_string(j, "sender"), std::array{Sender::Leader, Sender::Follower, Sender::System}, "sender"),
              get_int32(j, "step_index"), payload_from_json(field(j, "payload"))};
    const auto kind = m.kind();
    if ((kind == MessageKind::Instruction && m.sender != Sender::Leader) ||
        (kind == MessageKind::Query && m.sender != Sender::Follower) ||
        (kind == MessageKind::Report && m.sender != Sender::Follower) ||
        (kind == MessageKind::Event && m.sender != Sender::System)) {
        parse_fail("message sender does not match its kind");
    }
    return m;
}

inline Json to_json(const DialogueHistory& h) {
    Json j = Json::array();
    for (const auto& m : h.messages()) j.push_back(to_json(m));
    return j;
}

inline DialogueHistory dialogue_from_json(const Json& j) {
    if (!j.is_array()) detail::parse_fail("dialogue must be an array");
    DialogueHistory h;
    for (const auto& m : j) {
        try {
            h.append(message_from_json(m));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ParseError) throw;
            detail::parse_fail(e.what());
        }
    }
    return h;
}

// ---- benchmark ------------------------------------------------------------

inline std::string scene_file_name(std::string_view scene_id) { return std::string(scene_id) + ".json"; }

inline Json to_json(const EpisodeSpec& e, std::uint64_t benchmark_seed) {
    return Json{{"v", kSchemaVersion},
                {"episode_id", e.episode_id},
                {"scene_id", e.scene_id},
                {"scene_file", scene_file_name(e.scene_id)},
                {"room_type", to_string(e.room_type)},
                {"start_pose", to_json(e.start_pose)},
                {"target_object_id", e.target_object_id},
                {"geodesic_length", e.geodesic_length},
                {"optimal_steps", e.optimal_steps},
                {"benchmark_seed", benchmark_seed}};
}

inline EpisodeSpec episode_from_json(const Json& j, std::uint64_t* benchmark_seed = nullptr) {
    using namespace detail;
    only_keys(as_object(j, "episode"),
              {"v", "episode_id", "scene_id", "scene_file", "room_type", "start_pose", "target_object_id",
               "geodesic_length", "optimal_steps", "benchmark_seed"},
              "episode");
    check_version(j);
    EpisodeSpec e{get_string(j, "episode_id"),       get_string(j, "scene_id"),
                  pose_from_json(field(j, "start_pose")), get_string(j, "target_object_id"),
                  parse_room_type(get_string(j, "room_type")), get_double(j, "geodesic_length"),
                  get_int32(j, "optimal_steps")};
    if (get_string(j, "scene_file") != scene_file_name(e.scene_id)) parse_fail("scene_file does not match scene_id");
    const auto seed = get_uint64(j, "benchmark_seed");
    if (benchmark_seed) *benchmark_seed = seed;
    return e;
}

// ---- trajectory logs ------------------------------------------------------

inline Json to_json(const StepRecord& s) {
    Json j{{"step_index", s.step_index}};
    if (s.leader_pose) j["leader_pose"] = to_json(*s.leader_pose);
    j["follower_pose"] = to_json(s.follower_pose);
    j["action"] = to_string(s.action);
    j["action_result"] = to_string(s.action_result);
    Json messages = Json::array();
    for (const auto& m : s.messages) messages.push_back(to_json(m));
    j["messages"] = std::move(messages);
    j["observation"] = to_json(s.observation);
    return j;
}

inline StepRecord step_from_json(const Json& j) {
    using namespace detail;
    only_keys(as_object(j, "step"),
              {"step_index", "leader_pose", "follower_pose", "action", "action_result", "messages", "observation"}, "step");
    StepRecord s;
    s.step_index = get_int32(j, "step_index");
    if (j.contains("leader_pose")) s.leader_pose = pose_from_json(j["leader_pose"]);
    s.follower_pose = pose_from_json(field(j, "follower_pose"));
    s.action = parse_action(get_string(j, "action"));
    s.action_result = parse_action_result(get_string(j, "action_result"));
    for (const auto& m : get_array(j, "messages")) s.messages.push_back(message_from_json(m));
    s.observation = observation_from_json(field(j, "observation"));
    return s;
}

inline Json to_json(const TrajectoryLog& log) {
    Json j{{"v", kSchemaVersion}, {"episode_id", log.episode_id}, {"scene_id", log.scene_id}};
    if (log.mode) j["mode"] = to_string(*log.mode);
    j["condition"] = log.condition;
    j["seed"] = log.seed;
    j["t_max"] = log.t_max;
    j["start_pose"] = to_json(log.start_pose);
    j["target_object_id"] = log.target_object_id;
    j["optimal_steps"] = log.optimal_steps;
    j["outcome"] = to_string(log.outcome);
    j["steps_taken"] = log.steps_taken;
    j["push_count"] = log.push_count;
    j["pull_count"] = log.pull_count;
    j["final_distance"] = log.final_distance;
    j["final_pose"] = to_json(log.final_pose);
    j["policy_failure"] = log.policy_failure;
    Json steps = Json::array();
    for (const auto& s : log.steps) steps.push_back(to_json(s));
    j["steps"] = std::move(steps);
    Json tail = Json::array();
    for (const auto& m : log.tail_messages) tail.push_back(to_json(m));
    j["tail_messages"] = std::move(tail);
    return j;
}

inline TrajectoryLog log_from_json(const Json& j) {
    using namespace detail;
    only_keys(as_object(j, "trajectory log"),
              {"v", "episode_id", "scene_id", "mode", "condition", "seed", "t_max", "start_pose", "target_object_id",
               "optimal_steps", "outcome", "steps_taken", "push_count", "pull_count", "final_distance", "final_pose",
               "policy_failure", "steps", "tail_messages"},
              "trajectory log");
    check_version(j);
    TrajectoryLog log;
    log.episode_id = get_string(j, "episode_id");
    log.scene_id = get_string(j, "scene_id");
    if (j.contains("mode")) log.mode = parse_protocol_mode(get_string(j, "mode"));
    log.condition = get_string(j, "condition");
    log.seed = get_uint64(j, "seed");
    log.t_max = get_int32(j, "t_max");
    log.start_pose = pose_from_json(field(j, "start_pose"));
    log.target_object_id = get_string(j, "target_object_id");
    log.optimal_steps = get_int32(j, "optimal_steps");
    log.outcome = parse_outcome(get_string(j, "outcome"));
    log.steps_taken = get_int32(j, "steps_taken");
    log.push_count = get_int32(j, "push_count");
    log.pull_count = get_int32(j, "pull_count");
    log.final_distance = get_double(j, "final_distance");
    log.final_pose = pose_from_json(field(j, "final_pose"));
    log.policy_failure = get_bool(j, "policy_failure");
    for (const auto& s : get_array(j, "steps")) log.steps.push_back(step_from_json(s));
    for (const auto& m : get_array(j, "tail_messages")) log.tail_messages.push_back(message_from_json(m));
    if (log.steps_taken != int(log.steps.size())) parse_fail("steps_taken does not match the step records");
    return log;
}

// ---- files ----------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

namespace detail {
/// Applies `f` to each non-empty line of a JSONL file, parsed. Parse errors
/// from the JSON or from `f` name the file and line.
template <class F>
auto map_jsonl(const std::filesystem::path& path, F f) {
    std::istringstream in(read_text_file(path));
    std::vector<std::decay_t<decltype(f(std::declval<Json>()))>> out;
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(f(parse_json_text(line)));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ParseError) throw;
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}
} // namespace detail

/// Non-empty lines of a JSONL file, each parsed. Errors name the line.
inline std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    return detail::map_jsonl(path, [](Json j) { return j; });
}

inline std::string scene_to_text(const GridWorld& w) { return to_json(w).dump(2) + "\n"; }
inline GridWorld scene_from_text(std::string_view text) { return scene_from_json(detail::parse_json_text(text)); }

inline GridWorld load_scene(const std::filesystem::path& path) {
    try {
        return scene_from_text(read_text_file(path));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ParseError) throw;
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

inline void save_scene(const std::filesystem::path& path, const GridWorld& w) { write_text_file(path, scene_to_text(w)); }

/// Loads every scene referenced by `episodes` from `dir`.
inline SceneLibrary load_scenes_for(std::span<const EpisodeSpec> episodes, const std::filesystem::path& dir) {
    SceneLibrary lib;
    for (const auto& e : episodes) {
        if (lib.count(e.scene_id)) continue;
        lib.emplace(e.scene_id, std::make_shared<const GridWorld>(load_scene(dir / scene_file_name(e.scene_id))));
    }
    return lib;
}

inline std::string benchmark_to_text(const BenchmarkSet& b) {
    std::string out;
    for (const auto& e : b.episodes) out += to_json(e, b.seed).dump() + "\n";
    return out;
}

inline BenchmarkSet benchmark_from_jsonl(std::span<const Json> lines) {
    BenchmarkSet b;
    bool first = true;
    for (const auto& j : lines) {
        std::uint64_t seed = 0;
        b.episodes.push_back(episode_from_json(j, &seed));
        if (!first && seed != b.seed) detail::parse_fail("benchmark_seed differs between records");
        b.seed = seed;
        first = false;
        ++b.counts_by_room[b.episodes.back().room_type];
    }
    return b;
}

inline BenchmarkSet load_benchmark(const std::filesystem::path& path) {
    const auto lines = read_jsonl(path);
    try {
        return benchmark_from_jsonl(lines);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ParseError) throw;
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

inline std::string log_to_line(const TrajectoryLog& log) { return to_json(log).dump() + "\n"; }

inline std::vector<TrajectoryLog> load_logs(const std::filesystem::path& path) {
    return detail::map_jsonl(path, [](const Json& j) { return log_from_json(j); });
}

} // namespace lfnav
