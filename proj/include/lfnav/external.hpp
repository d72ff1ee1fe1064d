#pragma once

// Policies that live in another process, spoken to in JSON lines over a
// child's stdin/stdout or a TCP socket. One request line, one reply line.
// The message set is documented in docs/wire-protocol.md.

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "lfnav/policy.hpp"
#include "lfnav/serialize.hpp"

namespace lfnav {

inline constexpr std::chrono::milliseconds kDefaultMessageTimeout{30'000};

/// A bidirectional line channel. Any failure surfaces as PolicyFailure.
class LineTransport {
public:
    virtual ~LineTransport() = default;
    virtual std::string exchange(const std::string& line, std::chrono::milliseconds timeout) = 0;
};

namespace detail {

[[noreturn]] inline void transport_fail(const std::string& what) { throw Error(ErrorCode::PolicyFailure, what); }

inline void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

inline void write_all(int fd, std::string_view data) {
    while (!data.empty()) {
        const ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) transport_fail(std::string("write to policy failed: ") + std::strerror(errno));
        data.remove_prefix(std::size_t(n));
    }
}

/// Buffered reader that returns one '\n'-terminated line within a deadline.
class LineReader {
public:
    explicit LineReader(int fd) : fd_(fd) {}

    std::string read_line(std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) transport_fail("policy reply timed out");
            pollfd p{fd_, POLLIN, 0};
            const int r = ::poll(&p, 1, int(left.count()));
            if (r < 0 && errno == EINTR) continue;
            if (r < 0) transport_fail(std::string("poll failed: ") + std::strerror(errno));
            if (r == 0) transport_fail("policy reply timed out");
            char chunk[4096];
            const ssize_t n = ::read(fd_, chunk, sizeof chunk);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) transport_fail("policy closed the connection");
            buffer_.append(chunk, std::size_t(n));
        }
    }

private:
    int fd_;
    std::string buffer_;
};

} // namespace detail

/// Runs `command` under /bin/sh and talks to it over its stdin/stdout.
class SubprocessTransport final : public LineTransport {
public:
    explicit SubprocessTransport(const std::string& command) {
        detail::ignore_sigpipe();
        int to_child[2];
        int from_child[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0) throw Error(ErrorCode::PolicyFailure, "pipe failed");
        if (::pipe2(from_child, O_CLOEXEC) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw Error(ErrorCode::PolicyFailure, "pipe failed");
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
            throw Error(ErrorCode::PolicyFailure, "fork failed");
        }
        // Pipes are close-on-exec so concurrent spawns never inherit each
        // other's ends; dup2 clears the flag on the child's stdin/stdout.
        // The child leads its own process group so that shutdown reaches
        // whatever the shell started, not just the shell.
        if (pid_ == 0) {
            ::setpgid(0, 0);
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::setpgid(pid_, pid_);
        ::close(to_child[0]);
        ::close(from_child[1]);
        in_ = to_child[1];
        out_ = from_child[0];
        reader_ = std::make_unique<detail::LineReader>(out_);
    }

    ~SubprocessTransport() override {
        if (in_ >= 0) ::close(in_);
        // Give the child a moment to exit on EOF, then make sure the whole
        // group is gone; a shell may have left the real peer running.
        bool reaped = false;
        for (int i = 0; i < 50 && !reaped; ++i) {
            reaped = ::waitpid(pid_, nullptr, WNOHANG) != 0;
            if (!reaped) std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
        ::kill(-pid_, SIGKILL);
        if (!reaped) ::waitpid(pid_, nullptr, 0);
        if (out_ >= 0) ::close(out_);
    }

    SubprocessTransport(const SubprocessTransport&) = delete;
    SubprocessTransport& operator=(const SubprocessTransport&) = delete;

    std::string exchange(const std::string& line, std::chrono::milliseconds timeout) override {
        detail::write_all(in_, line + "\n");
        return reader_->read_line(timeout);
    }

private:
    pid_t pid_ = -1;
    int in_ = -1;
    int out_ = -1;
    std::unique_ptr<detail::LineReader> reader_;
};

/// TCP client. Connecting is retried a few times; requests are not.
class TcpTransport final : public LineTransport {
public:
    TcpTransport(const std::string& host, int port, int connect_attempts = 3) {
        detail::ignore_sigpipe();
        std::string last_error = "no address";
        for (int attempt = 0; attempt < connect_attempts && fd_ < 0; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
            addrinfo hints{};
            hints.ai_family = AF_UNSPEC;
            hints.ai_socktype = SOCK_STREAM;
            addrinfo* res = nullptr;
            if (const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0) {
                last_error = ::gai_strerror(rc);
                continue;
            }
            for (auto* a = res; a && fd_ < 0; a = a->ai_next) {
                const int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
                if (fd < 0) continue;
                if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
                    fd_ = fd;
                } else {
                    last_error = std::strerror(errno);
                    ::close(fd);
                }
            }
            ::freeaddrinfo(res);
        }
        if (fd_ < 0) throw Error(ErrorCode::PolicyFailure, "cannot connect to " + host + ":" + std::to_string(port) + ": " + last_error);
        reader_ = std::make_unique<detail::LineReader>(fd_);
    }

    ~TcpTransport() override {
        if (fd_ >= 0) ::close(fd_);
    }

    TcpTransport(const TcpTransport&) = delete;
    TcpTransport& operator=(const TcpTransport&) = delete;

    std::string exchange(const std::string& line, std::chrono::milliseconds timeout) override {
        const std::string framed = line + "\n";
        std::string_view data = framed;
        while (!data.empty()) {
            const ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) throw Error(ErrorCode::PolicyFailure, std::string("send failed: ") + std::strerror(errno));
            data.remove_prefix(std::size_t(n));
        }
        return reader_->read_line(timeout);
    }

private:
    int fd_ = -1;
    std::unique_ptr<detail::LineReader> reader_;
};

struct Endpoint {
    enum class Kind : std::uint8_t { Exec, Tcp } kind = Kind::Exec;
    std::string command;  // Exec
    std::string host;     // Tcp
    int port = 0;
};

/// "exec:<shell command>" or "tcp://host:port". Malformed endpoints are a
/// ConfigError, so they can be rejected when a config is loaded.
inline Endpoint parse_endpoint(const std::string& endpoint) {
    if (endpoint.starts_with("exec:")) {
        if (endpoint.size() == 5) throw Error(ErrorCode::ConfigError, "exec endpoint needs a command");
        return {Endpoint::Kind::Exec, endpoint.substr(5), {}, 0};
    }
    if (endpoint.starts_with("tcp://")) {
        const auto rest = endpoint.substr(6);
        const auto colon = rest.rfind(':');
        if (colon == std::string::npos || colon == 0) {
            throw Error(ErrorCode::ConfigError, "tcp endpoint needs host:port: " + endpoint);
        }
        const auto digits = rest.substr(colon + 1);
        if (digits.empty() || digits.size() > 5 || digits.find_first_not_of("0123456789") != std::string::npos ||
            std::stoi(digits) < 1 || std::stoi(digits) > 65535) {
            throw Error(ErrorCode::ConfigError, "bad port in endpoint " + endpoint);
        }
        return {Endpoint::Kind::Tcp, {}, rest.substr(0, colon), std::stoi(digits)};
    }
    throw Error(ErrorCode::ConfigError, "endpoint must start with exec: or tcp:// (" + endpoint + ")");
}

inline std::unique_ptr<LineTransport> open_transport(const std::string& endpoint) {
    const auto e = parse_endpoint(endpoint);
    if (e.kind == Endpoint::Kind::Exec) return std::make_unique<SubprocessTransport>(e.command);
    return std::make_unique<TcpTransport>(e.host, e.port);
}

// ---- wire messages --------------------------------------------------------

enum class WireRole : std::uint8_t { Leader, Follower, Solo };

constexpr std::string_view to_string(WireRole r) {
    switch (r) {
    case WireRole::Leader: return "Leader";
    case WireRole::Follower: return "Follower";
    case WireRole::Solo: return "Solo";
    }
    return "?";
}

inline Json to_json(const SensorProfile& p) {
    Json j = Json::object();
    if (p.max_range) j["max_range"] = *p.max_range;
    j["fov_halfangle"] = p.fov_halfangle;
    j["occlusion_checked"] = p.occlusion_checked;
    j["global_positions"] = p.global_positions;
    return j;
}

inline SensorProfile profile_from_json(const Json& j) {
    using namespace detail;
    only_keys(as_object(j, "profile"), {"max_range", "fov_halfangle", "occlusion_checked", "global_positions"}, "profile");
    SensorProfile p;
    if (j.contains("max_range")) p.max_range = get_double(j, "max_range");
    p.fov_halfangle = get_double(j, "fov_halfangle");
    p.occlusion_checked = get_bool(j, "occlusion_checked");
    p.global_positions = get_bool(j, "global_positions");
    return p;
}

inline Json to_json(const Goal& g) { return Json{{"object_id", g.object_id}, {"category", g.category}}; }

inline Goal goal_from_json(const Json& j) {
    detail::only_keys(detail::as_object(j, "goal"), {"object_id", "category"}, "goal");
    return {detail::get_string(j, "object_id"), detail::get_string(j, "category")};
}

inline Json to_json(const LeaderView& v) {
    Json j{{"global_observation", to_json(v.global_observation)}, {"follower_cell", to_json(v.follower_cell)}};
    if (v.follower_heading) j["follower_heading"] = to_string(*v.follower_heading);
    j["goal"] = to_json(v.goal);
    j["follower_profile"] = to_json(v.follower_profile);
    return j;
}

inline Json to_json(const SoloMemory& m) {
    Json j = Json::object();
    if (m.last_action) j["last_action"] = to_string(*m.last_action);
    if (m.last_result) j["last_result"] = to_string(*m.last_result);
    j["steps_taken"] = m.steps_taken;
    return j;
}

inline SoloMemory memory_from_json(const Json& j) {
    using namespace detail;
    only_keys(as_object(j, "memory"), {"last_action", "last_result", "steps_taken"}, "memory");
    SoloMemory m;
    if (j.contains("last_action")) m.last_action = parse_action(get_string(j, "last_action"));
    if (j.contains("last_result")) m.last_result = parse_action_result(get_string(j, "last_result"));
    m.steps_taken = get_int32(j, "steps_taken");
    return m;
}

inline Json to_json(const FollowerReaction& r) {
    if (const auto* q = std::get_if<Query>(&r)) return Json{{"kind", "query"}, {"query", to_json(*q)}};
    const auto& e = std::get<ExecuteResolved>(r);
    Json j{{"kind", "execute"}, {"actions", actions_to_json(e.resolution.actions)}, {"unresolvable", e.resolution.unresolvable}};
    if (e.then_verify) j["then_verify"] = to_json(*e.then_verify);
    return j;
}

/// Parses a reply body (without the envelope keys) of the given kind.
inline FollowerReaction reaction_from_json(const Json& j) {
    using namespace detail;
    const auto kind = get_string(j, "kind");
    if (kind == "query") {
        only_keys(j, {"v", "id", "kind", "query"}, "query reply");
        return query_from_json(field(j, "query"));
    }
    if (kind != "execute") parse_fail("expected an execute or query reply, got '" + kind + "'");
    only_keys(j, {"v", "id", "kind", "actions", "unresolvable", "then_verify"}, "execute reply");
    ExecuteResolved e{{actions_from_json(field(j, "actions")), get_bool(j, "unresolvable")}, std::nullopt};
    if (j.contains("then_verify")) e.then_verify = instruction_from_json(j["then_verify"]);
    return e;
}

/// Request/reply bookkeeping shared by the three external policy kinds.
class WireSession {
public:
    WireSession(std::function<std::unique_ptr<LineTransport>()> connect, WireRole role,
                std::chrono::milliseconds timeout = kDefaultMessageTimeout)
        : connect_(std::move(connect)), role_(role), timeout_(timeout) {}

    /// Sends `body` (kind plus payload) and returns the validated reply.
    Json call(Json body, std::string_view expected_kind) {
        if (!transport_) transport_ = connect_();
        Json request{{"v", kSchemaVersion}, {"id", next_id_}};
        for (auto& [k, v] : body.items()) request[k] = std::move(v);
        const auto line = transport_->exchange(request.dump(), timeout_);
        Json reply;
        try {
            reply = detail::parse_json_text(line);
            detail::as_object(reply, "reply");
            detail::check_version(reply);
            if (detail::get_int(reply, "id") != next_id_) detail::parse_fail("reply id does not match request");
            const auto kind = detail::get_string(reply, "kind");
            if (kind == "error") {
                const auto it = reply.find("message");
                detail::parse_fail("policy reported an error: " +
                                   (it != reply.end() && it->is_string() ? it->get<std::string>() : std::string("?")));
            }
            if (!expected_kind.empty() && kind != expected_kind) {
                detail::parse_fail("expected '" + std::string(expected_kind) + "' reply, got '" + kind + "'");
            }
        } catch (const Error& e) {
            throw Error(ErrorCode::PolicyFailure, std::string(to_string(role_)) + " policy: " + e.what());
        }
        ++next_id_;
        return reply;
    }

    /// Wraps reply parsing so grammar violations become PolicyFailure.
    template <class F>
    auto parse(F&& f) -> decltype(f()) {
        try {
            return f();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ParseError) throw;
            throw Error(ErrorCode::PolicyFailure, std::string(to_string(role_)) + " policy: " + e.what());
        }
    }

    bool started() const { return started_; }
    void mark_started() { started_ = true; }
    WireRole role() const { return role_; }

private:
    std::function<std::unique_ptr<LineTransport>()> connect_;
    std::unique_ptr<LineTransport> transport_;
    WireRole role_;
    std::chrono::milliseconds timeout_;
    std::int64_t next_id_ = 0;
    bool started_ = false;
};

namespace detail {
inline Json handshake_body(WireRole role) {
    return Json{{"kind", "handshake"}, {"role", to_string(role)}, {"schema_version", kSchemaVersion}};
}
inline Instruction instruction_reply(WireSession& s, const Json& reply) {
    return s.parse([&] {
        only_keys(reply, {"v", "id", "kind", "instruction"}, "instruction reply");
        return instruction_from_json(field(reply, "instruction"));
    });
}
} // namespace detail

class ExternalLeader final : public LeaderPolicy {
public:
    explicit ExternalLeader(std::function<std::unique_ptr<LineTransport>()> connect,
                            std::chrono::milliseconds timeout = kDefaultMessageTimeout)
        : session_(std::move(connect), WireRole::Leader, timeout) {}

    Instruction propose(const LeaderView& view, const DialogueHistory& dialogue) override {
        start(view);
        const auto reply = session_.call(Json{{"kind", "propose"}, {"view", to_json(view)}, {"dialogue", to_json(dialogue)}},
                                         "instruction");
        return detail::instruction_reply(session_, reply);
    }

    Instruction reground(const LeaderView& view, const Instruction& previous, const Query& query,
                         const DialogueHistory& dialogue) override {
        start(view);
        const auto reply = session_.call(Json{{"kind", "reground"},
                                              {"view", to_json(view)},
                                              {"previous", to_json(previous)},
                                              {"query", to_json(query)},
                                              {"dialogue", to_json(dialogue)}},
                                         "instruction");
        return detail::instruction_reply(session_, reply);
    }

    void episode_end(Outcome outcome) override {
        if (!session_.started()) return;
        try {
            session_.call(Json{{"kind", "episode_end"}, {"outcome", to_string(outcome)}}, "ack");
        } catch (const Error&) {
            // The episode is already decided; a peer that fails here changes nothing.
        }
    }

private:
    void start(const LeaderView& view) {
        if (session_.started()) return;
        auto body = detail::handshake_body(WireRole::Leader);
        body["scene"] = to_json(view.world);
        session_.call(std::move(body), "ready");
        session_.mark_started();
    }

    WireSession session_;
};

class ExternalFollower final : public FollowerPolicy {
public:
    explicit ExternalFollower(std::function<std::unique_ptr<LineTransport>()> connect,
                              std::chrono::milliseconds timeout = kDefaultMessageTimeout)
        : session_(std::move(connect), WireRole::Follower, timeout) {}

    FollowerReaction react(const Observation& local, const Instruction& instruction, ProtocolMode mode) override {
        if (!session_.started()) {
            session_.call(detail::handshake_body(WireRole::Follower), "ready");
            session_.mark_started();
        }
        const auto reply = session_.call(Json{{"kind", "react"},
                                              {"observation", to_json(local)},
                                              {"instruction", to_json(instruction)},
                                              {"mode", to_string(mode)}},
                                         "");
        return session_.parse([&] { return reaction_from_json(reply); });
    }

    void episode_end(Outcome outcome) override {
        if (!session_.started()) return;
        try {
            session_.call(Json{{"kind", "episode_end"}, {"outcome", to_string(outcome)}}, "ack");
        } catch (const Error&) {
        }
    }

private:
    WireSession session_;
};

class ExternalSolo final : public SoloPolicy {
public:
    explicit ExternalSolo(std::function<std::unique_ptr<LineTransport>()> connect,
                          std::chrono::milliseconds timeout = kDefaultMessageTimeout)
        : session_(std::move(connect), WireRole::Solo, timeout) {}

    Action act(const Observation& observation, const Goal& goal, const SoloMemory& memory) override {
        if (!session_.started()) {
            session_.call(detail::handshake_body(WireRole::Solo), "ready");
            session_.mark_started();
        }
        const auto reply = session_.call(
            Json{{"kind", "act"}, {"observation", to_json(observation)}, {"goal", to_json(goal)}, {"memory", to_json(memory)}},
            "action");
        return session_.parse([&] {
            detail::only_keys(reply, {"v", "id", "kind", "action"}, "action reply");
            return parse_action(detail::get_string(reply, "action"));
        });
    }

    void episode_end(Outcome outcome) override {
        if (!session_.started()) return;
        try {
            session_.call(Json{{"kind", "episode_end"}, {"outcome", to_string(outcome)}}, "ack");
        } catch (const Error&) {
        }
    }

private:
    WireSession session_;
};

} // namespace lfnav
