#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lfnav {

enum class ErrorCode {
    EmptyRegion,
    SceneGenFailed,
    InsufficientEpisodes,
    UnresolvableInstruction,
    PreconditionViolation,
    PolicyFailure,
    NoPath,
    EmptyLogs,
    MissingOptimal,
    ParseError,
    IoError,
    ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::SceneGenFailed: return "SceneGenFailed";
    case ErrorCode::InsufficientEpisodes: return "InsufficientEpisodes";
    case ErrorCode::UnresolvableInstruction: return "UnresolvableInstruction";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::PolicyFailure: return "PolicyFailure";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::EmptyLogs: return "EmptyLogs";
    case ErrorCode::MissingOptimal: return "MissingOptimal";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace lfnav
