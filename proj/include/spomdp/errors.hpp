#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spomdp {

enum class ErrorKind {
    NonFinite,
    NoConvergence,
    DimensionMismatch,
    NotErgodic,
    NoSamples,
    IllConditioned,
    RankDeficient,
    NegativeEigenvalue,
    PolicyFloorViolated,
    GridTooCoarse,
    GenerationFailed,
    InvalidModel,
    ConfigError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; the kind carries the failure class
// so callers (the episode loop, the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace spomdp
