#pragma once

#include <stdexcept>
#include <string>

namespace liquidity {

enum class ErrorKind {
    InvalidParams,
    DomainError,
    UnsupportedModel,
    WrongRegime,
    NoConvergence,
    InfiniteValue,
    GridTooCoarse,
    Ruin,
    ParseError,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidParams: return "InvalidParams";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::UnsupportedModel: return "UnsupportedModel";
        case ErrorKind::WrongRegime: return "WrongRegime";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::InfiniteValue: return "InfiniteValue";
        case ErrorKind::GridTooCoarse: return "GridTooCoarse";
        case ErrorKind::Ruin: return "Ruin";
        case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

// Process exit code used by the CLI; 0 is success and 1 is a usage error.
inline int exit_code(ErrorKind k) { return 2 + static_cast<int>(k); }

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    // what() without the kind prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace liquidity
