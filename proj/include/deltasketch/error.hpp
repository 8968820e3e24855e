#pragma once

#include <stdexcept>
#include <string>

namespace deltasketch {

enum class ErrorKind {
    invalid_parameter,
    parameter_mismatch,
    capacity_exceeded,
    non_resumable,
    format,
    missing_power,
    out_of_range,
    sentinel_position,
    wrong_phase,
    zero_denominator,
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid parameter";
    case ErrorKind::parameter_mismatch: return "parameter mismatch";
    case ErrorKind::capacity_exceeded: return "capacity exceeded";
    case ErrorKind::non_resumable: return "sketch is not resumable";
    case ErrorKind::format: return "format error";
    case ErrorKind::missing_power: return "missing power";
    case ErrorKind::out_of_range: return "out of range";
    case ErrorKind::sentinel_position: return "sentinel position";
    case ErrorKind::wrong_phase: return "wrong phase";
    case ErrorKind::zero_denominator: return "zero denominator";
    }
    return "unknown error";
}

// Every failure raised by the library carries one of the kinds above so that
// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace deltasketch
