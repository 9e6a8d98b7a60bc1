#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace regalign {

enum class ErrorCode {
    empty_input,
    non_finite_value,
    duplicate_time,
    parse_error,
    io_error,
    out_of_range,
    no_overlap,
    non_positive_bandwidth,
    degenerate_range,
    out_of_domain,
    zero_denominator,
    non_differentiable_kernel,
    domain_mismatch,
    even_point_count,
    non_uniform_grid,
    zero_norm,
    invalid_config,
    usage_error,
};

inline std::string_view error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::empty_input: return "empty_input";
        case ErrorCode::non_finite_value: return "non_finite_value";
        case ErrorCode::duplicate_time: return "duplicate_time";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::out_of_range: return "out_of_range";
        case ErrorCode::no_overlap: return "no_overlap";
        case ErrorCode::non_positive_bandwidth: return "non_positive_bandwidth";
        case ErrorCode::degenerate_range: return "degenerate_range";
        case ErrorCode::out_of_domain: return "out_of_domain";
        case ErrorCode::zero_denominator: return "zero_denominator";
        case ErrorCode::non_differentiable_kernel: return "non_differentiable_kernel";
        case ErrorCode::domain_mismatch: return "domain_mismatch";
        case ErrorCode::even_point_count: return "even_point_count";
        case ErrorCode::non_uniform_grid: return "non_uniform_grid";
        case ErrorCode::zero_norm: return "zero_norm";
        case ErrorCode::invalid_config: return "invalid_config";
        case ErrorCode::usage_error: return "usage_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace regalign
