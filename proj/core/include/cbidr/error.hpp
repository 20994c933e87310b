#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace cbidr {

/// Machine-readable error categories. The service layer maps these onto
/// HTTP status codes and the `code` field of error bodies.
enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    duplicate_id,
    empty_input,
    k_out_of_range,
    non_finite,
    weight_sum,
    length_mismatch,
    schema_mismatch,
    missing_field,
    undeclared_value,
    out_of_range_value,
    invalid_schema,
    negative_separation,
    unknown_label,
    too_few_members,
    malformed_input,
    checksum_mismatch,
    version_mismatch,
    io_error,
    not_found,
};

/// Stable kebab-case name, e.g. "k-out-of-range".
std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string subject = {})
        : std::runtime_error(message), code_(code), subject_(std::move(subject)) {}

    ErrorCode code() const noexcept { return code_; }
    /// Name of the offending field or parameter, when one applies.
    const std::string& subject() const noexcept { return subject_; }

private:
    ErrorCode code_;
    std::string subject_;
};

}  // namespace cbidr
