#include "cbidr/error.hpp"

namespace cbidr {

std::string_view code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::dimension_mismatch: return "dimension-mismatch";
        case ErrorCode::duplicate_id: return "duplicate-id";
        case ErrorCode::empty_input: return "empty-input";
        case ErrorCode::k_out_of_range: return "k-out-of-range";
        case ErrorCode::non_finite: return "non-finite";
        case ErrorCode::weight_sum: return "weight-sum";
        case ErrorCode::length_mismatch: return "length-mismatch";
        case ErrorCode::schema_mismatch: return "schema-mismatch";
        case ErrorCode::missing_field: return "missing-field";
        case ErrorCode::undeclared_value: return "undeclared-value";
        case ErrorCode::out_of_range_value: return "out-of-range-value";
        case ErrorCode::invalid_schema: return "invalid-schema";
        case ErrorCode::negative_separation: return "negative-separation";
        case ErrorCode::unknown_label: return "unknown-label";
        case ErrorCode::too_few_members: return "too-few-members";
        case ErrorCode::malformed_input: return "malformed-input";
        case ErrorCode::checksum_mismatch: return "checksum-mismatch";
        case ErrorCode::version_mismatch: return "version-mismatch";
        case ErrorCode::io_error: return "io-error";
        case ErrorCode::not_found: return "not-found";
    }
    return "unknown";
}

}  // namespace cbidr
