#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cbidr {

enum class FieldKind { boolean, categorical, numeric };

std::string_view kind_name(FieldKind kind) noexcept;

/// One clinical attribute and its bit encoding.
///
/// boolean      1 bit, set when the attribute is present.
/// categorical  one-hot over `values`, in declared order.
/// numeric      one-hot over the half-open bins (edges[i], edges[i+1]].
///
/// With `allow_unknown` an extra trailing slot is reserved for a missing
/// value, so "unknown" is encoded explicitly rather than as all zeros.
struct FieldSpec {
    std::string name;
    FieldKind kind = FieldKind::boolean;
    std::vector<std::string> values;
    std::vector<double> edges;
    bool allow_unknown = false;

    std::size_t width() const noexcept;
    /// Number of slots excluding the unknown slot.
    std::size_t slot_count() const noexcept;
    /// Human label of slot `i` ("F", "(40,60]", "yes", "unknown").
    std::string slot_label(std::size_t i) const;

    bool operator==(const FieldSpec&) const = default;
};

/// Ordered, validated field list with contiguous bit offsets.
class ClinicalSchema {
public:
    ClinicalSchema() = default;

    /// Validates names, value lists and bin edges. Throws invalid_schema.
    explicit ClinicalSchema(std::vector<FieldSpec> fields);

    std::span<const FieldSpec> fields() const noexcept { return fields_; }
    std::size_t total_bits() const noexcept { return total_bits_; }
    std::size_t offset(std::size_t field) const noexcept { return offsets_[field]; }
    /// Index of the field named `name`, or fields().size().
    std::size_t find(std::string_view name) const noexcept;

    /// Fingerprint of the canonical serialized form. Bit vectors carry it so
    /// vectors from different layouts are never compared.
    std::uint64_t id() const noexcept { return id_; }

    std::string to_json() const;
    static ClinicalSchema from_json(std::string_view text);

    bool operator==(const ClinicalSchema& other) const { return fields_ == other.fields_; }

private:
    std::vector<FieldSpec> fields_;
    std::vector<std::size_t> offsets_;
    std::size_t total_bits_ = 0;
    std::uint64_t id_ = 0;
};

/// Fixed-width bit vector tagged with the schema that produced it.
/// Bit 0 is the first bit of the first field.
class ClinicalBits {
public:
    ClinicalBits() = default;
    ClinicalBits(std::size_t size, std::uint64_t schema_id);

    std::size_t size() const noexcept { return size_; }
    std::uint64_t schema_id() const noexcept { return schema_id_; }
    std::span<const std::uint64_t> words() const noexcept { return words_; }

    bool test(std::size_t bit) const noexcept { return (words_[bit / 64] >> (bit % 64)) & 1U; }
    void set(std::size_t bit, bool value = true) noexcept;
    void flip(std::size_t bit) noexcept { words_[bit / 64] ^= std::uint64_t{1} << (bit % 64); }

    /// Hex string, first field first: bit 0 is the high bit of the first
    /// nibble. Trailing pad bits are zero.
    std::string to_hex() const;
    static ClinicalBits from_hex(std::string_view hex, std::size_t size, std::uint64_t schema_id);

    /// Parses a literal bit string such as "10110".
    static ClinicalBits from_string(std::string_view bits, std::uint64_t schema_id = 0);
    std::string to_string() const;

    bool operator==(const ClinicalBits&) const = default;

private:
    std::size_t size_ = 0;
    std::uint64_t schema_id_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Field name -> raw textual value (numbers in decimal).
using ClinicalRecord = std::map<std::string, std::string, std::less<>>;

ClinicalBits encode(const ClinicalRecord& record, const ClinicalSchema& schema);

/// Inverse of encode per field; numeric fields decode to their bin label.
/// Throws malformed_input if a one-hot region does not hold exactly one bit.
ClinicalRecord decode(const ClinicalBits& bits, const ClinicalSchema& schema);

/// "field=value; field=value" in schema order.
std::string summarize(const ClinicalBits& bits, const ClinicalSchema& schema);

/// popcount(a XOR b). Throws schema_mismatch when the vectors are not comparable.
std::size_t hamming(const ClinicalBits& a, const ClinicalBits& b);

/// hamming(db[i], query) for every i.
std::vector<std::size_t> all_hamming(std::span<const ClinicalBits> db, const ClinicalBits& query);

/// Numeric field whose inner edges are the quartiles (linear interpolation)
/// of `training_values`, bounded by (lower, upper]. Duplicate quartiles are
/// collapsed so edges stay strictly increasing.
FieldSpec quartile_field(std::string name, std::span<const double> training_values, double lower, double upper,
                         bool allow_unknown = false);

}  // namespace cbidr
