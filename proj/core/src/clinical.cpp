#include "cbidr/clinical.hpp"

#include "cbidr/checksum.hpp"
#include "cbidr/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <set>

namespace cbidr {

namespace {

std::string format_number(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool is_unknown_token(std::string_view v) {
    const auto l = lower(v);
    return l.empty() || l == "unknown" || l == "?" || l == "na";
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

FieldKind parse_kind(std::string_view name) {
    if (name == "boolean") return FieldKind::boolean;
    if (name == "categorical") return FieldKind::categorical;
    if (name == "numeric") return FieldKind::numeric;
    throw Error(ErrorCode::invalid_schema, "unknown field kind '" + std::string(name) + "'");
}

nlohmann::json field_to_json(const FieldSpec& f) {
    nlohmann::json j;
    j["name"] = f.name;
    j["kind"] = std::string(kind_name(f.kind));
    if (f.kind == FieldKind::categorical) j["values"] = f.values;
    if (f.kind == FieldKind::numeric) j["bins"] = f.edges;
    j["allow_unknown"] = f.allow_unknown;
    return j;
}

/// Slot chosen for a present value; throws naming the field on failure.
std::size_t slot_for(const FieldSpec& f, std::string_view raw) {
    switch (f.kind) {
        case FieldKind::boolean: {
            const auto v = lower(raw);
            if (v == "yes" || v == "true" || v == "1" || v == "y") return 1;
            if (v == "no" || v == "false" || v == "0" || v == "n") return 0;
            throw Error(ErrorCode::undeclared_value,
                        "field '" + f.name + "': '" + std::string(raw) + "' is not a boolean value", f.name);
        }
        case FieldKind::categorical: {
            auto it = std::find(f.values.begin(), f.values.end(), raw);
            if (it == f.values.end()) {
                throw Error(ErrorCode::undeclared_value,
                            "field '" + f.name + "': value '" + std::string(raw) + "' is not declared", f.name);
            }
            return static_cast<std::size_t>(it - f.values.begin());
        }
        case FieldKind::numeric: {
            double x = 0.0;
            const auto text = trim(raw);
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
            if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(x)) {
                throw Error(ErrorCode::undeclared_value,
                            "field '" + f.name + "': '" + std::string(raw) + "' is not a number", f.name);
            }
            for (std::size_t b = 0; b + 1 < f.edges.size(); ++b) {
                if (x > f.edges[b] && x <= f.edges[b + 1]) return b;
            }
            throw Error(ErrorCode::out_of_range_value,
                        "field '" + f.name + "': " + text + " lies outside (" + format_number(f.edges.front()) + ", " +
                            format_number(f.edges.back()) + "]", f.name);
        }
    }
    return 0;
}

}  // namespace

std::string_view kind_name(FieldKind kind) noexcept {
    switch (kind) {
        case FieldKind::boolean: return "boolean";
        case FieldKind::categorical: return "categorical";
        case FieldKind::numeric: return "numeric";
    }
    return "boolean";
}

std::size_t FieldSpec::slot_count() const noexcept {
    switch (kind) {
        case FieldKind::boolean: return 1;
        case FieldKind::categorical: return values.size();
        case FieldKind::numeric: return edges.empty() ? 0 : edges.size() - 1;
    }
    return 0;
}

std::size_t FieldSpec::width() const noexcept { return slot_count() + (allow_unknown ? 1 : 0); }

std::string FieldSpec::slot_label(std::size_t i) const {
    if (kind == FieldKind::boolean) {
        // Slot 0 is the presence bit; slot 1 is the unknown marker when allowed.
        return i == 0 ? "yes" : "unknown";
    }
    if (i == slot_count()) return "unknown";
    switch (kind) {
        case FieldKind::boolean: break;
        case FieldKind::categorical: return values.at(i);
        case FieldKind::numeric: return "(" + format_number(edges.at(i)) + "," + format_number(edges.at(i + 1)) + "]";
    }
    return {};
}

ClinicalSchema::ClinicalSchema(std::vector<FieldSpec> fields) : fields_(std::move(fields)) {
    if (fields_.empty()) throw Error(ErrorCode::invalid_schema, "schema has no fields");
    std::set<std::string, std::less<>> names;
    for (const auto& f : fields_) {
        if (f.name.empty()) throw Error(ErrorCode::invalid_schema, "field with empty name");
        if (!names.insert(f.name).second) throw Error(ErrorCode::invalid_schema, "duplicate field '" + f.name + "'");
        if (f.kind == FieldKind::categorical) {
            if (f.values.empty()) throw Error(ErrorCode::invalid_schema, "field '" + f.name + "' declares no values");
            std::set<std::string, std::less<>> seen;
            for (const auto& v : f.values) {
                if (!seen.insert(v).second) {
                    throw Error(ErrorCode::invalid_schema, "field '" + f.name + "' repeats value '" + v + "'");
                }
                if (f.allow_unknown && is_unknown_token(v)) {
                    throw Error(ErrorCode::invalid_schema, "field '" + f.name + "' declares reserved value '" + v + "'");
                }
            }
        }
        if (f.kind == FieldKind::numeric) {
            if (f.edges.size() < 2) throw Error(ErrorCode::invalid_schema, "field '" + f.name + "' needs >= 2 bin edges");
            for (std::size_t i = 0; i < f.edges.size(); ++i) {
                if (!std::isfinite(f.edges[i]) || (i > 0 && !(f.edges[i] > f.edges[i - 1]))) {
                    throw Error(ErrorCode::invalid_schema,
                                "field '" + f.name + "' bin edges must be finite and strictly increasing");
                }
            }
        }
    }
    offsets_.reserve(fields_.size());
    for (const auto& f : fields_) {
        offsets_.push_back(total_bits_);
        total_bits_ += f.width();
    }
    id_ = fnv1a64(to_json());
}

std::size_t ClinicalSchema::find(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < fields_.size(); ++i) {
        if (fields_[i].name == name) return i;
    }
    return fields_.size();
}

std::string ClinicalSchema::to_json() const {
    nlohmann::json j;
    j["fields"] = nlohmann::json::array();
    for (const auto& f : fields_) j["fields"].push_back(field_to_json(f));
    j["total_bits"] = total_bits_;
    return j.dump(2);
}

ClinicalSchema ClinicalSchema::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_schema, std::string("schema is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("fields") || !j["fields"].is_array()) {
        throw Error(ErrorCode::invalid_schema, "schema must be an object with a 'fields' array");
    }
    std::vector<FieldSpec> fields;
    try {
        for (const auto& jf : j["fields"]) {
            FieldSpec f;
            f.name = jf.at("name").get<std::string>();
            f.kind = parse_kind(jf.at("kind").get<std::string>());
            if (f.kind == FieldKind::categorical) f.values = jf.at("values").get<std::vector<std::string>>();
            if (f.kind == FieldKind::numeric) f.edges = jf.at("bins").get<std::vector<double>>();
            f.allow_unknown = jf.value("allow_unknown", false);
            fields.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_schema, std::string("malformed field descriptor: ") + e.what());
    }
    ClinicalSchema schema(std::move(fields));
    if (j.contains("total_bits") && j["total_bits"].get<std::size_t>() != schema.total_bits()) {
        throw Error(ErrorCode::invalid_schema, "declared total_bits does not match the field layout");
    }
    return schema;
}

ClinicalBits::ClinicalBits(std::size_t size, std::uint64_t schema_id)
    : size_(size), schema_id_(schema_id), words_((size + 63) / 64, 0) {}

void ClinicalBits::set(std::size_t bit, bool value) noexcept {
    const auto mask = std::uint64_t{1} << (bit % 64);
    if (value) {
        words_[bit / 64] |= mask;
    } else {
        words_[bit / 64] &= ~mask;
    }
}

std::string ClinicalBits::to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve((size_ + 3) / 4);
    for (std::size_t base = 0; base < size_; base += 4) {
        unsigned nibble = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            nibble <<= 1;
            if (base + j < size_ && test(base + j)) nibble |= 1U;
        }
        out.push_back(digits[nibble]);
    }
    return out;
}

ClinicalBits ClinicalBits::from_hex(std::string_view hex, std::size_t size, std::uint64_t schema_id) {
    if (hex.size() != (size + 3) / 4) {
        throw Error(ErrorCode::malformed_input, "hex bit string has " + std::to_string(hex.size()) +
                                                    " digits, expected " + std::to_string((size + 3) / 4));
    }
    ClinicalBits bits(size, schema_id);
    for (std::size_t n = 0; n < hex.size(); ++n) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(hex[n])));
        unsigned nibble = 0;
        if (c >= '0' && c <= '9') {
            nibble = static_cast<unsigned>(c - '0');
        } else if (c >= 'a' && c <= 'f') {
            nibble = static_cast<unsigned>(c - 'a' + 10);
        } else {
            throw Error(ErrorCode::malformed_input, "invalid hex digit '" + std::string(1, hex[n]) + "'");
        }
        for (std::size_t j = 0; j < 4; ++j) {
            const bool on = (nibble >> (3 - j)) & 1U;
            const std::size_t bit = n * 4 + j;
            if (bit < size) {
                bits.set(bit, on);
            } else if (on) {
                throw Error(ErrorCode::malformed_input, "hex bit string sets padding bits");
            }
        }
    }
    return bits;
}

ClinicalBits ClinicalBits::from_string(std::string_view text, std::uint64_t schema_id) {
    ClinicalBits bits(text.size(), schema_id);
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '1') {
            bits.set(i);
        } else if (text[i] != '0') {
            throw Error(ErrorCode::malformed_input, "bit string may only contain '0' and '1'");
        }
    }
    return bits;
}

std::string ClinicalBits::to_string() const {
    std::string out(size_, '0');
    for (std::size_t i = 0; i < size_; ++i) {
        if (test(i)) out[i] = '1';
    }
    return out;
}

ClinicalBits encode(const ClinicalRecord& record, const ClinicalSchema& schema) {
    ClinicalBits bits(schema.total_bits(), schema.id());
    for (std::size_t fi = 0; fi < schema.fields().size(); ++fi) {
        const auto& f = schema.fields()[fi];
        const auto it = record.find(f.name);
        const bool absent = it == record.end() || trim(it->second).empty();
        const bool unknown = f.allow_unknown && (absent || is_unknown_token(trim(it->second)));
        if (absent && !unknown) throw Error(ErrorCode::missing_field, "field '" + f.name + "' is missing", f.name);
        const std::size_t slot = unknown ? f.slot_count() : slot_for(f, trim(it->second));

        const std::size_t base = schema.offset(fi);
        if (f.kind == FieldKind::boolean) {
            // Boolean regions are presence bits, not one-hot: "no" leaves them clear.
            if (unknown) {
                bits.set(base + 1);
            } else if (slot == 1) {
                bits.set(base);
            }
        } else {
            bits.set(base + slot);
        }
    }
    return bits;
}

ClinicalRecord decode(const ClinicalBits& bits, const ClinicalSchema& schema) {
    if (bits.size() != schema.total_bits() || bits.schema_id() != schema.id()) {
        throw Error(ErrorCode::schema_mismatch, "bit vector was not produced by this schema");
    }
    ClinicalRecord out;
    for (std::size_t fi = 0; fi < schema.fields().size(); ++fi) {
        const auto& f = schema.fields()[fi];
        const std::size_t base = schema.offset(fi);
        if (f.kind == FieldKind::boolean) {
            const bool present = bits.test(base);
            const bool unknown = f.allow_unknown && bits.test(base + 1);
            if (present && unknown) {
                throw Error(ErrorCode::malformed_input, "field '" + f.name + "' is both present and unknown");
            }
            out[f.name] = unknown ? "unknown" : (present ? "yes" : "no");
            continue;
        }
        std::size_t set_count = 0;
        std::size_t slot = 0;
        for (std::size_t s = 0; s < f.width(); ++s) {
            if (bits.test(base + s)) {
                ++set_count;
                slot = s;
            }
        }
        if (set_count != 1) {
            throw Error(ErrorCode::malformed_input,
                        "field '" + f.name + "' one-hot region has " + std::to_string(set_count) + " bits set");
        }
        out[f.name] = f.slot_label(slot);
    }
    return out;
}

std::string summarize(const ClinicalBits& bits, const ClinicalSchema& schema) {
    const auto values = decode(bits, schema);
    std::string out;
    for (const auto& f : schema.fields()) {
        if (!out.empty()) out += "; ";
        out += f.name + "=" + values.at(f.name);
    }
    return out;
}

std::size_t hamming(const ClinicalBits& a, const ClinicalBits& b) {
    if (a.size() != b.size() || a.schema_id() != b.schema_id()) {
        throw Error(ErrorCode::schema_mismatch, "cannot compare bit vectors of different schemas (" +
                                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                                    " bits)");
    }
    const auto wa = a.words();
    const auto wb = b.words();
    std::size_t count = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) count += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
    return count;
}

std::vector<std::size_t> all_hamming(std::span<const ClinicalBits> db, const ClinicalBits& query) {
    std::vector<std::size_t> out;
    out.reserve(db.size());
    for (const auto& item : db) out.push_back(hamming(item, query));
    return out;
}

FieldSpec quartile_field(std::string name, std::span<const double> training_values, double lower, double upper,
                         bool allow_unknown) {
    if (training_values.empty()) throw Error(ErrorCode::empty_input, "no training values for field '" + name + "'");
    std::vector<double> sorted(training_values.begin(), training_values.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    FieldSpec f;
    f.name = std::move(name);
    f.kind = FieldKind::numeric;
    f.allow_unknown = allow_unknown;
    f.edges.push_back(lower);
    for (double q : {0.25, 0.5, 0.75}) {
        const double edge = quantile(q);
        if (edge > f.edges.back() && edge < upper) f.edges.push_back(edge);
    }
    f.edges.push_back(upper);
    return f;
}

}  // namespace cbidr
