#include "cbidr/ingest.hpp"

#include "cbidr/checksum.hpp"
#include "cbidr/error.hpp"
#include "cbidr/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace cbidr {

namespace {

constexpr std::string_view embedding_magic = "CBIDREMB";
constexpr std::string_view database_magic{"CBIDRDB\0", 8};

// ---- little-endian byte streams -------------------------------------------

class ByteWriter {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(std::string_view s) { buf_.append(s); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s);
    }
    void seal() {
        const std::uint64_t sum = fnv1a64(buf_);
        u64(sum);
    }
    std::string take() { return std::move(buf_); }

private:
    void put(std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
    }
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string_view raw(std::size_t n) {
        need(n);
        auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::string str() {
        const auto n = u32();
        return std::string(raw(n));
    }
    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw Error(ErrorCode::malformed_input, "unexpected end of data at byte offset " + std::to_string(pos_));
        }
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

/// Validates magic, version and the trailing checksum; returns the payload
/// (everything after magic + version, before the checksum).
std::string_view open_sealed(std::string_view bytes, std::string_view magic, std::uint32_t supported,
                             const char* what) {
    if (bytes.size() < magic.size() + 4 || bytes.substr(0, magic.size()) != magic) {
        throw Error(ErrorCode::malformed_input, std::string(what) + ": bad magic bytes at offset 0");
    }
    ByteReader header(bytes.substr(magic.size(), 4));
    const std::uint32_t version = header.u32();
    if (version > supported || version == 0) {
        throw Error(ErrorCode::version_mismatch, std::string(what) + ": format version " + std::to_string(version) +
                                                     " is not supported (this build reads up to " +
                                                     std::to_string(supported) + ")");
    }
    if (bytes.size() < magic.size() + 4 + 8) {
        throw Error(ErrorCode::checksum_mismatch, std::string(what) + ": file truncated before checksum");
    }
    const auto body = bytes.substr(0, bytes.size() - 8);
    ByteReader trailer(bytes.substr(bytes.size() - 8));
    const std::uint64_t stored = trailer.u64();
    if (fnv1a64(body) != stored) {
        throw Error(ErrorCode::checksum_mismatch,
                    std::string(what) + ": checksum mismatch (file truncated or corrupted)");
    }
    return body.substr(magic.size() + 4);
}

// ---- text helpers ------------------------------------------------------------

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

/// Non-empty lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
    std::vector<std::pair<std::size_t, std::string_view>> out;
    std::size_t number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++number;
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) out.emplace_back(number, line);
        if (end == text.size()) break;
        start = end + 1;
    }
    return out;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& message) {
    throw Error(ErrorCode::malformed_input, "line " + std::to_string(line) + ": " + message);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    text = trim(text);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string format_float(float v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void check_label(const std::string& label) {
    if (label.empty() || label.find_first_of(",\n\r") != std::string::npos) {
        throw Error(ErrorCode::invalid_argument, "label '" + label + "' is empty or contains a separator");
    }
}

std::vector<EmbeddingRecord> finish_records(std::vector<EmbeddingRecord> records) {
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].id == records[i - 1].id) {
            throw Error(ErrorCode::duplicate_id, "duplicate id " + std::to_string(records[i].id));
        }
    }
    return records;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::malformed_input, "bad checksum literal '" + s + "'");
    }
    return v;
}

}  // namespace

EmbeddingFormat parse_embedding_format(std::string_view name) {
    if (name == "text") return EmbeddingFormat::text;
    if (name == "binary") return EmbeddingFormat::binary;
    throw Error(ErrorCode::invalid_argument, "unknown embedding format '" + std::string(name) + "'");
}

std::string_view format_name(EmbeddingFormat format) noexcept {
    return format == EmbeddingFormat::text ? "text" : "binary";
}

std::vector<EmbeddingRecord> parse_embeddings_text(std::string_view text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw Error(ErrorCode::empty_input, "embedding file is empty");

    const auto& [header_line, header] = lines.front();
    const auto head = split_csv(header);
    std::size_t dim = 0;
    if (head.size() != 3 || trim(head[0]) != "id" || trim(head[1]) != "label" ||
        !trim(head[2]).starts_with("dim=") || !parse_number(trim(head[2]).substr(4), dim) || dim == 0) {
        fail_line(header_line, "expected header 'id,label,dim=<D>'");
    }

    std::vector<EmbeddingRecord> records;
    records.reserve(lines.size() - 1);
    for (std::size_t n = 1; n < lines.size(); ++n) {
        const auto& [line_no, line] = lines[n];
        const auto cells = split_csv(line);
        if (cells.size() != dim + 2) {
            fail_line(line_no, "expected " + std::to_string(dim) + " values, found " +
                                   std::to_string(cells.size() < 2 ? 0 : cells.size() - 2));
        }
        EmbeddingRecord r;
        if (!parse_number(cells[0], r.id)) fail_line(line_no, "invalid id '" + std::string(cells[0]) + "'");
        r.label = std::string(trim(cells[1]));
        if (r.label.empty()) fail_line(line_no, "empty label");
        r.vector.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            if (!parse_number(cells[d + 2], r.vector[d]) || !std::isfinite(r.vector[d])) {
                fail_line(line_no, "invalid value '" + std::string(cells[d + 2]) + "' in column " + std::to_string(d));
            }
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) throw Error(ErrorCode::empty_input, "embedding file has no records");
    try {
        return finish_records(std::move(records));
    } catch (const Error& e) {
        throw Error(e.code(), std::string("embedding file: ") + e.what());
    }
}

std::string serialize_embeddings_text(std::span<const EmbeddingRecord> records) {
    if (records.empty()) throw Error(ErrorCode::empty_input, "no records to write");
    const std::size_t dim = records.front().vector.size();
    std::string out = "id,label,dim=" + std::to_string(dim) + "\n";
    for (const auto& r : records) {
        if (r.vector.size() != dim) throw Error(ErrorCode::dimension_mismatch, "records differ in dimension");
        check_label(r.label);
        out += std::to_string(r.id);
        out += ',';
        out += r.label;
        for (float v : r.vector) {
            out += ',';
            out += format_float(v);
        }
        out += '\n';
    }
    return out;
}

std::string serialize_embeddings_binary(std::span<const EmbeddingRecord> records) {
    if (records.empty()) throw Error(ErrorCode::empty_input, "no records to write");
    const std::size_t dim = records.front().vector.size();
    std::vector<std::string> labels;
    for (const auto& r : records) {
        if (r.vector.size() != dim) throw Error(ErrorCode::dimension_mismatch, "records differ in dimension");
        if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
    }
    ByteWriter w;
    w.raw(embedding_magic);
    w.u32(embedding_format_version);
    w.u64(records.size());
    w.u32(static_cast<std::uint32_t>(dim));
    w.u32(static_cast<std::uint32_t>(labels.size()));
    for (const auto& l : labels) w.str(l);
    for (const auto& r : records) {
        w.u64(r.id);
        w.u32(static_cast<std::uint32_t>(std::find(labels.begin(), labels.end(), r.label) - labels.begin()));
    }
    for (const auto& r : records) {
        for (float v : r.vector) w.f32(v);
    }
    w.seal();
    return w.take();
}

std::vector<EmbeddingRecord> parse_embeddings_binary(std::string_view bytes) {
    ByteReader in(open_sealed(bytes, embedding_magic, embedding_format_version, "embedding file"));
    const std::size_t header = embedding_magic.size() + 4;
    auto fail = [&](const std::string& message) -> void {
        throw Error(ErrorCode::malformed_input,
                    "embedding file: byte offset " + std::to_string(header + in.offset()) + ": " + message);
    };

    const std::uint64_t m = in.u64();
    const std::uint32_t dim = in.u32();
    const std::uint32_t label_count = in.u32();
    if (m == 0) throw Error(ErrorCode::empty_input, "embedding file has no records");
    if (dim == 0) fail("dimension must be at least 1");
    std::vector<std::string> labels;
    for (std::uint32_t i = 0; i < label_count; ++i) labels.push_back(in.str());

    if (in.remaining() != m * (12 + std::uint64_t{dim} * 4)) fail("payload size does not match m and dim");
    std::vector<EmbeddingRecord> records(m);
    for (auto& r : records) {
        r.id = in.u64();
        const auto label = in.u32();
        if (label >= labels.size()) fail("label index " + std::to_string(label) + " out of range");
        r.label = labels[label];
    }
    for (auto& r : records) {
        r.vector.resize(dim);
        for (auto& v : r.vector) {
            v = in.f32();
            if (!std::isfinite(v)) fail("non-finite embedding value");
        }
    }
    try {
        return finish_records(std::move(records));
    } catch (const Error& e) {
        throw Error(e.code(), std::string("embedding file: ") + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::io_error, "failed writing '" + path.string() + "'");
}

std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
    const auto bytes = read_file(path);
    try {
        return format == EmbeddingFormat::text ? parse_embeddings_text(bytes) : parse_embeddings_binary(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void save_embeddings(const std::filesystem::path& path, std::span<const EmbeddingRecord> records,
                     EmbeddingFormat format) {
    write_file(path, format == EmbeddingFormat::text ? serialize_embeddings_text(records)
                                                     : serialize_embeddings_binary(records));
}

ClinicalSchema load_schema(const std::filesystem::path& path) {
    try {
        return ClinicalSchema::from_json(read_file(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void save_schema(const std::filesystem::path& path, const ClinicalSchema& schema) {
    write_file(path, schema.to_json() + "\n");
}

std::vector<std::pair<ItemId, ClinicalBits>> parse_clinical(std::string_view text, const ClinicalSchema& schema) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw Error(ErrorCode::empty_input, "clinical file is empty");
    const auto& [header_line, header] = lines.front();
    const auto head = split_csv(header);
    if (head.empty() || trim(head[0]) != "id") fail_line(header_line, "first column must be 'id'");

    std::vector<std::string> columns;
    for (std::size_t c = 1; c < head.size(); ++c) columns.emplace_back(trim(head[c]));
    std::set<std::string, std::less<>> declared;
    for (const auto& f : schema.fields()) declared.insert(f.name);
    std::set<std::string, std::less<>> present(columns.begin(), columns.end());
    if (present.size() != columns.size()) fail_line(header_line, "duplicate column name");
    for (const auto& c : columns) {
        if (!declared.contains(c)) fail_line(header_line, "column '" + c + "' is not a schema field");
    }
    for (const auto& d : declared) {
        if (!present.contains(d)) {
            throw Error(ErrorCode::missing_field, "line " + std::to_string(header_line) + ": field '" + d +
                                                      "' has no column");
        }
    }

    std::vector<std::pair<ItemId, ClinicalBits>> rows;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        const auto& [line_no, line] = lines[n];
        const auto cells = split_csv(line);
        if (cells.size() != head.size()) {
            fail_line(line_no, "expected " + std::to_string(head.size()) + " cells, found " +
                                   std::to_string(cells.size()));
        }
        ItemId id = 0;
        if (!parse_number(cells[0], id)) fail_line(line_no, "invalid id '" + std::string(cells[0]) + "'");
        ClinicalRecord record;
        for (std::size_t c = 0; c < columns.size(); ++c) record[columns[c]] = std::string(trim(cells[c + 1]));
        try {
            rows.emplace_back(id, encode(record, schema));
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what(), e.subject());
        }
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].first == rows[i - 1].first) {
            throw Error(ErrorCode::duplicate_id, "clinical file: duplicate id " + std::to_string(rows[i].first));
        }
    }
    return rows;
}

std::string serialize_clinical(std::span<const std::pair<ItemId, ClinicalRecord>> rows, const ClinicalSchema& schema) {
    std::string out = "id";
    for (const auto& f : schema.fields()) out += "," + f.name;
    out += '\n';
    for (const auto& [id, record] : rows) {
        out += std::to_string(id);
        for (const auto& f : schema.fields()) {
            const auto it = record.find(f.name);
            const std::string value = it == record.end() ? std::string{} : it->second;
            if (value.find_first_of(",\n\r") != std::string::npos) {
                throw Error(ErrorCode::invalid_argument, "value of field '" + f.name + "' contains a separator");
            }
            out += ',';
            out += value;
        }
        out += '\n';
    }
    return out;
}

std::vector<std::pair<ItemId, ClinicalBits>> load_clinical(const std::filesystem::path& path,
                                                           const ClinicalSchema& schema) {
    const auto text = read_file(path);
    try {
        return parse_clinical(text, schema);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::string serialize_database(const DescriptorDatabase& db) {
    const auto& index = db.index();
    const auto classes = db.classes();
    ByteWriter w;
    w.raw(database_magic);
    w.u32(database_format_version);
    w.str(db.schema().to_json());
    w.u64(db.size());
    w.u32(static_cast<std::uint32_t>(db.dim()));
    w.u32(static_cast<std::uint32_t>(db.schema().total_bits()));
    w.u32(static_cast<std::uint32_t>(classes.size()));
    for (const auto& c : classes) w.str(c);
    for (std::size_t row = 0; row < db.size(); ++row) {
        w.u64(index.ids()[row]);
        const auto label = std::lower_bound(classes.begin(), classes.end(), index.labels()[row]) - classes.begin();
        w.u32(static_cast<std::uint32_t>(label));
    }
    for (std::size_t row = 0; row < db.size(); ++row) {
        for (float v : index.vector(row)) w.f32(v);
    }
    for (const auto& bits : db.clinical()) {
        for (auto word : bits.words()) w.u64(word);
    }
    w.seal();
    return w.take();
}

DescriptorDatabase parse_database(std::string_view bytes) {
    ByteReader in(open_sealed(bytes, database_magic, database_format_version, "database file"));
    const ClinicalSchema schema = ClinicalSchema::from_json(in.str());
    const std::uint64_t m = in.u64();
    const std::uint32_t dim = in.u32();
    const std::uint32_t total_bits = in.u32();
    if (total_bits != schema.total_bits()) {
        throw Error(ErrorCode::malformed_input, "database file: bit width disagrees with the stored schema");
    }
    const std::uint32_t class_count = in.u32();
    std::vector<std::string> classes;
    for (std::uint32_t i = 0; i < class_count; ++i) classes.push_back(in.str());

    const std::size_t words = (total_bits + 63) / 64;
    if (in.remaining() != m * (12 + std::uint64_t{dim} * 4 + words * 8)) {
        throw Error(ErrorCode::malformed_input, "database file: payload size does not match its header");
    }
    std::vector<EmbeddingRecord> records(m);
    for (auto& r : records) {
        r.id = in.u64();
        const auto label = in.u32();
        if (label >= classes.size()) throw Error(ErrorCode::malformed_input, "database file: bad label index");
        r.label = classes[label];
    }
    for (auto& r : records) {
        r.vector.resize(dim);
        for (auto& v : r.vector) v = in.f32();
    }
    std::vector<std::pair<ItemId, ClinicalBits>> clinical;
    clinical.reserve(m);
    for (const auto& r : records) {
        ClinicalBits bits(total_bits, schema.id());
        for (std::size_t wi = 0; wi < words; ++wi) {
            const std::uint64_t word = in.u64();
            for (std::size_t b = 0; b < 64 && wi * 64 + b < total_bits; ++b) {
                if ((word >> b) & 1U) bits.set(wi * 64 + b);
            }
        }
        clinical.emplace_back(r.id, std::move(bits));
    }
    return DescriptorDatabase(std::move(records), std::move(clinical), schema);
}

void save_database(const DescriptorDatabase& db, const std::filesystem::path& path) {
    write_file(path, serialize_database(db));
}

DescriptorDatabase load_database(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return parse_database(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

namespace {

nlohmann::ordered_json file_json(const BundleFile& f) {
    return {{"path", f.path}, {"checksum", hex64(f.checksum)}};
}

BundleFile file_from_json(const nlohmann::json& j) {
    return {j.at("path").get<std::string>(), parse_hex64(j.at("checksum").get<std::string>())};
}

std::string verified_read(const std::filesystem::path& dir, const BundleFile& f) {
    const auto bytes = read_file(dir / f.path);
    if (fnv1a64(bytes) != f.checksum) {
        throw Error(ErrorCode::checksum_mismatch, (dir / f.path).string() + ": checksum does not match manifest");
    }
    return bytes;
}

Manifest describe(const DatasetBundle& bundle) {
    Manifest m = bundle.manifest;
    m.count = bundle.embeddings.size();
    m.dim = bundle.embeddings.empty() ? 0 : bundle.embeddings.front().vector.size();
    m.total_bits = bundle.schema.total_bits();
    m.class_counts.clear();
    for (const auto& r : bundle.embeddings) ++m.class_counts[r.label];
    return m;
}

}  // namespace

void save_bundle(const std::filesystem::path& dir, DatasetBundle& bundle, EmbeddingFormat format) {
    std::filesystem::create_directories(dir);
    Manifest m = describe(bundle);
    m.embeddings_format = format;

    const std::string embeddings = format == EmbeddingFormat::text ? serialize_embeddings_text(bundle.embeddings)
                                                                   : serialize_embeddings_binary(bundle.embeddings);
    std::vector<std::pair<ItemId, ClinicalRecord>> raw;
    raw.reserve(bundle.clinical.size());
    for (const auto& [id, bits] : bundle.clinical) raw.emplace_back(id, decode(bits, bundle.schema));
    const std::string clinical = serialize_clinical(raw, bundle.schema);
    const std::string schema = bundle.schema.to_json() + "\n";

    m.embeddings = {format == EmbeddingFormat::text ? "embeddings.csv" : "embeddings.bin", fnv1a64(embeddings)};
    m.clinical = {"clinical.csv", fnv1a64(clinical)};
    m.schema = {"schema.json", fnv1a64(schema)};

    write_file(dir / m.embeddings.path, embeddings);
    write_file(dir / m.clinical.path, clinical);
    write_file(dir / m.schema.path, schema);

    nlohmann::ordered_json j;
    j["format_version"] = 1;
    j["count"] = m.count;
    j["dim"] = m.dim;
    j["total_bits"] = m.total_bits;
    j["class_counts"] = m.class_counts;
    j["embeddings_format"] = std::string(format_name(format));
    j["files"] = {{"embeddings", file_json(m.embeddings)},
                  {"clinical", file_json(m.clinical)},
                  {"schema", file_json(m.schema)}};
    write_file(dir / "manifest.json", j.dump(2) + "\n");
    bundle.manifest = m;
}

DatasetBundle load_bundle(const std::filesystem::path& dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed_input, (dir / "manifest.json").string() + ": " + e.what());
    }

    DatasetBundle bundle;
    Manifest& m = bundle.manifest;
    try {
        if (j.value("format_version", 0) != 1) {
            throw Error(ErrorCode::version_mismatch, "manifest format_version is not supported");
        }
        m.count = j.at("count").get<std::size_t>();
        m.dim = j.at("dim").get<std::size_t>();
        m.total_bits = j.at("total_bits").get<std::size_t>();
        m.class_counts = j.at("class_counts").get<std::map<std::string, std::size_t>>();
        m.embeddings_format = parse_embedding_format(j.at("embeddings_format").get<std::string>());
        m.embeddings = file_from_json(j.at("files").at("embeddings"));
        m.clinical = file_from_json(j.at("files").at("clinical"));
        m.schema = file_from_json(j.at("files").at("schema"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed_input, (dir / "manifest.json").string() + ": " + e.what());
    }

    bundle.schema = ClinicalSchema::from_json(verified_read(dir, m.schema));
    const auto embeddings = verified_read(dir, m.embeddings);
    bundle.embeddings = m.embeddings_format == EmbeddingFormat::text ? parse_embeddings_text(embeddings)
                                                                     : parse_embeddings_binary(embeddings);
    bundle.clinical = parse_clinical(verified_read(dir, m.clinical), bundle.schema);

    if (bundle.clinical.size() != bundle.embeddings.size()) {
        throw Error(ErrorCode::length_mismatch, "bundle: embeddings and clinical sources differ in item count");
    }
    for (std::size_t i = 0; i < bundle.embeddings.size(); ++i) {
        if (bundle.embeddings[i].id != bundle.clinical[i].first) {
            throw Error(ErrorCode::not_found, "bundle: id " + std::to_string(bundle.embeddings[i].id) +
                                                  " is not present in both sources");
        }
    }
    const Manifest actual = describe(bundle);
    if (actual.count != m.count || actual.dim != m.dim || actual.total_bits != m.total_bits ||
        actual.class_counts != m.class_counts) {
        throw Error(ErrorCode::malformed_input, "bundle: manifest counts do not match the data files");
    }
    return bundle;
}

DescriptorDatabase to_database(const DatasetBundle& bundle) {
    return DescriptorDatabase(bundle.embeddings, bundle.clinical, bundle.schema);
}

DatasetBundle gen_synthetic(const SyntheticParams& p) {
    if (p.classes < 1 || p.per_class < 1 || p.dim < 1 || p.bits_per_class < 1) {
        throw Error(ErrorCode::invalid_argument, "classes, per_class, dim and bits_per_class must be at least 1");
    }
    if (!(p.cluster_sep >= 0.0) || !std::isfinite(p.cluster_sep)) {
        throw Error(ErrorCode::invalid_argument, "cluster_sep must be finite and non-negative");
    }
    if (!(p.clinical_noise >= 0.0 && p.clinical_noise <= 0.5)) {
        throw Error(ErrorCode::invalid_argument, "clinical_noise must lie in [0, 0.5]");
    }

    std::vector<FieldSpec> fields;
    for (std::size_t c = 0; c < p.classes; ++c) {
        for (std::size_t r = 0; r < p.bits_per_class; ++r) {
            fields.push_back({"sig_" + std::to_string(c) + "_" + std::to_string(r), FieldKind::boolean, {}, {}, false});
        }
    }
    DatasetBundle bundle;
    bundle.schema = ClinicalSchema(std::move(fields));

    Rng rng(p.seed);
    std::vector<std::vector<double>> centers(p.classes, std::vector<double>(p.dim));
    for (auto& center : centers) {
        double norm = 0.0;
        for (auto& x : center) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : center) x = norm == 0.0 ? 0.0 : x / norm * p.cluster_sep;
    }

    ItemId next_id = 0;
    for (std::size_t c = 0; c < p.classes; ++c) {
        const std::string label = "class_" + std::to_string(c);
        for (std::size_t i = 0; i < p.per_class; ++i) {
            EmbeddingRecord r{next_id, label, Embedding(p.dim)};
            for (std::size_t d = 0; d < p.dim; ++d) r.vector[d] = static_cast<float>(centers[c][d] + rng.normal());

            ClinicalBits bits(bundle.schema.total_bits(), bundle.schema.id());
            for (std::size_t b = 0; b < bits.size(); ++b) {
                const bool signature = b / p.bits_per_class == c;
                bits.set(b, signature != rng.bernoulli(p.clinical_noise));
            }
            bundle.clinical.emplace_back(next_id, std::move(bits));
            bundle.embeddings.push_back(std::move(r));
            ++next_id;
        }
    }
    bundle.manifest = describe(bundle);
    return bundle;
}

}  // namespace cbidr
