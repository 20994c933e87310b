#pragma once

#include "cbidr/clinical.hpp"
#include "cbidr/retrieval.hpp"
#include "cbidr/vector_index.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cbidr {

// Embedding files
//
// text:   header `id,label,dim=<D>`, then one row `id,label,v0,...,v<D-1>` per
//         record. Floats use the shortest round-trip decimal form.
// binary: "CBIDREMB", u32 version, u64 m, u32 dim, u32 label count, labels as
//         (u32 length, bytes), m x (u64 id, u32 label index), m*dim float32
//         row-major, then a u64 FNV-1a checksum of every preceding byte.
//         All integers and floats little-endian.
enum class EmbeddingFormat { text, binary };

EmbeddingFormat parse_embedding_format(std::string_view name);
std::string_view format_name(EmbeddingFormat format) noexcept;

inline constexpr std::uint32_t embedding_format_version = 1;
inline constexpr std::uint32_t database_format_version = 1;

/// Records sorted by ascending id. Errors carry line (text) or byte offset (binary).
std::vector<EmbeddingRecord> parse_embeddings_text(std::string_view text);
std::vector<EmbeddingRecord> parse_embeddings_binary(std::string_view bytes);
std::string serialize_embeddings_text(std::span<const EmbeddingRecord> records);
std::string serialize_embeddings_binary(std::span<const EmbeddingRecord> records);

std::vector<EmbeddingRecord> load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void save_embeddings(const std::filesystem::path& path, std::span<const EmbeddingRecord> records,
                     EmbeddingFormat format);

ClinicalSchema load_schema(const std::filesystem::path& path);
void save_schema(const std::filesystem::path& path, const ClinicalSchema& schema);

/// Clinical CSV: header `id,<field>,...` naming exactly the schema fields (any
/// order); one row per item of raw values. Encoded through `encode`.
std::vector<std::pair<ItemId, ClinicalBits>> parse_clinical(std::string_view text, const ClinicalSchema& schema);
std::string serialize_clinical(std::span<const std::pair<ItemId, ClinicalRecord>> rows, const ClinicalSchema& schema);
std::vector<std::pair<ItemId, ClinicalBits>> load_clinical(const std::filesystem::path& path,
                                                           const ClinicalSchema& schema);

/// Self-checking binary snapshot of a DescriptorDatabase ("CBIDRDB\0" magic,
/// version, schema JSON, embeddings, labels, clinical words, FNV-1a trailer).
std::string serialize_database(const DescriptorDatabase& db);
DescriptorDatabase parse_database(std::string_view bytes);
void save_database(const DescriptorDatabase& db, const std::filesystem::path& path);
DescriptorDatabase load_database(const std::filesystem::path& path);

struct BundleFile {
    std::string path;
    std::uint64_t checksum = 0;
    bool operator==(const BundleFile&) const = default;
};

struct Manifest {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::size_t total_bits = 0;
    std::map<std::string, std::size_t> class_counts;
    EmbeddingFormat embeddings_format = EmbeddingFormat::text;
    BundleFile embeddings;
    BundleFile clinical;
    BundleFile schema;

    bool operator==(const Manifest&) const = default;
};

/// Embeddings, clinical bits and schema of one dataset, aligned by id.
struct DatasetBundle {
    std::vector<EmbeddingRecord> embeddings;
    std::vector<std::pair<ItemId, ClinicalBits>> clinical;
    ClinicalSchema schema;
    Manifest manifest;
};

/// Writes embeddings, clinical.csv, schema.json and manifest.json into `dir`
/// and fills in the manifest checksums.
void save_bundle(const std::filesystem::path& dir, DatasetBundle& bundle,
                 EmbeddingFormat format = EmbeddingFormat::text);
/// Verifies manifest checksums and that both sources cover the same ids.
DatasetBundle load_bundle(const std::filesystem::path& dir);

/// The whole bundle as a searchable database.
DescriptorDatabase to_database(const DatasetBundle& bundle);

struct SyntheticParams {
    std::size_t classes = 3;
    std::size_t per_class = 100;
    std::size_t dim = 64;
    /// Norm of each class center; per-coordinate noise has unit variance.
    double cluster_sep = 10.0;
    /// Independent flip probability of every clinical bit.
    double clinical_noise = 0.0;
    std::uint64_t seed = 0;
    /// Clinical signature replicas per class (boolean fields sig_<class>_<r>).
    std::size_t bits_per_class = 4;
};

/// Clustered embeddings plus noisy class-signature clinical bits. Identical
/// output for identical params on every platform.
DatasetBundle gen_synthetic(const SyntheticParams& params);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace cbidr
