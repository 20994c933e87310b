#pragma once

#include "cbidr/clinical.hpp"
#include "cbidr/vector_index.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cbidr {

/// Searchable store: embeddings, clinical bit vectors and labels, all aligned
/// by row in ascending id order. Immutable after construction.
class DescriptorDatabase {
public:
    /// `clinical` is given per id (any order); it must cover exactly the ids
    /// of `records` and every vector must come from `schema`.
    DescriptorDatabase(std::vector<EmbeddingRecord> records, std::vector<std::pair<ItemId, ClinicalBits>> clinical,
                       ClinicalSchema schema);

    std::size_t size() const noexcept { return index_.size(); }
    std::size_t dim() const noexcept { return index_.dim(); }
    const VectorIndex& index() const noexcept { return index_; }
    std::span<const ClinicalBits> clinical() const noexcept { return clinical_; }
    std::span<const std::string> labels() const noexcept { return index_.labels(); }
    std::span<const ItemId> ids() const noexcept { return index_.ids(); }
    const ClinicalSchema& schema() const noexcept { return schema_; }

    /// Sorted distinct class labels.
    std::vector<std::string> classes() const;

    bool operator==(const DescriptorDatabase& other) const;

private:
    VectorIndex index_;
    std::vector<ClinicalBits> clinical_;
    ClinicalSchema schema_;
};

enum class RetrievalMode { cbir, cbidr };

std::string_view mode_name(RetrievalMode mode) noexcept;
RetrievalMode parse_mode(std::string_view name);

struct FusionWeights {
    double image = 0.5;
    double clinical = 0.5;

    bool operator==(const FusionWeights&) const = default;
};

struct Query {
    Embedding vector;
    std::optional<ClinicalBits> clinical;
    FusionWeights weights;
    std::size_t k = 5;
    /// Item to leave out of the ranking (interactive queries for a stored item).
    std::optional<ItemId> exclude_id;
};

struct RankedEntry {
    ItemId id = 0;
    std::string label;
    /// Distance for cbir, relative closeness for cbidr.
    double score = 0.0;
    double d_image = 0.0;
    std::optional<std::size_t> d_clinical;

    bool operator==(const RankedEntry&) const = default;
};

struct RankedResult {
    RetrievalMode mode = RetrievalMode::cbir;
    std::vector<RankedEntry> entries;

    bool operator==(const RankedResult&) const = default;
};

/// Image-only retrieval: the k nearest embeddings by ascending distance.
RankedResult cbir_query(const DescriptorDatabase& db, std::span<const float> vector, std::size_t k,
                        std::optional<ItemId> exclude_id = std::nullopt);

/// Image + clinical retrieval. Every item contributes a row (image distance,
/// Hamming distance) to an m x 2 cost/cost decision matrix which is ranked by
/// TOPSIS with the query weights; the top k by closeness are returned.
RankedResult cbidr_query(const DescriptorDatabase& db, const Query& query);

/// Dispatches on `mode`; cbir ignores the clinical part of the query.
RankedResult run_query(const DescriptorDatabase& db, const Query& query, RetrievalMode mode);

}  // namespace cbidr
