#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cbidr {

using ItemId = std::uint64_t;

/// Dense feature vector produced by an external feature extractor.
/// Stored in single precision; every arithmetic path accumulates in double.
using Embedding = std::vector<float>;

struct EmbeddingRecord {
    ItemId id = 0;
    std::string label;
    Embedding vector;

    bool operator==(const EmbeddingRecord&) const = default;
};

struct Neighbor {
    ItemId id = 0;
    double distance = 0.0;

    bool operator==(const Neighbor&) const = default;
};

/// Euclidean distance sqrt(sum (a_i - b_i)^2), accumulated in double.
/// Throws dimension_mismatch when the sizes differ and non_finite on NaN/Inf.
double l2_distance(std::span<const float> a, std::span<const float> b);

/// Sum of squares in double precision.
double squared_norm(std::span<const float> v) noexcept;

/// Inner product in double precision.
double dot(std::span<const float> a, std::span<const float> b) noexcept;

/// Exhaustive L2 index over a fixed set of embeddings.
///
/// Records are kept in ascending id order in one contiguous row-major float
/// buffer. Squared norms are precomputed at build time so a query only has to
/// evaluate one inner product per record:
///
///     |q - y|^2 = |q|^2 + |y|^2 - 2 <q, y>
///
/// Negative results from cancellation are clamped to zero before the square
/// root. The index is immutable; concurrent queries are safe.
class VectorIndex {
public:
    /// Validates (non-empty, uniform dim, unique ids, finite values), sorts by id
    /// and precomputes norms. Throws cbidr::Error on violation.
    static VectorIndex build(std::vector<EmbeddingRecord> records);

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const ItemId> ids() const noexcept { return ids_; }
    std::span<const std::string> labels() const noexcept { return labels_; }
    std::span<const double> squared_norms() const noexcept { return squared_norms_; }
    std::span<const float> vector(std::size_t row) const noexcept {
        return {data_.data() + row * dim_, dim_};
    }

    /// Row position of `id`, or size() when absent.
    std::size_t find(ItemId id) const noexcept;

    /// k nearest records, ascending by distance with ties broken by ascending id.
    std::vector<Neighbor> knn_search(std::span<const float> query, std::size_t k) const;

    /// Distance from `query` to every record, in ascending id order.
    std::vector<double> all_distances(std::span<const float> query) const;

    /// Rebuilds the stored records (ascending id order).
    std::vector<EmbeddingRecord> records() const;

private:
    VectorIndex() = default;

    void check_query(std::span<const float> query) const;
    double distance_to_row(std::size_t row, std::span<const float> query, double query_norm) const noexcept;

    std::size_t dim_ = 0;
    std::vector<ItemId> ids_;
    std::vector<std::string> labels_;
    std::vector<float> data_;
    std::vector<double> squared_norms_;
};

}  // namespace cbidr
