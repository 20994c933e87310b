#include "cbidr/vector_index.hpp"

#include "cbidr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

namespace cbidr {

namespace {

void require_finite(std::span<const float> v, const char* what) {
    for (float x : v) {
        if (!std::isfinite(x)) {
            throw Error(ErrorCode::non_finite, std::string(what) + " contains a non-finite value");
        }
    }
}

bool closer(const Neighbor& a, const Neighbor& b) noexcept {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
}

}  // namespace

double squared_norm(std::span<const float> v) noexcept {
    double acc = 0.0;
    for (float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
    return acc;
}

double dot(std::span<const float> a, std::span<const float> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double l2_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    require_finite(a, "first vector");
    require_finite(b, "second vector");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

VectorIndex VectorIndex::build(std::vector<EmbeddingRecord> records) {
    if (records.empty()) throw Error(ErrorCode::empty_input, "cannot build an index from zero records");

    const std::size_t dim = records.front().vector.size();
    if (dim == 0) throw Error(ErrorCode::dimension_mismatch, "embedding dimension must be at least 1");
    for (const auto& r : records) {
        if (r.vector.size() != dim) {
            throw Error(ErrorCode::dimension_mismatch,
                        "record " + std::to_string(r.id) + " has dimension " + std::to_string(r.vector.size()) +
                            ", expected " + std::to_string(dim));
        }
        require_finite(r.vector, ("record " + std::to_string(r.id)).c_str());
    }

    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].id == records[i - 1].id) {
            throw Error(ErrorCode::duplicate_id, "duplicate id " + std::to_string(records[i].id));
        }
    }

    VectorIndex index;
    index.dim_ = dim;
    index.ids_.reserve(records.size());
    index.labels_.reserve(records.size());
    index.data_.reserve(records.size() * dim);
    index.squared_norms_.reserve(records.size());
    for (auto& r : records) {
        index.ids_.push_back(r.id);
        index.labels_.push_back(std::move(r.label));
        index.data_.insert(index.data_.end(), r.vector.begin(), r.vector.end());
        index.squared_norms_.push_back(squared_norm(r.vector));
    }
    return index;
}

std::size_t VectorIndex::find(ItemId id) const noexcept {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return size();
    return static_cast<std::size_t>(it - ids_.begin());
}

void VectorIndex::check_query(std::span<const float> query) const {
    if (query.size() != dim_) {
        throw Error(ErrorCode::dimension_mismatch,
                    "query dimension " + std::to_string(query.size()) + " does not match index dimension " +
                        std::to_string(dim_));
    }
    require_finite(query, "query");
}

double VectorIndex::distance_to_row(std::size_t row, std::span<const float> query, double query_norm) const noexcept {
    const double squared = query_norm + squared_norms_[row] - 2.0 * dot(query, vector(row));
    return std::sqrt(std::max(squared, 0.0));
}

std::vector<Neighbor> VectorIndex::knn_search(std::span<const float> query, std::size_t k) const {
    check_query(query);
    if (k < 1 || k > size()) {
        throw Error(ErrorCode::k_out_of_range,
                    "k = " + std::to_string(k) + " outside [1, " + std::to_string(size()) + "]");
    }
    const double query_norm = squared_norm(query);

    // Max-heap of the best k seen so far; top() is the current worst.
    std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&closer)> heap(&closer);
    for (std::size_t row = 0; row < size(); ++row) {
        Neighbor candidate{ids_[row], distance_to_row(row, query, query_norm)};
        if (heap.size() < k) {
            heap.push(candidate);
        } else if (closer(candidate, heap.top())) {
            heap.pop();
            heap.push(candidate);
        }
    }

    std::vector<Neighbor> result(heap.size());
    for (std::size_t i = result.size(); i-- > 0;) {
        result[i] = heap.top();
        heap.pop();
    }
    return result;
}

std::vector<double> VectorIndex::all_distances(std::span<const float> query) const {
    check_query(query);
    const double query_norm = squared_norm(query);
    std::vector<double> out(size());
    for (std::size_t row = 0; row < size(); ++row) out[row] = distance_to_row(row, query, query_norm);
    return out;
}

std::vector<EmbeddingRecord> VectorIndex::records() const {
    std::vector<EmbeddingRecord> out;
    out.reserve(size());
    for (std::size_t row = 0; row < size(); ++row) {
        auto v = vector(row);
        out.push_back({ids_[row], labels_[row], Embedding(v.begin(), v.end())});
    }
    return out;
}

}  // namespace cbidr
