#include "cbidr/retrieval.hpp"

#include "cbidr/error.hpp"
#include "cbidr/topsis.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace cbidr {

namespace {

std::size_t effective_size(const DescriptorDatabase& db, std::optional<ItemId> exclude_id) {
    if (exclude_id && db.index().find(*exclude_id) < db.size()) return db.size() - 1;
    return db.size();
}

void check_k(std::size_t k, std::size_t available) {
    if (k < 1 || k > available) {
        throw Error(ErrorCode::k_out_of_range,
                    "k = " + std::to_string(k) + " outside [1, " + std::to_string(available) + "]");
    }
}

}  // namespace

DescriptorDatabase::DescriptorDatabase(std::vector<EmbeddingRecord> records,
                                       std::vector<std::pair<ItemId, ClinicalBits>> clinical, ClinicalSchema schema)
    : index_(VectorIndex::build(std::move(records))), schema_(std::move(schema)) {
    if (clinical.size() != index_.size()) {
        throw Error(ErrorCode::length_mismatch, std::to_string(clinical.size()) + " clinical rows for " +
                                                    std::to_string(index_.size()) + " embeddings");
    }
    std::sort(clinical.begin(), clinical.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    clinical_.reserve(clinical.size());
    for (std::size_t row = 0; row < clinical.size(); ++row) {
        if (clinical[row].first != index_.ids()[row]) {
            throw Error(ErrorCode::not_found, "clinical ids do not match embedding ids (first difference at id " +
                                                  std::to_string(clinical[row].first) + ")");
        }
        const auto& bits = clinical[row].second;
        if (bits.size() != schema_.total_bits() || bits.schema_id() != schema_.id()) {
            throw Error(ErrorCode::schema_mismatch,
                        "clinical vector of id " + std::to_string(clinical[row].first) + " uses a different schema");
        }
        clinical_.push_back(bits);
    }
}

std::vector<std::string> DescriptorDatabase::classes() const {
    std::set<std::string> unique(labels().begin(), labels().end());
    return {unique.begin(), unique.end()};
}

bool DescriptorDatabase::operator==(const DescriptorDatabase& other) const {
    return schema_ == other.schema_ && clinical_ == other.clinical_ && index_.records() == other.index_.records();
}

std::string_view mode_name(RetrievalMode mode) noexcept { return mode == RetrievalMode::cbir ? "cbir" : "cbidr"; }

RetrievalMode parse_mode(std::string_view name) {
    if (name == "cbir") return RetrievalMode::cbir;
    if (name == "cbidr") return RetrievalMode::cbidr;
    throw Error(ErrorCode::invalid_argument, "unknown mode '" + std::string(name) + "' (expected cbir or cbidr)");
}

RankedResult cbir_query(const DescriptorDatabase& db, std::span<const float> vector, std::size_t k,
                        std::optional<ItemId> exclude_id) {
    const std::size_t available = effective_size(db, exclude_id);
    check_k(k, available);
    const bool excluding = available < db.size();

    RankedResult result{RetrievalMode::cbir, {}};
    for (const auto& n : db.index().knn_search(vector, excluding ? k + 1 : k)) {
        if (excluding && n.id == *exclude_id) continue;
        if (result.entries.size() == k) break;
        const std::size_t row = db.index().find(n.id);
        result.entries.push_back({n.id, db.labels()[row], n.distance, n.distance, std::nullopt});
    }
    return result;
}

RankedResult cbidr_query(const DescriptorDatabase& db, const Query& query) {
    if (!query.clinical) throw Error(ErrorCode::missing_field, "cbidr query requires clinical data");
    const ClinicalBits& clinical = *query.clinical;
    if (clinical.size() != db.schema().total_bits() || clinical.schema_id() != db.schema().id()) {
        throw Error(ErrorCode::schema_mismatch, "query clinical vector does not match the database schema");
    }
    const TopsisConfig config{{query.weights.image, query.weights.clinical}, {Criterion::cost, Criterion::cost}};
    config.validate();

    const std::size_t available = effective_size(db, query.exclude_id);
    check_k(query.k, available);

    const auto image_distances = db.index().all_distances(query.vector);
    const auto clinical_distances = all_hamming(db.clinical(), clinical);

    std::vector<std::size_t> rows;
    rows.reserve(db.size());
    for (std::size_t row = 0; row < db.size(); ++row) {
        if (available < db.size() && db.ids()[row] == *query.exclude_id) continue;
        rows.push_back(row);
    }

    std::vector<std::vector<double>> columns(2);
    for (std::size_t row : rows) {
        columns[0].push_back(image_distances[row]);
        columns[1].push_back(static_cast<double>(clinical_distances[row]));
    }
    const TopsisResult ranked = rank(DecisionMatrix::from_columns(columns), config);

    RankedResult result{RetrievalMode::cbidr, {}};
    result.entries.reserve(query.k);
    for (std::size_t pos = 0; pos < query.k; ++pos) {
        const std::size_t alt = ranked.ranking[pos];
        const std::size_t row = rows[alt];
        result.entries.push_back({db.ids()[row], db.labels()[row], ranked.closeness[alt], image_distances[row],
                                  clinical_distances[row]});
    }
    return result;
}

RankedResult run_query(const DescriptorDatabase& db, const Query& query, RetrievalMode mode) {
    if (mode == RetrievalMode::cbir) return cbir_query(db, query.vector, query.k, query.exclude_id);
    return cbidr_query(db, query);
}

}  // namespace cbidr
