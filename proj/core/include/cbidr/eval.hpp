#pragma once

#include "cbidr/retrieval.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cbidr {

/// Row positions of the searchable and held-out partitions, each ascending.
struct SplitIndices {
    std::vector<std::size_t> database;
    std::vector<std::size_t> queries;
};

/// Stratified seeded split. Each class keeps round(n * fraction) members in
/// the database partition, clamped to [1, n - 1] so both sides see it.
/// Throws too_few_members for a class with fewer than two members.
SplitIndices split(std::span<const std::string> labels, double fraction, std::uint64_t seed);

struct EvalQuery {
    ItemId id = 0;
    std::string label;
    Embedding vector;
    ClinicalBits clinical;
};

struct Experiment {
    DescriptorDatabase database;
    std::vector<EvalQuery> queries;
};

/// Splits an aligned dataset (clinical given per id) into a database and held-out queries.
Experiment make_experiment(const std::vector<EmbeddingRecord>& records,
                           const std::vector<std::pair<ItemId, ClinicalBits>>& clinical, const ClinicalSchema& schema,
                           double fraction, std::uint64_t seed);

/// Fraction of queries whose true label is among the first k labels.
double topk_accuracy(std::span<const RankedResult> results, std::span<const std::string> truths, std::size_t k);

struct ConfusionMatrix {
    std::vector<std::string> classes;
    /// counts[true][predicted]
    std::vector<std::vector<std::size_t>> counts;

    std::size_t total() const noexcept;
    std::size_t trace() const noexcept;
    bool operator==(const ConfusionMatrix&) const = default;
};

/// Rows are true classes, columns Top-1 predictions. Throws unknown_label.
ConfusionMatrix confusion(std::span<const std::string> predictions, std::span<const std::string> truths,
                          std::span<const std::string> classes);

struct QueryOutcome {
    ItemId id = 0;
    std::string truth;
    std::vector<std::string> labels;
};

struct EvalOptions {
    RetrievalMode mode = RetrievalMode::cbir;
    FusionWeights weights;
    std::vector<std::size_t> k_values{1, 5};
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 1;
};

struct EvalReport {
    RetrievalMode mode = RetrievalMode::cbir;
    FusionWeights weights;
    std::vector<std::size_t> k_values;
    std::vector<double> accuracies;
    std::vector<QueryOutcome> per_query;
    ConfusionMatrix confusion;

    /// Accuracy at k; throws invalid_argument if k was not evaluated.
    double accuracy(std::size_t k) const;
    double top1() const { return accuracy(1); }
    double top5() const { return accuracy(5); }
};

/// Runs every query (concurrently when options.threads > 1) and aggregates
/// counts. Results are independent of the thread count.
EvalReport evaluate(const DescriptorDatabase& db, std::span<const EvalQuery> queries, const EvalOptions& options);

struct SweepRow {
    FusionWeights weights;
    std::vector<double> accuracies;
};

struct SweepTable {
    std::vector<std::size_t> k_values;
    std::vector<SweepRow> rows;
};

/// (0.5,0.5), (0.6,0.4), (0.7,0.3), (0.8,0.2), (0.9,0.1).
std::vector<FusionWeights> default_sweep_weights();

SweepTable weight_sweep(const DescriptorDatabase& db, std::span<const EvalQuery> queries,
                        std::span<const FusionWeights> weights, std::vector<std::size_t> k_values = {1, 5},
                        unsigned threads = 1);

/// Fraction as a percentage with two decimals, e.g. 0.974358 -> "97.44".
std::string format_percent(double fraction);

std::string report_text(const EvalReport& report);
std::string report_csv(const EvalReport& report);
std::string report_json(const EvalReport& report);
std::string confusion_csv(const ConfusionMatrix& matrix);

std::string sweep_text(const SweepTable& table);
std::string sweep_csv(const SweepTable& table);
std::string sweep_json(const SweepTable& table);

}  // namespace cbidr
