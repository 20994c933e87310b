#include "cbidr/eval.hpp"

#include "cbidr/error.hpp"
#include "cbidr/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace cbidr {

namespace {

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::string weights_text(const FusionWeights& w) {
    return "[" + format_fixed(w.image, 1) + ", " + format_fixed(w.clinical, 1) + "]";
}

/// Runs body(i) for i in [0, n) across `threads` workers; the first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body body) {
    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& worker : pool) worker.join();
    if (failure) std::rethrow_exception(failure);
}

void check_k_values(const std::vector<std::size_t>& k_values) {
    if (k_values.empty()) throw Error(ErrorCode::invalid_argument, "no k values requested");
    for (auto k : k_values) {
        if (k == 0) throw Error(ErrorCode::k_out_of_range, "k must be at least 1");
    }
}

}  // namespace

SplitIndices split(std::span<const std::string> labels, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "split fraction must lie strictly between 0 and 1");
    }
    std::map<std::string, std::vector<std::size_t>, std::less<>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    Rng rng(seed);
    SplitIndices out;
    for (auto& [label, members] : by_class) {
        const std::size_t n = members.size();
        if (n < 2) throw Error(ErrorCode::too_few_members, "class '" + label + "' has fewer than 2 members");
        for (std::size_t i = n - 1; i > 0; --i) std::swap(members[i], members[rng.below(i + 1)]);
        auto keep = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
        keep = std::clamp<std::size_t>(keep, 1, n - 1);
        out.database.insert(out.database.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(keep));
        out.queries.insert(out.queries.end(), members.begin() + static_cast<std::ptrdiff_t>(keep), members.end());
    }
    std::sort(out.database.begin(), out.database.end());
    std::sort(out.queries.begin(), out.queries.end());
    return out;
}

Experiment make_experiment(const std::vector<EmbeddingRecord>& records,
                           const std::vector<std::pair<ItemId, ClinicalBits>>& clinical, const ClinicalSchema& schema,
                           double fraction, std::uint64_t seed) {
    std::map<ItemId, const ClinicalBits*> clinical_by_id;
    for (const auto& [id, bits] : clinical) clinical_by_id[id] = &bits;
    if (clinical_by_id.size() != records.size()) {
        throw Error(ErrorCode::length_mismatch, "embedding and clinical sources cover different items");
    }

    std::vector<std::string> labels;
    labels.reserve(records.size());
    for (const auto& r : records) labels.push_back(r.label);
    const SplitIndices parts = split(labels, fraction, seed);

    auto bits_of = [&](ItemId id) -> const ClinicalBits& {
        auto it = clinical_by_id.find(id);
        if (it == clinical_by_id.end()) {
            throw Error(ErrorCode::not_found, "no clinical record for id " + std::to_string(id));
        }
        return *it->second;
    };

    std::vector<EmbeddingRecord> db_records;
    std::vector<std::pair<ItemId, ClinicalBits>> db_clinical;
    for (std::size_t i : parts.database) {
        db_records.push_back(records[i]);
        db_clinical.emplace_back(records[i].id, bits_of(records[i].id));
    }
    std::vector<EvalQuery> queries;
    for (std::size_t i : parts.queries) {
        queries.push_back({records[i].id, records[i].label, records[i].vector, bits_of(records[i].id)});
    }
    std::sort(queries.begin(), queries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return {DescriptorDatabase(std::move(db_records), std::move(db_clinical), schema), std::move(queries)};
}

double topk_accuracy(std::span<const RankedResult> results, std::span<const std::string> truths, std::size_t k) {
    if (results.size() != truths.size()) {
        throw Error(ErrorCode::length_mismatch, std::to_string(results.size()) + " result lists for " +
                                                    std::to_string(truths.size()) + " truths");
    }
    if (results.empty()) throw Error(ErrorCode::empty_input, "no queries to score");
    if (k == 0) throw Error(ErrorCode::k_out_of_range, "k must be at least 1");
    std::size_t hits = 0;
    for (std::size_t q = 0; q < results.size(); ++q) {
        const auto& entries = results[q].entries;
        if (k > entries.size()) {
            throw Error(ErrorCode::k_out_of_range, "query " + std::to_string(q) + " returned only " +
                                                       std::to_string(entries.size()) + " results, k = " +
                                                       std::to_string(k));
        }
        const bool hit = std::any_of(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(k),
                                     [&](const RankedEntry& e) { return e.label == truths[q]; });
        if (hit) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

std::size_t ConfusionMatrix::total() const noexcept {
    std::size_t sum = 0;
    for (const auto& row : counts) {
        for (auto c : row) sum += c;
    }
    return sum;
}

std::size_t ConfusionMatrix::trace() const noexcept {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) sum += counts[i][i];
    return sum;
}

ConfusionMatrix confusion(std::span<const std::string> predictions, std::span<const std::string> truths,
                          std::span<const std::string> classes) {
    if (predictions.size() != truths.size()) {
        throw Error(ErrorCode::length_mismatch, "predictions and truths differ in length");
    }
    ConfusionMatrix m;
    m.classes.assign(classes.begin(), classes.end());
    m.counts.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));
    auto position = [&](const std::string& label) {
        auto it = std::find(m.classes.begin(), m.classes.end(), label);
        if (it == m.classes.end()) throw Error(ErrorCode::unknown_label, "label '" + label + "' is not a known class");
        return static_cast<std::size_t>(it - m.classes.begin());
    };
    for (std::size_t q = 0; q < truths.size(); ++q) ++m.counts[position(truths[q])][position(predictions[q])];
    return m;
}

double EvalReport::accuracy(std::size_t k) const {
    for (std::size_t i = 0; i < k_values.size(); ++i) {
        if (k_values[i] == k) return accuracies[i];
    }
    throw Error(ErrorCode::invalid_argument, "Top-" + std::to_string(k) + " was not evaluated");
}

EvalReport evaluate(const DescriptorDatabase& db, std::span<const EvalQuery> queries, const EvalOptions& options) {
    check_k_values(options.k_values);
    if (queries.empty()) throw Error(ErrorCode::empty_input, "no queries to evaluate");
    const std::size_t depth = *std::max_element(options.k_values.begin(), options.k_values.end());

    std::vector<RankedResult> results(queries.size());
    parallel_for(queries.size(), options.threads, [&](std::size_t q) {
        Query query{queries[q].vector, queries[q].clinical, options.weights, depth, std::nullopt};
        results[q] = run_query(db, query, options.mode);
    });

    EvalReport report;
    report.mode = options.mode;
    report.weights = options.weights;
    report.k_values = options.k_values;

    std::vector<std::string> truths;
    std::vector<std::string> predictions;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        truths.push_back(queries[q].label);
        predictions.push_back(results[q].entries.front().label);
        QueryOutcome outcome{queries[q].id, queries[q].label, {}};
        for (const auto& e : results[q].entries) outcome.labels.push_back(e.label);
        report.per_query.push_back(std::move(outcome));
    }
    for (auto k : options.k_values) report.accuracies.push_back(topk_accuracy(results, truths, k));

    auto classes = db.classes();
    for (const auto& t : truths) {
        if (std::find(classes.begin(), classes.end(), t) == classes.end()) classes.push_back(t);
    }
    std::sort(classes.begin(), classes.end());
    report.confusion = confusion(predictions, truths, classes);
    return report;
}

std::vector<FusionWeights> default_sweep_weights() {
    return {{0.5, 0.5}, {0.6, 0.4}, {0.7, 0.3}, {0.8, 0.2}, {0.9, 0.1}};
}

SweepTable weight_sweep(const DescriptorDatabase& db, std::span<const EvalQuery> queries,
                        std::span<const FusionWeights> weights, std::vector<std::size_t> k_values, unsigned threads) {
    check_k_values(k_values);
    SweepTable table{k_values, {}};
    for (const auto& w : weights) {
        EvalOptions options{RetrievalMode::cbidr, w, k_values, threads};
        const EvalReport report = evaluate(db, queries, options);
        table.rows.push_back({w, report.accuracies});
    }
    return table;
}

std::string format_percent(double fraction) { return format_fixed(fraction * 100.0, 2); }

std::string report_text(const EvalReport& report) {
    std::ostringstream out;
    out << "mode: " << mode_name(report.mode) << "\n";
    if (report.mode == RetrievalMode::cbidr) out << "weights: " << weights_text(report.weights) << "\n";
    out << "queries: " << report.per_query.size() << "\n";
    for (std::size_t i = 0; i < report.k_values.size(); ++i) {
        out << "Top-" << report.k_values[i] << " (%): " << format_percent(report.accuracies[i]) << "\n";
    }
    out << "confusion (rows = true, columns = Top-1 predicted):\n";
    const auto& m = report.confusion;
    std::size_t width = 6;
    for (const auto& c : m.classes) width = std::max(width, c.size());
    auto pad = [&](const std::string& s) { return s + std::string(width + 2 - s.size(), ' '); };
    out << pad("");
    for (const auto& c : m.classes) out << pad(c);
    out << "\n";
    for (std::size_t r = 0; r < m.classes.size(); ++r) {
        out << pad(m.classes[r]);
        for (std::size_t c = 0; c < m.classes.size(); ++c) out << pad(std::to_string(m.counts[r][c]));
        out << "\n";
    }
    return out.str();
}

std::string report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "mode,w_image,w_clinical,queries";
    for (auto k : report.k_values) out << ",top" << k;
    out << "\n"
        << mode_name(report.mode) << "," << format_fixed(report.weights.image, 2) << ","
        << format_fixed(report.weights.clinical, 2) << "," << report.per_query.size();
    for (double a : report.accuracies) out << "," << format_percent(a);
    out << "\n";
    return out.str();
}

std::string report_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["mode"] = std::string(mode_name(report.mode));
    j["weights"] = {report.weights.image, report.weights.clinical};
    j["queries"] = report.per_query.size();
    nlohmann::ordered_json acc = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < report.k_values.size(); ++i) {
        acc["top" + std::to_string(report.k_values[i])] = format_percent(report.accuracies[i]);
    }
    j["accuracy_percent"] = acc;
    j["confusion"] = {{"classes", report.confusion.classes}, {"counts", report.confusion.counts}};
    nlohmann::ordered_json per_query = nlohmann::ordered_json::array();
    for (const auto& q : report.per_query) {
        per_query.push_back({{"id", q.id}, {"truth", q.truth}, {"labels", q.labels}});
    }
    j["per_query"] = per_query;
    return j.dump(2) + "\n";
}

std::string confusion_csv(const ConfusionMatrix& matrix) {
    std::ostringstream out;
    out << "true\\predicted";
    for (const auto& c : matrix.classes) out << "," << c;
    out << "\n";
    for (std::size_t r = 0; r < matrix.classes.size(); ++r) {
        out << matrix.classes[r];
        for (auto count : matrix.counts[r]) out << "," << count;
        out << "\n";
    }
    return out.str();
}

std::string sweep_text(const SweepTable& table) {
    std::ostringstream out;
    out << "TOPSIS weights     ";
    for (auto k : table.k_values) {
        const std::string head = "Top-" + std::to_string(k) + " (%)";
        out << head << std::string(head.size() < 12 ? 12 - head.size() : 1, ' ');
    }
    out << "\n";
    for (const auto& row : table.rows) {
        const std::string w = weights_text(row.weights);
        out << w << std::string(19 - std::min<std::size_t>(w.size(), 18), ' ');
        for (double a : row.accuracies) {
            const std::string cell = format_percent(a);
            out << cell << std::string(12 - std::min<std::size_t>(cell.size(), 11), ' ');
        }
        out << "\n";
    }
    return out.str();
}

std::string sweep_csv(const SweepTable& table) {
    std::ostringstream out;
    out << "w_image,w_clinical";
    for (auto k : table.k_values) out << ",top" << k;
    out << "\n";
    for (const auto& row : table.rows) {
        out << format_fixed(row.weights.image, 2) << "," << format_fixed(row.weights.clinical, 2);
        for (double a : row.accuracies) out << "," << format_percent(a);
        out << "\n";
    }
    return out.str();
}

std::string sweep_json(const SweepTable& table) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        nlohmann::ordered_json r;
        r["weights"] = {row.weights.image, row.weights.clinical};
        for (std::size_t i = 0; i < table.k_values.size(); ++i) {
            r["top" + std::to_string(table.k_values[i])] = format_percent(row.accuracies[i]);
        }
        rows.push_back(r);
    }
    nlohmann::ordered_json j;
    j["k_values"] = table.k_values;
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

}  // namespace cbidr
