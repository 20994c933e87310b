#include "cbidr/error.hpp"
#include "cbidr/eval.hpp"
#include "cbidr/ingest.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace cbidr;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected cbidr::Error";
    return ErrorCode::invalid_argument;
}

std::vector<std::string> labels_of(std::size_t a, std::size_t b, std::size_t c) {
    std::vector<std::string> out;
    out.insert(out.end(), a, "A");
    out.insert(out.end(), b, "B");
    out.insert(out.end(), c, "C");
    return out;
}

RankedResult result_with(std::initializer_list<const char*> labels) {
    RankedResult r;
    ItemId id = 0;
    for (const char* l : labels) r.entries.push_back({id++, l, 0.0, 0.0, std::nullopt});
    return r;
}

Experiment synthetic_experiment(double sep, double noise, std::uint64_t seed) {
    SyntheticParams p;
    p.cluster_sep = sep;
    p.clinical_noise = noise;
    p.seed = seed;
    const auto bundle = gen_synthetic(p);
    return make_experiment(bundle.embeddings, bundle.clinical, bundle.schema, 5.0 / 6.0, seed);
}

}  // namespace

TEST(Split, TwelveItemsFiveSixths) {
    const std::vector<std::string> labels(12, "A");
    const auto s = split(labels, 5.0 / 6.0, 1);
    EXPECT_EQ(s.database.size(), 10u);
    EXPECT_EQ(s.queries.size(), 2u);
    std::set<std::size_t> all(s.database.begin(), s.database.end());
    all.insert(s.queries.begin(), s.queries.end());
    EXPECT_EQ(all.size(), 12u);
}

TEST(Split, StratifiedPerClass) {
    const auto labels = labels_of(30, 30, 30);
    const auto s = split(labels, 2.0 / 3.0, 4);
    std::map<std::string, std::size_t> db_count, q_count;
    for (auto i : s.database) ++db_count[labels[i]];
    for (auto i : s.queries) ++q_count[labels[i]];
    for (const char* c : {"A", "B", "C"}) {
        EXPECT_EQ(db_count[c], 20u);
        EXPECT_EQ(q_count[c], 10u);
    }
}

TEST(Split, SeedDeterminesPartition) {
    const auto labels = labels_of(17, 23, 9);
    const auto a = split(labels, 0.75, 42);
    const auto b = split(labels, 0.75, 42);
    EXPECT_EQ(a.database, b.database);
    EXPECT_EQ(a.queries, b.queries);
    const auto c = split(labels, 0.75, 43);
    EXPECT_NE(a.database, c.database);
}

TEST(Split, EveryClassKeepsAtLeastOneOnEachSide) {
    const auto labels = labels_of(2, 3, 50);
    for (double fraction : {0.01, 0.5, 0.99}) {
        const auto s = split(labels, fraction, 3);
        std::set<std::string> db_classes, q_classes;
        for (auto i : s.database) db_classes.insert(labels[i]);
        for (auto i : s.queries) q_classes.insert(labels[i]);
        EXPECT_EQ(db_classes.size(), 3u);
        EXPECT_EQ(q_classes.size(), 3u);
    }
}

TEST(Split, Errors) {
    EXPECT_EQ(code_of([] { split(labels_of(1, 5, 5), 0.5, 0); }), ErrorCode::too_few_members);
    EXPECT_EQ(code_of([] { split(labels_of(5, 5, 5), 1.0, 0); }), ErrorCode::invalid_argument);
    EXPECT_EQ(code_of([] { split(labels_of(5, 5, 5), 0.0, 0); }), ErrorCode::invalid_argument);
}

TEST(TopK, Example) {
    const std::vector<RankedResult> results{result_with({"A", "B", "A"}), result_with({"B", "B", "C"}),
                                            result_with({"C", "A", "A"})};
    const std::vector<std::string> truths{"A", "B", "B"};
    EXPECT_DOUBLE_EQ(topk_accuracy(results, truths, 1), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(topk_accuracy(results, truths, 3), 2.0 / 3.0);
    const std::vector<std::string> later{"A", "C", "A"};
    EXPECT_DOUBLE_EQ(topk_accuracy(results, later, 1), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(topk_accuracy(results, later, 2), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(topk_accuracy(results, later, 3), 1.0);
}

TEST(TopK, Errors) {
    const std::vector<RankedResult> results{result_with({"A"})};
    const std::vector<std::string> truths{"A"};
    EXPECT_EQ(code_of([&] { topk_accuracy(results, truths, 2); }), ErrorCode::k_out_of_range);
    EXPECT_EQ(code_of([&] { topk_accuracy(results, truths, 0); }), ErrorCode::k_out_of_range);
    EXPECT_EQ(code_of([&] { topk_accuracy({}, {}, 1); }), ErrorCode::empty_input);
    EXPECT_EQ(code_of([&] { topk_accuracy(results, std::vector<std::string>{}, 1); }), ErrorCode::length_mismatch);
}

TEST(Confusion, Example) {
    const std::vector<std::string> predictions{"A", "B", "B"};
    const std::vector<std::string> truths{"A", "A", "B"};
    const std::vector<std::string> classes{"A", "B"};
    const auto m = confusion(predictions, truths, classes);
    EXPECT_EQ(m.counts, (std::vector<std::vector<std::size_t>>{{1, 1}, {0, 1}}));
    EXPECT_EQ(m.total(), 3u);
    EXPECT_EQ(m.trace(), 2u);
    EXPECT_EQ(code_of([&] { confusion(std::vector<std::string>{"Z"}, std::vector<std::string>{"A"}, classes); }),
              ErrorCode::unknown_label);
}

TEST(Evaluate, ReportInvariants) {
    const auto exp = synthetic_experiment(2.75, 0.05, 7);
    EvalOptions options;
    options.k_values = {1, 3, 5, 10};
    for (auto mode : {RetrievalMode::cbir, RetrievalMode::cbidr}) {
        options.mode = mode;
        const auto report = evaluate(exp.database, exp.queries, options);
        ASSERT_EQ(report.accuracies.size(), 4u);
        // Top-k accuracy is non-decreasing in k.
        EXPECT_TRUE(std::is_sorted(report.accuracies.begin(), report.accuracies.end()));
        EXPECT_EQ(report.confusion.total(), exp.queries.size());
        EXPECT_DOUBLE_EQ(static_cast<double>(report.confusion.trace()) / exp.queries.size(), report.top1());
        EXPECT_EQ(report.per_query.size(), exp.queries.size());
    }
}

TEST(Evaluate, ThreadCountDoesNotChangeResults) {
    const auto exp = synthetic_experiment(2.0, 0.1, 9);
    EvalOptions options;
    options.mode = RetrievalMode::cbidr;
    options.threads = 1;
    const auto sequential = evaluate(exp.database, exp.queries, options);
    options.threads = 4;
    const auto parallel = evaluate(exp.database, exp.queries, options);
    EXPECT_EQ(report_json(sequential), report_json(parallel));
    EXPECT_EQ(report_text(sequential), report_text(parallel));
}

TEST(Evaluate, ClinicalOnlyRetrievalIsPerfectWithoutNoise) {
    const auto exp = synthetic_experiment(0.0, 0.0, 3);
    EvalOptions options;
    options.mode = RetrievalMode::cbidr;
    options.weights = {0.0, 1.0};
    const auto report = evaluate(exp.database, exp.queries, options);
    EXPECT_EQ(report.top1(), 1.0);
    EXPECT_EQ(report.top5(), 1.0);
    // With no image separation, image-only retrieval is near chance.
    options.mode = RetrievalMode::cbir;
    EXPECT_LT(evaluate(exp.database, exp.queries, options).top1(), 0.6);
}

TEST(Sweep, DefaultWeightsProduceFiveRows) {
    const auto weights = default_sweep_weights();
    ASSERT_EQ(weights.size(), 5u);
    EXPECT_EQ(weights.front(), (FusionWeights{0.5, 0.5}));
    EXPECT_EQ(weights.back(), (FusionWeights{0.9, 0.1}));

    const auto exp = synthetic_experiment(2.75, 0.05, 7);
    const auto table = weight_sweep(exp.database, exp.queries, weights);
    ASSERT_EQ(table.rows.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(table.rows[i].weights, weights[i]);
        EvalOptions options;
        options.mode = RetrievalMode::cbidr;
        options.weights = weights[i];
        EXPECT_EQ(table.rows[i].accuracies, evaluate(exp.database, exp.queries, options).accuracies);
    }
    const auto text = sweep_text(table);
    EXPECT_EQ(text.substr(0, text.find('\n')), "TOPSIS weights     Top-1 (%)   Top-5 (%)   ");
    EXPECT_NE(text.find("[0.5, 0.5]"), std::string::npos);
    EXPECT_NE(text.find("[0.9, 0.1]"), std::string::npos);
    EXPECT_EQ(sweep_csv(table).substr(0, 24), "w_image,w_clinical,top1,");
    EXPECT_EQ(sweep_text(weight_sweep(exp.database, exp.queries, weights, {1, 5}, 3)), text);
}

TEST(Format, PercentHasTwoDecimals) {
    EXPECT_EQ(format_percent(1.0), "100.00");
    EXPECT_EQ(format_percent(2.0 / 3.0), "66.67");
    EXPECT_EQ(format_percent(0.0), "0.00");
}

TEST(Format, CsvAndConfusionHeaders) {
    const auto exp = synthetic_experiment(3.0, 0.05, 1);
    const auto report = evaluate(exp.database, exp.queries, EvalOptions{});
    const auto csv = report_csv(report);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "mode,w_image,w_clinical,queries,top1,top5");
    const auto matrix = confusion_csv(report.confusion);
    EXPECT_EQ(matrix.substr(0, matrix.find('\n')), "true\\predicted,class_0,class_1,class_2");
}
