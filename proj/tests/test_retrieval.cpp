#include "cbidr/error.hpp"
#include "cbidr/ingest.hpp"
#include "cbidr/retrieval.hpp"
#include "cbidr/rng.hpp"
#include "oracles/hamming_oracle.hpp"
#include "oracles/knn_oracle.hpp"
#include "oracles/topsis_oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

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

ClinicalSchema flag_schema(std::size_t n) {
    std::vector<FieldSpec> fields;
    for (std::size_t i = 0; i < n; ++i) fields.push_back({"f" + std::to_string(i), FieldKind::boolean, {}, {}, false});
    return ClinicalSchema(std::move(fields));
}

struct HandItem {
    ItemId id;
    std::string label;
    Embedding vector;
    std::string bits;
};

DescriptorDatabase hand_db(const std::vector<HandItem>& items) {
    const auto schema = flag_schema(items.front().bits.size());
    std::vector<EmbeddingRecord> records;
    std::vector<std::pair<ItemId, ClinicalBits>> clinical;
    for (const auto& item : items) {
        records.push_back({item.id, item.label, item.vector});
        clinical.emplace_back(item.id, ClinicalBits::from_string(item.bits, schema.id()));
    }
    return DescriptorDatabase(std::move(records), std::move(clinical), schema);
}

std::vector<HandItem> five_items() {
    return {
        {10, "a", {0, 0}, "0000"},
        {11, "b", {1, 0}, "1100"},
        {12, "a", {0, 3}, "0001"},
        {13, "c", {2, 2}, "0000"},
        {14, "b", {5, 1}, "1111"},
    };
}

std::vector<ItemId> ids_of(const RankedResult& r) {
    std::vector<ItemId> out;
    for (const auto& e : r.entries) out.push_back(e.id);
    return out;
}

Query make_query(const DescriptorDatabase& db, Embedding v, const std::string& bits, FusionWeights w, std::size_t k) {
    return Query{std::move(v), ClinicalBits::from_string(bits, db.schema().id()), w, k, std::nullopt};
}

}  // namespace

TEST(Database, ValidatesAlignment) {
    const auto schema = flag_schema(2);
    const auto bits = ClinicalBits::from_string("10", schema.id());
    EXPECT_EQ(code_of([&] { DescriptorDatabase({{1, "a", {0}}}, {}, schema); }), ErrorCode::length_mismatch);
    EXPECT_EQ(code_of([&] { DescriptorDatabase({{1, "a", {0}}}, {{2, bits}}, schema); }), ErrorCode::not_found);
    EXPECT_EQ(code_of([&] { DescriptorDatabase({{1, "a", {0}}}, {{1, ClinicalBits::from_string("10", 99)}}, schema); }),
              ErrorCode::schema_mismatch);
    const auto db = hand_db(five_items());
    EXPECT_EQ(db.classes(), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Cbir, ExactMatchAndFullK) {
    const auto db = hand_db(five_items());
    const auto top = cbir_query(db, Embedding{0, 3}, 1);
    EXPECT_EQ(top.mode, RetrievalMode::cbir);
    ASSERT_EQ(top.entries.size(), 1u);
    EXPECT_EQ(top.entries[0].id, 12u);
    EXPECT_EQ(top.entries[0].d_image, 0.0);
    EXPECT_FALSE(top.entries[0].d_clinical);

    const auto all = cbir_query(db, Embedding{0, 0}, 5);
    EXPECT_EQ(ids_of(all), (std::vector<ItemId>{10, 11, 13, 12, 14}));
    EXPECT_EQ(code_of([&] { cbir_query(db, Embedding{0, 0}, 6); }), ErrorCode::k_out_of_range);
    EXPECT_EQ(code_of([&] { cbir_query(db, Embedding{0, 0}, 0); }), ErrorCode::k_out_of_range);
    EXPECT_EQ(code_of([&] { cbir_query(db, Embedding{0, 0, 0}, 1); }), ErrorCode::dimension_mismatch);
}

TEST(Cbir, ExcludeIdRemovesTheQueryItem) {
    const auto db = hand_db(five_items());
    const auto r = cbir_query(db, Embedding{0, 0}, 4, ItemId{10});
    EXPECT_EQ(ids_of(r), (std::vector<ItemId>{11, 13, 12, 14}));
    EXPECT_EQ(code_of([&] { cbir_query(db, Embedding{0, 0}, 5, ItemId{10}); }), ErrorCode::k_out_of_range);
    // Excluding an id that is not stored changes nothing.
    EXPECT_EQ(cbir_query(db, Embedding{0, 0}, 5, ItemId{999}), cbir_query(db, Embedding{0, 0}, 5));
}

TEST(Cbidr, MatchesLiteralOracleOnHandDatabase) {
    const auto items = five_items();
    const auto db = hand_db(items);
    const Embedding qv{1, 1};
    const std::string qbits = "0100";
    for (auto w : {FusionWeights{0.5, 0.5}, FusionWeights{0.8, 0.2}, FusionWeights{0.3, 0.7}}) {
        std::vector<std::vector<double>> matrix;
        for (const auto& item : items) {
            std::vector<bool> a, b;
            for (char c : item.bits) a.push_back(c == '1');
            for (char c : qbits) b.push_back(c == '1');
            matrix.push_back({oracle::euclidean(item.vector, qv), double(oracle::hamming_bits(a, b))});
        }
        const auto expected = oracle::topsis(matrix, {w.image, w.clinical}, {false, false});
        const auto got = cbidr_query(db, make_query(db, qv, qbits, w, 5));
        ASSERT_EQ(got.entries.size(), 5u);
        for (std::size_t p = 0; p < 5; ++p) {
            EXPECT_EQ(got.entries[p].id, items[expected.order[p]].id);
            EXPECT_NEAR(got.entries[p].score, expected.xi[expected.order[p]], 1e-12);
            EXPECT_NEAR(got.entries[p].d_image, matrix[expected.order[p]][0], 1e-6);
            EXPECT_EQ(*got.entries[p].d_clinical, std::size_t(matrix[expected.order[p]][1]));
        }
    }
}

TEST(Cbidr, TruncationHappensAfterRanking) {
    const auto db = hand_db(five_items());
    const auto full = cbidr_query(db, make_query(db, {1, 1}, "0100", {0.5, 0.5}, 5));
    for (std::size_t k = 1; k <= 5; ++k) {
        const auto part = cbidr_query(db, make_query(db, {1, 1}, "0100", {0.5, 0.5}, k));
        EXPECT_TRUE(std::equal(part.entries.begin(), part.entries.end(), full.entries.begin()));
    }
}

TEST(Cbidr, DuplicateOfQueryRanksFirst) {
    const auto db = hand_db(five_items());
    for (auto w : {FusionWeights{0.5, 0.5}, FusionWeights{0.9, 0.1}, FusionWeights{0.1, 0.9}}) {
        const auto r = cbidr_query(db, make_query(db, {2, 2}, "0000", w, 1));
        EXPECT_EQ(r.entries[0].id, 13u);
        EXPECT_EQ(r.entries[0].score, 1.0);
    }
}

TEST(Cbidr, WeightShiftsTheWinner) {
    // Item 1 is close in image space but far clinically; item 2 is the reverse.
    const auto db = hand_db({{1, "x", {1, 0}, "1111"}, {2, "y", {4, 0}, "0001"}});
    const auto image_heavy = cbidr_query(db, make_query(db, {0, 0}, "0000", {0.9, 0.1}, 2));
    const auto clinical_heavy = cbidr_query(db, make_query(db, {0, 0}, "0000", {0.1, 0.9}, 2));
    EXPECT_EQ(ids_of(image_heavy), (std::vector<ItemId>{1, 2}));
    EXPECT_EQ(ids_of(clinical_heavy), (std::vector<ItemId>{2, 1}));
}

TEST(Cbidr, Errors) {
    const auto db = hand_db(five_items());
    Query q{{0, 0}, std::nullopt, {0.5, 0.5}, 3, std::nullopt};
    EXPECT_EQ(code_of([&] { cbidr_query(db, q); }), ErrorCode::missing_field);
    q.clinical = ClinicalBits::from_string("0000", db.schema().id() + 1);
    EXPECT_EQ(code_of([&] { cbidr_query(db, q); }), ErrorCode::schema_mismatch);
    q = make_query(db, {0, 0}, "0000", {0.7, 0.4}, 3);
    EXPECT_EQ(code_of([&] { cbidr_query(db, q); }), ErrorCode::weight_sum);
    q = make_query(db, {0, 0}, "0000", {0.5, 0.5}, 6);
    EXPECT_EQ(code_of([&] { cbidr_query(db, q); }), ErrorCode::k_out_of_range);
    q.k = 5;
    q.exclude_id = 14;
    EXPECT_EQ(code_of([&] { cbidr_query(db, q); }), ErrorCode::k_out_of_range);
    q.k = 4;
    const auto ids = ids_of(cbidr_query(db, q));
    EXPECT_EQ(std::count(ids.begin(), ids.end(), 14u), 0);
}

class DegenerateWeights : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        SyntheticParams p;
        p.per_class = 40;
        p.dim = 32;
        p.cluster_sep = 2.0;
        p.clinical_noise = 0.2;
        p.seed = 5;
        bundle_ = new DatasetBundle(gen_synthetic(p));
        db_ = new DescriptorDatabase(to_database(*bundle_));
    }
    static void TearDownTestSuite() {
        delete db_;
        delete bundle_;
    }
    static inline DatasetBundle* bundle_ = nullptr;
    static inline DescriptorDatabase* db_ = nullptr;
};

TEST_F(DegenerateWeights, ImageOnlyEqualsCbir) {
    Rng rng(1);
    for (int trial = 0; trial < 25; ++trial) {
        const auto& src = bundle_->embeddings[rng.below(bundle_->embeddings.size())];
        Embedding v = src.vector;
        for (auto& x : v) x += static_cast<float>(rng.normal() * 0.3);
        const auto& bits = bundle_->clinical[rng.below(bundle_->clinical.size())].second;
        const std::size_t k = 1 + rng.below(20);
        const auto fused = cbidr_query(*db_, Query{v, bits, {1.0, 0.0}, k, std::nullopt});
        const auto plain = cbir_query(*db_, v, k);
        EXPECT_EQ(ids_of(fused), ids_of(plain)) << "trial " << trial;
    }
}

TEST_F(DegenerateWeights, ClinicalOnlyIsHammingOrderWithIdTies) {
    Rng rng(2);
    for (int trial = 0; trial < 25; ++trial) {
        const auto& bits = bundle_->clinical[rng.below(bundle_->clinical.size())].second;
        Embedding v(db_->dim());
        for (auto& x : v) x = static_cast<float>(rng.normal());
        const std::size_t k = 1 + rng.below(30);
        const auto fused = cbidr_query(*db_, Query{v, bits, {0.0, 1.0}, k, std::nullopt});

        const auto distances = all_hamming(db_->clinical(), bits);
        std::vector<std::size_t> rows(db_->size());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        std::stable_sort(rows.begin(), rows.end(), [&](auto a, auto b) { return distances[a] < distances[b]; });
        std::vector<ItemId> expected;
        for (std::size_t p = 0; p < k; ++p) expected.push_back(db_->ids()[rows[p]]);
        EXPECT_EQ(ids_of(fused), expected) << "trial " << trial;
    }
}

TEST_F(DegenerateWeights, RepeatedQueriesAreIdentical) {
    const auto& bits = bundle_->clinical[7].second;
    const Query q{bundle_->embeddings[3].vector, bits, {0.6, 0.4}, 10, std::nullopt};
    const auto first = cbidr_query(*db_, q);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(cbidr_query(*db_, q), first);
    EXPECT_EQ(run_query(*db_, q, RetrievalMode::cbir), cbir_query(*db_, q.vector, 10));
}

TEST(Mode, ParseAndName) {
    EXPECT_EQ(parse_mode("cbir"), RetrievalMode::cbir);
    EXPECT_EQ(parse_mode("cbidr"), RetrievalMode::cbidr);
    EXPECT_EQ(mode_name(RetrievalMode::cbidr), "cbidr");
    EXPECT_EQ(code_of([] { parse_mode("fusion"); }), ErrorCode::invalid_argument);
}
