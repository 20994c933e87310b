#include "cbidr/error.hpp"
#include "cbidr/rng.hpp"
#include "cbidr/service.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <thread>

using namespace cbidr;
using nlohmann::json;

namespace {

ClinicalSchema lesion_schema() {
    return ClinicalSchema({
        {"gender", FieldKind::categorical, {"M", "F"}, {}, false},
        {"location", FieldKind::categorical, {"tongue", "lip", "gum", "palate"}, {}, false},
        {"smoker", FieldKind::boolean, {}, {}, false},
        {"alcohol", FieldKind::boolean, {}, {}, false},
        {"age", FieldKind::numeric, {}, {0, 40, 60, 120}, false},
        {"sun_exposure", FieldKind::boolean, {}, {}, true},
    });
}

std::shared_ptr<const DescriptorDatabase> lesion_db() {
    const auto schema = lesion_schema();
    const char* labels[] = {"carcinoma", "leukoplakia", "normal"};
    const char* locations[] = {"tongue", "lip", "gum", "palate"};
    Rng rng(12);
    std::vector<EmbeddingRecord> records;
    std::vector<std::pair<ItemId, ClinicalBits>> clinical;
    for (ItemId id = 1; id <= 30; ++id) {
        Embedding v(8);
        for (auto& x : v) x = static_cast<float>(rng.normal() + double(id % 3) * 2.0);
        records.push_back({id, labels[id % 3], v});
        const ClinicalRecord r{{"gender", id % 2 ? "M" : "F"},
                               {"location", locations[id % 4]},
                               {"smoker", id % 3 == 0 ? "yes" : "no"},
                               {"alcohol", id % 5 == 0 ? "yes" : "no"},
                               {"age", std::to_string(20 + id * 3)},
                               {"sun_exposure", id % 7 == 0 ? "unknown" : "no"}};
        clinical.emplace_back(id, encode(r, schema));
    }
    return std::make_shared<const DescriptorDatabase>(records, clinical, schema);
}

std::string embedding_json(const DescriptorDatabase& db, ItemId id) {
    const auto v = db.index().vector(db.index().find(id));
    return json(std::vector<float>(v.begin(), v.end())).dump();
}

const char* clinical_json =
    R"({"gender":"F","location":"gum","smoker":true,"alcohol":"no","age":55,"sun_exposure":"unknown"})";

json error_of(const HttpReply& reply) { return json::parse(reply.body).at("error"); }

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override {
        db_ = lesion_db();
        service_.set_database(db_);
    }
    std::shared_ptr<const DescriptorDatabase> db_;
    QueryService service_;
};

}  // namespace

TEST(ServiceLoading, DataEndpointsReturn503UntilReady) {
    QueryService service;
    EXPECT_FALSE(service.ready());
    for (const auto& reply : {service.query("{}"), service.metadata(), service.item("1")}) {
        EXPECT_EQ(reply.status, 503);
        EXPECT_EQ(error_of(reply).at("code"), "database-loading");
    }
    EXPECT_EQ(service.health().status, 503);
    EXPECT_EQ(json::parse(service.health().body).at("status"), "loading");
    service.set_database(lesion_db());
    EXPECT_TRUE(service.ready());
    EXPECT_EQ(service.health().status, 200);
}

TEST_F(ServiceTest, QueryReturnsRankedEntries) {
    const auto body = R"({"embedding":)" + embedding_json(*db_, 4) + R"(,"clinical":)" + clinical_json + R"(,"k":3})";
    const auto reply = service_.query(body);
    ASSERT_EQ(reply.status, 200) << reply.body;
    const auto j = json::parse(reply.body);
    EXPECT_EQ(j.at("mode"), "cbidr");
    EXPECT_EQ(j.at("k"), 3);
    EXPECT_EQ(j.at("weights"), json::parse("[0.5,0.5]"));
    ASSERT_EQ(j.at("entries").size(), 3u);
    const auto& first = j.at("entries")[0];
    EXPECT_EQ(first.at("rank"), 1);
    for (const char* key : {"id", "label", "score", "d_image", "d_clinical", "clinical_summary"}) {
        EXPECT_TRUE(first.contains(key)) << key;
    }
    EXPECT_FALSE(first.at("clinical_summary").get<std::string>().empty());
    EXPECT_TRUE(j.contains("timing"));
}

TEST_F(ServiceTest, ModeDefaultsFollowClinicalPresence) {
    const auto plain = json::parse(service_.query(R"({"embedding":)" + embedding_json(*db_, 9) + "}").body);
    EXPECT_EQ(plain.at("mode"), "cbir");
    EXPECT_TRUE(plain.at("entries")[0].at("d_clinical").is_null());
    EXPECT_EQ(plain.at("entries")[0].at("id"), 9);

    const auto missing = service_.query(R"({"mode":"cbidr","embedding":)" + embedding_json(*db_, 9) + "}");
    EXPECT_EQ(missing.status, 400);
    EXPECT_EQ(error_of(missing).at("field"), "clinical");
}

TEST_F(ServiceTest, ImageOnlyWeightsMatchCbir) {
    const auto emb = embedding_json(*db_, 17);
    const auto fused = json::parse(
        service_.query(R"({"embedding":)" + emb + R"(,"clinical":)" + clinical_json + R"(,"weights":[1,0],"k":10})")
            .body);
    const auto plain = json::parse(service_.query(R"({"mode":"cbir","embedding":)" + emb + R"(,"k":10})").body);
    ASSERT_EQ(fused.at("entries").size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(fused["entries"][i]["id"], plain["entries"][i]["id"]);
}

TEST_F(ServiceTest, QueriesAreIdempotent) {
    const auto body = R"({"embedding":)" + embedding_json(*db_, 2) + R"(,"clinical":)" + clinical_json + "}";
    auto strip = [](std::string s) {
        auto j = json::parse(s);
        j.erase("timing");
        return j;
    };
    const auto first = strip(service_.query(body).body);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(strip(service_.query(body).body), first);
}

TEST_F(ServiceTest, QueryIdExcludesTheItem) {
    const auto body = R"({"mode":"cbir","query_id":5,"k":29,"embedding":)" + embedding_json(*db_, 5) + "}";
    const auto j = json::parse(service_.query(body).body);
    for (const auto& e : j.at("entries")) EXPECT_NE(e.at("id"), 5);
    const auto too_many = R"({"mode":"cbir","query_id":5,"k":30,"embedding":)" + embedding_json(*db_, 5) + "}";
    EXPECT_EQ(error_of(service_.query(too_many)).at("code"), "k-out-of-range");
}

TEST_F(ServiceTest, ValidationErrorsNameTheField) {
    const auto emb = embedding_json(*db_, 1);
    struct Case {
        std::string body;
        std::string code;
        std::string field;
    };
    const std::vector<Case> cases{
        {R"({"embedding":)" + emb + R"(,"k":31})", "k-out-of-range", "k"},
        {R"({"embedding":)" + emb + R"(,"k":0})", "k-out-of-range", "k"},
        {R"({"embedding":[1,2,3]})", "dimension-mismatch", "embedding"},
        {R"({"embedding":)" + emb + R"(,"clinical":)" + clinical_json + R"(,"weights":[0.7,0.4]})", "weight-sum",
         "weights"},
        {R"({"embedding":)" + emb + R"(,"clinical":{"gender":"X"}})", "undeclared-value", "clinical.gender"},
        {R"({"embedding":)" + emb + R"(,"clinical":{"gender":"F"}})", "missing-field", "clinical.location"},
        {R"({"embedding":)" + emb + R"(,"clinical":{"colour":"red"}})", "undeclared-value", "clinical.colour"},
        {R"({"k":3})", "missing-field", "embedding"},
        {"not json", "malformed-input", ""},
        {R"({"embedding":[1,"a"]})", "invalid-argument", "embedding[1]"},
        {R"({"embedding":[1e300]})", "non-finite", "embedding[0]"},
        {R"({"embedding":)" + emb + R"(,"mode":"text"})", "invalid-argument", "mode"},
    };
    for (const auto& c : cases) {
        const auto reply = service_.query(c.body);
        EXPECT_EQ(reply.status, 400) << c.body;
        const auto err = error_of(reply);
        EXPECT_EQ(err.at("code"), c.code) << c.body;
        EXPECT_EQ(err.at("field"), c.field) << c.body;
        EXPECT_FALSE(err.at("message").get<std::string>().empty());
    }
}

TEST_F(ServiceTest, MetadataDescribesTheDatabase) {
    const auto reply = service_.metadata();
    ASSERT_EQ(reply.status, 200);
    const auto j = json::parse(reply.body);
    EXPECT_EQ(j.at("classes"), json::parse(R"(["carcinoma","leukoplakia","normal"])"));
    EXPECT_EQ(j.at("schema").at("fields").size(), 6u);
    EXPECT_EQ(j.at("m"), 30);
    EXPECT_EQ(j.at("dim"), 8);
    EXPECT_EQ(j.at("total_bits"), 13);
    EXPECT_EQ(j.at("default_k"), 5);
    EXPECT_EQ(j.at("default_weights"), json::parse("[0.5,0.5]"));
}

TEST_F(ServiceTest, ItemLookup) {
    const auto reply = service_.item("14");
    ASSERT_EQ(reply.status, 200);
    const auto j = json::parse(reply.body);
    EXPECT_EQ(j.at("id"), 14);
    EXPECT_EQ(j.at("label"), "normal");
    EXPECT_EQ(j.at("embedding").size(), 8u);
    EXPECT_EQ(j.at("clinical_bits").get<std::string>().size(), 4u);
    EXPECT_NE(j.at("clinical_summary").get<std::string>().find("gender=F"), std::string::npos);
    EXPECT_EQ(service_.item("999").status, 404);
    EXPECT_EQ(service_.item("abc").status, 400);
}

TEST(ServiceHttp, LiveServerRoundTrip) {
    QueryService service;
    httplib::Server server;
    service.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread loop([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 503);

    const auto db = lesion_db();
    service.set_database(db);
    health = client.Get("/health");
    EXPECT_EQ(health->status, 200);

    const auto body = R"({"embedding":)" + embedding_json(*db, 3) + R"(,"k":2})";
    const auto query = client.Post("/query", body, "application/json");
    ASSERT_TRUE(query);
    EXPECT_EQ(query->status, 200);
    EXPECT_EQ(query->get_header_value("Access-Control-Allow-Origin"), "*");
    EXPECT_EQ(json::parse(query->body).at("entries").size(), 2u);

    const auto bad = client.Post("/query", R"({"embedding":)" + embedding_json(*db, 3) + R"(,"k":31})",
                                 "application/json");
    EXPECT_EQ(bad->status, 400);
    EXPECT_EQ(json::parse(bad->body).at("error").at("code"), "k-out-of-range");

    EXPECT_EQ(client.Get("/metadata")->status, 200);
    EXPECT_EQ(client.Get("/items/3")->status, 200);
    EXPECT_EQ(client.Get("/items/300")->status, 404);
    EXPECT_EQ(client.Options("/query")->status, 204);

    server.stop();
    loop.join();
}
