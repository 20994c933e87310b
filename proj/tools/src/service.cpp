#include "cbidr/service.hpp"

#include "cbidr/error.hpp"

#include <httplib.h>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>

namespace cbidr {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string clinical_value(const json& v, const std::string& field) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
    if (v.is_number()) return v.dump();
    if (v.is_null()) return {};
    throw RequestError("malformed-input", "clinical." + field, "clinical value must be a string, number or boolean");
}

RequestError from_error(const Error& e, std::string field) {
    if (!e.subject().empty()) field += "." + e.subject();
    return RequestError(std::string(code_name(e.code())), std::move(field), e.what());
}

HttpReply unavailable() { return {503, error_body("database-loading", "", "database is not loaded yet")}; }

HttpReply bad_request(const RequestError& e) { return {400, error_body(e.code(), e.field(), e.what())}; }

}  // namespace

std::string error_body(std::string_view code, std::string_view field, std::string_view message) {
    ordered_json j;
    j["error"] = {{"code", code}, {"field", field}, {"message", message}};
    return j.dump();
}

QueryRequest parse_query_request(std::string_view body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw RequestError("malformed-input", "", std::string("request body is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw RequestError("malformed-input", "", "request body must be a JSON object");

    QueryRequest req;

    if (!j.contains("embedding")) throw RequestError("missing-field", "embedding", "embedding is required");
    const auto& emb = j["embedding"];
    if (!emb.is_array() || emb.empty()) {
        throw RequestError("invalid-argument", "embedding", "embedding must be a non-empty array of numbers");
    }
    for (std::size_t i = 0; i < emb.size(); ++i) {
        if (!emb[i].is_number()) {
            throw RequestError("invalid-argument", "embedding[" + std::to_string(i) + "]", "value is not a number");
        }
        const double v = emb[i].get<double>();
        const auto f = static_cast<float>(v);
        if (!std::isfinite(v) || !std::isfinite(f)) {
            throw RequestError("non-finite", "embedding[" + std::to_string(i) + "]", "value is not finite in float32");
        }
        req.embedding.push_back(f);
    }

    if (j.contains("clinical") && !j["clinical"].is_null()) {
        if (!j["clinical"].is_object()) throw RequestError("invalid-argument", "clinical", "clinical must be an object");
        ClinicalRecord record;
        for (const auto& [name, value] : j["clinical"].items()) record[name] = clinical_value(value, name);
        req.clinical = std::move(record);
    }

    if (j.contains("weights")) {
        const auto& w = j["weights"];
        if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
            throw RequestError("invalid-argument", "weights", "weights must be a pair of numbers");
        }
        req.weights = {w[0].get<double>(), w[1].get<double>()};
        for (double x : {req.weights.image, req.weights.clinical}) {
            if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
                throw RequestError("invalid-argument", "weights", "weights must lie in [0, 1]");
            }
        }
        if (std::abs(req.weights.image + req.weights.clinical - 1.0) > 1e-9) {
            throw RequestError("weight-sum", "weights", "weights must sum to 1");
        }
    }

    if (j.contains("k")) {
        const auto& k = j["k"];
        if (!k.is_number_integer() || k.get<std::int64_t>() < 1) {
            throw RequestError("k-out-of-range", "k", "k must be a positive integer");
        }
        req.k = k.get<std::size_t>();
    }

    if (j.contains("mode")) {
        if (!j["mode"].is_string()) throw RequestError("invalid-argument", "mode", "mode must be a string");
        try {
            req.mode = parse_mode(j["mode"].get<std::string>());
        } catch (const Error& e) {
            throw RequestError("invalid-argument", "mode", e.what());
        }
    } else {
        req.mode = req.clinical ? RetrievalMode::cbidr : RetrievalMode::cbir;
    }
    if (req.mode == RetrievalMode::cbidr && !req.clinical) {
        throw RequestError("missing-field", "clinical", "mode cbidr requires clinical data");
    }

    if (j.contains("query_id") && !j["query_id"].is_null()) {
        if (!j["query_id"].is_number_unsigned()) {
            throw RequestError("invalid-argument", "query_id", "query_id must be a non-negative integer");
        }
        req.query_id = j["query_id"].get<ItemId>();
    }
    return req;
}

RankedResult execute(const DescriptorDatabase& db, const QueryRequest& request) {
    if (request.embedding.size() != db.dim()) {
        throw RequestError("dimension-mismatch", "embedding",
                           "embedding has dimension " + std::to_string(request.embedding.size()) +
                               ", database dimension is " + std::to_string(db.dim()));
    }
    Query query;
    query.vector = request.embedding;
    query.weights = request.weights;
    query.k = request.k;
    query.exclude_id = request.query_id;

    if (request.clinical) {
        for (const auto& [name, value] : *request.clinical) {
            if (db.schema().find(name) == db.schema().fields().size()) {
                throw RequestError("undeclared-value", "clinical." + name, "'" + name + "' is not a schema field");
            }
        }
        try {
            query.clinical = encode(*request.clinical, db.schema());
        } catch (const Error& e) {
            throw from_error(e, "clinical");
        }
    }

    try {
        return run_query(db, query, request.mode);
    } catch (const Error& e) {
        std::string field;
        switch (e.code()) {
            case ErrorCode::k_out_of_range: field = "k"; break;
            case ErrorCode::weight_sum:
            case ErrorCode::invalid_argument: field = "weights"; break;
            case ErrorCode::dimension_mismatch:
            case ErrorCode::non_finite: field = "embedding"; break;
            default: field = "clinical"; break;
        }
        throw RequestError(std::string(code_name(e.code())), field, e.what());
    }
}

std::string response_json(const DescriptorDatabase& db, const QueryRequest& request, const RankedResult& result,
                          double elapsed_ms) {
    ordered_json entries = ordered_json::array();
    std::size_t rank = 0;
    for (const auto& e : result.entries) {
        ordered_json entry;
        entry["rank"] = ++rank;
        entry["id"] = e.id;
        entry["label"] = e.label;
        entry["score"] = e.score;
        entry["d_image"] = e.d_image;
        if (e.d_clinical) {
            entry["d_clinical"] = *e.d_clinical;
        } else {
            entry["d_clinical"] = nullptr;
        }
        entry["clinical_summary"] =
            result.mode == RetrievalMode::cbidr ? summarize(db.clinical()[db.index().find(e.id)], db.schema()) : "";
        entries.push_back(std::move(entry));
    }
    ordered_json j;
    j["entries"] = std::move(entries);
    j["mode"] = std::string(mode_name(result.mode));
    j["weights"] = {request.weights.image, request.weights.clinical};
    j["k"] = request.k;
    j["timing"] = elapsed_ms;
    return j.dump();
}

void QueryService::set_database(std::shared_ptr<const DescriptorDatabase> db) {
    std::lock_guard lock(mutex_);
    db_ = std::move(db);
}

std::shared_ptr<const DescriptorDatabase> QueryService::database() const {
    std::lock_guard lock(mutex_);
    return db_;
}

bool QueryService::ready() const { return database() != nullptr; }

HttpReply QueryService::query(std::string_view body) const {
    const auto db = database();
    if (!db) return unavailable();
    const auto start = std::chrono::steady_clock::now();
    try {
        const QueryRequest request = parse_query_request(body);
        const RankedResult result = execute(*db, request);
        const double elapsed =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return {200, response_json(*db, request, result, elapsed)};
    } catch (const RequestError& e) {
        return bad_request(e);
    }
}

HttpReply QueryService::metadata() const {
    const auto db = database();
    if (!db) return unavailable();
    ordered_json j;
    j["schema"] = json::parse(db->schema().to_json());
    j["classes"] = db->classes();
    j["m"] = db->size();
    j["dim"] = db->dim();
    j["total_bits"] = db->schema().total_bits();
    j["default_weights"] = {0.5, 0.5};
    j["default_k"] = 5;
    return {200, j.dump()};
}

HttpReply QueryService::item(std::string_view id_text) const {
    const auto db = database();
    if (!db) return unavailable();
    ItemId id = 0;
    auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc{} || ptr != id_text.data() + id_text.size()) {
        return {400, error_body("invalid-argument", "id", "item id must be a non-negative integer")};
    }
    const std::size_t row = db->index().find(id);
    if (row == db->size()) return {404, error_body("not-found", "id", "no item with id " + std::to_string(id))};
    ordered_json j;
    j["id"] = id;
    j["label"] = db->labels()[row];
    j["clinical_summary"] = summarize(db->clinical()[row], db->schema());
    j["clinical_bits"] = db->clinical()[row].to_hex();
    j["embedding_norm"] = std::sqrt(db->index().squared_norms()[row]);
    const auto v = db->index().vector(row);
    j["embedding"] = std::vector<float>(v.begin(), v.end());
    return {200, j.dump()};
}

HttpReply QueryService::health() const {
    const auto db = database();
    ordered_json j;
    j["status"] = db ? "ready" : "loading";
    if (db) j["m"] = db->size();
    return {db ? 200 : 503, j.dump()};
}

void QueryService::mount(httplib::Server& server) const {
    auto send = [](httplib::Response& res, const HttpReply& reply) {
        res.status = reply.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(reply.body, "application/json");
    };
    server.Post("/query", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, query(req.body));
    });
    server.Get("/metadata", [this, send](const httplib::Request&, httplib::Response& res) { send(res, metadata()); });
    server.Get(R"(/items/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, item(req.matches[1].str()));
    });
    server.Get("/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

}  // namespace cbidr
