#pragma once

#include "cbidr/retrieval.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace httplib {
class Server;
}

namespace cbidr {

/// Parsed body of POST /query.
struct QueryRequest {
    Embedding embedding;
    std::optional<ClinicalRecord> clinical;
    FusionWeights weights{0.5, 0.5};
    std::size_t k = 5;
    RetrievalMode mode = RetrievalMode::cbidr;
    /// Id of the stored item the query was taken from; excluded from results.
    std::optional<ItemId> query_id;
};

struct HttpReply {
    int status = 200;
    std::string body;
};

/// Validation failure with the JSON path of the offending request field.
class RequestError : public std::runtime_error {
public:
    RequestError(std::string code, std::string field, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)), field_(std::move(field)) {}
    const std::string& code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::string code_;
    std::string field_;
};

/// Throws RequestError for malformed or inadmissible requests.
QueryRequest parse_query_request(std::string_view body);

/// Runs a validated request against `db`; throws RequestError on validation
/// failures discovered against the database (dimension, k, schema).
RankedResult execute(const DescriptorDatabase& db, const QueryRequest& request);

/// QueryResponse document: entries, mode, weights, timing (milliseconds).
std::string response_json(const DescriptorDatabase& db, const QueryRequest& request, const RankedResult& result,
                          double elapsed_ms);

/// Request handlers over one immutable database. Until a database is
/// installed every data endpoint answers 503.
class QueryService {
public:
    void set_database(std::shared_ptr<const DescriptorDatabase> db);
    bool ready() const;

    HttpReply query(std::string_view body) const;
    HttpReply metadata() const;
    HttpReply item(std::string_view id) const;
    HttpReply health() const;

    /// Registers POST /query, GET /metadata, GET /items/{id}, GET /health.
    void mount(httplib::Server& server) const;

private:
    std::shared_ptr<const DescriptorDatabase> database() const;

    mutable std::mutex mutex_;
    std::shared_ptr<const DescriptorDatabase> db_;
};

std::string error_body(std::string_view code, std::string_view field, std::string_view message);

}  // namespace cbidr
