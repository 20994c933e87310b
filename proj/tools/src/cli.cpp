#include "cbidr/cli.hpp"

#include "cbidr/error.hpp"
#include "cbidr/eval.hpp"
#include "cbidr/ingest.hpp"
#include "cbidr/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>
#include <thread>

namespace cbidr {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_on(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.push_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_real(const std::string& text, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::invalid_argument, std::string(what) + ": '" + text + "' is not a number");
    }
    return v;
}

/// "5/6" or a decimal.
double parse_fraction(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return parse_real(text, "--fraction");
    const double num = parse_real(trim(text.substr(0, slash)), "--fraction");
    const double den = parse_real(trim(text.substr(slash + 1)), "--fraction");
    if (den == 0.0) throw Error(ErrorCode::invalid_argument, "--fraction: zero denominator");
    return num / den;
}

FusionWeights parse_weights(const std::string& text) {
    const auto parts = split_on(text, ',');
    if (parts.size() != 2) throw Error(ErrorCode::invalid_argument, "weights must be given as 'w_image,w_clinical'");
    FusionWeights w{parse_real(parts[0], "weights"), parse_real(parts[1], "weights")};
    if (w.image < 0.0 || w.clinical < 0.0 || std::abs(w.image + w.clinical - 1.0) > 1e-9) {
        throw Error(ErrorCode::weight_sum, "weights '" + text + "' must be non-negative and sum to 1");
    }
    return w;
}

std::vector<std::size_t> parse_k_list(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& part : split_on(text, ',')) {
        const double k = parse_real(part, "--k");
        if (k < 1 || k != std::floor(k)) throw Error(ErrorCode::k_out_of_range, "k must be a positive integer");
        out.push_back(static_cast<std::size_t>(k));
    }
    return out;
}

Embedding parse_embedding(const std::string& text) {
    Embedding out;
    for (const auto& part : split_on(text, ',')) {
        if (part.empty()) continue;
        out.push_back(static_cast<float>(parse_real(part, "embedding")));
    }
    if (out.empty()) throw Error(ErrorCode::invalid_argument, "embedding is empty");
    return out;
}

ClinicalRecord parse_clinical_pairs(const std::string& text) {
    ClinicalRecord record;
    for (const auto& part : split_on(text, ',')) {
        if (part.empty()) continue;
        const auto eq = part.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::invalid_argument, "clinical entry '" + part + "' is not field=value");
        }
        record[trim(part.substr(0, eq))] = trim(part.substr(eq + 1));
    }
    return record;
}

struct EvalArgs {
    std::string bundle;
    std::string fraction = "5/6";
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string k_list = "1,5";
    std::string format = "text";
};

void add_eval_options(CLI::App* cmd, EvalArgs& args) {
    cmd->add_option("--bundle", args.bundle, "Dataset bundle directory")->required();
    cmd->add_option("--fraction", args.fraction, "Database share of each class (e.g. 5/6 or 0.8)")
        ->capture_default_str();
    cmd->add_option("--seed", args.seed, "Split seed")->capture_default_str();
    cmd->add_option("--threads", args.threads, "Worker threads for per-query evaluation (0 = all cores)")
        ->capture_default_str();
    cmd->add_option("--k", args.k_list, "Comma-separated Top-k cutoffs")->capture_default_str();
    cmd->add_option("--format", args.format, "Report format")
        ->check(CLI::IsMember({"text", "csv", "json"}))
        ->capture_default_str();
}

Experiment load_experiment(const EvalArgs& args) {
    const DatasetBundle bundle = load_bundle(args.bundle);
    return make_experiment(bundle.embeddings, bundle.clinical, bundle.schema, parse_fraction(args.fraction), args.seed);
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multimodal retrieval engine: image embeddings + clinical bits fused with TOPSIS", "cbidr"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand all help");

    // gen-synth
    SyntheticParams synth;
    std::string synth_out;
    std::string synth_format = "text";
    auto* gen = app.add_subcommand("gen-synth", "Write a synthetic clustered dataset bundle");
    gen->add_option("--out", synth_out, "Output bundle directory")->required();
    gen->add_option("--classes", synth.classes, "Number of classes")->capture_default_str();
    gen->add_option("--per-class", synth.per_class, "Items per class")->capture_default_str();
    gen->add_option("--dim", synth.dim, "Embedding dimension")->capture_default_str();
    gen->add_option("--cluster-sep", synth.cluster_sep, "Norm of each class center")->capture_default_str();
    gen->add_option("--noise,--clinical-noise", synth.clinical_noise, "Clinical bit flip probability")
        ->capture_default_str();
    gen->add_option("--bits-per-class", synth.bits_per_class, "Clinical signature bits per class")
        ->capture_default_str();
    gen->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
    gen->add_option("--format", synth_format, "Embedding file format")
        ->check(CLI::IsMember({"text", "binary"}))
        ->capture_default_str();

    // build-index
    std::string build_bundle;
    std::string build_db;
    std::string build_holdout;
    std::uint64_t build_seed = 0;
    auto* build = app.add_subcommand("build-index", "Build a database file from a dataset bundle");
    build->add_option("--bundle", build_bundle, "Dataset bundle directory")->required();
    build->add_option("--db", build_db, "Output database file")->required();
    build->add_option("--holdout-fraction", build_holdout,
                      "Keep only the database partition of a stratified split with this database share (e.g. 5/6)");
    build->add_option("--seed", build_seed, "Split seed used with --holdout-fraction")->capture_default_str();

    // query
    std::string query_db;
    std::string query_embedding;
    std::string query_embedding_file;
    std::string query_clinical;
    std::string query_mode = "cbidr";
    std::string query_weights = "0.5,0.5";
    std::size_t query_k = 5;
    std::optional<ItemId> query_exclude;
    std::string query_format = "text";
    auto* query = app.add_subcommand("query", "Rank database items against one query");
    query->add_option("--db", query_db, "Database file")->envname("CBIDR_DB")->required();
    auto* emb_opt = query->add_option("--embedding", query_embedding, "Comma-separated query embedding");
    auto* emb_file_opt =
        query->add_option("--embedding-file", query_embedding_file, "File holding the comma-separated embedding");
    emb_opt->excludes(emb_file_opt);
    query->add_option("--clinical", query_clinical, "Clinical values as field=value,field=value");
    query->add_option("--mode", query_mode, "Retrieval mode")
        ->check(CLI::IsMember({"cbir", "cbidr"}))
        ->capture_default_str();
    query->add_option("--weights", query_weights, "TOPSIS weights w_image,w_clinical")->capture_default_str();
    query->add_option("--k", query_k, "Number of results")->capture_default_str();
    query->add_option("--exclude-id", query_exclude, "Leave this stored item out of the ranking");
    query->add_option("--format", query_format, "Output format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();

    // evaluate
    EvalArgs eval_args;
    std::string eval_mode = "cbir";
    std::string eval_weights = "0.5,0.5";
    std::string eval_confusion;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Top-k accuracy and confusion matrix on a held-out split");
    add_eval_options(evaluate_cmd, eval_args);
    evaluate_cmd->add_option("--mode", eval_mode, "Retrieval mode")
        ->check(CLI::IsMember({"cbir", "cbidr"}))
        ->capture_default_str();
    evaluate_cmd->add_option("--weights", eval_weights, "TOPSIS weights w_image,w_clinical (cbidr)")
        ->capture_default_str();
    evaluate_cmd->add_option("--confusion-out", eval_confusion, "Also write the confusion matrix as CSV");

    // sweep-weights
    EvalArgs sweep_args;
    std::string sweep_list;
    auto* sweep = app.add_subcommand("sweep-weights", "Top-k accuracy of cbidr over a list of weight pairs");
    add_eval_options(sweep, sweep_args);
    sweep->add_option("--weights", sweep_list,
                      "Semicolon-separated weight pairs (default 0.5,0.5;0.6,0.4;0.7,0.3;0.8,0.2;0.9,0.1)");

    // serve
    std::string serve_db;
    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    auto* serve = app.add_subcommand("serve", "Serve queries over HTTP");
    serve->add_option("--db", serve_db, "Database file")->envname("CBIDR_DB")->required();
    serve->add_option("--host", serve_host, "Listen address")->capture_default_str();
    serve->add_option("--port", serve_port, "Listen port")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen) {
            DatasetBundle bundle = gen_synthetic(synth);
            save_bundle(synth_out, bundle, parse_embedding_format(synth_format));
            out << "wrote " << bundle.embeddings.size() << " items (" << synth.classes << " classes, dim "
                << synth.dim << ", " << bundle.schema.total_bits() << " clinical bits) to " << synth_out << "\n";
        } else if (*build) {
            const DatasetBundle bundle = load_bundle(build_bundle);
            if (build_holdout.empty()) {
                save_database(to_database(bundle), build_db);
                out << "wrote database of " << bundle.embeddings.size() << " items to " << build_db << "\n";
            } else {
                const Experiment exp = make_experiment(bundle.embeddings, bundle.clinical, bundle.schema,
                                                       parse_fraction(build_holdout), build_seed);
                save_database(exp.database, build_db);
                out << "wrote database of " << exp.database.size() << " items to " << build_db << " ("
                    << exp.queries.size() << " held out)\n";
            }
        } else if (*query) {
            const DescriptorDatabase db = load_database(query_db);
            QueryRequest req;
            if (!query_embedding_file.empty()) {
                req.embedding = parse_embedding(read_file(query_embedding_file));
            } else if (!query_embedding.empty()) {
                req.embedding = parse_embedding(query_embedding);
            } else {
                throw Error(ErrorCode::missing_field, "one of --embedding or --embedding-file is required");
            }
            if (!query_clinical.empty()) req.clinical = parse_clinical_pairs(query_clinical);
            req.mode = parse_mode(query_mode);
            req.weights = parse_weights(query_weights);
            req.k = query_k;
            req.query_id = query_exclude;
            if (req.mode == RetrievalMode::cbidr && !req.clinical) {
                throw Error(ErrorCode::missing_field, "mode cbidr requires --clinical");
            }
            const auto start = std::chrono::steady_clock::now();
            RankedResult result;
            try {
                result = execute(db, req);
            } catch (const RequestError& e) {
                err << "error [" << e.code() << "]: " << e.field() << ": " << e.what() << "\n";
                return 1;
            }
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            if (query_format == "json") {
                out << response_json(db, req, result, ms) << "\n";
            } else {
                out << "mode: " << mode_name(result.mode);
                if (result.mode == RetrievalMode::cbidr) {
                    out << "  weights: [" << req.weights.image << ", " << req.weights.clinical << "]";
                }
                out << "\nrank  id  label  " << (result.mode == RetrievalMode::cbir ? "distance" : "closeness")
                    << "  d_image  d_clinical\n";
                std::size_t rank = 0;
                for (const auto& e : result.entries) {
                    out << ++rank << "  " << e.id << "  " << e.label << "  " << e.score << "  " << e.d_image << "  "
                        << (e.d_clinical ? std::to_string(*e.d_clinical) : std::string("-")) << "\n";
                }
            }
        } else if (*evaluate_cmd) {
            const Experiment exp = load_experiment(eval_args);
            EvalOptions options{parse_mode(eval_mode), parse_weights(eval_weights), parse_k_list(eval_args.k_list),
                                eval_args.threads};
            const EvalReport report = evaluate(exp.database, exp.queries, options);
            if (eval_args.format == "json") {
                out << report_json(report);
            } else if (eval_args.format == "csv") {
                out << report_csv(report);
            } else {
                out << report_text(report);
            }
            if (!eval_confusion.empty()) write_file(eval_confusion, confusion_csv(report.confusion));
        } else if (*sweep) {
            const Experiment exp = load_experiment(sweep_args);
            std::vector<FusionWeights> weights;
            if (sweep_list.empty()) {
                weights = default_sweep_weights();
            } else {
                for (const auto& pair : split_on(sweep_list, ';')) {
                    if (!pair.empty()) weights.push_back(parse_weights(pair));
                }
            }
            const SweepTable table =
                weight_sweep(exp.database, exp.queries, weights, parse_k_list(sweep_args.k_list), sweep_args.threads);
            if (sweep_args.format == "json") {
                out << sweep_json(table);
            } else if (sweep_args.format == "csv") {
                out << sweep_csv(table);
            } else {
                out << sweep_text(table);
            }
        } else if (*serve) {
            QueryService service;
            httplib::Server server;
            service.mount(server);
            if (!server.bind_to_port(serve_host, serve_port)) {
                throw Error(ErrorCode::io_error, "cannot listen on " + serve_host + ":" + std::to_string(serve_port));
            }
            std::thread loader([&] {
                try {
                    service.set_database(std::make_shared<const DescriptorDatabase>(load_database(serve_db)));
                    err << "loaded " << serve_db << "\n";
                } catch (const std::exception& e) {
                    err << "error: " << e.what() << "\n";
                    server.stop();
                }
            });
            out << "listening on http://" << serve_host << ":" << serve_port << "\n" << std::flush;
            server.listen_after_bind();
            loader.join();
            if (!service.ready()) return 1;
        }
    } catch (const Error& e) {
        err << "error [" << code_name(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace cbidr
