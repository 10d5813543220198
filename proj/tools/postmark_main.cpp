// postmark: build secret tables, watermark text, detect the watermark, and
// evaluate robustness, from the command line or as a JSON-over-HTTP service.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "postmark/calibration.hpp"
#include "postmark/config.hpp"
#include "postmark/detection.hpp"
#include "postmark/errors.hpp"
#include "postmark/evaluation.hpp"
#include "postmark/http_backend.hpp"
#include "postmark/insertion.hpp"
#include "postmark/jsonio.hpp"
#include "postmark/match_embedder.hpp"
#include "postmark/sectable.hpp"
#include "postmark/selection.hpp"
#include "postmark/service.hpp"
#include "postmark/vocabulary.hpp"
#include "postmark/wordcache.hpp"

namespace {

using namespace postmark;

// Bridges CLI11 flags into the layered config; flags only take effect when
// actually passed, preserving flags > env > file precedence.
class FlagBinder {
public:
    explicit FlagBinder(ConfigLayers& layers) : layers_(layers) {}

    void bind(CLI::App* cmd, const std::string& flag, const std::string& key,
              const std::string& help) {
        holders_.push_back(std::make_unique<Holder>());
        Holder* h = holders_.back().get();
        h->key = key;
        h->option = cmd->add_option(flag, h->value, help);
    }

    void apply() {
        for (const auto& h : holders_) {
            if (h->option->count() > 0) layers_.set_from_cli(h->key, h->value);
        }
    }

private:
    struct Holder {
        std::string key;
        std::string value;
        CLI::Option* option = nullptr;
    };
    ConfigLayers& layers_;
    std::vector<std::unique_ptr<Holder>> holders_;
};

void add_stack_flags(CLI::App* cmd, FlagBinder& binder) {
    binder.bind(cmd, "--embedder", "embedder.transport", "Embedding backend: mock or remote");
    binder.bind(cmd, "--embedder-seed", "embedder.seed", "Mock embedder seed");
    binder.bind(cmd, "--embedder-dim", "embedder.dimension", "Mock embedder dimension");
    binder.bind(cmd, "--embedder-endpoint", "embedder.endpoint", "Remote embeddings base URL");
    binder.bind(cmd, "--embedder-model", "embedder.model", "Remote embedding model id");
    binder.bind(cmd, "--embedder-auth-env", "embedder.auth_env",
                "Env var holding the embeddings bearer token");
    binder.bind(cmd, "--inserter", "inserter.transport", "Instruction backend: mock or remote");
    binder.bind(cmd, "--inserter-model", "inserter.model",
                "Remote model id, or mock behavior (echo, inserter-oracle)");
    binder.bind(cmd, "--inserter-endpoint", "inserter.endpoint", "Remote chat base URL");
    binder.bind(cmd, "--inserter-auth-env", "inserter.auth_env",
                "Env var holding the chat bearer token");
    binder.bind(cmd, "--attacker", "attacker.transport", "Paraphraser backend: mock or remote");
    binder.bind(cmd, "--attacker-model", "attacker.model",
                "Remote model id, or mock behavior (paraphrase-identity)");
    binder.bind(cmd, "--attacker-endpoint", "attacker.endpoint", "Paraphraser base URL");
    binder.bind(cmd, "--attacker-auth-env", "attacker.auth_env",
                "Env var holding the paraphraser bearer token");
    binder.bind(cmd, "--timeout", "http.timeout", "HTTP timeout in seconds");
    binder.bind(cmd, "--max-retries", "http.max_retries", "Extra attempts after a failed call");
    binder.bind(cmd, "--retry-backoff", "http.retry_backoff", "Seconds between retries");
    binder.bind(cmd, "--ratio", "policy.ratio", "Insertion ratio r (default 0.12)");
    binder.bind(cmd, "--k-multiplier", "policy.k_multiplier",
                "Candidate oversampling k'/k (default 2.0)");
    binder.bind(cmd, "--sublist-size", "policy.sublist", "Words per insertion prompt");
    binder.bind(cmd, "--tau", "policy.tau", "Word-match cosine threshold (default 0.7)");
    binder.bind(cmd, "--max-repair-passes", "policy.max_repair_passes",
                "Repair prompts for missing words");
    binder.bind(cmd, "--parallelism", "parallelism", "Concurrent documents");
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot write output file: " + path);
    return out;
}

int cmd_build_table(const std::string& frequency_file, const std::string& lexicon_file,
                    std::uint64_t floor, const std::string& snippet_file, std::uint64_t seed,
                    const std::string& out_path, const RunConfig& cfg) {
    const auto vocabulary = build_vocabulary(frequency_file, lexicon_file, floor);
    const auto snippets = load_snippets(snippet_file);
    const auto backend = make_embedding_backend(cfg.embedder);
    const SecretTable table = build_sectable(vocabulary, snippets, seed, *backend);
    save_sectable(table, out_path);
    std::cout << "built table " << table.table_id << ": " << table.size() << " words, dimension "
              << table.dimension << ", embedder " << table.embedder_fingerprint << "\n";
    return kExitOk;
}

int cmd_watermark(const std::string& table_path, const std::string& input_path,
                  const std::string& output_path, const std::string& cache_path,
                  const RunConfig& cfg) {
    const SecretTable table = load_sectable(table_path);
    const auto embedder = make_embedding_backend(cfg.embedder);
    const auto inserter = make_instruction_backend(cfg.inserter);
    const auto docs = load_dataset_jsonl(input_path);

    WordEmbeddingCache cache;
    const bool have_cache_file =
        !cache_path.empty() && std::filesystem::exists(cache_path);
    if (have_cache_file) cache = WordEmbeddingCache(cache_path);

    auto out = open_output(output_path);
    std::size_t incomplete = 0;
    for (const auto& doc : docs) {
        const WatermarkWordList list =
            select_watermark_words(doc.text, table, cfg.policy, *embedder, &cache);
        const InsertionOutcome outcome =
            insert_words(doc.text, list, *inserter, cfg.policy, cfg.max_repair_passes);
        nlohmann::json record = to_json(outcome);
        record["id"] = doc.id;
        if (!outcome.missing_words.empty()) {
            ++incomplete;
            record["warning"] = "missing words after repair passes";
        }
        out << record.dump() << "\n";
    }
    if (!cache_path.empty()) cache.save(cache_path);
    std::cout << "watermarked " << docs.size() << " documents";
    if (incomplete > 0) std::cout << " (" << incomplete << " with missing words)";
    std::cout << " -> " << output_path << "\n";
    return kExitOk;
}

int cmd_detect(const std::string& table_path, const std::string& input_path,
               const std::string& output_path, const std::string& match_vectors_path,
               const std::string& threshold_arg, const std::string& null_corpus_path,
               bool expose_matches, const std::string& cache_path, const RunConfig& cfg) {
    const SecretTable table = load_sectable(table_path);
    const auto embedder = make_embedding_backend(cfg.embedder);
    const MatchEmbedder me = MatchEmbedder::load(match_vectors_path);
    const auto docs = load_dataset_jsonl(input_path);

    WordEmbeddingCache cache;
    if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
        cache = WordEmbeddingCache(cache_path);
    }

    double threshold = 0.0;
    if (threshold_arg == "calibrate") {
        if (null_corpus_path.empty()) {
            throw InputError("--threshold calibrate requires --null-corpus");
        }
        const auto null_docs = load_dataset_jsonl(null_corpus_path);
        std::vector<double> null_scores;
        null_scores.reserve(null_docs.size());
        for (const auto& doc : null_docs) {
            null_scores.push_back(
                presence_score(doc.text, table, cfg.policy, *embedder, me, cfg.tau, &cache)
                    .presence_score);
        }
        threshold = calibrate_threshold(null_scores, 0.01);
        std::cout << "calibrated threshold " << threshold << " on " << null_scores.size()
                  << " null documents\n";
    } else {
        try {
            threshold = std::stod(threshold_arg);
        } catch (const std::exception&) {
            throw InputError("--threshold must be a number or 'calibrate'");
        }
        if (threshold < 0.0) throw InputError("threshold must be >= 0");
    }

    auto out = open_output(output_path);
    std::size_t flagged = 0;
    for (const auto& doc : docs) {
        const DetectionResult result =
            detect(doc.text, table, threshold, cfg.policy, *embedder, me, cfg.tau, &cache);
        if (result.verdict) ++flagged;
        nlohmann::json record = to_json(result, expose_matches);
        record["id"] = doc.id;
        out << record.dump() << "\n";
    }
    if (!cache_path.empty()) cache.save(cache_path);
    std::cout << "flagged " << flagged << " of " << docs.size() << " documents (threshold "
              << threshold << ")\n";
    return kExitOk;
}

int cmd_eval(const std::string& table_path, const std::string& dataset_path,
             const std::string& match_vectors_path, const std::string& attack_arg,
             double target_fpr, const std::string& report_path, const RunConfig& cfg) {
    const SecretTable table = load_sectable(table_path);
    const auto embedder = make_embedding_backend(cfg.embedder);
    const auto inserter = make_instruction_backend(cfg.inserter);
    const MatchEmbedder me = MatchEmbedder::load(match_vectors_path);
    const auto docs = load_dataset_jsonl(dataset_path);

    EvalOptions options;
    options.target_fpr = target_fpr;
    options.tau = cfg.tau;
    options.max_repair_passes = cfg.max_repair_passes;
    options.parallelism = cfg.parallelism;
    if (attack_arg == "none") {
        options.attack = AttackKind::none;
    } else if (attack_arg == "paraphrase") {
        options.attack = AttackKind::paraphrase;
    } else {
        throw InputError("--attack must be 'none' or 'paraphrase'");
    }

    std::unique_ptr<InstructionBackend> attacker;
    if (options.attack == AttackKind::paraphrase) {
        attacker = make_instruction_backend(cfg.attacker);
    }

    WordEmbeddingCache cache;
    const EvalReport report = run_eval(docs, table, cfg.policy, *embedder, *inserter, me,
                                       options, attacker.get(), &cache);
    if (!report_path.empty()) {
        auto out = open_output(report_path);
        out << to_json(report).dump(2) << "\n";
    }
    std::cout << render_report_text(report);
    return kExitOk;
}

int cmd_matchcheck(const std::string& match_vectors_path, const std::string& triples_path) {
    const MatchEmbedder me = MatchEmbedder::load(match_vectors_path);
    const PairsEvaluation eval = evaluate_match_embedder(triples_path, me);
    std::printf("positive pairs: %.1f  negative pairs: %.1f  (x100 scale, %zu triples, %zu skipped)\n",
                eval.positive_mean_x100, eval.negative_mean_x100, eval.used, eval.skipped);
    return kExitOk;
}

int cmd_serve(const std::string& table_path, const std::string& match_vectors_path,
              const std::string& host, int port, double threshold, bool expose_matches,
              const RunConfig& cfg) {
    ServiceContext ctx;
    ctx.table = std::make_shared<const SecretTable>(load_sectable(table_path));
    ctx.embedder = std::shared_ptr<const EmbeddingBackend>(make_embedding_backend(cfg.embedder));
    ctx.inserter =
        std::shared_ptr<const InstructionBackend>(make_instruction_backend(cfg.inserter));
    ctx.match_embedder = std::make_shared<const MatchEmbedder>(
        MatchEmbedder::load(match_vectors_path));
    ctx.cache = std::make_shared<WordEmbeddingCache>();
    ctx.policy = cfg.policy;
    ctx.tau = cfg.tau;
    ctx.threshold = threshold;
    ctx.max_repair_passes = cfg.max_repair_passes;
    ctx.expose_matches = expose_matches;

    WatermarkService service;
    service.configure(std::move(ctx));
    std::cout << "serving on " << host << ":" << port << "\n";
    if (!service.listen(host, port)) {
        throw InputError("cannot listen on " + host + ":" + std::to_string(port));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PostMark text watermarking toolkit"};
    app.require_subcommand(1);

    ConfigLayers layers;
    FlagBinder binder(layers);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (lowest precedence)");

    // build-table
    auto* build = app.add_subcommand("build-table", "Build a secret word-embedding table");
    std::string frequency_file, lexicon_file, snippet_file, table_out;
    std::uint64_t floor = 1000, seed = 0;
    build->add_option("--frequency-file", frequency_file, "word<TAB>count corpus frequencies")
        ->required();
    build->add_option("--lexicon-file", lexicon_file, "word<TAB>pos lexicon")->required();
    build->add_option("--floor", floor, "Minimum corpus frequency (default 1000)");
    build->add_option("--snippets", snippet_file, "One snippet document per line")->required();
    build->add_option("--seed", seed, "Secret table seed")->required();
    build->add_option("--out", table_out, "Output table path")->required();
    add_stack_flags(build, binder);

    // watermark
    auto* wm = app.add_subcommand("watermark", "Watermark documents from a JSONL file");
    std::string wm_table, wm_in, wm_out, wm_cache;
    wm->add_option("--table", wm_table, "Secret table file")->required();
    wm->add_option("--input", wm_in, "Input JSONL ({id, text} per line)")->required();
    wm->add_option("--output", wm_out, "Output JSONL of insertion outcomes")->required();
    wm->add_option("--cache", wm_cache, "Word-embedding cache file (read/write)");
    add_stack_flags(wm, binder);

    // detect
    auto* det = app.add_subcommand("detect", "Score documents against a table");
    std::string det_table, det_in, det_out, det_vectors, det_threshold = "0.5", det_null,
                det_cache;
    bool det_expose = false;
    det->add_option("--table", det_table, "Secret table file")->required();
    det->add_option("--input", det_in, "Input JSONL")->required();
    det->add_option("--output", det_out, "Output JSONL of detection results")->required();
    det->add_option("--match-vectors", det_vectors, "Word-vector file for matching")->required();
    det->add_option("--threshold", det_threshold, "Decision threshold or 'calibrate'");
    det->add_option("--null-corpus", det_null, "Unwatermarked JSONL for calibration");
    det->add_flag("--expose-matches", det_expose,
                  "Include matched words in output (leaks table contents)");
    det->add_option("--cache", det_cache, "Word-embedding cache file (read/write)");
    add_stack_flags(det, binder);

    // eval
    auto* ev = app.add_subcommand("eval", "Watermark, attack, and score a dataset");
    std::string ev_table, ev_dataset, ev_vectors, ev_attack = "none", ev_report;
    double ev_fpr = 0.01;
    ev->add_option("--table", ev_table, "Secret table file")->required();
    ev->add_option("--dataset", ev_dataset, "Unwatermarked JSONL dataset")->required();
    ev->add_option("--match-vectors", ev_vectors, "Word-vector file for matching")->required();
    ev->add_option("--attack", ev_attack, "none or paraphrase");
    ev->add_option("--target-fpr", ev_fpr, "Calibration FPR (default 0.01)");
    ev->add_option("--report", ev_report, "Write the JSON report here");
    add_stack_flags(ev, binder);

    // matchcheck
    auto* mc = app.add_subcommand("matchcheck",
                                  "Score a match-vector file on (word, synonym, irrelevant) triples");
    std::string mc_vectors, mc_triples;
    mc->add_option("--match-vectors", mc_vectors, "Word-vector file")->required();
    mc->add_option("--triples", mc_triples, "TSV triples file")->required();

    // serve
    auto* srv = app.add_subcommand("serve", "Run the watermark/detect HTTP service");
    std::string srv_table, srv_vectors, srv_host = "127.0.0.1";
    int srv_port = 8184;
    double srv_threshold = 0.5;
    bool srv_expose = false;
    srv->add_option("--table", srv_table, "Secret table file")->required();
    srv->add_option("--match-vectors", srv_vectors, "Word-vector file for matching")->required();
    srv->add_option("--host", srv_host, "Bind host (default 127.0.0.1)");
    srv->add_option("--port", srv_port, "Bind port (default 8184)");
    srv->add_option("--threshold", srv_threshold, "Detection threshold (default 0.5)");
    srv->add_flag("--expose-matches", srv_expose, "Include matched words in /detect responses");
    add_stack_flags(srv, binder);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return postmark::kExitInput;
    }

    try {
        if (!config_path.empty()) layers.load_config_file(config_path);
        binder.apply();
        const RunConfig cfg = resolve_run_config(layers);

        if (build->parsed()) {
            return cmd_build_table(frequency_file, lexicon_file, floor, snippet_file, seed,
                                   table_out, cfg);
        }
        if (wm->parsed()) return cmd_watermark(wm_table, wm_in, wm_out, wm_cache, cfg);
        if (det->parsed()) {
            return cmd_detect(det_table, det_in, det_out, det_vectors, det_threshold, det_null,
                              det_expose, det_cache, cfg);
        }
        if (ev->parsed()) {
            return cmd_eval(ev_table, ev_dataset, ev_vectors, ev_attack, ev_fpr, ev_report, cfg);
        }
        if (mc->parsed()) return cmd_matchcheck(mc_vectors, mc_triples);
        if (srv->parsed()) {
            return cmd_serve(srv_table, srv_vectors, srv_host, srv_port, srv_threshold,
                             srv_expose, cfg);
        }
        return postmark::kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return postmark::exit_code_for(e);
    }
}
