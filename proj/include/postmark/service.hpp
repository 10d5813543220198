#pragma once

#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "postmark/backends.hpp"
#include "postmark/detection.hpp"
#include "postmark/errors.hpp"
#include "postmark/insertion.hpp"
#include "postmark/jsonio.hpp"
#include "postmark/match_embedder.hpp"
#include "postmark/sectable.hpp"
#include "postmark/selection.hpp"
#include "postmark/wordcache.hpp"

namespace postmark {

// Everything a request needs, loaded once and treated as read-only. The
// secret table never leaves the process; /detect omits matched words unless
// expose_matches is set, since they leak table contents.
struct ServiceContext {
    std::shared_ptr<const SecretTable> table;
    std::shared_ptr<const EmbeddingBackend> embedder;
    std::shared_ptr<const InstructionBackend> inserter;
    std::shared_ptr<const MatchEmbedder> match_embedder;
    std::shared_ptr<WordEmbeddingCache> cache;  // optional
    InsertionPolicy policy;
    double tau = kDefaultMatchTau;
    double threshold = 0.5;
    int max_repair_passes = kDefaultMaxRepairPasses;
    bool expose_matches = false;
};

// JSON-over-HTTP service: POST /watermark, POST /detect, GET /health.
class WatermarkService {
public:
    WatermarkService() { setup_routes(); }

    // Swaps in a fully built context; requests before this see 503.
    void configure(ServiceContext context) {
        auto ctx = std::make_shared<const ServiceContext>(std::move(context));
        std::lock_guard lock(mutex_);
        ctx_ = std::move(ctx);
    }

    httplib::Server& server() { return server_; }

    bool listen(const std::string& host, int port) { return server_.listen(host, port); }

private:
    std::shared_ptr<const ServiceContext> context() const {
        std::lock_guard lock(mutex_);
        return ctx_;
    }

    static void reply_error(httplib::Response& res, int status, const std::string& message) {
        res.status = status;
        res.set_content(nlohmann::json{{"error", message}}.dump(), "application/json");
    }

    // Pulls a non-empty "text" field out of the request or replies 400/422.
    static bool parse_text_request(const httplib::Request& req, httplib::Response& res,
                                   std::string& text) {
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
            reply_error(res, 400, std::string("malformed JSON: ") + e.what());
            return false;
        }
        if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
            reply_error(res, 400, "request must be a JSON object with a string 'text'");
            return false;
        }
        text = body["text"].get<std::string>();
        if (trim(text).empty()) {
            reply_error(res, 422, "empty text");
            return false;
        }
        return true;
    }

    void setup_routes() {
        server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
            const auto ctx = context();
            if (!ctx) {
                reply_error(res, 503, "table not loaded");
                return;
            }
            nlohmann::json j = {{"status", "ready"},
                                {"table_id", ctx->table->table_id},
                                {"embedder_fingerprint", ctx->table->embedder_fingerprint}};
            res.set_content(j.dump(), "application/json");
        });

        server_.Post("/watermark", [this](const httplib::Request& req, httplib::Response& res) {
            const auto ctx = context();
            if (!ctx) {
                reply_error(res, 503, "table not loaded");
                return;
            }
            std::string text;
            if (!parse_text_request(req, res, text)) return;
            try {
                const WatermarkWordList list = select_watermark_words(
                    text, *ctx->table, ctx->policy, *ctx->embedder, ctx->cache.get());
                const InsertionOutcome outcome = insert_words(
                    text, list, *ctx->inserter, ctx->policy, ctx->max_repair_passes);
                nlohmann::json j = {{"watermarked_text", outcome.watermarked_text},
                                    {"missing_words", outcome.missing_words}};
                res.set_content(j.dump(), "application/json");
            } catch (const BackendError& e) {
                reply_error(res, 502, e.what());
            } catch (const std::exception& e) {
                reply_error(res, 500, e.what());
            }
        });

        server_.Post("/detect", [this](const httplib::Request& req, httplib::Response& res) {
            const auto ctx = context();
            if (!ctx) {
                reply_error(res, 503, "table not loaded");
                return;
            }
            std::string text;
            if (!parse_text_request(req, res, text)) return;
            try {
                const DetectionResult result =
                    detect(text, *ctx->table, ctx->threshold, ctx->policy, *ctx->embedder,
                           *ctx->match_embedder, ctx->tau, ctx->cache.get());
                res.set_content(to_json(result, ctx->expose_matches).dump(),
                                "application/json");
            } catch (const BackendError& e) {
                reply_error(res, 502, e.what());
            } catch (const std::exception& e) {
                reply_error(res, 500, e.what());
            }
        });
    }

    httplib::Server server_;
    mutable std::mutex mutex_;
    std::shared_ptr<const ServiceContext> ctx_;
};

}  // namespace postmark
