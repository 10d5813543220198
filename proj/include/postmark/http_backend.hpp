#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "postmark/backends.hpp"
#include "postmark/errors.hpp"

namespace postmark {

namespace detail {

// "https://api.example.com/v1" -> ("https://api.example.com", "/v1")
inline std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    const std::size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos) {
        throw InputError("endpoint must include a scheme: " + endpoint);
    }
    const std::size_t path = endpoint.find('/', scheme + 3);
    if (path == std::string::npos) return {endpoint, ""};
    std::string base = endpoint.substr(path);
    while (!base.empty() && base.back() == '/') base.pop_back();
    return {endpoint.substr(0, path), base};
}

}  // namespace detail

// Shared POST-with-retries plumbing for the OpenAI-compatible endpoints.
// Every failing call is attempted exactly max_retries + 1 times.
class HttpBackendBase {
public:
    explicit HttpBackendBase(BackendDescriptor descriptor) : descriptor_(std::move(descriptor)) {
        descriptor_.validate();
        if (descriptor_.transport != Transport::remote_http) {
            throw InputError("HTTP backend requires remote-http transport");
        }
        std::tie(origin_, base_path_) = detail::split_endpoint(descriptor_.endpoint);
        if (!descriptor_.auth_token_env.empty()) {
            const char* token = std::getenv(descriptor_.auth_token_env.c_str());
            if (token == nullptr || *token == '\0') {
                throw InputError("auth token environment variable '" +
                                 descriptor_.auth_token_env + "' is not set");
            }
            bearer_token_ = token;
        }
    }

    const BackendDescriptor& descriptor() const { return descriptor_; }

protected:
    nlohmann::json post_json(const std::string& route, const nlohmann::json& body) const {
        const std::string payload = body.dump();
        std::string last_error;
        const int attempts = descriptor_.max_retries + 1;
        for (int attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0 && descriptor_.retry_backoff_seconds > 0.0) {
                std::this_thread::sleep_for(
                    std::chrono::duration<double>(descriptor_.retry_backoff_seconds));
            }
            // A fresh client per call keeps concurrent requests independent.
            httplib::Client client(origin_);
            client.set_connection_timeout(std::chrono::duration<double>(
                descriptor_.timeout_seconds));
            client.set_read_timeout(std::chrono::duration<double>(descriptor_.timeout_seconds));
            client.set_write_timeout(std::chrono::duration<double>(descriptor_.timeout_seconds));
            httplib::Headers headers;
            if (!bearer_token_.empty()) {
                headers.emplace("Authorization", "Bearer " + bearer_token_);
            }
            auto res = client.Post(base_path_ + route, headers, payload, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                last_error = std::string("invalid JSON in response: ") + e.what();
                continue;
            }
        }
        throw BackendError("request to " + origin_ + base_path_ + route + " failed after " +
                           std::to_string(attempts) + " attempts (" + last_error + ")");
    }

private:
    BackendDescriptor descriptor_;
    std::string origin_;
    std::string base_path_;
    std::string bearer_token_;
};

// POST {endpoint}/embeddings with {"model", "input": [...]}; expects one
// vector per input under data[i].embedding. The embedding dimension is
// learned from the first response and enforced afterwards.
class HttpEmbeddingBackend : public HttpBackendBase, public EmbeddingBackend {
public:
    explicit HttpEmbeddingBackend(BackendDescriptor descriptor)
        : HttpBackendBase(std::move(descriptor)) {
        if (this->descriptor().kind != BackendKind::embedding) {
            throw InputError("descriptor kind must be 'embedding'");
        }
    }

    Embedding embed_raw(const std::string& text) const override {
        return embed_raw_batch({text}).front();
    }

    std::vector<Embedding> embed_raw_batch(const std::vector<std::string>& texts) const override {
        if (texts.empty()) return {};
        nlohmann::json body = {{"model", descriptor().model_id}, {"input", texts}};
        const nlohmann::json response = post_json("/embeddings", body);
        if (!response.contains("data") || !response["data"].is_array()) {
            throw BackendError("embeddings response has no 'data' array");
        }
        const auto& data = response["data"];
        if (data.size() != texts.size()) {
            throw BackendError("embeddings response has " + std::to_string(data.size()) +
                               " entries for " + std::to_string(texts.size()) + " inputs");
        }
        std::vector<Embedding> out(texts.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto& item = data[i];
            if (!item.contains("embedding") || !item["embedding"].is_array()) {
                throw BackendError("embeddings response entry lacks 'embedding'");
            }
            const std::size_t slot =
                item.contains("index") && item["index"].is_number_unsigned()
                    ? item["index"].get<std::size_t>()
                    : i;
            if (slot >= out.size() || !out[slot].empty()) {
                throw BackendError("embeddings response has bad 'index' values");
            }
            out[slot] = item["embedding"].get<Embedding>();
            if (out[slot].empty()) throw BackendError("embeddings response has empty vector");
        }
        remember_dimension(out);
        return out;
    }

    int dimension() const override {
        std::lock_guard lock(mutex_);
        return dimension_;
    }

    std::string model_id() const override { return descriptor().model_id; }

private:
    void remember_dimension(const std::vector<Embedding>& vectors) const {
        std::lock_guard lock(mutex_);
        for (const auto& v : vectors) {
            if (dimension_ == 0) dimension_ = static_cast<int>(v.size());
            if (static_cast<int>(v.size()) != dimension_) {
                throw BackendError("embedding dimension mismatch: expected " +
                                   std::to_string(dimension_) + ", got " +
                                   std::to_string(v.size()));
            }
        }
    }

    mutable std::mutex mutex_;
    mutable int dimension_ = 0;
};

// POST {endpoint}/chat/completions with the usual messages array; returns
// choices[0].message.content.
class HttpInstructionBackend : public HttpBackendBase, public InstructionBackend {
public:
    explicit HttpInstructionBackend(BackendDescriptor descriptor)
        : HttpBackendBase(std::move(descriptor)) {
        if (this->descriptor().kind != BackendKind::instruction) {
            throw InputError("descriptor kind must be 'instruction'");
        }
    }

    std::string complete_raw(const InstructionRequest& request) const override {
        nlohmann::json messages = nlohmann::json::array();
        if (!request.system_text.empty()) {
            messages.push_back({{"role", "system"}, {"content", request.system_text}});
        }
        messages.push_back({{"role", "user"}, {"content", request.user_text}});
        nlohmann::json body = {{"model", descriptor().model_id},
                               {"messages", std::move(messages)},
                               {"temperature", request.temperature},
                               {"max_tokens", request.max_output_tokens}};
        const nlohmann::json response = post_json("/chat/completions", body);
        try {
            return response.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw BackendError("chat response lacks choices[0].message.content");
        }
    }

    std::string model_id() const override { return descriptor().model_id; }
};

inline std::unique_ptr<EmbeddingBackend> make_embedding_backend(const BackendDescriptor& d) {
    if (d.kind != BackendKind::embedding) throw InputError("descriptor kind must be 'embedding'");
    d.validate();
    if (d.transport == Transport::mock) {
        return std::make_unique<MockEmbeddingBackend>(d.seed, d.dimension, d.model_id);
    }
    return std::make_unique<HttpEmbeddingBackend>(d);
}

inline std::unique_ptr<InstructionBackend> make_instruction_backend(const BackendDescriptor& d) {
    if (d.kind != BackendKind::instruction) {
        throw InputError("descriptor kind must be 'instruction'");
    }
    d.validate();
    if (d.transport == Transport::mock) {
        return std::make_unique<MockInstructionBackend>(
            d.model_id.empty() ? "echo" : d.model_id, d.seed);
    }
    return std::make_unique<HttpInstructionBackend>(d);
}

}  // namespace postmark
