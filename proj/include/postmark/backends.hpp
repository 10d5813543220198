#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "postmark/embedding.hpp"
#include "postmark/errors.hpp"
#include "postmark/prompts.hpp"
#include "postmark/rng.hpp"
#include "postmark/text.hpp"

namespace postmark {

inline constexpr int kDefaultMaxOutputTokens = 4096;
inline constexpr int kMinMockDimension = 8;

enum class BackendKind { embedding, instruction };
enum class Transport { remote_http, mock };

// Configuration for one embedding or instruction backend. Remote backends
// speak the OpenAI-compatible JSON protocol described in docs/protocol.md.
struct BackendDescriptor {
    BackendKind kind = BackendKind::embedding;
    Transport transport = Transport::mock;
    std::string endpoint;        // remote only
    std::string model_id;        // remote model name, or mock behavior id
    std::string auth_token_env;  // env var holding the bearer token; empty = no auth
    double timeout_seconds = 30.0;
    int max_retries = 2;
    double retry_backoff_seconds = 0.25;
    std::uint64_t seed = 0;  // mock determinism
    int dimension = 256;     // mock embedding dimension

    void validate() const {
        if (transport == Transport::remote_http) {
            if (endpoint.empty()) throw InputError("remote backend requires an endpoint");
            if (model_id.empty()) throw InputError("remote backend requires a model id");
        }
        if (transport == Transport::mock && kind == BackendKind::embedding &&
            dimension < kMinMockDimension) {
            throw InputError("mock embedding dimension must be >= " +
                             std::to_string(kMinMockDimension));
        }
        if (max_retries < 0) throw InputError("max_retries must be non-negative");
        if (timeout_seconds <= 0.0) throw InputError("timeout must be positive");
    }
};

struct InstructionRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_output_tokens = kDefaultMaxOutputTokens;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;

    // Raw single-text embedding; may come back unnormalized from a remote.
    virtual Embedding embed_raw(const std::string& text) const = 0;

    // Raw batch; default is a loop, remotes override with one call.
    virtual std::vector<Embedding> embed_raw_batch(const std::vector<std::string>& texts) const {
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed_raw(t));
        return out;
    }

    // 0 until known (remotes discover it from the first response).
    virtual int dimension() const = 0;
    virtual std::string model_id() const = 0;

    // model id + dimension; binds tables and caches to one embedding space.
    std::string fingerprint() const {
        const int d = dimension();
        if (d <= 0) throw Error("embedder dimension unknown; embed something first");
        return model_id() + ":" + std::to_string(d);
    }
};

class InstructionBackend {
public:
    virtual ~InstructionBackend() = default;
    virtual std::string complete_raw(const InstructionRequest& request) const = 0;
    virtual std::string model_id() const = 0;
};

// Deterministic construction: lowercase-tokenize, derive a unit gaussian
// vector per token from hash(seed, token), return the normalized token mean.
// Texts sharing most words embed nearby, which detection-time list
// re-derivation depends on.
inline Embedding mock_embedding(std::uint64_t seed, std::string_view text, int dimension) {
    if (dimension < kMinMockDimension) {
        throw InputError("mock_embedding: dimension must be >= " +
                         std::to_string(kMinMockDimension));
    }
    const std::vector<std::string> tokens = lower_alnum_tokens(text);
    if (tokens.empty()) throw InputError("mock_embedding: no tokens in text");

    std::vector<double> acc(static_cast<std::size_t>(dimension), 0.0);
    Embedding word_vec(static_cast<std::size_t>(dimension));
    for (const auto& token : tokens) {
        SplitMix64 g(mix64(seed) ^ fnv1a64(token));
        fill_gaussian(g, word_vec);
        l2_normalize(word_vec);
        for (std::size_t i = 0; i < word_vec.size(); ++i) acc[i] += word_vec[i];
    }
    Embedding mean(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        mean[i] = static_cast<float>(acc[i] / static_cast<double>(tokens.size()));
    }
    l2_normalize(mean);
    return mean;
}

class MockEmbeddingBackend : public EmbeddingBackend {
public:
    // The default model id carries the seed so fingerprints distinguish
    // differently seeded mocks.
    MockEmbeddingBackend(std::uint64_t seed, int dimension, std::string model_id = "")
        : seed_(seed), dimension_(dimension), model_id_(std::move(model_id)) {
        if (model_id_.empty()) model_id_ = "mock-embedding-s" + std::to_string(seed);
        if (dimension_ < kMinMockDimension) {
            throw InputError("mock embedding dimension must be >= " +
                             std::to_string(kMinMockDimension));
        }
    }

    Embedding embed_raw(const std::string& text) const override {
        return mock_embedding(seed_, text, dimension_);
    }
    int dimension() const override { return dimension_; }
    std::string model_id() const override { return model_id_; }
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    int dimension_;
    std::string model_id_;
};

// Mock instruction backend. Behavior is selected by model id:
//   "echo"                returns the user text unchanged;
//   "inserter-oracle"     parses the insertion prompt and appends the word
//                         list to the text, so a fully offline stack still
//                         produces detectable output;
//   "paraphrase-identity" parses the paraphrase prompt and returns the
//                         current sentence unchanged.
class MockInstructionBackend : public InstructionBackend {
public:
    explicit MockInstructionBackend(std::string behavior = "echo", std::uint64_t seed = 0)
        : behavior_(std::move(behavior)), seed_(seed) {
        if (behavior_ != "echo" && behavior_ != "inserter-oracle" &&
            behavior_ != "paraphrase-identity") {
            throw InputError("unknown mock instruction behavior: " + behavior_);
        }
    }

    std::string complete_raw(const InstructionRequest& request) const override {
        if (behavior_ == "inserter-oracle") {
            const auto [text, words] = parse_insertion_prompt(request.user_text);
            std::string out = text;
            if (!words.empty()) {
                if (!out.empty()) out += " ";
                out += words;
            }
            return out;
        }
        if (behavior_ == "paraphrase-identity") {
            return std::string(parse_paraphrase_prompt(request.user_text).second);
        }
        return request.user_text;
    }

    std::string model_id() const override { return behavior_; }

    // Extracts (text, space-joined word list) from an insertion prompt.
    static std::pair<std::string, std::string> parse_insertion_prompt(std::string_view prompt) {
        const auto text = section(prompt, "\nText: ", "\n\nWord list: ");
        const auto words = section(prompt, "\nWord list: ", "\n\nRewritten text:");
        std::string flat;
        std::size_t pos = 0;
        while (pos <= words.size()) {
            std::size_t comma = words.find(',', pos);
            if (comma == std::string_view::npos) comma = words.size();
            const auto w = trim(words.substr(pos, comma - pos));
            if (!w.empty()) {
                if (!flat.empty()) flat += " ";
                flat += std::string(w);
            }
            pos = comma + 1;
        }
        return {std::string(trim(text)), flat};
    }

    // Extracts (context, current sentence) from a paraphrase prompt.
    static std::pair<std::string, std::string> parse_paraphrase_prompt(std::string_view prompt) {
        const auto ctx = section(prompt, "\nPrevious context: ", "\nCurrent sentence");
        const auto cur =
            section(prompt, "\nCurrent sentence to paraphrase: ", "\nYour paraphrase");
        return {std::string(trim(ctx)), std::string(trim(cur))};
    }

private:
    static std::string_view section(std::string_view prompt, std::string_view begin,
                                    std::string_view end) {
        const std::size_t b = prompt.find(begin);
        if (b == std::string_view::npos) {
            throw BackendError("mock instruction backend: prompt marker not found");
        }
        const std::size_t start = b + begin.size();
        const std::size_t e = prompt.find(end, start);
        if (e == std::string_view::npos) {
            throw BackendError("mock instruction backend: prompt end marker not found");
        }
        return prompt.substr(start, e - start);
    }

    std::string behavior_;
    std::uint64_t seed_;
};

// --- module operations ------------------------------------------------------

inline Embedding embed_text(const EmbeddingBackend& backend, const std::string& text) {
    if (trim(text).empty()) throw InputError("embed_text: empty text");
    Embedding v = backend.embed_raw(text);
    const int dim = backend.dimension();
    if (dim > 0 && static_cast<int>(v.size()) != dim) {
        throw BackendError("embedding dimension mismatch: expected " + std::to_string(dim) +
                           ", got " + std::to_string(v.size()));
    }
    if (!is_normalized(v)) l2_normalize(v);
    return v;
}

inline std::vector<Embedding> embed_batch(const EmbeddingBackend& backend,
                                          const std::vector<std::string>& texts) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (trim(texts[i]).empty()) {
            throw InputError("embed_batch: empty text at index " + std::to_string(i));
        }
    }
    if (texts.empty()) return {};

    std::vector<Embedding> out;
    try {
        out = backend.embed_raw_batch(texts);
    } catch (const InputError&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError(std::string("embed_batch failed: ") + e.what());
    }
    if (out.size() != texts.size()) {
        throw BackendError("embed_batch: backend returned " + std::to_string(out.size()) +
                           " vectors for " + std::to_string(texts.size()) + " inputs");
    }
    const int dim = backend.dimension();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (dim > 0 && static_cast<int>(out[i].size()) != dim) {
            throw BackendError("embed_batch: dimension mismatch at index " + std::to_string(i));
        }
        if (!is_normalized(out[i])) l2_normalize(out[i]);
    }
    return out;
}

inline std::string complete(const InstructionBackend& backend, const InstructionRequest& request) {
    if (request.user_text.empty()) throw InputError("complete: empty user text");
    if (request.temperature < 0.0) throw InputError("complete: negative temperature");
    if (request.max_output_tokens <= 0) throw InputError("complete: max_output_tokens must be positive");
    const std::string raw = backend.complete_raw(request);
    std::string out(trim(raw));
    if (out.empty()) throw BackendError("instruction backend returned an empty response");
    return out;
}

}  // namespace postmark
