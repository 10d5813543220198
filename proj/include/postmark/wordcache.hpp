#pragma once

#include <filesystem>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "postmark/backends.hpp"
#include "postmark/sectable.hpp"

namespace postmark {

inline constexpr std::string_view kWordCacheMagic = "PMWC";

// Disk-backed cache of word surface-form embeddings, keyed by the embedder
// fingerprint. The vocabulary is small and static, so candidate words are
// embedded once per embedder instead of once per document. Reads are shared,
// writes exclusive.
class WordEmbeddingCache {
public:
    WordEmbeddingCache() = default;

    // Loads a PMWC cache file written by save().
    explicit WordEmbeddingCache(const std::filesystem::path& path) {
        const SecretTable t = load_word_vector_file(path, kWordCacheMagic);
        fingerprint_ = t.embedder_fingerprint;
        dimension_ = t.dimension;
        for (const auto& [word, vec] : t.entries) map_.emplace(word, vec);
    }

    void save(const std::filesystem::path& path) const {
        std::shared_lock lock(mutex_);
        SecretTable t;
        t.embedder_fingerprint = fingerprint_;
        t.dimension = dimension_;
        t.entries.assign(map_.begin(), map_.end());
        std::sort(t.entries.begin(), t.entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        save_word_vector_file(t, path, kWordCacheMagic);
    }

    // Embeddings for `words` in order, filling misses through the backend.
    std::vector<Embedding> get_or_embed(const EmbeddingBackend& backend,
                                        const std::vector<std::string>& words) {
        std::vector<Embedding> out(words.size());
        std::vector<std::size_t> missing;
        {
            std::shared_lock lock(mutex_);
            check_fingerprint_locked(backend);
            for (std::size_t i = 0; i < words.size(); ++i) {
                const auto it = map_.find(words[i]);
                if (it != map_.end()) {
                    out[i] = it->second;
                } else {
                    missing.push_back(i);
                }
            }
        }
        if (missing.empty()) return out;

        std::vector<std::string> to_embed;
        to_embed.reserve(missing.size());
        for (std::size_t i : missing) to_embed.push_back(words[i]);
        std::vector<Embedding> fresh = embed_batch(backend, to_embed);

        std::unique_lock lock(mutex_);
        if (fingerprint_.empty()) {
            fingerprint_ = backend.fingerprint();
            dimension_ = static_cast<std::uint32_t>(backend.dimension());
        }
        for (std::size_t j = 0; j < missing.size(); ++j) {
            map_[words[missing[j]]] = fresh[j];
            out[missing[j]] = std::move(fresh[j]);
        }
        return out;
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return map_.size();
    }

    const std::string& fingerprint() const { return fingerprint_; }

private:
    void check_fingerprint_locked(const EmbeddingBackend& backend) const {
        if (fingerprint_.empty()) return;  // fresh cache binds on first write
        if (backend.dimension() > 0 && backend.fingerprint() != fingerprint_) {
            throw KeyError("word cache was built with embedder '" + fingerprint_ +
                           "' but the active backend is '" + backend.fingerprint() + "'");
        }
    }

    mutable std::shared_mutex mutex_;
    std::string fingerprint_;
    std::uint32_t dimension_ = 0;
    std::unordered_map<std::string, Embedding> map_;
};

}  // namespace postmark
