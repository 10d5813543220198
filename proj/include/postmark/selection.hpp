#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "postmark/backends.hpp"
#include "postmark/embedding.hpp"
#include "postmark/errors.hpp"
#include "postmark/sectable.hpp"
#include "postmark/text.hpp"
#include "postmark/wordcache.hpp"

namespace postmark {

// Watermarking knobs. insertion_ratio decides how many words get inserted
// relative to the input length; the k-prime multiplier controls how many
// table candidates survive into semantic filtering; word lists are fed to
// the inserter in sublists of sublist_size.
struct InsertionPolicy {
    double insertion_ratio = 0.12;
    double k_prime_multiplier = 2.0;
    int sublist_size = 10;

    void validate() const {
        if (!(insertion_ratio > 0.0 && insertion_ratio <= 1.0)) {
            throw InputError("insertion ratio must be in (0, 1]");
        }
        if (k_prime_multiplier < 1.0) throw InputError("k-prime multiplier must be >= 1");
        if (sublist_size < 1) throw InputError("sublist size must be >= 1");
    }
};

// Input-conditioned watermark word list. Ordered by semantic score
// descending; table_scores carries each word's cosine against its secret
// table vector, semantic_scores its cosine under the word's actual embedding.
struct WatermarkWordList {
    std::vector<std::string> words;
    std::vector<double> table_scores;
    std::vector<double> semantic_scores;
    int k = 0;        // requested list size (may exceed |words| for tiny tables)
    int k_prime = 0;  // candidates kept before semantic filtering
    std::string source_text_hash;
};

// Number of words to insert: round-half-up of ratio x word count, clamped to
// at least one so every text gets a signal.
inline int target_word_count(std::string_view text, double ratio) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw InputError("insertion ratio must be in (0, 1]");
    const int words = count_words(text);
    if (words < 1) throw InputError("target_word_count: empty text");
    const int k = static_cast<int>(std::floor(ratio * static_cast<double>(words) + 0.5));
    return std::max(1, k);
}

inline std::string text_hash_hex(std::string_view text) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    return std::string(buf);
}

// Ranks all table words by cosine against the text embedding, keeps the top
// k' = ceil(k x multiplier), then re-ranks those candidates by the cosine of
// their actual word embeddings and returns the best k. The second stage
// discards table words whose secret vector landed near the text by chance
// but whose surface meaning is unrelated. Ties break lexicographically.
inline WatermarkWordList select_watermark_words(const std::string& text, const SecretTable& table,
                                                const InsertionPolicy& policy,
                                                const EmbeddingBackend& backend,
                                                WordEmbeddingCache* cache = nullptr) {
    policy.validate();
    if (trim(text).empty()) throw InputError("select_watermark_words: empty text");
    if (table.entries.empty()) throw InputError("select_watermark_words: empty table");

    const Embedding text_embedding = embed_text(backend, text);
    require_fingerprint_match(table, backend);

    const int requested_k = target_word_count(text, policy.insertion_ratio);
    const std::size_t n = table.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(requested_k), n);
    const std::size_t k_prime = std::min<std::size_t>(
        static_cast<std::size_t>(
            std::ceil(static_cast<double>(k) * policy.k_prime_multiplier)),
        n);

    // Stage 1: exhaustive scan over the secret table.
    std::vector<double> table_score(n);
    for (std::size_t i = 0; i < n; ++i) {
        table_score[i] = cosine(text_embedding, table.entries[i].second);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (table_score[a] != table_score[b]) return table_score[a] > table_score[b];
        return table.entries[a].first < table.entries[b].first;
    });
    order.resize(k_prime);

    // Stage 2: semantic filtering by the candidates' actual embeddings.
    std::vector<std::string> candidate_words;
    candidate_words.reserve(k_prime);
    for (std::size_t idx : order) candidate_words.push_back(table.entries[idx].first);

    std::vector<Embedding> word_embeddings =
        cache ? cache->get_or_embed(backend, candidate_words)
              : embed_batch(backend, candidate_words);

    std::vector<double> semantic_score(k_prime);
    for (std::size_t i = 0; i < k_prime; ++i) {
        semantic_score[i] = cosine(text_embedding, word_embeddings[i]);
    }
    std::vector<std::size_t> pick(k_prime);
    std::iota(pick.begin(), pick.end(), 0);
    std::sort(pick.begin(), pick.end(), [&](std::size_t a, std::size_t b) {
        if (semantic_score[a] != semantic_score[b]) return semantic_score[a] > semantic_score[b];
        return candidate_words[a] < candidate_words[b];
    });
    pick.resize(k);

    WatermarkWordList list;
    list.k = requested_k;
    list.k_prime = static_cast<int>(k_prime);
    list.source_text_hash = text_hash_hex(text);
    list.words.reserve(k);
    list.table_scores.reserve(k);
    list.semantic_scores.reserve(k);
    for (std::size_t i : pick) {
        list.words.push_back(candidate_words[i]);
        list.table_scores.push_back(table_score[order[i]]);
        list.semantic_scores.push_back(semantic_score[i]);
    }
    return list;
}

// Per-word selection counts over a batch of word lists, for hub-word
// analysis. All lists are expected to come from the same table.
inline FrequencyHistogram hubness_report(const std::vector<WatermarkWordList>& lists) {
    if (lists.empty()) throw InputError("hubness_report: no word lists");
    FrequencyHistogram hist;
    hist.total_documents = lists.size();
    for (const auto& list : lists) {
        for (const auto& word : list.words) ++hist.bins[word];
    }
    return hist;
}

}  // namespace postmark
