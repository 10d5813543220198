#pragma once

#include <string>
#include <vector>

#include "postmark/backends.hpp"
#include "postmark/match_embedder.hpp"
#include "postmark/selection.hpp"
#include "postmark/text.hpp"

namespace postmark {

struct MatchedWord {
    std::string list_word;
    std::string text_word;
    double similarity = 0.0;
};

struct DetectionResult {
    double presence_score = 0.0;
    std::vector<MatchedWord> matched_words;
    int list_size = 0;
    double threshold = 0.0;
    bool verdict = false;
    std::string table_id;
};

// Matches a fixed word list against text tokens; the building block behind
// the presence score, exposed separately so a pinned list can be scored
// without re-deriving it.
inline std::vector<MatchedWord> match_fixed_list(const std::vector<std::string>& list_words,
                                                 const std::vector<std::string>& text_tokens,
                                                 const MatchEmbedder& me,
                                                 double tau = kDefaultMatchTau) {
    std::vector<MatchedWord> matched;
    for (const auto& word : list_words) {
        const WordMatch m = word_present(word, text_tokens, me, tau);
        if (m.present) matched.push_back({word, m.best_text_word, m.similarity});
    }
    return matched;
}

// Re-derives the watermark word list from the candidate text exactly as the
// watermarker would, then scores the fraction of list words present in the
// text at cosine >= tau.
inline DetectionResult presence_score(const std::string& text, const SecretTable& table,
                                      const InsertionPolicy& policy,
                                      const EmbeddingBackend& backend, const MatchEmbedder& me,
                                      double tau = kDefaultMatchTau,
                                      WordEmbeddingCache* cache = nullptr) {
    const WatermarkWordList list = select_watermark_words(text, table, policy, backend, cache);
    if (list.words.empty()) throw InputError("presence_score: derived word list is empty");

    const std::vector<std::string> tokens = unique_word_tokens(text);

    DetectionResult result;
    result.table_id = table.table_id;
    result.list_size = static_cast<int>(list.words.size());
    result.matched_words = match_fixed_list(list.words, tokens, me, tau);
    result.presence_score = static_cast<double>(result.matched_words.size()) /
                            static_cast<double>(result.list_size);
    return result;
}

// Full detection: presence score plus a verdict at the given threshold.
// The comparison is inclusive; p equal to the threshold flags as watermarked.
inline DetectionResult detect(const std::string& text, const SecretTable& table,
                              double threshold, const InsertionPolicy& policy,
                              const EmbeddingBackend& backend, const MatchEmbedder& me,
                              double tau = kDefaultMatchTau,
                              WordEmbeddingCache* cache = nullptr) {
    DetectionResult result = presence_score(text, table, policy, backend, me, tau, cache);
    result.threshold = threshold;
    result.verdict = result.presence_score >= threshold;
    return result;
}

}  // namespace postmark
