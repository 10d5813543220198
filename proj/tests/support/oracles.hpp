#pragma once

// Independent reference implementations used to cross-check the library.
// These deliberately re-derive everything from primitive operations rather
// than calling the code paths they verify.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "postmark/backends.hpp"
#include "postmark/embedding.hpp"
#include "postmark/sectable.hpp"
#include "postmark/text.hpp"

namespace testsupport {

struct BruteForceSelection {
    std::vector<std::string> words;
    std::vector<double> table_scores;
    std::vector<double> semantic_scores;
};

// Full-scan, full-re-rank reference for watermark word selection against a
// mock embedder: rank every table word by table-vector cosine, keep
// ceil(k * multiplier), re-rank those by actual word-embedding cosine, keep k.
inline BruteForceSelection brute_force_select(const std::string& text,
                                              const postmark::SecretTable& table,
                                              std::uint64_t embedder_seed, int dimension,
                                              double ratio, double multiplier) {
    using postmark::cosine;
    const postmark::Embedding text_embedding =
        postmark::mock_embedding(embedder_seed, text, dimension);

    const int word_count = postmark::count_words(text);
    const int requested_k =
        std::max(1, static_cast<int>(std::floor(ratio * static_cast<double>(word_count) + 0.5)));
    const std::size_t n = table.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(requested_k), n);
    const std::size_t k_prime = std::min<std::size_t>(
        static_cast<std::size_t>(std::ceil(static_cast<double>(k) * multiplier)), n);

    struct Scored {
        std::string word;
        double table_score;
        double semantic_score;
    };
    std::vector<Scored> all;
    all.reserve(n);
    for (const auto& [word, vec] : table.entries) {
        all.push_back({word, cosine(text_embedding, vec), 0.0});
    }
    std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
        if (a.table_score != b.table_score) return a.table_score > b.table_score;
        return a.word < b.word;
    });
    all.resize(k_prime);

    for (auto& s : all) {
        const postmark::Embedding word_vec =
            postmark::mock_embedding(embedder_seed, s.word, dimension);
        s.semantic_score = cosine(text_embedding, word_vec);
    }
    std::stable_sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) {
        if (a.semantic_score != b.semantic_score) return a.semantic_score > b.semantic_score;
        return a.word < b.word;
    });
    all.resize(k);

    BruteForceSelection out;
    for (const auto& s : all) {
        out.words.push_back(s.word);
        out.table_scores.push_back(s.table_score);
        out.semantic_scores.push_back(s.semantic_score);
    }
    return out;
}

// Reference threshold check: the number of null scores at or above t.
inline std::size_t count_at_or_above(const std::vector<double>& scores, double t) {
    std::size_t n = 0;
    for (double s : scores) {
        if (s >= t) ++n;
    }
    return n;
}

}  // namespace testsupport
