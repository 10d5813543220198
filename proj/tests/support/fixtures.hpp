#pragma once

// Shared test machinery: temp dirs, synthetic corpora, and hand-built
// match-vector fixtures with exact cosines.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "postmark/embedding.hpp"
#include "postmark/rng.hpp"
#include "postmark/sectable.hpp"
#include "postmark/vocabulary.hpp"

namespace testsupport {

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 1000; ++i) {
            auto candidate = base / ("postmark-test-" + std::to_string(std::random_device{}()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("cannot create temp dir");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path file(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    out << content;
}

// Deterministic pseudo-word pool built from syllables; all words match the
// vocabulary shape ^[a-z][a-z'-]*$.
inline std::vector<std::string> make_word_pool(std::size_t count, std::uint64_t seed) {
    static const std::vector<std::string> syllables = {
        "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "fa", "fe", "fi",
        "fo", "fu", "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu", "ma",
        "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu", "ra", "re", "ri", "ro",
        "ru", "sa", "se", "si", "so", "su", "ta", "te", "ti", "to", "tu", "va", "ve",
        "vi", "vo", "vu", "za", "ze", "zi", "zo", "zu"};
    postmark::SplitMix64 g(seed);
    std::set<std::string> seen;
    std::vector<std::string> pool;
    while (pool.size() < count) {
        const int parts = 2 + static_cast<int>(g.next_below(3));
        std::string word;
        for (int p = 0; p < parts; ++p) {
            word += syllables[g.next_below(syllables.size())];
        }
        if (seen.insert(word).second) pool.push_back(word);
    }
    return pool;
}

// Random document: capitalized sentences of 8-12 pool words each.
inline std::string make_document(const std::vector<std::string>& pool, postmark::SplitMix64& g,
                                 int min_words, int max_words) {
    const int total =
        min_words + static_cast<int>(g.next_below(
                        static_cast<std::uint64_t>(max_words - min_words + 1)));
    std::string text;
    int emitted = 0;
    while (emitted < total) {
        const int len = std::min(8 + static_cast<int>(g.next_below(5)), total - emitted);
        for (int i = 0; i < len; ++i) {
            std::string word = pool[g.next_below(pool.size())];
            if (i == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
            if (!text.empty()) text += " ";
            text += word;
            ++emitted;
        }
        text += ".";
    }
    return text;
}

inline std::string format_vector(const postmark::Embedding& v) {
    std::string line;
    char buf[32];
    for (float x : v) {
        std::snprintf(buf, sizeof buf, " %.8f", static_cast<double>(x));
        line += buf;
    }
    return line;
}

// Writes a GloVe-style match-vector file.
inline void write_match_vectors(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, postmark::Embedding>>& entries) {
    std::ofstream out(path, std::ios::trunc);
    for (const auto& [word, vec] : entries) {
        out << word << format_vector(vec) << "\n";
    }
}

// Unit vector v with cosine(v, base) == c exactly (up to float rounding):
// c * base + sqrt(1 - c^2) * ortho, where ortho is unit and orthogonal to base.
inline postmark::Embedding with_cosine(const postmark::Embedding& base,
                                       const postmark::Embedding& ortho, double c) {
    postmark::Embedding v(base.size());
    const double s = std::sqrt(1.0 - c * c);
    for (std::size_t i = 0; i < base.size(); ++i) {
        v[i] = static_cast<float>(c * base[i] + s * ortho[i]);
    }
    return v;
}

// Random unit vector from the generator.
inline postmark::Embedding random_unit(postmark::SplitMix64& g, std::size_t dim) {
    postmark::Embedding v(dim);
    postmark::fill_gaussian(g, v);
    postmark::l2_normalize(v);
    return v;
}

// Random unit vector orthogonalized against `base` (Gram-Schmidt).
inline postmark::Embedding random_unit_orthogonal(postmark::SplitMix64& g,
                                                  const postmark::Embedding& base) {
    postmark::Embedding v = random_unit(g, base.size());
    const double d = postmark::dot(v, base);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = static_cast<float>(v[i] - d * base[i]);
    }
    postmark::l2_normalize(v);
    return v;
}

}  // namespace testsupport
