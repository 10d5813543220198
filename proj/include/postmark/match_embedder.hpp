#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "postmark/embedding.hpp"
#include "postmark/errors.hpp"
#include "postmark/io.hpp"
#include "postmark/text.hpp"

namespace postmark {

inline constexpr double kDefaultMatchTau = 0.7;

// Word-vector model used only for detection-time word matching (paragram
// style), distinct from the document Embedder. Loaded from the usual text
// format: one line per word, "word v1 v2 ... vd". Vectors are normalized at
// load; words missing from the vocabulary fall back to exact string matching.
class MatchEmbedder {
public:
    static MatchEmbedder load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open match-vector file: " + path.string());
        MatchEmbedder me;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string word;
            ss >> word;
            Embedding vec;
            double x;
            while (ss >> x) vec.push_back(static_cast<float>(x));
            // Tolerate a word2vec-style "count dim" header on the first line.
            if (lineno == 1 && vec.size() == 1 &&
                word.find_first_not_of("0123456789") == std::string::npos) {
                continue;
            }
            if (vec.empty()) {
                throw FormatError(path.string() + ":" + std::to_string(lineno) +
                                  ": no vector components");
            }
            if (me.dimension_ == 0) {
                me.dimension_ = vec.size();
            } else if (vec.size() != me.dimension_) {
                throw FormatError(path.string() + ":" + std::to_string(lineno) +
                                  ": dimension " + std::to_string(vec.size()) + " != " +
                                  std::to_string(me.dimension_));
            }
            l2_normalize(vec);
            me.vocab_.emplace(to_lower(word), std::move(vec));
        }
        if (me.vocab_.empty()) throw InputError(path.string() + ": empty match-vector file");
        return me;
    }

    const Embedding* find(std::string_view word) const {
        const auto it = vocab_.find(std::string(word));
        return it == vocab_.end() ? nullptr : &it->second;
    }

    bool contains(std::string_view word) const { return find(word) != nullptr; }
    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return vocab_.size(); }

private:
    std::unordered_map<std::string, Embedding> vocab_;
    std::size_t dimension_ = 0;
};

struct WordMatch {
    bool present = false;
    std::string best_text_word;
    double similarity = 0.0;
};

// A list word is present iff some text token matches it with cosine >= tau
// under the match embedder. Exact string equality always counts (similarity
// 1.0), so literal matches survive any tau <= 1 and out-of-vocabulary words
// degrade to exact matching.
inline WordMatch word_present(const std::string& list_word,
                              const std::vector<std::string>& text_tokens,
                              const MatchEmbedder& me, double tau = kDefaultMatchTau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw InputError("tau must be in (0, 1]");

    for (const auto& token : text_tokens) {
        if (token == list_word) return {true, token, 1.0};
    }
    const Embedding* lw = me.find(list_word);
    if (lw == nullptr) return {false, "", 0.0};

    WordMatch best;
    for (const auto& token : text_tokens) {
        const Embedding* tv = me.find(token);
        if (tv == nullptr) continue;  // OOV tokens only match by equality, handled above
        const double sim = cosine(*lw, *tv);
        if (sim > best.similarity || best.best_text_word.empty()) {
            best.similarity = sim;
            best.best_text_word = token;
        }
    }
    best.present = !best.best_text_word.empty() && best.similarity >= tau;
    return best;
}

struct PairsEvaluation {
    double positive_mean_x100 = 0.0;  // word vs synonym
    double negative_mean_x100 = 0.0;  // word vs irrelevant word
    std::size_t used = 0;
    std::size_t skipped = 0;  // triples with an out-of-vocabulary member
};

// Scores the match embedder on (word, synonym, irrelevant) triples, TSV one
// per line. Means are reported on the x100 scale.
inline PairsEvaluation evaluate_match_embedder(const std::filesystem::path& pairs_file,
                                               const MatchEmbedder& me) {
    PairsEvaluation eval;
    double pos_sum = 0.0;
    double neg_sum = 0.0;
    for_each_tsv_record(pairs_file, [&](std::size_t lineno,
                                        const std::vector<std::string>& fields) {
        if (fields.size() != 3) {
            throw FormatError(pairs_file.string() + ":" + std::to_string(lineno) +
                              ": expected 'word<TAB>synonym<TAB>irrelevant'");
        }
        const Embedding* w = me.find(to_lower(fields[0]));
        const Embedding* syn = me.find(to_lower(fields[1]));
        const Embedding* irr = me.find(to_lower(fields[2]));
        if (w == nullptr || syn == nullptr || irr == nullptr) {
            ++eval.skipped;
            return;
        }
        pos_sum += cosine(*w, *syn);
        neg_sum += cosine(*w, *irr);
        ++eval.used;
    });
    if (eval.used == 0) throw InputError(pairs_file.string() + ": no usable triples");
    eval.positive_mean_x100 = 100.0 * pos_sum / static_cast<double>(eval.used);
    eval.negative_mean_x100 = 100.0 * neg_sum / static_cast<double>(eval.used);
    return eval;
}

}  // namespace postmark
