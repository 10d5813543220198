#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "postmark/backends.hpp"
#include "postmark/errors.hpp"
#include "postmark/prompts.hpp"
#include "postmark/selection.hpp"
#include "postmark/text.hpp"

namespace postmark {

inline constexpr int kDefaultMaxRepairPasses = 2;
// A rewrite that loses more than this fraction of the input's words is
// treated as destructive and retried once.
inline constexpr double kMinRewriteLengthRatio = 0.3;

// Suffix-stripping stemmer used only for insertion verification. Strips one
// of ing/ed/es/ly/s when at least two characters remain. Verification wants
// near-literal compliance from the inserter, so this is deliberately much
// stricter than the cosine matcher used at detection time.
inline std::string stem(std::string_view word) {
    std::string w = to_lower(word);
    static constexpr std::string_view suffixes[] = {"ing", "ed", "es", "ly", "s"};
    for (std::string_view suffix : suffixes) {
        if (w.size() >= suffix.size() + 2 && w.ends_with(suffix)) {
            w.erase(w.size() - suffix.size());
            break;
        }
    }
    return w;
}

// Splits the requested words into (confirmed, missing): a word is confirmed
// iff some token of the text case-folds and stems to the same stem.
inline std::pair<std::vector<std::string>, std::vector<std::string>> verify_presence(
    std::string_view text, const std::vector<std::string>& words) {
    std::unordered_set<std::string> stems;
    for (const auto& token : word_tokens(text)) stems.insert(stem(token));

    std::vector<std::string> confirmed;
    std::vector<std::string> missing;
    for (const auto& word : words) {
        if (stems.contains(stem(word))) {
            confirmed.push_back(word);
        } else {
            missing.push_back(word);
        }
    }
    return {std::move(confirmed), std::move(missing)};
}

struct InsertionOutcome {
    std::string watermarked_text;
    std::vector<std::string> confirmed_words;
    std::vector<std::string> missing_words;
    int passes = 0;
    int length_before = 0;
    int length_after = 0;
};

inline std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ", ";
        out += w;
    }
    return out;
}

namespace detail {

// One prompt round-trip with the destructive-rewrite guard.
inline std::string rewrite_pass(const InstructionBackend& backend, const std::string& text,
                                const std::vector<std::string>& words) {
    InstructionRequest request;
    request.user_text = make_insertion_prompt(text, join_words(words));
    const int before = count_words(text);
    std::string out = complete(backend, request);
    if (count_words(out) < static_cast<int>(kMinRewriteLengthRatio * before)) {
        out = complete(backend, request);  // one retry
        if (count_words(out) < static_cast<int>(kMinRewriteLengthRatio * before)) {
            throw BackendError("inserter produced a destructive rewrite twice (" +
                               std::to_string(count_words(out)) + " of " +
                               std::to_string(before) + " words)");
        }
    }
    return out;
}

}  // namespace detail

// Rewrites `text` to incorporate the watermark word list. The list is fed to
// the inserter in consecutive sublists, each prompt seeing the latest
// rewrite; words still missing afterwards get up to max_repair_passes
// dedicated repair prompts.
inline InsertionOutcome insert_words(const std::string& text, const WatermarkWordList& list,
                                     const InstructionBackend& backend,
                                     const InsertionPolicy& policy,
                                     int max_repair_passes = kDefaultMaxRepairPasses) {
    policy.validate();
    if (trim(text).empty()) throw InputError("insert_words: empty text");
    if (list.words.empty()) throw InputError("insert_words: empty word list");
    if (max_repair_passes < 0) throw InputError("insert_words: negative repair passes");

    InsertionOutcome outcome;
    outcome.length_before = count_words(text);

    std::string working = text;
    const std::size_t sublist = static_cast<std::size_t>(policy.sublist_size);
    for (std::size_t start = 0; start < list.words.size(); start += sublist) {
        const std::size_t stop = std::min(list.words.size(), start + sublist);
        std::vector<std::string> chunk(list.words.begin() + start, list.words.begin() + stop);
        working = detail::rewrite_pass(backend, working, chunk);
        ++outcome.passes;
    }

    auto [confirmed, missing] = verify_presence(working, list.words);
    for (int repair = 0; repair < max_repair_passes && !missing.empty(); ++repair) {
        working = detail::rewrite_pass(backend, working, missing);
        ++outcome.passes;
        std::tie(confirmed, missing) = verify_presence(working, list.words);
    }

    outcome.watermarked_text = std::move(working);
    outcome.confirmed_words = std::move(confirmed);
    outcome.missing_words = std::move(missing);
    outcome.length_after = count_words(outcome.watermarked_text);
    return outcome;
}

}  // namespace postmark
