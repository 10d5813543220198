#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "postmark/errors.hpp"
#include "postmark/io.hpp"
#include "postmark/text.hpp"

namespace postmark {

enum class PosTag { noun, verb, adjective, adverb };

inline std::optional<PosTag> parse_pos_tag(std::string_view tag) {
    if (tag == "noun") return PosTag::noun;
    if (tag == "verb") return PosTag::verb;
    if (tag == "adjective") return PosTag::adjective;
    if (tag == "adverb") return PosTag::adverb;
    return std::nullopt;  // det, propernoun, pronoun, ... are all filtered out
}

inline std::string_view pos_tag_name(PosTag tag) {
    switch (tag) {
        case PosTag::noun: return "noun";
        case PosTag::verb: return "verb";
        case PosTag::adjective: return "adjective";
        case PosTag::adverb: return "adverb";
    }
    return "?";
}

struct VocabularyEntry {
    std::string word;
    std::uint64_t corpus_frequency = 0;
    PosTag pos_tag = PosTag::noun;
};

// Lowercase word shape accepted into the vocabulary: starts with a letter,
// then letters, apostrophes, or hyphens.
inline bool is_vocabulary_word(std::string_view word) {
    if (word.empty()) return false;
    if (!(word[0] >= 'a' && word[0] <= 'z')) return false;
    for (char c : word.substr(1)) {
        if (!((c >= 'a' && c <= 'z') || c == '\'' || c == '-')) return false;
    }
    return true;
}

// Builds the insertable vocabulary from a corpus frequency list and a POS
// lexicon (both TAB-separated, '#' comments allowed). Keeps lowercase nouns,
// verbs, adjectives, and adverbs at or above the frequency floor; everything
// else (function words, proper nouns, rare words) is dropped. Duplicate
// frequency records for one word are summed. Output is sorted by word.
inline std::vector<VocabularyEntry> build_vocabulary(const std::filesystem::path& frequency_file,
                                                     const std::filesystem::path& pos_lexicon_file,
                                                     std::uint64_t frequency_floor) {
    if (frequency_floor < 1) throw InputError("frequency floor must be >= 1");

    std::map<std::string, PosTag> lexicon;
    for_each_tsv_record(pos_lexicon_file, [&](std::size_t lineno,
                                              const std::vector<std::string>& fields) {
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw FormatError(pos_lexicon_file.string() + ":" + std::to_string(lineno) +
                              ": expected 'word<TAB>tag'");
        }
        if (const auto tag = parse_pos_tag(fields[1])) {
            lexicon[to_lower(fields[0])] = *tag;
        }
    });

    std::map<std::string, std::uint64_t> counts;
    for_each_tsv_record(frequency_file, [&](std::size_t lineno,
                                            const std::vector<std::string>& fields) {
        if (fields.size() != 2 || fields[0].empty()) {
            throw FormatError(frequency_file.string() + ":" + std::to_string(lineno) +
                              ": expected 'word<TAB>count'");
        }
        std::uint64_t count = 0;
        const std::string& num = fields[1];
        if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) {
            throw FormatError(frequency_file.string() + ":" + std::to_string(lineno) +
                              ": count is not a non-negative integer");
        }
        count = std::stoull(num);
        counts[fields[0]] += count;
    });

    std::vector<VocabularyEntry> entries;
    for (const auto& [word, count] : counts) {
        if (!is_vocabulary_word(word)) continue;
        if (count < frequency_floor) continue;
        const auto it = lexicon.find(word);
        if (it == lexicon.end()) continue;
        entries.push_back({word, count, it->second});
    }
    if (entries.empty()) {
        throw InputError("vocabulary is empty after filtering (floor=" +
                         std::to_string(frequency_floor) + ")");
    }
    // std::map iteration already sorted entries by word.
    return entries;
}

}  // namespace postmark
