#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace postmark {

inline bool is_ascii_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_ascii_alnum(char c) {
    return is_ascii_alpha(c) || (c >= '0' && c <= '9');
}

inline char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Word count used for the insertion ratio: whitespace-separated tokens that
// contain at least one alphanumeric character. "Hello, world!" counts 2.
inline int count_words(std::string_view text) {
    int count = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        bool has_alnum = false;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
            if (is_ascii_alnum(text[i])) has_alnum = true;
            ++i;
        }
        if (i > start && has_alnum) ++count;
    }
    return count;
}

// Lowercased maximal alphanumeric runs; the tokenization behind the mock
// embedder's bag of words.
inline std::vector<std::string> lower_alnum_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (is_ascii_alnum(c)) {
            cur.push_back(ascii_lower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

// Case-folded word tokens for presence matching and insertion verification:
// runs of letters with internal apostrophes/hyphens, trimmed so tokens start
// and end on a letter.
inline std::vector<std::string> word_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        while (!cur.empty() && !is_ascii_alpha(cur.back())) cur.pop_back();
        if (!cur.empty()) tokens.push_back(cur);
        cur.clear();
    };
    for (char c : text) {
        if (is_ascii_alpha(c)) {
            cur.push_back(ascii_lower(c));
        } else if ((c == '\'' || c == '-') && !cur.empty()) {
            cur.push_back(c);
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

// word_tokens deduplicated in first-seen order. Presence in the detection
// formula is existential, so duplicates carry no information.
inline std::vector<std::string> unique_word_tokens(std::string_view text) {
    std::vector<std::string> tokens = word_tokens(text);
    std::unordered_set<std::string> seen;
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (auto& t : tokens) {
        if (seen.insert(t).second) out.push_back(std::move(t));
    }
    return out;
}

inline std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(ascii_lower(c));
    return out;
}

}  // namespace postmark
