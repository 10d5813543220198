#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include "postmark/errors.hpp"

namespace postmark {

// Instruction templates sent to the inserter and the paraphrase attacker.
// The same text is shipped under resources/ for operator audit; a test pins
// the two copies to byte equality.

inline constexpr std::string_view kInsertionPromptTemplate =
    "Given below are a piece of text and a word list. Rewrite the text to incorporate all words "
    "from the provided word list. The rewritten text must be coherent and factual. Distribute the "
    "words from the list evenly throughout the text, rather than clustering them in a single "
    "section. When rewriting the text, try your best to minimize text length increase. Only "
    "return the rewritten text in your response, do not say anything else.\n"
    "\n"
    "Text: {}\n"
    "\n"
    "Word list: {}\n"
    "\n"
    "Rewritten text:\n";

inline constexpr std::string_view kParaphrasePromptTemplate =
    "Given some previous context and a sentence following that context, paraphrase the current "
    "sentence. Only return the paraphrased sentence in your response.\n"
    "\n"
    "Previous context: {}\n"
    "Current sentence to paraphrase: {}\n"
    "Your paraphrase of the current sentence: \n";

// Substitutes "{}" placeholders left to right.
inline std::string format_prompt(std::string_view tmpl,
                                 std::initializer_list<std::string_view> args) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t pos = 0;
    for (std::string_view arg : args) {
        const std::size_t ph = tmpl.find("{}", pos);
        if (ph == std::string_view::npos) {
            throw Error("format_prompt: more arguments than placeholders");
        }
        out.append(tmpl.substr(pos, ph - pos));
        out.append(arg);
        pos = ph + 2;
    }
    if (tmpl.find("{}", pos) != std::string_view::npos) {
        throw Error("format_prompt: unfilled placeholder");
    }
    out.append(tmpl.substr(pos));
    return out;
}

inline std::string make_insertion_prompt(std::string_view text, std::string_view joined_words) {
    return format_prompt(kInsertionPromptTemplate, {text, joined_words});
}

inline std::string make_paraphrase_prompt(std::string_view context, std::string_view sentence) {
    return format_prompt(kParaphrasePromptTemplate, {context, sentence});
}

}  // namespace postmark
