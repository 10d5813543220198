#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include "postmark/backends.hpp"
#include "postmark/calibration.hpp"
#include "postmark/detection.hpp"
#include "postmark/insertion.hpp"
#include "postmark/prompts.hpp"
#include "postmark/selection.hpp"

namespace postmark {

// Embedding cosine between two texts, on the x100 scale used in reports.
inline double semantic_similarity(const std::string& text_a, const std::string& text_b,
                                  const EmbeddingBackend& backend) {
    if (trim(text_a).empty() || trim(text_b).empty()) {
        throw InputError("semantic_similarity: empty text");
    }
    return 100.0 * cosine(embed_text(backend, text_a), embed_text(backend, text_b));
}

// Abbreviations whose trailing period does not end a sentence.
inline const std::unordered_set<std::string>& abbreviation_stopset() {
    static const std::unordered_set<std::string> set = {
        "mr",  "mrs", "ms",  "dr",   "prof", "rev",  "gen",  "sen", "rep",  "st",
        "jr",  "sr",  "no",  "nos",  "vs",   "etc",  "e.g",  "i.e", "cf",   "al",
        "inc", "ltd", "co",  "corp", "fig",  "figs", "dept", "est", "approx",
        "u.s", "u.k", "a.m", "p.m",  "vol",  "pp",   "ca",   "jan", "feb",  "mar",
        "apr", "jun", "jul", "aug",  "sep",  "sept", "oct",  "nov", "dec"};
    return set;
}

namespace detail {

inline bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
inline bool is_closing_quote(char c) {
    return c == '"' || c == '\'' || c == ')' || c == ']';
}

// Word immediately before position i (letters and internal dots), lowercased.
inline std::string word_before(std::string_view text, std::size_t i) {
    std::size_t b = i;
    while (b > 0 && (is_ascii_alpha(text[b - 1]) || text[b - 1] == '.')) --b;
    std::string w = to_lower(text.substr(b, i - b));
    while (!w.empty() && w.front() == '.') w.erase(w.begin());
    return w;
}

}  // namespace detail

// Rule-based splitter: a run of terminal punctuation ends a sentence when it
// is followed (after optional closing quotes) by whitespace and an uppercase
// letter or opening quote, unless a lone period belongs to a known
// abbreviation. Joining the output with single spaces reconstructs the text
// modulo inter-sentence whitespace.
inline std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto emit = [&](std::size_t from, std::size_t to) {
        const auto s = trim(text.substr(from, to - from));
        if (!s.empty()) sentences.emplace_back(s);
    };

    while (i < n) {
        if (!detail::is_terminal(text[i])) {
            ++i;
            continue;
        }
        std::size_t run_end = i;  // inclusive index of last terminal char
        while (run_end + 1 < n && detail::is_terminal(text[run_end + 1])) ++run_end;
        const bool lone_period = (run_end == i && text[i] == '.');

        std::size_t tail = run_end;  // include closing quotes in the sentence
        while (tail + 1 < n && detail::is_closing_quote(text[tail + 1])) ++tail;

        std::size_t next = tail + 1;
        bool saw_space = false;
        while (next < n && std::isspace(static_cast<unsigned char>(text[next]))) {
            saw_space = true;
            ++next;
        }
        const bool upper_or_quote =
            next < n && (std::isupper(static_cast<unsigned char>(text[next])) ||
                         text[next] == '"' || text[next] == '\'');
        bool boundary = saw_space && upper_or_quote;
        if (boundary && lone_period &&
            abbreviation_stopset().contains(detail::word_before(text, i))) {
            boundary = false;
        }
        if (boundary) {
            emit(start, tail + 1);
            start = next;
            i = next;
        } else {
            i = run_end + 1;
        }
    }
    emit(start, n);
    return sentences;
}

// Sentence-level paraphrase attack: each sentence is rewritten with all
// previously paraphrased sentences as context. One instruction call per
// sentence; a failure discards the whole document.
inline std::string paraphrase_attack(const std::string& text, const InstructionBackend& backend,
                                     double temperature = 0.0) {
    const std::vector<std::string> sentences = split_sentences(text);
    if (sentences.empty()) throw InputError("paraphrase_attack: no sentences in text");

    std::string context;
    std::string output;
    for (const auto& sentence : sentences) {
        InstructionRequest request;
        request.temperature = temperature;
        request.user_text = make_paraphrase_prompt(context, sentence);
        const std::string rewritten = complete(backend, request);
        if (!output.empty()) {
            output += " ";
            context += " ";
        }
        output += rewritten;
        context += rewritten;
    }
    return output;
}

struct Document {
    std::string id;
    std::string text;
};

enum class AttackKind { none, paraphrase };

struct ScoreSample {
    std::string document_id;
    std::string label;      // "watermarked" | "unwatermarked"
    double score = 0.0;
    std::string condition;  // "clean" | "paraphrased"
};

struct EvalReport {
    double threshold = 0.0;
    double target_fpr = 0.0;
    double achieved_fpr = 0.0;
    double tpr_clean = 0.0;
    std::optional<double> tpr_attacked;
    std::size_t n_positive = 0;
    std::size_t n_negative = 0;
    double sim_mean_x100 = 0.0;
    double runtime_per_doc_seconds = 0.0;  // watermarking time, per document
    std::size_t failed_documents = 0;
    std::vector<ScoreSample> samples;
};

struct EvalOptions {
    double target_fpr = 0.01;
    AttackKind attack = AttackKind::none;
    double tau = kDefaultMatchTau;
    int max_repair_passes = kDefaultMaxRepairPasses;
    int parallelism = 1;
};

namespace detail {

template <typename Fn>
inline void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    const int count = std::min<int>(threads, static_cast<int>(n));
    pool.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace detail

// Full evaluation protocol: watermark every document, optionally attack it,
// score watermarked and unwatermarked populations with the same detector,
// calibrate the threshold on the unwatermarked scores, and report TPR at the
// target FPR before and after the attack. Per-document failures are excluded
// and counted; more than 5% failures invalidates the run.
inline EvalReport run_eval(const std::vector<Document>& documents, const SecretTable& table,
                           const InsertionPolicy& policy, const EmbeddingBackend& embedder,
                           const InstructionBackend& inserter, const MatchEmbedder& me,
                           const EvalOptions& options,
                           const InstructionBackend* attacker = nullptr,
                           WordEmbeddingCache* cache = nullptr) {
    if (documents.empty()) throw InputError("run_eval: empty dataset");
    policy.validate();
    if (options.attack == AttackKind::paraphrase && attacker == nullptr) {
        attacker = &inserter;
    }

    struct PerDoc {
        bool ok = false;
        double null_score = 0.0;
        double clean_score = 0.0;
        std::optional<double> attacked_score;
        double sim_x100 = 0.0;
        double watermark_seconds = 0.0;
    };
    std::vector<PerDoc> results(documents.size());

    detail::parallel_for(documents.size(), options.parallelism, [&](std::size_t i) {
        const Document& doc = documents[i];
        PerDoc r;
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const WatermarkWordList list =
                select_watermark_words(doc.text, table, policy, embedder, cache);
            const InsertionOutcome outcome =
                insert_words(doc.text, list, inserter, policy, options.max_repair_passes);
            const auto t1 = std::chrono::steady_clock::now();
            r.watermark_seconds = std::chrono::duration<double>(t1 - t0).count();

            r.null_score =
                presence_score(doc.text, table, policy, embedder, me, options.tau, cache)
                    .presence_score;
            r.clean_score = presence_score(outcome.watermarked_text, table, policy, embedder,
                                           me, options.tau, cache)
                                .presence_score;
            if (options.attack == AttackKind::paraphrase) {
                const std::string attacked =
                    paraphrase_attack(outcome.watermarked_text, *attacker);
                r.attacked_score =
                    presence_score(attacked, table, policy, embedder, me, options.tau, cache)
                        .presence_score;
            }
            r.sim_x100 = semantic_similarity(doc.text, outcome.watermarked_text, embedder);
            r.ok = true;
        } catch (const std::exception&) {
            r.ok = false;
        }
        results[i] = std::move(r);
    });

    EvalReport report;
    report.target_fpr = options.target_fpr;

    std::vector<double> null_scores;
    std::vector<double> clean_scores;
    std::vector<double> attacked_scores;
    double sim_sum = 0.0;
    double time_sum = 0.0;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        const PerDoc& r = results[i];
        if (!r.ok) {
            ++report.failed_documents;
            continue;
        }
        null_scores.push_back(r.null_score);
        clean_scores.push_back(r.clean_score);
        report.samples.push_back({documents[i].id, "unwatermarked", r.null_score, "clean"});
        report.samples.push_back({documents[i].id, "watermarked", r.clean_score, "clean"});
        if (r.attacked_score) {
            attacked_scores.push_back(*r.attacked_score);
            report.samples.push_back(
                {documents[i].id, "watermarked", *r.attacked_score, "paraphrased"});
        }
        sim_sum += r.sim_x100;
        time_sum += r.watermark_seconds;
    }
    if (report.failed_documents * 20 > documents.size()) {
        throw InputError("run_eval: " + std::to_string(report.failed_documents) + " of " +
                         std::to_string(documents.size()) +
                         " documents failed (>5%); report invalid");
    }
    if (null_scores.empty()) throw InputError("run_eval: all documents failed");

    report.threshold = calibrate_threshold(null_scores, options.target_fpr);
    report.achieved_fpr = fraction_at_or_above(null_scores, report.threshold);
    report.tpr_clean = fraction_at_or_above(clean_scores, report.threshold);
    if (!attacked_scores.empty()) {
        report.tpr_attacked = fraction_at_or_above(attacked_scores, report.threshold);
    }
    report.n_positive = clean_scores.size();
    report.n_negative = null_scores.size();
    report.sim_mean_x100 = sim_sum / static_cast<double>(null_scores.size());
    report.runtime_per_doc_seconds = time_sum / static_cast<double>(null_scores.size());
    return report;
}

// Table-style one-glance rendering of an evaluation report.
inline std::string render_report_text(const EvalReport& report) {
    char buf[256];
    std::string out;
    out += "metric                     value\n";
    out += "-------------------------  -----\n";
    auto row = [&](const char* name, const std::string& value) {
        std::snprintf(buf, sizeof buf, "%-25s  %s\n", name, value.c_str());
        out += buf;
    };
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    row("target FPR", num(report.target_fpr));
    row("calibrated threshold", num(report.threshold));
    row("achieved FPR", num(report.achieved_fpr));
    std::string tpr_line = num(report.tpr_clean);
    tpr_line += " / ";
    tpr_line += report.tpr_attacked ? num(*report.tpr_attacked) : std::string("-");
    row("TPR (before / after)", tpr_line);
    row("SIM x100 (mean)", num(report.sim_mean_x100));
    row("watermark time per doc", num(report.runtime_per_doc_seconds) + " s");
    row("documents (pos / neg)", std::to_string(report.n_positive) + " / " +
                                     std::to_string(report.n_negative));
    row("failed documents", std::to_string(report.failed_documents));
    return out;
}

}  // namespace postmark
