#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "postmark/detection.hpp"
#include "postmark/errors.hpp"
#include "postmark/evaluation.hpp"
#include "postmark/insertion.hpp"

namespace postmark {

// Scores travel rounded to 6 decimal places; internal math stays full
// precision.
inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

// Dataset files are JSONL: one {"id", "text", optional "prefix"} per line.
inline std::vector<Document> load_dataset_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset: " + path.string());
    std::vector<Document> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) +
                              ": record must be an object with a string 'text'");
        }
        Document doc;
        doc.text = record["text"].get<std::string>();
        doc.id = record.contains("id") ? record["id"].is_string()
                                             ? record["id"].get<std::string>()
                                             : record["id"].dump()
                                       : "doc-" + std::to_string(lineno);
        docs.push_back(std::move(doc));
    }
    if (docs.empty()) throw InputError(path.string() + ": empty dataset");
    return docs;
}

inline nlohmann::json to_json(const InsertionOutcome& outcome) {
    return {{"watermarked_text", outcome.watermarked_text},
            {"confirmed_words", outcome.confirmed_words},
            {"missing_words", outcome.missing_words},
            {"passes", outcome.passes},
            {"length_before", outcome.length_before},
            {"length_after", outcome.length_after}};
}

inline nlohmann::json to_json(const DetectionResult& result, bool expose_matches) {
    nlohmann::json j = {{"presence_score", round6(result.presence_score)},
                        {"list_size", result.list_size},
                        {"threshold", round6(result.threshold)},
                        {"verdict", result.verdict},
                        {"table_id", result.table_id}};
    if (expose_matches) {
        nlohmann::json matches = nlohmann::json::array();
        for (const auto& m : result.matched_words) {
            matches.push_back({{"list_word", m.list_word},
                               {"text_word", m.text_word},
                               {"similarity", round6(m.similarity)}});
        }
        j["matched_words"] = std::move(matches);
    }
    return j;
}

inline nlohmann::json to_json(const ScoreSample& sample) {
    return {{"document_id", sample.document_id},
            {"label", sample.label},
            {"score", round6(sample.score)},
            {"condition", sample.condition}};
}

inline nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json j = {{"threshold", round6(report.threshold)},
                        {"target_fpr", report.target_fpr},
                        {"achieved_fpr", round6(report.achieved_fpr)},
                        {"tpr_clean", round6(report.tpr_clean)},
                        {"n_positive", report.n_positive},
                        {"n_negative", report.n_negative},
                        {"sim_mean_x100", round6(report.sim_mean_x100)},
                        {"runtime_per_doc_seconds", round6(report.runtime_per_doc_seconds)},
                        {"failed_documents", report.failed_documents}};
    j["tpr_attacked"] =
        report.tpr_attacked ? nlohmann::json(round6(*report.tpr_attacked)) : nlohmann::json();
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : report.samples) samples.push_back(to_json(s));
    j["samples"] = std::move(samples);
    return j;
}

}  // namespace postmark
