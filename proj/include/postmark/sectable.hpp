#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "postmark/backends.hpp"
#include "postmark/embedding.hpp"
#include "postmark/errors.hpp"
#include "postmark/io.hpp"
#include "postmark/rng.hpp"
#include "postmark/vocabulary.hpp"

namespace postmark {

inline constexpr std::string_view kTableMagic = "PMRK";
inline constexpr std::uint16_t kTableFormatVersion = 1;

// The secret word-to-embedding table. Each vocabulary word is mapped to the
// embedding of an unrelated document, so the mapping itself is the key: the
// seed never leaves the build step and is not serialized.
struct SecretTable {
    std::string table_id;  // hex digest of the persisted content
    std::string embedder_fingerprint;
    std::uint32_t dimension = 0;
    std::vector<std::pair<std::string, Embedding>> entries;  // sorted by word
    std::uint64_t seed = 0;            // only populated on freshly built tables
    std::int64_t created_at_unix = 0;  // informational, not persisted

    std::size_t size() const { return entries.size(); }

    const Embedding* find(std::string_view word) const {
        const auto it = std::lower_bound(
            entries.begin(), entries.end(), word,
            [](const auto& entry, std::string_view w) { return entry.first < w; });
        if (it == entries.end() || it->first != word) return nullptr;
        return &it->second;
    }

    // Identity is the persisted content; seed and created_at are transient.
    friend bool operator==(const SecretTable& a, const SecretTable& b) {
        return a.embedder_fingerprint == b.embedder_fingerprint && a.dimension == b.dimension &&
               a.entries == b.entries;
    }
};

inline std::string table_content_id(const std::string& fingerprint, std::uint32_t dimension,
                                    const std::vector<std::pair<std::string, Embedding>>& entries) {
    std::uint64_t h = fnv1a64(fingerprint);
    h = mix64(h ^ dimension);
    for (const auto& [word, vec] : entries) {
        h = mix64(h ^ fnv1a64(word));
        h = mix64(h ^ fnv1a64(std::string_view(reinterpret_cast<const char*>(vec.data()),
                                               vec.size() * sizeof(float))));
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

// Plain-text snippet corpus: one document per line, blank lines skipped.
inline std::vector<std::string> load_snippets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open snippet file: " + path.string());
    std::vector<std::string> snippets;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        snippets.push_back(line);
    }
    return snippets;
}

// Embeds the first |vocabulary| snippets and assigns each word one snippet
// embedding through a seeded Fisher-Yates bijection. Same inputs and seed
// give a bit-identical table.
inline SecretTable build_sectable(std::vector<VocabularyEntry> vocabulary,
                                  const std::vector<std::string>& snippets, std::uint64_t seed,
                                  const EmbeddingBackend& backend) {
    if (vocabulary.empty()) throw InputError("build_sectable: empty vocabulary");
    if (snippets.size() < vocabulary.size()) {
        throw InputError("build_sectable: need at least " + std::to_string(vocabulary.size()) +
                         " snippets, got " + std::to_string(snippets.size()));
    }
    std::sort(vocabulary.begin(), vocabulary.end(),
              [](const auto& a, const auto& b) { return a.word < b.word; });

    const std::size_t n = vocabulary.size();
    std::vector<Embedding> doc_embeddings;
    doc_embeddings.reserve(n);
    constexpr std::size_t kChunk = 128;
    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t stop = std::min(n, start + kChunk);
        std::vector<std::string> chunk(snippets.begin() + start, snippets.begin() + stop);
        auto embedded = embed_batch(backend, chunk);
        for (auto& e : embedded) doc_embeddings.push_back(std::move(e));
    }

    SplitMix64 g(seed);
    const std::vector<std::size_t> perm = seeded_permutation(n, g);

    SecretTable table;
    table.embedder_fingerprint = backend.fingerprint();
    table.dimension = static_cast<std::uint32_t>(doc_embeddings.front().size());
    table.entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        table.entries.emplace_back(vocabulary[i].word, std::move(doc_embeddings[perm[i]]));
    }
    table.seed = seed;
    table.created_at_unix = std::chrono::duration_cast<std::chrono::seconds>(
                                std::chrono::system_clock::now().time_since_epoch())
                                .count();
    table.table_id = table_content_id(table.embedder_fingerprint, table.dimension, table.entries);
    return table;
}

// Binary layout shared by the table ("PMRK") and the word-embedding cache
// ("PMWC"); see docs/protocol.md. The trailing CRC covers everything before it.
inline void save_word_vector_file(const SecretTable& table, const std::filesystem::path& path,
                                  std::string_view magic) {
    BinaryWriter w;
    w.bytes(magic);
    w.u16(kTableFormatVersion);
    w.lp_string(table.embedder_fingerprint);
    w.u32(table.dimension);
    w.u32(static_cast<std::uint32_t>(table.entries.size()));
    for (const auto& [word, vec] : table.entries) {
        if (vec.size() != table.dimension) {
            throw Error("entry '" + word + "' has dimension " + std::to_string(vec.size()) +
                        ", table says " + std::to_string(table.dimension));
        }
        w.lp_string(word);
        w.f32_array(vec);
    }
    write_checksummed(path, w.data());
}

inline SecretTable load_word_vector_file(const std::filesystem::path& path,
                                         std::string_view magic) {
    const std::string body = read_checksummed(path);
    BinaryReader r(body, path.string());
    if (r.raw(magic.size()) != magic) {
        throw FormatError(path.string() + ": bad magic, expected " + std::string(magic));
    }
    const std::uint16_t version = r.u16();
    if (version == 0 || version > kTableFormatVersion) {
        throw FormatError(path.string() + ": unsupported format version " +
                          std::to_string(version));
    }
    SecretTable table;
    table.embedder_fingerprint = r.lp_string();
    table.dimension = r.u32();
    const std::uint32_t count = r.u32();
    table.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string word = r.lp_string();
        Embedding vec = r.f32_array(table.dimension);
        table.entries.emplace_back(std::move(word), std::move(vec));
    }
    if (!r.exhausted()) {
        throw FormatError(path.string() + ": trailing bytes after last entry");
    }
    table.table_id = table_content_id(table.embedder_fingerprint, table.dimension, table.entries);
    return table;
}

inline void save_sectable(const SecretTable& table, const std::filesystem::path& path) {
    save_word_vector_file(table, path, kTableMagic);
}

inline SecretTable load_sectable(const std::filesystem::path& path) {
    return load_word_vector_file(path, kTableMagic);
}

// Refuses to use a table against an embedder it was not built with; cosine
// values across embedding spaces are meaningless.
inline void require_fingerprint_match(const SecretTable& table, const EmbeddingBackend& backend) {
    const std::string fp = backend.fingerprint();
    if (fp != table.embedder_fingerprint) {
        throw KeyError("table was built with embedder '" + table.embedder_fingerprint +
                       "' but the active backend is '" + fp + "'");
    }
}

// How often each vocabulary word gets selected across documents.
struct FrequencyHistogram {
    std::map<std::string, std::size_t> bins;  // word -> number of documents selecting it
    std::size_t total_documents = 0;

    // Share of selected words appearing in fewer than `frac` of documents.
    double share_below(double frac) const {
        if (bins.empty()) return 0.0;
        std::size_t n = 0;
        for (const auto& [word, count] : bins) {
            if (static_cast<double>(count) < frac * static_cast<double>(total_documents)) ++n;
        }
        return static_cast<double>(n) / static_cast<double>(bins.size());
    }

    // Share of selected words appearing in more than `frac` of documents.
    double share_above(double frac) const {
        if (bins.empty()) return 0.0;
        std::size_t n = 0;
        for (const auto& [word, count] : bins) {
            if (static_cast<double>(count) > frac * static_cast<double>(total_documents)) ++n;
        }
        return static_cast<double>(n) / static_cast<double>(bins.size());
    }
};

}  // namespace postmark
