#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "postmark/sectable.hpp"
#include "postmark/selection.hpp"
#include "postmark/vocabulary.hpp"
#include "postmark/wordcache.hpp"
#include "support/fixtures.hpp"

using namespace postmark;
using testsupport::TempDir;
using testsupport::write_text;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("build_vocabulary applies all three filter rules") {
    TempDir dir;
    write_text(dir.file("freq.tsv"),
               "run\t1200\n"
               "Paris\t9000\n"
               "blue\t999\n");
    write_text(dir.file("lex.tsv"),
               "run\tverb\n"
               "paris\tpropernoun\n"
               "blue\tadjective\n");
    const auto vocab = build_vocabulary(dir.file("freq.tsv"), dir.file("lex.tsv"), 1000);
    REQUIRE(vocab.size() == 1);
    REQUIRE(vocab[0].word == "run");
    REQUIRE(vocab[0].corpus_frequency == 1200);
    REQUIRE(vocab[0].pos_tag == PosTag::verb);
}

TEST_CASE("function words are filtered and can empty the vocabulary") {
    TempDir dir;
    write_text(dir.file("freq.tsv"), "the\t50000\n");
    write_text(dir.file("lex.tsv"), "the\tdet\n");
    REQUIRE_THROWS_AS(build_vocabulary(dir.file("freq.tsv"), dir.file("lex.tsv"), 1000),
                      InputError);
}

TEST_CASE("malformed records are reported with their line number") {
    TempDir dir;
    write_text(dir.file("freq.tsv"), "# comment\nok\t10\nbroken line without tab\n");
    write_text(dir.file("lex.tsv"), "ok\tnoun\n");
    REQUIRE_THROWS_WITH(build_vocabulary(dir.file("freq.tsv"), dir.file("lex.tsv"), 1),
                        ContainsSubstring(":3:"));

    write_text(dir.file("freq2.tsv"), "ok\tnot-a-number\n");
    REQUIRE_THROWS_WITH(build_vocabulary(dir.file("freq2.tsv"), dir.file("lex.tsv"), 1),
                        ContainsSubstring(":1:"));
}

TEST_CASE("vocabulary output is sorted and deterministic") {
    TempDir dir;
    write_text(dir.file("freq.tsv"), "zebra\t2000\napple\t3000\nmango\t1500\n");
    write_text(dir.file("lex.tsv"), "zebra\tnoun\napple\tnoun\nmango\tnoun\n");
    const auto a = build_vocabulary(dir.file("freq.tsv"), dir.file("lex.tsv"), 1000);
    const auto b = build_vocabulary(dir.file("freq.tsv"), dir.file("lex.tsv"), 1000);
    REQUIRE(a.size() == 3);
    REQUIRE(std::is_sorted(a.begin(), a.end(),
                           [](const auto& x, const auto& y) { return x.word < y.word; }));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].word == b[i].word);
}

namespace {

std::vector<VocabularyEntry> tiny_vocab(const std::vector<std::string>& words) {
    std::vector<VocabularyEntry> vocab;
    for (const auto& w : words) vocab.push_back({w, 5000, PosTag::noun});
    return vocab;
}

std::vector<std::string> tiny_snippets(std::size_t n, std::uint64_t seed) {
    const auto pool = testsupport::make_word_pool(200, seed);
    SplitMix64 g(seed);
    std::vector<std::string> snippets;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s;
        for (int w = 0; w < 20; ++w) {
            if (!s.empty()) s += " ";
            s += pool[g.next_below(pool.size())];
        }
        snippets.push_back(s);
    }
    return snippets;
}

}  // namespace

TEST_CASE("build_sectable assigns snippet embeddings as a bijection") {
    MockEmbeddingBackend backend(5, 32);
    const auto snippets = tiny_snippets(3, 99);
    const auto table = build_sectable(tiny_vocab({"alpha", "beta", "gamma"}), snippets, 1, backend);

    REQUIRE(table.size() == 3);
    REQUIRE(table.dimension == 32);
    REQUIRE(table.embedder_fingerprint == backend.fingerprint());

    std::vector<Embedding> table_vectors;
    for (const auto& [word, vec] : table.entries) table_vectors.push_back(vec);
    std::vector<Embedding> snippet_vectors;
    for (const auto& s : snippets) snippet_vectors.push_back(embed_text(backend, s));
    std::sort(table_vectors.begin(), table_vectors.end());
    std::sort(snippet_vectors.begin(), snippet_vectors.end());
    REQUIRE(table_vectors == snippet_vectors);
}

TEST_CASE("build_sectable is deterministic in the seed") {
    MockEmbeddingBackend backend(5, 16);
    const auto snippets = tiny_snippets(50, 123);
    std::vector<std::string> words = testsupport::make_word_pool(50, 7);
    const auto t1 = build_sectable(tiny_vocab(words), snippets, 1, backend);
    const auto t2 = build_sectable(tiny_vocab(words), snippets, 1, backend);
    REQUIRE(t1 == t2);
    REQUIRE(t1.table_id == t2.table_id);

    // Different seeds draw different permutations (verified directly on the
    // generator as well).
    const auto t3 = build_sectable(tiny_vocab(words), snippets, 2, backend);
    REQUIRE(!(t1 == t3));
    SplitMix64 g1(1), g2(2);
    REQUIRE(seeded_permutation(50, g1) != seeded_permutation(50, g2));
}

TEST_CASE("build_sectable requires enough snippets") {
    MockEmbeddingBackend backend(5, 16);
    REQUIRE_THROWS_AS(
        build_sectable(tiny_vocab({"a", "b", "c"}), tiny_snippets(2, 1), 1, backend),
        InputError);
}

TEST_CASE("save and load round-trip bit-exactly") {
    TempDir dir;
    MockEmbeddingBackend backend(5, 16);
    const auto table =
        build_sectable(tiny_vocab(testsupport::make_word_pool(10, 3)), tiny_snippets(10, 4), 42,
                       backend);
    const auto path = dir.file("table.pmrk");
    save_sectable(table, path);
    const SecretTable loaded = load_sectable(path);
    REQUIRE(loaded == table);
    REQUIRE(loaded.table_id == table.table_id);
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        REQUIRE(loaded.entries[i].first == table.entries[i].first);
        REQUIRE(loaded.entries[i].second == table.entries[i].second);  // exact floats
    }

    // Save the same table twice: identical bytes.
    save_sectable(table, dir.file("again.pmrk"));
    REQUIRE(read_file_bytes(path) == read_file_bytes(dir.file("again.pmrk")));
}

TEST_CASE("corrupted and truncated tables are rejected") {
    TempDir dir;
    MockEmbeddingBackend backend(5, 16);
    const auto table =
        build_sectable(tiny_vocab({"alpha", "beta", "gamma"}), tiny_snippets(3, 4), 7, backend);
    const auto path = dir.file("table.pmrk");
    save_sectable(table, path);
    std::string bytes = read_file_bytes(path);

    SECTION("flipped checksum byte") {
        bytes.back() = static_cast<char>(bytes.back() ^ 0x01);
        write_file_bytes(path, bytes);
        REQUIRE_THROWS_WITH(load_sectable(path), ContainsSubstring("checksum"));
    }
    SECTION("flipped body byte") {
        bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x40);
        write_file_bytes(path, bytes);
        REQUIRE_THROWS_WITH(load_sectable(path), ContainsSubstring("checksum"));
    }
    SECTION("truncated file") {
        write_file_bytes(path, bytes.substr(0, 3));
        REQUIRE_THROWS_AS(load_sectable(path), FormatError);
    }
    SECTION("wrong magic") {
        bytes[0] = 'X';
        write_file_bytes(path, bytes);
        REQUIRE_THROWS_WITH(load_sectable(path), ContainsSubstring("checksum"));
    }
}

TEST_CASE("version handling: v1 loads, later versions are refused") {
    TempDir dir;
    MockEmbeddingBackend backend(5, 16);
    const auto table =
        build_sectable(tiny_vocab({"alpha", "beta"}), tiny_snippets(2, 4), 7, backend);
    const auto path = dir.file("table.pmrk");
    save_sectable(table, path);

    // Current writer emits version 1 and the current reader accepts it.
    REQUIRE_NOTHROW(load_sectable(path));

    // Hand-build a version-2 file: same body, bumped version, fixed CRC.
    std::string body = read_checksummed(path);
    body[4] = 2;  // version u16 low byte, directly after the 4-byte magic
    write_checksummed(path, body);
    REQUIRE_THROWS_WITH(load_sectable(path), ContainsSubstring("version"));
}

TEST_CASE("serialized tables never contain the seed") {
    TempDir dir;
    MockEmbeddingBackend backend(5, 16);
    const std::uint64_t seed = 0x1122334455667788ull;
    const auto table =
        build_sectable(tiny_vocab({"alpha", "beta"}), tiny_snippets(2, 4), seed, backend);
    REQUIRE(table.seed == seed);
    const auto path = dir.file("table.pmrk");
    save_sectable(table, path);
    const std::string bytes = read_file_bytes(path);
    const unsigned char needle[] = {0x88, 0x77, 0x66, 0x55, 0x44, 0x33, 0x22, 0x11};
    REQUIRE(bytes.find(std::string(reinterpret_cast<const char*>(needle), 8)) ==
            std::string::npos);
    REQUIRE(load_sectable(path).seed == 0);
}

TEST_CASE("fingerprint mismatch is a key error") {
    MockEmbeddingBackend builder(5, 16);
    MockEmbeddingBackend other_seed(6, 16);
    MockEmbeddingBackend other_dim(5, 32);
    const auto table =
        build_sectable(tiny_vocab({"alpha", "beta"}), tiny_snippets(2, 4), 7, builder);
    REQUIRE_NOTHROW(require_fingerprint_match(table, builder));
    REQUIRE_THROWS_AS(require_fingerprint_match(table, other_seed), KeyError);
    REQUIRE_THROWS_AS(require_fingerprint_match(table, other_dim), KeyError);
}

TEST_CASE("word-embedding cache persists under its own magic") {
    TempDir dir;
    MockEmbeddingBackend backend(5, 16);
    WordEmbeddingCache cache;
    const auto vecs = cache.get_or_embed(backend, {"alpha", "beta"});
    REQUIRE(vecs.size() == 2);
    REQUIRE(cache.size() == 2);

    const auto path = dir.file("cache.pmwc");
    cache.save(path);
    WordEmbeddingCache loaded(path);
    REQUIRE(loaded.size() == 2);
    REQUIRE(loaded.fingerprint() == backend.fingerprint());

    // Cached values are returned verbatim without re-embedding.
    const auto again = loaded.get_or_embed(backend, {"beta", "alpha"});
    REQUIRE(again[0] == vecs[1]);
    REQUIRE(again[1] == vecs[0]);

    // A cache file is not a table file.
    REQUIRE_THROWS_WITH(load_sectable(path), ContainsSubstring("magic"));

    // Different embedder: refused.
    MockEmbeddingBackend other(6, 16);
    REQUIRE_THROWS_AS(loaded.get_or_embed(other, {"gamma"}), KeyError);
}

TEST_CASE("hubness histogram counts selection frequency") {
    std::vector<WatermarkWordList> lists;
    SECTION("same word in every list") {
        for (int i = 0; i < 10; ++i) {
            WatermarkWordList l;
            l.words = {"alpha"};
            lists.push_back(l);
        }
        const auto hist = hubness_report(lists);
        REQUIRE(hist.total_documents == 10);
        REQUIRE(hist.bins.at("alpha") == 10);
        REQUIRE(hist.share_above(0.2) == 1.0);
    }
    SECTION("disjoint lists") {
        for (int i = 0; i < 4; ++i) {
            WatermarkWordList l;
            l.words = {"w" + std::to_string(i)};
            lists.push_back(l);
        }
        const auto hist = hubness_report(lists);
        for (const auto& [word, count] : hist.bins) REQUIRE(count == 1);
    }
    SECTION("empty input") {
        REQUIRE_THROWS_AS(hubness_report({}), InputError);
    }
}
