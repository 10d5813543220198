#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "postmark/selection.hpp"
#include "postmark/wordcache.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace postmark;
using Catch::Matchers::WithinAbs;

TEST_CASE("count_words counts alphanumeric-bearing tokens") {
    REQUIRE(count_words("") == 0);
    REQUIRE(count_words("   \t\n ") == 0);
    REQUIRE(count_words("Hello, world!") == 2);
    REQUIRE(count_words("one-two three_four 5") == 3);
    REQUIRE(count_words("-- ... !!") == 0);

    std::string fifty;
    for (int i = 0; i < 50; ++i) fifty += "word ";
    REQUIRE(count_words(fifty) == 50);
}

TEST_CASE("target_word_count rounds half up and clamps to one") {
    std::string fifty;
    for (int i = 0; i < 50; ++i) fifty += "w ";
    REQUIRE(target_word_count(fifty, 0.10) == 5);  // the 10%-of-50 example

    std::string hundred;
    for (int i = 0; i < 100; ++i) hundred += "w ";
    REQUIRE(target_word_count(hundred, 0.12) == 12);

    REQUIRE(target_word_count("three word text", 0.12) == 1);  // 0.36 clamps up
    REQUIRE(target_word_count("a b c d", 0.125) == 1);         // 0.5 rounds up

    REQUIRE_THROWS_AS(target_word_count("", 0.1), InputError);
    REQUIRE_THROWS_AS(target_word_count("x", 0.0), InputError);
    REQUIRE_THROWS_AS(target_word_count("x", 1.5), InputError);
}

TEST_CASE("cosine on unit vectors") {
    const Embedding x = {1.0f, 0.0f, 0.0f};
    const Embedding y = {0.0f, 1.0f, 0.0f};
    Embedding neg = x;
    for (auto& v : neg) v = -v;

    REQUIRE_THAT(cosine(x, x), WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(cosine(x, y), WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(cosine(x, neg), WithinAbs(-1.0, 1e-12));
    REQUIRE_THROWS_AS(cosine(x, Embedding{1.0f, 0.0f}), InputError);
}

namespace {

// Embedding backend with hand-set vectors per exact input string.
class FixtureEmbeddingBackend : public EmbeddingBackend {
public:
    FixtureEmbeddingBackend(int dimension, std::map<std::string, Embedding> vectors)
        : dimension_(dimension), vectors_(std::move(vectors)) {}

    Embedding embed_raw(const std::string& text) const override {
        const auto it = vectors_.find(text);
        if (it == vectors_.end()) throw BackendError("fixture has no vector for: " + text);
        return it->second;
    }
    int dimension() const override { return dimension_; }
    std::string model_id() const override { return "fixture"; }

private:
    int dimension_;
    std::map<std::string, Embedding> vectors_;
};

Embedding basis(std::size_t dim, std::size_t axis) {
    Embedding v(dim, 0.0f);
    v[axis] = 1.0f;
    return v;
}

Embedding mix(const Embedding& a, const Embedding& b, double c) {
    return testsupport::with_cosine(a, b, c);
}

}  // namespace

// The "hotel" behavior: a word whose secret table vector lands closest to
// the text by chance is discarded by the semantic filter when its actual
// embedding is unrelated.
TEST_CASE("semantic filtering drops table-similar but semantically-unrelated words") {
    const std::size_t d = 8;
    const Embedding e_t = basis(d, 0);

    // 20-word text with ratio 0.1 -> k = 2; multiplier 2 -> k' = 4.
    std::string text;
    for (int i = 0; i < 20; ++i) text += "tok ";
    text.pop_back();

    // Table cosines rank w1 > w2 > w3 > w4 > w5; semantic cosines rank
    // w5 > w3 > w4 > w2 > w1. w5 never reaches the semantic stage (rank 5
    // at stage one, k' = 4); w1 reaches it and is filtered out.
    std::map<std::string, Embedding> vectors = {
        {text, e_t},
        {"w1", mix(e_t, basis(d, 1), 0.10)},
        {"w2", mix(e_t, basis(d, 2), 0.60)},
        {"w3", mix(e_t, basis(d, 3), 0.70)},
        {"w4", mix(e_t, basis(d, 4), 0.65)},
        {"w5", mix(e_t, basis(d, 5), 0.99)},
    };
    FixtureEmbeddingBackend backend(static_cast<int>(d), vectors);

    SecretTable table;
    table.embedder_fingerprint = backend.fingerprint();
    table.dimension = d;
    table.entries = {
        {"w1", mix(e_t, basis(d, 6), 0.90)},
        {"w2", mix(e_t, basis(d, 7), 0.80)},
        {"w3", mix(e_t, basis(d, 6), 0.70)},
        {"w4", mix(e_t, basis(d, 7), 0.60)},
        {"w5", mix(e_t, basis(d, 6), 0.50)},
    };
    table.table_id = "fixture-table";

    InsertionPolicy policy;
    policy.insertion_ratio = 0.1;
    policy.k_prime_multiplier = 2.0;

    const WatermarkWordList list = select_watermark_words(text, table, policy, backend);
    REQUIRE(list.k == 2);
    REQUIRE(list.k_prime == 4);
    REQUIRE(list.words == std::vector<std::string>{"w3", "w4"});
    REQUIRE_THAT(list.semantic_scores[0], WithinAbs(0.70, 1e-6));
    REQUIRE_THAT(list.semantic_scores[1], WithinAbs(0.65, 1e-6));
    REQUIRE_THAT(list.table_scores[0], WithinAbs(0.70, 1e-6));
    REQUIRE_THAT(list.table_scores[1], WithinAbs(0.60, 1e-6));
    REQUIRE(list.semantic_scores[0] >= list.semantic_scores[1]);
}

TEST_CASE("degenerate clamp returns the whole vocabulary ordered by semantic score") {
    MockEmbeddingBackend backend(3, 32);
    const auto pool = testsupport::make_word_pool(60, 5);
    std::vector<VocabularyEntry> vocab;
    for (int i = 0; i < 5; ++i) vocab.push_back({pool[i], 5000, PosTag::noun});
    SplitMix64 g(8);
    std::vector<std::string> snippets;
    for (int i = 0; i < 5; ++i) {
        snippets.push_back(testsupport::make_document(pool, g, 20, 25));
    }
    const SecretTable table = build_sectable(vocab, snippets, 4, backend);

    // 50-word text at ratio 0.1 -> k = 5 = |table|; multiplier 1 -> k' = 5.
    SplitMix64 dg(9);
    const std::string text = testsupport::make_document(pool, dg, 50, 50);
    InsertionPolicy policy;
    policy.insertion_ratio = 0.1;
    policy.k_prime_multiplier = 1.0;

    const WatermarkWordList list = select_watermark_words(text, table, policy, backend);
    REQUIRE(list.words.size() == 5);
    std::set<std::string> returned(list.words.begin(), list.words.end());
    for (const auto& v : vocab) REQUIRE(returned.contains(v.word));
    for (std::size_t i = 1; i < list.semantic_scores.size(); ++i) {
        REQUIRE(list.semantic_scores[i - 1] >= list.semantic_scores[i]);
    }
}

TEST_CASE("requesting more words than the table holds clamps the list") {
    MockEmbeddingBackend backend(3, 32);
    const auto pool = testsupport::make_word_pool(40, 5);
    std::vector<VocabularyEntry> vocab;
    for (int i = 0; i < 3; ++i) vocab.push_back({pool[i], 5000, PosTag::noun});
    SplitMix64 g(8);
    std::vector<std::string> snippets;
    for (int i = 0; i < 3; ++i) snippets.push_back(testsupport::make_document(pool, g, 20, 25));
    const SecretTable table = build_sectable(vocab, snippets, 4, backend);

    SplitMix64 dg(10);
    const std::string text = testsupport::make_document(pool, dg, 100, 100);
    InsertionPolicy policy;  // 12% of 100 = 12 > 3
    const WatermarkWordList list = select_watermark_words(text, table, policy, backend);
    REQUIRE(list.k == 12);
    REQUIRE(list.words.size() == 3);
}

TEST_CASE("selection is deterministic and cache-transparent") {
    MockEmbeddingBackend backend(11, 64);
    const auto pool = testsupport::make_word_pool(500, 13);
    std::vector<VocabularyEntry> vocab;
    for (int i = 0; i < 120; ++i) vocab.push_back({pool[i], 5000, PosTag::noun});
    SplitMix64 g(14);
    std::vector<std::string> snippets;
    for (int i = 0; i < 120; ++i) snippets.push_back(testsupport::make_document(pool, g, 25, 30));
    const SecretTable table = build_sectable(vocab, snippets, 21, backend);

    SplitMix64 dg(15);
    const std::string text = testsupport::make_document(pool, dg, 90, 110);
    InsertionPolicy policy;

    const auto a = select_watermark_words(text, table, policy, backend);
    const auto b = select_watermark_words(text, table, policy, backend);
    REQUIRE(a.words == b.words);
    REQUIRE(a.table_scores == b.table_scores);
    REQUIRE(a.semantic_scores == b.semantic_scores);
    REQUIRE(a.source_text_hash == b.source_text_hash);

    WordEmbeddingCache cache;
    const auto c = select_watermark_words(text, table, policy, backend, &cache);
    const auto d2 = select_watermark_words(text, table, policy, backend, &cache);
    REQUIRE(c.words == a.words);
    REQUIRE(d2.words == a.words);
    REQUIRE(c.semantic_scores == a.semantic_scores);
}

TEST_CASE("selection equals the brute-force reference on random inputs") {
    const std::uint64_t embedder_seed = 19;
    const int dim = 64;
    MockEmbeddingBackend backend(embedder_seed, dim);
    const auto pool = testsupport::make_word_pool(700, 23);
    std::vector<VocabularyEntry> vocab;
    for (int i = 0; i < 200; ++i) vocab.push_back({pool[i], 5000, PosTag::noun});
    SplitMix64 g(24);
    std::vector<std::string> snippets;
    for (int i = 0; i < 200; ++i) snippets.push_back(testsupport::make_document(pool, g, 25, 30));
    const SecretTable table = build_sectable(vocab, snippets, 31, backend);

    InsertionPolicy policy;
    SplitMix64 dg(25);
    for (int trial = 0; trial < 10; ++trial) {
        const std::string text = testsupport::make_document(pool, dg, 60, 140);
        const auto got = select_watermark_words(text, table, policy, backend);
        const auto expected = testsupport::brute_force_select(
            text, table, embedder_seed, dim, policy.insertion_ratio, policy.k_prime_multiplier);
        REQUIRE(got.words == expected.words);
        REQUIRE(got.table_scores == expected.table_scores);
        REQUIRE(got.semantic_scores == expected.semantic_scores);
    }
}

TEST_CASE("positive scaling of table vectors before normalization is a no-op") {
    MockEmbeddingBackend backend(29, 32);
    const auto pool = testsupport::make_word_pool(300, 31);
    std::vector<VocabularyEntry> vocab;
    for (int i = 0; i < 80; ++i) vocab.push_back({pool[i], 5000, PosTag::noun});
    SplitMix64 g(32);
    std::vector<std::string> snippets;
    for (int i = 0; i < 80; ++i) snippets.push_back(testsupport::make_document(pool, g, 25, 30));
    SecretTable table = build_sectable(vocab, snippets, 41, backend);

    SecretTable scaled = table;
    for (auto& [word, vec] : scaled.entries) {
        for (auto& x : vec) x *= 2.5f;
        l2_normalize(vec);
    }

    SplitMix64 dg(33);
    const std::string text = testsupport::make_document(pool, dg, 90, 110);
    InsertionPolicy policy;
    const auto a = select_watermark_words(text, table, policy, backend);
    const auto b = select_watermark_words(text, scaled, policy, backend);
    REQUIRE(a.words == b.words);
}

TEST_CASE("mock-pipeline hubness snapshot: selections stay spread out") {
    // 1000-word table over a 3000-word pool, 500 documents. Mirrors the
    // shape analysis: the large majority of selected words should appear in
    // fewer than 5% of documents.
    MockEmbeddingBackend backend(17, 64);
    const auto pool = testsupport::make_word_pool(3000, 21);
    std::vector<VocabularyEntry> vocab;
    for (int i = 0; i < 1000; ++i) vocab.push_back({pool[i], 5000, PosTag::noun});
    SplitMix64 sg(55);
    std::vector<std::string> snippets;
    for (int i = 0; i < 1000; ++i) {
        snippets.push_back(testsupport::make_document(pool, sg, 28, 32));
    }
    const SecretTable table = build_sectable(vocab, snippets, 9, backend);

    InsertionPolicy policy;
    WordEmbeddingCache cache;
    SplitMix64 dg(77);
    std::vector<WatermarkWordList> lists;
    for (int i = 0; i < 500; ++i) {
        lists.push_back(select_watermark_words(testsupport::make_document(pool, dg, 80, 120),
                                               table, policy, backend, &cache));
    }
    const auto hist = hubness_report(lists);
    REQUIRE(hist.share_below(0.05) > 0.5);  // the qualitative shape claim
    REQUIRE(hist.share_below(0.05) > 0.9);  // frozen: observed 1.0 on this corpus
}

TEST_CASE("selection rejects bad inputs") {
    MockEmbeddingBackend backend(3, 32);
    SecretTable empty_table;
    empty_table.embedder_fingerprint = backend.fingerprint();
    InsertionPolicy policy;
    REQUIRE_THROWS_AS(select_watermark_words("text", empty_table, policy, backend), InputError);

    SecretTable other;
    other.embedder_fingerprint = "someone-else:32";
    other.dimension = 32;
    other.entries = {{"word", Embedding(32, 0.0f)}};
    REQUIRE_THROWS_AS(select_watermark_words("text", other, policy, backend), KeyError);

    InsertionPolicy bad;
    bad.insertion_ratio = 0.0;
    REQUIRE_THROWS_AS(select_watermark_words("text", other, bad, backend), InputError);
}
