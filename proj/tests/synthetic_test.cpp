#include <gtest/gtest.h>

#include "logsearch/corpus.hpp"
#include "logsearch/preprocess.hpp"
#include "logsearch/synthetic.hpp"
#include "test_util.hpp"

using namespace logsearch;

TEST(Synthetic, DeterministicPerSeed) {
    EXPECT_EQ(serialize(generate_synthetic_corpus(7, 100, 10)), serialize(generate_synthetic_corpus(7, 100, 10)));
    EXPECT_NE(serialize(generate_synthetic_corpus(7, 100, 10)), serialize(generate_synthetic_corpus(8, 100, 10)));
}

TEST(Synthetic, Shape) {
    auto bench = generate_synthetic_corpus(7, 500, 40);
    EXPECT_EQ(bench.records.size(), 500u);
    EXPECT_EQ(bench.queries.size(), 50u);
    EXPECT_EQ(bench.dictionary.size(), 40u);
    std::set<std::string> ids;
    for (const auto& r : bench.records) {
        ids.insert(r.id);
        for (const auto& a : r.attributes) {
            EXPECT_TRUE(Dictionary(bench.dictionary).find_long(a)) << a;
        }
    }
    EXPECT_EQ(ids.size(), 500u);
    for (const auto& e : bench.dictionary) {
        EXPECT_EQ(e.long_id, "PLANT1-" + e.short_id);
    }
    EXPECT_THROW(generate_synthetic_corpus(1, 9, 10), Error);
    EXPECT_THROW(generate_synthetic_corpus(1, 100, 1), Error);
}

TEST(Synthetic, EveryQueryHasRelevantRecords) {
    for (std::uint64_t seed : {1u, 7u, 42u}) {
        auto bench = generate_synthetic_corpus(seed, 200, 15);
        for (const auto& q : bench.queries) {
            ASSERT_TRUE(bench.truth.count(q.id)) << seed << " " << q.id;
            const auto& docs = bench.truth.at(q.id);
            ASSERT_TRUE(std::any_of(docs.begin(), docs.end(), [](const auto& kv) { return kv.second > 0; }));
            for (const auto& [_, g] : docs) {
                // Two simulated assessors, two levels.
                ASSERT_TRUE(g == 2 || g == 4) << g;
            }
        }
    }
}

TEST(Synthetic, MixesSurfaceForms) {
    auto bench = generate_synthetic_corpus(7, 300, 20);
    std::size_t shortenings = 0, numbers = 0, short_ids = 0;
    Dictionary dict(bench.dictionary);
    for (const auto& r : bench.records) {
        for (const auto& t : tokenize(r.full_text())) {
            numbers += t.kind == TokenKind::Numeric;
            short_ids += dict.find_short(t.surface) ? 1 : 0;
        }
        const std::string body = r.full_text();
        for (std::size_t i = 1; i < body.size(); ++i) {
            if (body[i] == '.' && std::isalpha(static_cast<unsigned char>(body[i - 1])) &&
                (i + 1 == body.size() || body[i + 1] == ' ' || body[i + 1] == '\n')) {
                ++shortenings;
            }
        }
    }
    EXPECT_GT(shortenings, 30u);
    EXPECT_GT(numbers, 30u);
    EXPECT_GT(short_ids, 100u);
}

TEST(Synthetic, ShortenKeepsPrefix) {
    SplitMixRng rng(5);
    for (const std::string word : {"Leckage", "Überdruckventil", "Wartungsarbeit"}) {
        for (int k = 0; k < 20; ++k) {
            auto s = synthetic::shorten(word, rng);
            ASSERT_EQ(s.back(), '.');
            auto stem = s.substr(0, s.size() - 1);
            ASSERT_EQ(word.rfind(stem, 0), 0u) << s;
            auto n = text::code_points(stem).size();
            ASSERT_LE(n + 3, text::code_points(word).size());
            ASSERT_LE(n, 8u);
        }
    }
}

TEST(Synthetic, SaveWritesLoadableFiles) {
    testutil::TempDir dir;
    auto bench = generate_synthetic_corpus(3, 50, 6);
    save_benchmark(bench, dir.path());
    EXPECT_EQ(load_corpus(dir / "corpus.tsv", CorpusFormat::Delimited), bench.records);
    EXPECT_EQ(load_queries(dir / "queries.tsv"), bench.queries);
    EXPECT_EQ(load_qrels(dir / "truth.qrels"), bench.truth);
    EXPECT_EQ(load_dictionary(dir / "dictionary.tsv").size(), bench.dictionary.size());
}
