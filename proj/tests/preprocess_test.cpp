#include <gtest/gtest.h>

#include <random>

#include "logsearch/preprocess.hpp"
#include "test_util.hpp"

using namespace logsearch;

namespace {

std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
    std::vector<std::string> out;
    for (const auto& t : tokens) {
        out.push_back(t.surface);
    }
    return out;
}

Dictionary reactor_dict() { return Dictionary({{"PLANT1-R105.12", "R105.12", "Reaktor"}}); }

std::string random_text(std::mt19937& rng) {
    static const std::vector<std::string> pieces{"Pumpe", "P5002", "R105.12", "PLANT1-R105.12", " ", "  ", ".", "-",
                                                 "_",     "/",     ":",       "42,5",           "ä", "€", "\n",
                                                 "a.b",   "x-",    "-y",      "Leckage",        "die", "7"};
    std::uniform_int_distribution<std::size_t> len(0, 25), pick(0, pieces.size() - 1);
    std::string out;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) {
        out += pieces[pick(rng)];
    }
    return out;
}

// Byte-level subsequence test: every byte of `needle` appears in order in `hay`.
bool is_subsequence(const std::string& needle, const std::string& hay) {
    std::size_t j = 0;
    for (char c : hay) {
        if (j < needle.size() && needle[j] == c) {
            ++j;
        }
    }
    return j == needle.size();
}

}  // namespace

TEST(Tokenize, WhitespaceSplit) {
    EXPECT_EQ(surfaces(tokenize("Pumpe P5002 defekt")), (std::vector<std::string>{"Pumpe", "P5002", "defekt"}));
}

TEST(Tokenize, InnerSeparatorsStayInsideCodes) {
    auto tokens = tokenize("R105.12: Leckage.");
    EXPECT_EQ(surfaces(tokens), (std::vector<std::string>{"R105.12", "Leckage"}));
    EXPECT_EQ(tokens[0].begin, 0u);
    EXPECT_EQ(tokens[0].end, 7u);
    EXPECT_EQ(tokens[1].begin, 9u);
    EXPECT_EQ(surfaces(tokenize("PLANT1-R105.12 a/b x_y -z q-")),
              (std::vector<std::string>{"PLANT1-R105.12", "a/b", "x_y", "z", "q"}));
    EXPECT_EQ(surfaces(tokenize("a..b")), (std::vector<std::string>{"a", "b"}));
}

TEST(Tokenize, Empty) {
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_TRUE(tokenize(" .,;: ").empty());
}

TEST(Tokenize, Utf8Letters) {
    auto tokens = tokenize("Überdruck größer");
    EXPECT_EQ(surfaces(tokens), (std::vector<std::string>{"Überdruck", "größer"}));
    EXPECT_EQ(tokens[1].begin, std::string("Überdruck ").size());
}

TEST(Tokenize, SpansReconstructSurfacesProperty) {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        auto source = random_text(rng);
        auto tokens = tokenize(source);
        std::size_t prev_end = 0;
        std::vector<bool> covered(source.size(), false);
        for (const auto& t : tokens) {
            ASSERT_LE(prev_end, t.begin);
            ASSERT_LT(t.begin, t.end);
            ASSERT_EQ(source.substr(t.begin, t.end - t.begin), t.surface);
            for (std::size_t b = t.begin; b < t.end; ++b) {
                covered[b] = true;
            }
            prev_end = t.end;
        }
        // Every alphanumeric code point is inside some token.
        std::size_t i = 0;
        while (i < source.size()) {
            auto cp = text::decode(source, i);
            if (text::is_alnum(cp.value)) {
                ASSERT_TRUE(covered[i]) << "'" << source << "' byte " << i;
            }
            i += cp.length;
        }
    }
}

TEST(Classify, Examples) {
    EXPECT_EQ(classify_token("P5002"), TokenKind::Code);
    EXPECT_EQ(classify_token("R105.12"), TokenKind::Code);
    EXPECT_EQ(classify_token("42,5"), TokenKind::Numeric);
    EXPECT_EQ(classify_token("2023"), TokenKind::Numeric);
    EXPECT_EQ(classify_token("Ventil"), TokenKind::Word);
}

TEST(Classify, PartitionProperty) {
    std::mt19937 rng(6);
    for (int trial = 0; trial < 300; ++trial) {
        for (const auto& t : tokenize(random_text(rng))) {
            bool digit = text::has_digit(t.surface);
            bool letter = text::has_letter(t.surface);
            TokenKind expected = digit && letter ? TokenKind::Code : digit ? TokenKind::Numeric : TokenKind::Word;
            ASSERT_EQ(t.kind, expected) << t.surface;
            ASSERT_EQ(classify_token(t.surface), t.kind);
        }
    }
}

TEST(Normalize, StopwordsRemoved) {
    NormalizationConfig cfg;
    cfg.add_stopword("die");
    auto out = normalize(tokenize("die Pumpe"), cfg);
    EXPECT_EQ(surfaces(out), std::vector<std::string>{"Pumpe"});
    // Case-insensitive
    EXPECT_EQ(surfaces(normalize(tokenize("Die Pumpe"), cfg)), std::vector<std::string>{"Pumpe"});
}

TEST(Normalize, LemmaTableKeepsSurface) {
    NormalizationConfig cfg;
    cfg.lemma_table = {{"Pumpen", "Pumpe"}};
    auto out = normalize(tokenize("Pumpen"), cfg);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].normalized, "Pumpe");
    EXPECT_EQ(out[0].surface, "Pumpen");
}

TEST(Normalize, CodesUntouchedProperty) {
    NormalizationConfig cfg = default_normalization();
    cfg.lemma_table = {{"R105.12", "X"}, {"42,5", "Y"}, {"P5002", "Z"}};
    cfg.add_stopword("R105.12");
    cfg.add_stopword("7");
    auto out = normalize(tokenize("R105.12"), cfg);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].normalized, "R105.12");

    std::mt19937 rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        auto tokens = tokenize(random_text(rng));
        std::vector<Token> kept;
        for (const auto& t : tokens) {
            if (t.kind != TokenKind::Word) {
                kept.push_back(t);
            }
        }
        std::vector<Token> after;
        for (const auto& t : normalize(tokens, cfg)) {
            if (t.kind != TokenKind::Word) {
                after.push_back(t);
            }
        }
        ASSERT_EQ(after.size(), kept.size());
        for (std::size_t k = 0; k < kept.size(); ++k) {
            ASSERT_EQ(after[k].normalized, kept[k].surface);
            ASSERT_EQ(after[k].begin, kept[k].begin);
        }
    }
}

TEST(ExpandRecord, AttributePrefixesTitle) {
    auto r = testutil::record("r1", 1, "Leckage behoben", {"PLANT1-R105.12"});
    auto out = expand_record(r, reactor_dict());
    EXPECT_EQ(out.record.title, "Reaktor R105.12");
    EXPECT_EQ(out.record.body, r.body);
    EXPECT_EQ(out.report.attributes_expanded, 1u);
    EXPECT_EQ(out.report.mentions_expanded, 0u);

    r.title = "Nachtschicht";
    EXPECT_EQ(expand_record(r, reactor_dict()).record.title, "Reaktor R105.12 Nachtschicht");
}

TEST(ExpandRecord, InTextShortIdGetsDescription) {
    auto r = testutil::record("r1", 1, "R105.12 Leckage");
    auto out = expand_record(r, reactor_dict());
    EXPECT_EQ(out.record.body[0].text, "Reaktor R105.12 Leckage");
    EXPECT_EQ(out.report.mentions_expanded, 1u);
}

TEST(ExpandRecord, NothingToExpand) {
    auto r = testutil::record("r1", 1, "Temperatur 42,5 Grad");
    auto out = expand_record(r, reactor_dict());
    EXPECT_EQ(out.record, r);
    r.attributes = {"PLANT1-UNKNOWN"};
    out = expand_record(r, reactor_dict());
    EXPECT_EQ(out.record, r);
    EXPECT_EQ(out.report.unknown_attributes, std::vector<std::string>{"PLANT1-UNKNOWN"});
}

TEST(ExpandQuery, Examples) {
    auto dict = reactor_dict();
    EXPECT_EQ(expand_query_text("R105.12 Leckage", dict), "Reaktor R105.12 Leckage");
    EXPECT_EQ(expand_query_text("Temperatur", dict), "Temperatur");
    EXPECT_EQ(expand_query_text("PLANT1-R105.12", dict), "Reaktor R105.12 PLANT1-R105.12");
    EXPECT_EQ(expand_query_text("r105.12", dict), "Reaktor r105.12");
    EXPECT_EQ(expand_query_text("R105.12", Dictionary{}), "R105.12");
}

TEST(ExpandRecord, IdempotentAndLosslessProperty) {
    Dictionary dict({{"PLANT1-R105.12", "R105.12", "Reaktor"},
                     {"PLANT1-P5002", "P5002", "Pumpe"},
                     {"PLANT1-V7", "V7", "Ventil Nord"}});
    std::mt19937 rng(9);
    std::vector<std::string> attrs{"PLANT1-R105.12", "PLANT1-P5002", "PLANT1-V7", "PLANT1-X"};
    for (int trial = 0; trial < 300; ++trial) {
        Record r = testutil::record("r", 1, random_text(rng));
        r.title = random_text(rng);
        for (int a = 0, n = static_cast<int>(rng() % 3); a < n; ++a) {
            r.attributes.push_back(attrs[rng() % attrs.size()]);
        }
        auto once = expand_record(r, dict).record;
        auto twice = expand_record(once, dict).record;
        ASSERT_EQ(once, twice) << r.title << " | " << r.body[0].text;
        ASSERT_TRUE(is_subsequence(r.title, once.title));
        ASSERT_TRUE(is_subsequence(r.body[0].text, once.body[0].text));
        ASSERT_EQ(once.attributes, r.attributes);
    }
}
