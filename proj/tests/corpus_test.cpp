#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <sstream>

#include "logsearch/corpus.hpp"
#include "logsearch/synthetic.hpp"
#include "test_util.hpp"

using namespace logsearch;

namespace {

std::vector<Record> parse_tsv(const std::string& s) {
    std::istringstream in(s);
    return parse_corpus(in, CorpusFormat::Delimited);
}

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

// Random text over an alphabet that exercises escaping and multi-byte UTF-8.
std::string random_text(std::mt19937& rng, std::size_t max_len) {
    static const std::vector<std::string> alphabet{"a", "Z", "7", " ", "\t", "\n", "\r", "\\", ";", ",", "\"",
                                                   "ä", "ß", "€", ".", "-", "R105.12", "Pumpe"};
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string out;
    for (std::size_t i = 0, n = len(rng); i < n; ++i) {
        out += alphabet[pick(rng)];
    }
    return out;
}

std::vector<Record> random_collection(std::mt19937& rng) {
    std::uniform_int_distribution<int> n_records(0, 12);
    std::uniform_int_distribution<int> n_attrs(0, 3);
    std::uniform_int_distribution<std::int64_t> ts(0, 2'000'000'000);
    std::vector<Record> out;
    for (int i = 0, n = n_records(rng); i < n; ++i) {
        Record r;
        r.id = "r" + std::to_string(i) + "_" + random_text(rng, 3);
        r.timestamp = ts(rng);
        r.title = random_text(rng, 20);
        for (int a = 0, na = n_attrs(rng); a < na; ++a) {
            r.attributes.push_back("PLANT1-P" + std::to_string(rng() % 1000));
        }
        r.body = {{"Meldung", random_text(rng, 40)}, {"Massnahme", random_text(rng, 40)}};
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

TEST(CorpusLoad, ThreeValidRowsPreserveOrder) {
    auto records = parse_tsv(
        "id\ttimestamp\ttitle\tattributes\tMeldung\n"
        "r3\t300\tSchicht\tPLANT1-R105.12\tLeckage\n"
        "r1\t100\t\t\tPumpe P5002 defekt\n"
        "r2\t200\tNotiz\tPLANT1-A;PLANT1-B\tok\n");
    ASSERT_EQ(records.size(), 3u);
    EXPECT_EQ(records[0].id, "r3");
    EXPECT_EQ(records[1].id, "r1");
    EXPECT_EQ(records[2].id, "r2");
    EXPECT_EQ(records[0].attributes, std::vector<std::string>{"PLANT1-R105.12"});
    EXPECT_EQ(records[2].attributes, (std::vector<std::string>{"PLANT1-A", "PLANT1-B"}));
    EXPECT_TRUE(records[1].attributes.empty());
    ASSERT_EQ(records[1].body.size(), 1u);
    EXPECT_EQ(records[1].body[0].name, "Meldung");
    EXPECT_EQ(records[1].body[0].text, "Pumpe P5002 defekt");
    EXPECT_EQ(records[2].timestamp, 200);
}

TEST(CorpusLoad, DuplicateIdNamesIdAndBothRows) {
    auto msg = error_of([] {
        parse_tsv("id\ttimestamp\ttitle\tattributes\n"
                  "r1\t1\ta\t\n"
                  "r2\t2\tb\t\n"
                  "r1\t3\tc\t\n");
    });
    EXPECT_NE(msg.find("'r1'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("row 4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
}

TEST(CorpusLoad, NegativeTimestampRejectedWithRow) {
    auto msg = error_of([] {
        parse_tsv("id\ttimestamp\ttitle\tattributes\n"
                  "r1\t1\ta\t\n"
                  "r2\t-5\tb\t\n");
    });
    EXPECT_NE(msg.find("invalid timestamp"), std::string::npos) << msg;
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;

    std::istringstream in(R"({"id":"r1","timestamp":-5})");
    msg = error_of([&] { parse_corpus(in, CorpusFormat::JsonLines); });
    EXPECT_NE(msg.find("invalid timestamp"), std::string::npos) << msg;
    EXPECT_NE(msg.find("row 1"), std::string::npos) << msg;
}

TEST(CorpusLoad, MissingIdAndBadUtf8Rejected) {
    EXPECT_THROW(parse_tsv("id\ttimestamp\ttitle\tattributes\n\t1\ta\t\n"), FormatError);
    EXPECT_THROW(parse_tsv("id\ttimestamp\ttitle\tattributes\nr1\t1\t\xff\xfe\t\n"), FormatError);
    EXPECT_THROW(parse_tsv("id\ttitle\n"), FormatError);
    EXPECT_THROW(parse_tsv("id\ttimestamp\ttitle\tattributes\nr1\t1\ta\n"), FormatError);
}

TEST(CorpusLoad, JsonBodyAsObjectOrArray) {
    std::istringstream in(
        R"({"id":"a","timestamp":5,"title":"T","body":[{"name":"Meldung","text":"x"}]})"
        "\n\n"
        R"({"id":"b","timestamp":"6","body":{"Meldung":"y","Massnahme":"z"}})"
        "\n");
    auto records = parse_corpus(in, CorpusFormat::JsonLines);
    ASSERT_EQ(records.size(), 2u);
    EXPECT_EQ(records[0].body, (std::vector<Field>{{"Meldung", "x"}}));
    EXPECT_EQ(records[1].timestamp, 6);
    EXPECT_EQ(records[1].body, (std::vector<Field>{{"Meldung", "y"}, {"Massnahme", "z"}}));
}

TEST(CorpusLoad, RoundTripBothFormatsProperty) {
    std::mt19937 rng(20240611);
    for (int trial = 0; trial < 200; ++trial) {
        auto records = random_collection(rng);
        for (auto format : {CorpusFormat::Delimited, CorpusFormat::JsonLines}) {
            std::ostringstream out;
            write_corpus(out, records, format);
            std::istringstream in(out.str());
            auto back = parse_corpus(in, format);
            ASSERT_EQ(back, records) << "trial " << trial;
            // Saving again yields the same bytes.
            std::ostringstream again;
            write_corpus(again, back, format);
            ASSERT_EQ(again.str(), out.str());
        }
    }
}

TEST(CorpusLoad, CommaDelimitedWithEscapes) {
    std::vector<Record> records{testutil::record("r1", 10, "a, b; \\ c")};
    std::ostringstream out;
    write_corpus(out, records, CorpusFormat::Delimited, ',');
    std::istringstream in(out.str());
    EXPECT_EQ(parse_corpus(in, CorpusFormat::Delimited, ','), records);
}

TEST(CorpusLoad, FileRoundTrip) {
    testutil::TempDir dir;
    std::vector<Record> records{testutil::record("r1", 1, "Leckage an P5002", {"PLANT1-P5002"}),
                                testutil::record("r2", 2, "Temp. 42,5 Grad")};
    save_corpus(dir / "c.jsonl", records, CorpusFormat::JsonLines);
    save_corpus(dir / "c.tsv", records, CorpusFormat::Delimited);
    EXPECT_EQ(load_corpus(dir / "c.jsonl"), records);
    EXPECT_EQ(load_corpus(dir / "c.tsv"), records);
    EXPECT_THROW(load_corpus(dir / "missing.tsv"), Error);
}

TEST(Dictionary, SingleRow) {
    std::istringstream in("long_id\tshort_id\tdescription\nPLANT1-R105.12\tR105.12\tReaktor\n");
    auto entries = parse_dictionary(in);
    ASSERT_EQ(entries.size(), 1u);
    EXPECT_EQ(entries[0], (FunctionalLocationEntry{"PLANT1-R105.12", "R105.12", "Reaktor"}));
    Dictionary dict(entries);
    ASSERT_NE(dict.find_long("plant1-r105.12"), nullptr);
    ASSERT_NE(dict.find_short("r105.12"), nullptr);
    EXPECT_EQ(dict.find_short("R105.12")->description, "Reaktor");
    EXPECT_EQ(dict.find_short("R105.13"), nullptr);
}

TEST(Dictionary, DuplicateLongIdRejected) {
    std::istringstream in(
        "long_id\tshort_id\tdescription\nPLANT1-R105.12\tR105.12\tReaktor\nPLANT1-R105.12\tR1\tKessel\n");
    EXPECT_THROW(parse_dictionary(in), FormatError);
    EXPECT_THROW(Dictionary({{"A", "a", "x"}, {"a", "b", "y"}}), FormatError);
}

TEST(Dictionary, HeaderOnlyIsEmpty) {
    std::istringstream in("long_id\tshort_id\tdescription\n");
    EXPECT_TRUE(parse_dictionary(in).empty());
    std::istringstream blank("");
    EXPECT_TRUE(parse_dictionary(blank).empty());
}

TEST(Dictionary, EmptyDescriptionRejected) {
    std::istringstream in("long_id\tshort_id\tdescription\nPLANT1-X1\tX1\t  \n");
    EXPECT_THROW(parse_dictionary(in), FormatError);
}

TEST(Dictionary, SaveLoadRoundTrip) {
    testutil::TempDir dir;
    std::vector<FunctionalLocationEntry> entries{{"PLANT1-R105.12", "R105.12", "Reaktor"},
                                                 {"PLANT1-P5002", "P5002", "Pumpe\tmit Tab"}};
    save_dictionary(dir / "d.tsv", entries);
    EXPECT_EQ(load_dictionary(dir / "d.tsv"), entries);
}

TEST(CorpusStatsTest, LengthBuckets) {
    std::vector<Record> records{testutil::record("a", 1, std::string(10, 'x')),
                                testutil::record("b", 2, std::string(150, 'y'))};
    auto s = corpus_stats(records, 100);
    EXPECT_EQ(s.record_count, 2u);
    EXPECT_EQ(s.length_histogram, (std::map<std::size_t, std::size_t>{{0, 1}, {100, 1}}));
}

TEST(CorpusStatsTest, LengthCountsCodePoints) {
    // 4 code points, 8 bytes
    auto s = corpus_stats({testutil::record("a", 1, "äöüß")}, 5);
    EXPECT_EQ(s.length_histogram, (std::map<std::size_t, std::size_t>{{0, 1}}));
}

TEST(CorpusStatsTest, TokenKindShares) {
    auto s = corpus_stats({testutil::record("a", 1, "P5002 defekt")}, 100);
    EXPECT_EQ(s.token_count, 2u);
    EXPECT_DOUBLE_EQ(s.token_kind_shares.code, 0.5);
    EXPECT_DOUBLE_EQ(s.token_kind_shares.word, 0.5);
    EXPECT_DOUBLE_EQ(s.token_kind_shares.numeric, 0.0);
}

TEST(CorpusStatsTest, EmptyCollection) {
    auto s = corpus_stats({}, 10);
    EXPECT_EQ(s.record_count, 0u);
    EXPECT_EQ(s.token_count, 0u);
    EXPECT_TRUE(s.length_histogram.empty());
    EXPECT_THROW(corpus_stats({}, 0), Error);
}

TEST(CorpusStatsTest, SharesSumToOneProperty) {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        auto records = random_collection(rng);
        auto s = corpus_stats(records, 10);
        if (s.token_count == 0) {
            continue;
        }
        double sum = s.token_kind_shares.word + s.token_kind_shares.code + s.token_kind_shares.numeric;
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    auto bench = generate_synthetic_corpus(3, 200, 10);
    auto s = corpus_stats(bench.records, 25);
    EXPECT_NEAR(s.token_kind_shares.word + s.token_kind_shares.code + s.token_kind_shares.numeric, 1.0, 1e-9);
    std::size_t total = 0;
    for (const auto& [_, n] : s.length_histogram) {
        total += n;
    }
    EXPECT_EQ(total, bench.records.size());
}
