#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "logsearch/corpus.hpp"
#include "logsearch/embedding.hpp"
#include "logsearch/eval.hpp"
#include "logsearch/record.hpp"

namespace logsearch {

struct BenchmarkQuery {
    std::string id;
    std::string text;

    friend bool operator==(const BenchmarkQuery&, const BenchmarkQuery&) = default;
};

/// Desk-scale stand-in for a plant log database with generated relevance truth.
struct SyntheticBenchmark {
    std::vector<Record> records;
    std::vector<FunctionalLocationEntry> dictionary;
    std::vector<BenchmarkQuery> queries;
    QrelSet truth;
    std::map<std::string, std::string> lemma_table;  // inflected form -> lemma
};

/// Deterministic 64-bit generator (splitmix64 stream). Bounded draws use plain
/// modulo so output does not depend on the standard library's distributions.
class SplitMixRng {
  public:
    explicit SplitMixRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return splitmix64(state_);
    }
    std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next() % n); }
    double uniform() { return unit_interval(next()); }
    bool chance(double p) { return uniform() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items[below(items.size())];
    }

  private:
    std::uint64_t state_;
};

namespace synthetic {

struct Concept {
    std::string lemma;
    std::string inflected;
};

struct EquipmentType {
    std::string description;
    char prefix;
};

inline const std::vector<Concept>& concepts() {
    static const std::vector<Concept> items = {
        {"Temperaturschwankung", "Temperaturschwankungen"},
        {"Druckabfall", "Druckabfälle"},
        {"Leckage", "Leckagen"},
        {"Verstopfung", "Verstopfungen"},
        {"Überhitzung", "Überhitzungen"},
        {"Vibration", "Vibrationen"},
        {"Störung", "Störungen"},
        {"Korrosion", "Korrosionen"},
        {"Ablagerung", "Ablagerungen"},
        {"Kalibrierung", "Kalibrierungen"},
        {"Reinigung", "Reinigungen"},
        {"Wartung", "Wartungen"},
        {"Probenahme", "Probenahmen"},
        {"Stillstand", "Stillstände"},
        {"Füllstandsmessung", "Füllstandsmessungen"},
        {"Durchflussmessung", "Durchflussmessungen"},
        {"Dichtungswechsel", "Dichtungswechsels"},
        {"Filterwechsel", "Filterwechsels"},
        {"Schaumbildung", "Schaumbildungen"},
        {"Verschmutzung", "Verschmutzungen"},
        {"Stromausfall", "Stromausfälle"},
        {"Kühlwassermangel", "Kühlwassermangels"},
        {"Druckerhöhung", "Druckerhöhungen"},
        {"Geräuschentwicklung", "Geräuschentwicklungen"},
        {"Produktwechsel", "Produktwechsels"},
        {"Viskositätsabweichung", "Viskositätsabweichungen"},
        {"Notabschaltung", "Notabschaltungen"},
        {"Sichtprüfung", "Sichtprüfungen"},
        {"Motorüberlastung", "Motorüberlastungen"},
        {"Lagerschaden", "Lagerschäden"},
    };
    return items;
}

inline const std::vector<EquipmentType>& equipment_types() {
    static const std::vector<EquipmentType> items = {
        {"Reaktor", 'R'},  {"Pumpe", 'P'},      {"Ventil", 'V'},    {"Kessel", 'K'},
        {"Behälter", 'B'}, {"Wärmetauscher", 'W'}, {"Kompressor", 'C'}, {"Rührwerk", 'M'},
        {"Zentrifuge", 'Z'}, {"Trockner", 'T'},  {"Kolonne", 'D'},   {"Filter", 'F'},
    };
    return items;
}

inline const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> items = {
        "behoben",   "geprüft",      "erledigt",   "informiert", "Schichtleiter", "Auftrag",  "erstellt",
        "beobachtet", "Kontrolle",   "gemeldet",   "Bereitschaft", "Instandhaltung", "Protokoll", "Werkstatt",
        "Austausch", "Ersatzteile",  "bestellt",   "Frühschicht", "Spätschicht",  "Nachtschicht", "Anlage",
        "läuft",     "wieder",       "normal",     "Messwert",   "erhöht",        "leicht",   "stark",
        "Ursache",   "unklar",       "Rücksprache", "Labor",     "Operator",      "vermerkt", "weiterhin",
    };
    return items;
}

inline const std::vector<std::string>& filler_stopwords() {
    static const std::vector<std::string> items = {"die", "der", "an", "im", "und", "bei", "mit", "nach"};
    return items;
}

/// Truncation of `word` to 5..8 code points (at most length-3) plus a trailing dot.
inline std::string shorten(const std::string& word, SplitMixRng& rng) {
    auto cps = text::code_points(word);
    std::size_t hi = std::min<std::size_t>(8, cps.size() - 3);
    std::size_t lo = std::min<std::size_t>(5, hi);
    std::size_t k = lo + rng.below(hi - lo + 1);
    std::string out;
    for (std::size_t i = 0; i < k; ++i) {
        out += cps[i];
    }
    return out + ".";
}

struct Location {
    std::size_t type;
    FunctionalLocationEntry entry;
};

// What a generated record mentions, for truth construction.
struct Mentions {
    std::set<std::size_t> concepts_by_field[2];   // 0 = Meldung, 1 = Massnahme
    std::set<std::size_t> locations_by_field[2];  // in-text mentions
    std::set<std::size_t> attribute_locations;
};

struct QuerySpec {
    std::size_t concept_id;
    std::size_t type;
    std::optional<std::size_t> location;  // set when the query names a specific short ID
};

inline int grade(const QuerySpec& q, const Mentions& m, const std::vector<Location>& locations) {
    auto matches = [&](std::size_t loc) { return q.location ? loc == *q.location : locations[loc].type == q.type; };
    bool concept_anywhere = false;
    bool equipment_anywhere = false;
    bool phrase = false;
    for (int f = 0; f < 2; ++f) {
        bool c = m.concepts_by_field[f].count(q.concept_id) != 0;
        bool e = std::any_of(m.locations_by_field[f].begin(), m.locations_by_field[f].end(), matches);
        concept_anywhere = concept_anywhere || c;
        equipment_anywhere = equipment_anywhere || e;
        phrase = phrase || (c && e);
    }
    equipment_anywhere = equipment_anywhere ||
                         std::any_of(m.attribute_locations.begin(), m.attribute_locations.end(), matches);
    if (!(concept_anywhere && equipment_anywhere)) {
        return 0;
    }
    // Two simulated assessors vote on the term level, and on the phrase level
    // when the concept and the equipment share a field.
    return phrase ? 4 : 2;
}

}  // namespace synthetic

/// Generates records, a location dictionary, queries and graded truth. A pure
/// function of its arguments. Long IDs are "PLANT1-" + short ID.
inline SyntheticBenchmark generate_synthetic_corpus(std::uint64_t seed, std::size_t n_records, std::size_t n_locations) {
    using namespace synthetic;
    if (n_records < 10) {
        throw Error("synthetic corpus needs at least 10 records");
    }
    if (n_locations < 2) {
        throw Error("synthetic corpus needs at least 2 locations");
    }
    SplitMixRng rng(seed);
    SyntheticBenchmark bench;
    const auto& cons = concepts();
    const auto& types = equipment_types();

    for (const auto& c : cons) {
        bench.lemma_table[c.inflected] = c.lemma;
    }

    // Locations: types round-robin, unique short IDs in two surface styles.
    std::vector<Location> locations;
    std::set<std::string> used;
    std::map<std::size_t, std::vector<std::size_t>> by_type;
    for (std::size_t i = 0; i < n_locations; ++i) {
        std::size_t type = i % types.size();
        std::string short_id;
        do {
            short_id = std::string(1, types[type].prefix);
            if (rng.chance(0.5)) {
                short_id += std::to_string(100 + rng.below(900)) + "." + std::to_string(10 + rng.below(90));
            } else {
                short_id += std::to_string(1000 + rng.below(9000));
            }
        } while (!used.insert(short_id).second);
        locations.push_back({type, {"PLANT1-" + short_id, short_id, types[type].description}});
        by_type[type].push_back(i);
        bench.dictionary.push_back(locations.back().entry);
    }
    std::vector<std::size_t> present_types;
    for (const auto& [t, _] : by_type) {
        present_types.push_back(t);
    }

    // Queries: distinct (concept, type) pairs; some name a specific short ID.
    const std::size_t n_queries = std::clamp<std::size_t>(n_records / 10, 1, 50);
    std::vector<QuerySpec> specs;
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    while (specs.size() < n_queries) {
        std::size_t c = rng.below(cons.size());
        std::size_t t = present_types[rng.below(present_types.size())];
        if (!pairs.insert({c, t}).second) {
            continue;
        }
        QuerySpec q{c, t, std::nullopt};
        std::string equipment = types[t].description;
        if (rng.chance(0.2)) {
            q.location = rng.pick(by_type[t]);
            equipment = locations[*q.location].entry.short_id;
        }
        std::string text = rng.chance(0.5) ? equipment + " " + cons[c].lemma : cons[c].lemma + " " + equipment;
        char id[32];
        std::snprintf(id, sizeof(id), "q%02zu", specs.size() + 1);
        bench.queries.push_back({id, text});
        specs.push_back(q);
    }

    auto concept_surface = [&](std::size_t c) {
        double u = rng.uniform();
        if (u < 0.25) {
            return cons[c].lemma;
        }
        if (u < 0.50) {
            return cons[c].inflected;
        }
        return shorten(cons[c].lemma, rng);
    };
    auto filler = [&](std::vector<std::string>& words, std::size_t count) {
        for (std::size_t k = 0; k < count; ++k) {
            if (rng.chance(0.25)) {
                words.push_back(rng.pick(filler_stopwords()));
            }
            words.push_back(rng.pick(filler_words()));
        }
    };
    auto other_type = [&](std::size_t t) {
        if (present_types.size() < 2) {
            return t;
        }
        std::size_t o = t;
        while (o == t) {
            o = present_types[rng.below(present_types.size())];
        }
        return o;
    };

    std::vector<Mentions> mentions;
    for (std::size_t i = 0; i < n_records; ++i) {
        // Pick the record's main concept and location.
        std::size_t concept_id = 0;
        std::size_t loc = 0;
        double u = rng.uniform();
        if (i < specs.size() || u < 0.20) {
            const auto& q = i < specs.size() ? specs[i] : rng.pick(specs);
            concept_id = q.concept_id;
            loc = q.location ? *q.location : rng.pick(by_type[q.type]);
        } else if (u < 0.45) {
            const auto& q = rng.pick(specs);
            concept_id = q.concept_id;
            loc = rng.pick(by_type[other_type(q.type)]);
        } else if (u < 0.65) {
            const auto& q = rng.pick(specs);
            do {
                concept_id = rng.below(cons.size());
            } while (concept_id == q.concept_id);
            loc = q.location ? *q.location : rng.pick(by_type[q.type]);
        } else {
            concept_id = rng.below(cons.size());
            loc = rng.below(locations.size());
        }

        Mentions m;
        std::vector<std::string> meldung, massnahme;
        Record r;
        char id[32];
        std::snprintf(id, sizeof(id), "r%05zu", i + 1);
        r.id = id;
        r.timestamp = 1600000000 + static_cast<std::int64_t>(rng.below(365 * 86400));

        // Equipment mention: attribute only, in-text short ID, or description + ID.
        double mode = rng.uniform();
        bool in_text = mode >= 0.35;
        bool with_attribute = mode < 0.35 || rng.chance(0.5);
        std::size_t field = rng.chance(0.6) ? 0 : 1;
        if (with_attribute) {
            r.attributes.push_back(locations[loc].entry.long_id);
            m.attribute_locations.insert(loc);
        }
        std::vector<std::string> equipment_words;
        if (in_text) {
            if (mode >= 0.80) {
                equipment_words.push_back(locations[loc].entry.description);
            }
            equipment_words.push_back(locations[loc].entry.short_id);
            m.locations_by_field[field].insert(loc);
        }

        if (rng.chance(0.3)) {
            meldung.push_back(rng.pick(filler_stopwords()));
        }
        if (field == 0) {
            meldung.insert(meldung.end(), equipment_words.begin(), equipment_words.end());
        }
        meldung.push_back(concept_surface(concept_id));
        m.concepts_by_field[0].insert(concept_id);
        filler(meldung, 1 + rng.below(3));
        if (rng.chance(0.3)) {
            meldung.push_back(std::to_string(10 + rng.below(90)) + "," + std::to_string(rng.below(10)));
            meldung.push_back(rng.chance(0.5) ? "bar" : "Grad");
        }

        if (field == 1) {
            massnahme.insert(massnahme.end(), equipment_words.begin(), equipment_words.end());
        }
        if (rng.chance(0.2)) {
            std::size_t second = rng.below(cons.size());
            massnahme.push_back(concept_surface(second));
            m.concepts_by_field[1].insert(second);
        }
        filler(massnahme, 1 + rng.below(3));

        if (rng.chance(0.3)) {
            r.title = rng.pick(filler_words());
        }
        r.body.push_back({"Meldung", text::join(meldung, " ")});
        r.body.push_back({"Massnahme", text::join(massnahme, " ")});
        bench.records.push_back(std::move(r));
        mentions.push_back(std::move(m));
    }

    for (std::size_t q = 0; q < specs.size(); ++q) {
        for (std::size_t i = 0; i < bench.records.size(); ++i) {
            int g = grade(specs[q], mentions[i], locations);
            if (g > 0) {
                bench.truth[bench.queries[q].id][bench.records[i].id] = g;
            }
        }
    }
    return bench;
}

inline void write_queries(std::ostream& out, const std::vector<BenchmarkQuery>& queries) {
    for (const auto& q : queries) {
        out << q.id << '\t' << q.text << '\n';
    }
}

/// Reads "query_id<TAB>text" lines.
inline std::vector<BenchmarkQuery> parse_queries(std::istream& in) {
    std::vector<BenchmarkQuery> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (text::trim(line).empty()) {
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw FormatError("queries line " + std::to_string(row) + ": expected 'query_id<TAB>text'");
        }
        out.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return out;
}

inline std::vector<BenchmarkQuery> load_queries(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open queries '" + path.string() + "'");
    }
    return parse_queries(in);
}

/// Writes corpus.tsv, dictionary.tsv, queries.tsv, truth.qrels and lemmas.tsv.
inline void save_benchmark(const SyntheticBenchmark& bench, const std::filesystem::path& dir,
                           CorpusFormat format = CorpusFormat::Delimited) {
    std::filesystem::create_directories(dir);
    save_corpus(dir / (format == CorpusFormat::Delimited ? "corpus.tsv" : "corpus.jsonl"), bench.records, format);
    save_dictionary(dir / "dictionary.tsv", bench.dictionary);
    {
        std::ofstream out(dir / "queries.tsv", std::ios::binary);
        write_queries(out, bench.queries);
    }
    {
        std::ofstream out(dir / "truth.qrels", std::ios::binary);
        write_qrels(out, bench.truth);
    }
    {
        std::ofstream out(dir / "lemmas.tsv", std::ios::binary);
        for (const auto& [surface, lemma] : bench.lemma_table) {
            out << surface << '\t' << lemma << '\n';
        }
    }
}

/// Single-string rendering of a benchmark, used for determinism checks.
inline std::string serialize(const SyntheticBenchmark& bench) {
    std::ostringstream out;
    write_corpus(out, bench.records, CorpusFormat::JsonLines);
    write_dictionary(out, bench.dictionary);
    write_queries(out, bench.queries);
    write_qrels(out, bench.truth);
    for (const auto& [surface, lemma] : bench.lemma_table) {
        out << surface << '\t' << lemma << '\n';
    }
    return out.str();
}

}  // namespace logsearch
