#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "logsearch/text.hpp"

namespace logsearch {

// ---------------------------------------------------------------------------
// Relevance feedback

enum class JudgmentLevel { Term, Phrase };

inline std::string_view to_string(JudgmentLevel level) { return level == JudgmentLevel::Term ? "term" : "phrase"; }

inline JudgmentLevel parse_level(std::string_view name) {
    if (name == "term") {
        return JudgmentLevel::Term;
    }
    if (name == "phrase") {
        return JudgmentLevel::Phrase;
    }
    throw FormatError("unknown judgment level '" + std::string(name) + "' (expected term or phrase)");
}

struct FeedbackEvent {
    std::string assessor_id;
    std::string query_id;
    std::string record_id;
    JudgmentLevel level = JudgmentLevel::Term;
    bool relevant = false;
    std::int64_t timestamp = 0;  // epoch milliseconds
    std::string plan;            // plan id, or "ad-hoc"

    friend bool operator==(const FeedbackEvent&, const FeedbackEvent&) = default;

    auto key() const { return std::tie(assessor_id, query_id, record_id, level); }
};

inline nlohmann::json to_json(const FeedbackEvent& e) {
    nlohmann::json j{{"assessor_id", e.assessor_id}, {"query_id", e.query_id}, {"record_id", e.record_id},
                     {"level", std::string(to_string(e.level))}, {"relevant", e.relevant}, {"timestamp", e.timestamp}};
    if (!e.plan.empty()) {
        j["plan"] = e.plan;
    }
    return j;
}

inline FeedbackEvent feedback_from_json(const nlohmann::json& j) {
    auto str = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
            throw FormatError(std::string("feedback event needs a non-empty string '") + key + "'");
        }
        return j.at(key).get<std::string>();
    };
    FeedbackEvent e;
    e.assessor_id = str("assessor_id");
    e.query_id = str("query_id");
    e.record_id = str("record_id");
    e.level = parse_level(str("level"));
    if (!j.contains("relevant") || !j.at("relevant").is_boolean()) {
        throw FormatError("feedback event needs a boolean 'relevant'");
    }
    e.relevant = j.at("relevant").get<bool>();
    if (j.contains("timestamp")) {
        if (!j.at("timestamp").is_number_integer()) {
            throw FormatError("feedback timestamp must be an integer");
        }
        e.timestamp = j.at("timestamp").get<std::int64_t>();
    }
    if (j.contains("plan") && j.at("plan").is_string()) {
        e.plan = j.at("plan").get<std::string>();
    }
    return e;
}

inline std::vector<FeedbackEvent> parse_feedback_log(std::istream& in) {
    std::vector<FeedbackEvent> events;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) {
            continue;
        }
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw FormatError("malformed feedback JSON at line " + std::to_string(row));
        }
        events.push_back(feedback_from_json(j));
    }
    return events;
}

inline std::vector<FeedbackEvent> load_feedback_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open feedback log '" + path.string() + "'");
    }
    return parse_feedback_log(in);
}

/// Last write wins per (assessor, query, record, level): the newest timestamp,
/// and among equal timestamps the later event in the input. Output is sorted by key.
inline std::vector<FeedbackEvent> dedupe_events(const std::vector<FeedbackEvent>& events) {
    std::map<std::tuple<std::string, std::string, std::string, JudgmentLevel>, const FeedbackEvent*> latest;
    for (const auto& e : events) {
        auto k = std::make_tuple(e.assessor_id, e.query_id, e.record_id, e.level);
        auto it = latest.find(k);
        if (it == latest.end() || e.timestamp >= it->second->timestamp) {
            latest[k] = &e;
        }
    }
    std::vector<FeedbackEvent> out;
    out.reserve(latest.size());
    for (const auto& [_, e] : latest) {
        out.push_back(*e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Qrels and runs

/// query id -> record id -> grade
using QrelSet = std::map<std::string, std::map<std::string, int>>;

/// Grade of (query, record) = number of (assessor, level) votes marked relevant.
/// Judged-but-irrelevant pairs are kept with grade 0.
inline QrelSet fuse_votes(const std::vector<FeedbackEvent>& events) {
    QrelSet qrels;
    for (const auto& e : dedupe_events(events)) {
        qrels[e.query_id][e.record_id] += e.relevant ? 1 : 0;
    }
    return qrels;
}

inline void write_qrels(std::ostream& out, const QrelSet& qrels) {
    for (const auto& [q, docs] : qrels) {
        for (const auto& [d, grade] : docs) {
            out << q << " 0 " << d << ' ' << grade << '\n';
        }
    }
}

inline QrelSet parse_qrels(std::istream& in) {
    QrelSet qrels;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) {
            continue;
        }
        std::istringstream cells(line);
        std::string q, iter, d;
        long long grade = 0;
        if (!(cells >> q >> iter >> d >> grade) || grade < 0) {
            throw FormatError("malformed qrels line " + std::to_string(row) + ": expected 'query_id 0 record_id grade'");
        }
        qrels[q][d] = static_cast<int>(grade);
    }
    return qrels;
}

inline QrelSet load_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open qrels '" + path.string() + "'");
    }
    return parse_qrels(in);
}

struct RunEntry {
    std::string record_id;
    double score = 0.0;
};

struct RunFile {
    std::string tag = "run";
    std::map<std::string, std::vector<RunEntry>> queries;  // ranked lists

    bool empty() const {
        for (const auto& [_, list] : queries) {
            if (!list.empty()) {
                return false;
            }
        }
        return true;
    }
};

inline void write_run(std::ostream& out, const RunFile& run) {
    for (const auto& [q, list] : run.queries) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            std::ostringstream score;
            score.precision(17);
            score << list[i].score;
            out << q << " Q0 " << list[i].record_id << ' ' << (i + 1) << ' ' << score.str() << ' ' << run.tag << '\n';
        }
    }
}

/// Parses "query_id Q0 record_id rank score tag" lines. Ranks must run 1..n
/// per query and scores must not increase with rank.
inline RunFile parse_run(std::istream& in) {
    RunFile run;
    std::map<std::string, std::vector<std::pair<long long, RunEntry>>> raw;
    std::string line;
    std::size_t row = 0;
    bool tagged = false;
    while (std::getline(in, line)) {
        ++row;
        if (text::trim(line).empty()) {
            continue;
        }
        std::istringstream cells(line);
        std::string q, q0, d, tag;
        long long rank = 0;
        double score = 0.0;
        if (!(cells >> q >> q0 >> d >> rank >> score >> tag)) {
            throw FormatError("malformed run line " + std::to_string(row) +
                              ": expected 'query_id Q0 record_id rank score tag'");
        }
        if (!tagged) {
            run.tag = tag;
            tagged = true;
        }
        raw[q].push_back({rank, {d, score}});
    }
    for (auto& [q, list] : raw) {
        std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        auto& out = run.queries[q];
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (list[i].first != static_cast<long long>(i + 1)) {
                throw FormatError("run ranks for query '" + q + "' are not consecutive from 1");
            }
            if (i > 0 && list[i].second.score > list[i - 1].second.score) {
                throw FormatError("run scores for query '" + q + "' increase at rank " + std::to_string(i + 1));
            }
            out.push_back(list[i].second);
        }
    }
    return run;
}

inline RunFile load_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open run '" + path.string() + "'");
    }
    return parse_run(in);
}

// ---------------------------------------------------------------------------
// Metrics

struct CutoffMetrics {
    std::size_t cutoff = 0;
    double precision = 0.0;
    double map = 0.0;
    double ndcg = 0.0;
};

struct MetricReport {
    std::string run_tag;
    std::size_t query_count = 0;
    std::size_t queries_without_qrels = 0;
    double mrr = 0.0;
    double avg_retrieved = 0.0;
    std::vector<CutoffMetrics> at;

    const CutoffMetrics& cutoff(std::size_t n) const {
        for (const auto& c : at) {
            if (c.cutoff == n) {
                return c;
            }
        }
        throw Error("cutoff " + std::to_string(n) + " not in report");
    }
};

struct QueryMetrics {
    double reciprocal_rank = 0.0;
    std::vector<CutoffMetrics> at;
};

/// Metrics of one ranked list. Precision, AP and RR use binary relevance
/// (grade >= 1); nDCG uses the grade as linear gain. AP@N is normalized by
/// min(N, total relevant).
inline QueryMetrics evaluate_query(const std::vector<RunEntry>& ranked, const std::map<std::string, int>& grades,
                                   const std::vector<std::size_t>& cutoffs) {
    auto grade_of = [&](const std::string& id) {
        auto it = grades.find(id);
        return it == grades.end() ? 0 : it->second;
    };
    std::size_t total_relevant = 0;
    std::vector<int> ideal;
    for (const auto& [_, g] : grades) {
        if (g >= 1) {
            ++total_relevant;
        }
        ideal.push_back(g);
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());

    QueryMetrics m;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (grade_of(ranked[i].record_id) >= 1) {
            m.reciprocal_rank = 1.0 / static_cast<double>(i + 1);
            break;
        }
    }
    for (auto n : cutoffs) {
        CutoffMetrics c;
        c.cutoff = n;
        std::size_t hits = 0;
        double ap_sum = 0.0;
        double dcg = 0.0;
        for (std::size_t i = 0; i < n && i < ranked.size(); ++i) {
            int g = grade_of(ranked[i].record_id);
            if (g >= 1) {
                ++hits;
                ap_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
            }
            dcg += static_cast<double>(g) / std::log2(static_cast<double>(i) + 2.0);
        }
        double idcg = 0.0;
        for (std::size_t i = 0; i < n && i < ideal.size(); ++i) {
            idcg += static_cast<double>(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
        }
        c.precision = static_cast<double>(hits) / static_cast<double>(n);
        std::size_t denom = std::min(n, total_relevant);
        c.map = denom == 0 ? 0.0 : ap_sum / static_cast<double>(denom);
        c.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
        m.at.push_back(c);
    }
    return m;
}

/// Macro-averages per-query metrics over the run's queries (sorted order).
/// Queries missing from the qrels count as having no relevant records.
inline MetricReport evaluate_run(const RunFile& run, const QrelSet& qrels, const std::vector<std::size_t>& cutoffs = {5, 20}) {
    if (run.queries.empty()) {
        throw Error("cannot evaluate an empty run");
    }
    for (auto n : cutoffs) {
        if (n == 0) {
            throw Error("cutoffs must be >= 1");
        }
    }
    static const std::map<std::string, int> no_grades;
    MetricReport report;
    report.run_tag = run.tag;
    report.query_count = run.queries.size();
    for (auto n : cutoffs) {
        report.at.push_back({n, 0.0, 0.0, 0.0});
    }
    std::size_t retrieved = 0;
    for (const auto& [q, ranked] : run.queries) {
        auto it = qrels.find(q);
        if (it == qrels.end()) {
            ++report.queries_without_qrels;
        }
        auto m = evaluate_query(ranked, it == qrels.end() ? no_grades : it->second, cutoffs);
        report.mrr += m.reciprocal_rank;
        for (std::size_t k = 0; k < cutoffs.size(); ++k) {
            report.at[k].precision += m.at[k].precision;
            report.at[k].map += m.at[k].map;
            report.at[k].ndcg += m.at[k].ndcg;
        }
        retrieved += ranked.size();
    }
    auto nq = static_cast<double>(report.query_count);
    report.mrr /= nq;
    report.avg_retrieved = static_cast<double>(retrieved) / nq;
    for (auto& c : report.at) {
        c.precision /= nq;
        c.map /= nq;
        c.ndcg /= nq;
    }
    return report;
}

inline nlohmann::ordered_json to_json(const MetricReport& r) {
    nlohmann::ordered_json j{{"run", r.run_tag},
                             {"queries", r.query_count},
                             {"queries_without_qrels", r.queries_without_qrels},
                             {"avg_retrieved", r.avg_retrieved},
                             {"MRR", r.mrr}};
    for (const auto& c : r.at) {
        auto n = std::to_string(c.cutoff);
        j["P@" + n] = c.precision;
        j["mAP@" + n] = c.map;
        j["nDCG@" + n] = c.ndcg;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Agreement

/// Cohen's kappa for two aligned boolean label lists.
inline double cohens_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
    if (a.size() != b.size()) {
        throw Error("label lists differ in length: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    if (a.empty()) {
        throw Error("label lists are empty");
    }
    const auto n = static_cast<double>(a.size());
    double agree = 0.0, yes_a = 0.0, yes_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        agree += a[i] == b[i] ? 1.0 : 0.0;
        yes_a += a[i] ? 1.0 : 0.0;
        yes_b += b[i] ? 1.0 : 0.0;
    }
    double p_o = agree / n;
    double p_e = (yes_a / n) * (yes_b / n) + (1.0 - yes_a / n) * (1.0 - yes_b / n);
    if (p_e == 1.0) {
        return p_o == 1.0 ? 1.0 : 0.0;
    }
    return (p_o - p_e) / (1.0 - p_e);
}

struct LevelAgreement {
    JudgmentLevel level = JudgmentLevel::Term;
    std::size_t queries = 0;  // queries judged by at least two assessors
    std::size_t pairs = 0;
    std::optional<double> kappa;
};

/// Pools, per judgment level, the labels of the first two assessors (by id)
/// of every query over the records both judged, then computes kappa.
inline LevelAgreement kappa_for_level(const std::vector<FeedbackEvent>& events, JudgmentLevel level) {
    // query -> record -> assessor -> label
    std::map<std::string, std::map<std::string, std::map<std::string, bool>>> labels;
    std::map<std::string, std::set<std::string>> assessors;
    for (const auto& e : dedupe_events(events)) {
        if (e.level != level) {
            continue;
        }
        labels[e.query_id][e.record_id][e.assessor_id] = e.relevant;
        assessors[e.query_id].insert(e.assessor_id);
    }
    LevelAgreement out;
    out.level = level;
    std::vector<bool> a, b;
    for (const auto& [q, who] : assessors) {
        if (who.size() < 2) {
            continue;
        }
        auto first = *who.begin();
        auto second = *std::next(who.begin());
        std::size_t before = a.size();
        for (const auto& [_, by] : labels[q]) {
            auto ia = by.find(first);
            auto ib = by.find(second);
            if (ia != by.end() && ib != by.end()) {
                a.push_back(ia->second);
                b.push_back(ib->second);
            }
        }
        if (a.size() > before) {
            ++out.queries;
        }
    }
    out.pairs = a.size();
    if (!a.empty()) {
        out.kappa = cohens_kappa(a, b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Query assignment

/// Round-robin assignment: slot k = q * redundancy + r goes to assessor
/// k mod |assessors|, so each query lands on `redundancy` distinct assessors
/// and loads differ by at most one.
inline std::map<std::string, std::vector<std::string>> assign_queries(const std::vector<std::string>& query_ids,
                                                                      const std::vector<std::string>& assessor_ids,
                                                                      std::size_t per_assessor, std::size_t redundancy) {
    if (assessor_ids.empty() || redundancy == 0) {
        throw Error("need at least one assessor and redundancy >= 1");
    }
    if (std::set<std::string>(assessor_ids.begin(), assessor_ids.end()).size() != assessor_ids.size()) {
        throw Error("assessor ids must be unique");
    }
    if (redundancy > assessor_ids.size()) {
        throw Error("redundancy " + std::to_string(redundancy) + " exceeds the number of assessors (" +
                    std::to_string(assessor_ids.size()) + ")");
    }
    const std::size_t required = query_ids.size() * redundancy;
    const std::size_t capacity = assessor_ids.size() * per_assessor;
    if (capacity < required) {
        throw Error("infeasible assignment: capacity " + std::to_string(capacity) + " (" +
                    std::to_string(assessor_ids.size()) + " assessors x " + std::to_string(per_assessor) +
                    ") is below required " + std::to_string(required) + " (" + std::to_string(query_ids.size()) +
                    " queries x " + std::to_string(redundancy) + ")");
    }
    std::map<std::string, std::vector<std::string>> plan;
    for (const auto& a : assessor_ids) {
        plan[a];
    }
    std::size_t slot = 0;
    for (const auto& q : query_ids) {
        for (std::size_t r = 0; r < redundancy; ++r, ++slot) {
            plan[assessor_ids[slot % assessor_ids.size()]].push_back(q);
        }
    }
    return plan;
}

}  // namespace logsearch
