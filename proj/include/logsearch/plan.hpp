#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "logsearch/eval.hpp"
#include "logsearch/index.hpp"
#include "logsearch/search.hpp"
#include "logsearch/synthetic.hpp"

namespace logsearch {

struct PlanQuery {
    std::string id;
    std::string text;
    std::map<std::string, std::vector<std::string>> results;  // method -> frozen record ids
};

/// Query assignment plus frozen result lists, so every assessor of a query
/// judges the same ranking.
struct AssessmentPlan {
    std::string id;
    std::map<std::string, std::vector<std::string>> assignments;  // assessor -> query ids
    std::map<std::string, PlanQuery> queries;

    bool has_query(const std::string& query_id) const { return queries.count(query_id) != 0; }
};

inline nlohmann::json to_json(const AssessmentPlan& plan) {
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& [id, q] : plan.queries) {
        queries.push_back({{"id", q.id}, {"text", q.text}, {"results", q.results}});
    }
    return {{"id", plan.id}, {"assignments", plan.assignments}, {"queries", queries}};
}

inline AssessmentPlan plan_from_json(const nlohmann::json& j) {
    AssessmentPlan plan;
    try {
        plan.id = j.at("id").get<std::string>();
        plan.assignments = j.at("assignments").get<std::map<std::string, std::vector<std::string>>>();
        for (const auto& q : j.at("queries")) {
            PlanQuery pq;
            pq.id = q.at("id").get<std::string>();
            pq.text = q.at("text").get<std::string>();
            pq.results = q.at("results").get<std::map<std::string, std::vector<std::string>>>();
            plan.queries.emplace(pq.id, std::move(pq));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed assessment plan: ") + e.what());
    }
    for (const auto& [assessor, ids] : plan.assignments) {
        for (const auto& q : ids) {
            if (!plan.has_query(q)) {
                throw FormatError("assessment plan assigns unknown query '" + q + "' to '" + assessor + "'");
            }
        }
    }
    return plan;
}

inline AssessmentPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open assessment plan '" + path.string() + "'");
    }
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw FormatError("assessment plan is not valid JSON");
    }
    return plan_from_json(j);
}

inline void save_plan(const AssessmentPlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write assessment plan '" + path.string() + "'");
    }
    out << to_json(plan).dump(2) << '\n';
}

/// Assigns queries to assessors and freezes the top `page_size` results of
/// every method for every query.
inline AssessmentPlan build_plan(std::string plan_id, const std::vector<BenchmarkQuery>& queries,
                                 const std::vector<std::string>& assessors, std::size_t per_assessor,
                                 std::size_t redundancy, const Index& index, const EmbeddingProvider& provider,
                                 const std::vector<Method>& methods = {Method::Semantic}, SearchConfig config = {}) {
    AssessmentPlan plan;
    plan.id = std::move(plan_id);
    std::vector<std::string> ids;
    for (const auto& q : queries) {
        ids.push_back(q.id);
    }
    plan.assignments = assign_queries(ids, assessors, per_assessor, redundancy);
    for (const auto& q : queries) {
        PlanQuery pq{q.id, q.text, {}};
        for (Method m : methods) {
            config.method = m;
            auto& list = pq.results[std::string(to_string(m))];
            try {
                for (const auto& r : search(q.text, index, provider, config)) {
                    list.push_back(r.record_id);
                }
            } catch (const QueryError&) {
                // frozen as an empty list
            }
        }
        plan.queries.emplace(q.id, std::move(pq));
    }
    return plan;
}

}  // namespace logsearch
