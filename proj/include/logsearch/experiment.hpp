#pragma once

#include <string>
#include <vector>

#include "logsearch/eval.hpp"
#include "logsearch/index.hpp"
#include "logsearch/search.hpp"
#include "logsearch/synthetic.hpp"

namespace logsearch {

/// Runs every query through one method and collects a run file. Queries that
/// parse to nothing contribute an empty ranked list.
inline RunFile run_queries(const std::vector<BenchmarkQuery>& queries, const Index& index,
                           const EmbeddingProvider& provider, const SearchConfig& config, std::string tag) {
    RunFile run;
    run.tag = std::move(tag);
    for (const auto& q : queries) {
        auto& list = run.queries[q.id];
        try {
            for (const auto& r : search(q.text, index, provider, config)) {
                list.push_back({r.record_id, r.score});
            }
        } catch (const QueryError&) {
            // counted as a query with no results
        }
    }
    return run;
}

inline std::string run_tag(Method method, bool expansion) {
    return std::string(to_string(method)) + (expansion ? "+ctx" : "");
}

struct MethodComparison {
    Method method;
    bool expansion;
    MetricReport report;
};

/// Evaluates the three methods with and without context expansion.
inline std::vector<MethodComparison> compare_methods(const std::vector<BenchmarkQuery>& queries, const QrelSet& truth,
                                                     const Index& index, const EmbeddingProvider& provider,
                                                     SearchConfig base = {}, const std::vector<std::size_t>& cutoffs = {5, 20}) {
    std::vector<MethodComparison> out;
    for (Method m : {Method::Semantic, Method::Bm25, Method::Keyword}) {
        for (bool expansion : {true, false}) {
            SearchConfig cfg = base;
            cfg.method = m;
            cfg.query_expansion = expansion;
            auto run = run_queries(queries, index, provider, cfg, run_tag(m, expansion));
            out.push_back({m, expansion, evaluate_run(run, truth, cutoffs)});
        }
    }
    return out;
}

}  // namespace logsearch
