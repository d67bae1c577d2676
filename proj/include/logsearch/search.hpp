#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "logsearch/embedding.hpp"
#include "logsearch/index.hpp"
#include "logsearch/preprocess.hpp"

namespace logsearch {

class QueryError : public Error {
  public:
    using Error::Error;
};

enum class Method { Semantic, Bm25, Keyword };
enum class SortOrder { Relevance, Time };

inline std::string_view to_string(Method m) {
    switch (m) {
    case Method::Semantic:
        return "semantic";
    case Method::Bm25:
        return "bm25";
    case Method::Keyword:
        return "keyword";
    }
    return "?";
}

inline Method parse_method(std::string_view name) {
    if (name == "semantic") {
        return Method::Semantic;
    }
    if (name == "bm25") {
        return Method::Bm25;
    }
    if (name == "keyword") {
        return Method::Keyword;
    }
    throw QueryError("unknown method '" + std::string(name) + "' (expected semantic, bm25 or keyword)");
}

inline SortOrder parse_sort(std::string_view name) {
    if (name == "relevance") {
        return SortOrder::Relevance;
    }
    if (name == "time") {
        return SortOrder::Time;
    }
    throw QueryError("unknown sort '" + std::string(name) + "' (expected relevance or time)");
}

struct SearchConfig {
    std::size_t K = 200;  // semantic candidates kept after the document-similarity pass
    std::size_t page_size = 20;
    bool query_expansion = true;
    Method method = Method::Semantic;
    SortOrder sort = SortOrder::Relevance;

    void validate() const {
        if (page_size < 1 || page_size > K) {
            throw QueryError("page size must be in [1, K=" + std::to_string(K) + "], got " + std::to_string(page_size));
        }
    }
};

inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;
inline constexpr double kBm25Threshold = 0.15;

struct Query {
    std::string raw;
    std::set<std::string> exact_terms;         // case-folded
    std::vector<std::string> semantic_terms;   // normalized, appearance order, unique
    Vector vector;
};

struct SearchResult {
    std::string record_id;
    std::size_t doc = 0;
    std::int64_t timestamp = 0;
    double doc_sim = 0.0;
    double term_sim = 0.0;
    double score = 0.0;
    std::size_t rank = 0;
};

/// Score descending, newer first, then record id.
inline bool result_before(const SearchResult& a, const SearchResult& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    if (a.timestamp != b.timestamp) {
        return a.timestamp > b.timestamp;
    }
    return a.record_id < b.record_id;
}

inline void assign_ranks(std::vector<SearchResult>& results) {
    for (std::size_t i = 0; i < results.size(); ++i) {
        results[i].rank = i + 1;
    }
}

/// Harmonic mean of two similarities, 0 when both vanish.
inline double harmonic_mean(double a, double b) { return a + b == 0.0 ? 0.0 : 2.0 * a * b / (a + b); }

// ---------------------------------------------------------------------------
// Query parsing

namespace detail {

struct QuoteSplit {
    std::string text;                      // raw with paired quotes blanked
    std::set<std::string> forced_surfaces;  // folded tokens found inside quotes
};

inline QuoteSplit split_quotes(std::string_view raw) {
    QuoteSplit out{std::string(raw), {}};
    std::size_t open = std::string::npos;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '"') {
            continue;
        }
        if (open == std::string::npos) {
            open = i;
            continue;
        }
        for (const auto& t : tokenize(raw.substr(open + 1, i - open - 1))) {
            out.forced_surfaces.insert(text::fold(t.surface));
        }
        out.text[open] = ' ';
        out.text[i] = ' ';
        open = std::string::npos;
    }
    return out;
}

}  // namespace detail

/// Splits a query into exact-match terms (digit-containing or quoted) and
/// semantic terms (Word and Code), after optional context expansion.
inline Query parse_query(std::string_view raw, const Dictionary& dictionary, const NormalizationConfig& normalization,
                         const EmbeddingProvider& provider, const SearchConfig& config = {}) {
    if (text::trim(raw).empty()) {
        throw QueryError("empty query");
    }
    Query q;
    q.raw = std::string(raw);
    auto split = detail::split_quotes(raw);
    std::string body = config.query_expansion ? expand_query_text(split.text, dictionary) : split.text;

    std::set<std::string> seen;
    for (auto& t : tokenize(body)) {
        bool forced = split.forced_surfaces.count(text::fold(t.surface)) != 0;
        if (t.kind == TokenKind::Word && !forced && normalization.is_stopword(t.surface)) {
            continue;
        }
        auto normalized = normalize({t}, NormalizationConfig{{}, normalization.lemma_table, normalization.preserve_case});
        const auto& term = normalized.front().normalized;
        if (forced) {
            q.exact_terms.insert(text::fold(term));
            continue;
        }
        if (t.kind != TokenKind::Word) {
            q.exact_terms.insert(text::fold(term));
        }
        if (t.kind != TokenKind::Numeric && seen.insert(term).second) {
            q.semantic_terms.push_back(term);
        }
    }
    if (q.exact_terms.empty() && q.semantic_terms.empty()) {
        throw QueryError("empty query");
    }
    q.vector = embed_query(q.semantic_terms, provider);
    return q;
}

inline Query parse_query(std::string_view raw, const Index& index, const EmbeddingProvider& provider,
                         const SearchConfig& config = {}) {
    return parse_query(raw, index.dictionary(), index.config().normalization, provider, config);
}

// ---------------------------------------------------------------------------
// Semantic retrieval

/// Exact-match filter: AND over the exact terms present in the vocabulary;
/// every document when none is present.
inline std::vector<std::size_t> retrieve_candidates(const Query& query, const Index& index) {
    std::vector<const Postings*> lists;
    for (const auto& term : query.exact_terms) {
        if (const auto* p = index.exact_postings_for(term)) {
            lists.push_back(p);
        }
    }
    std::vector<std::size_t> out;
    if (lists.empty()) {
        out.resize(index.doc_count());
        for (std::size_t d = 0; d < out.size(); ++d) {
            out[d] = d;
        }
        return out;
    }
    std::sort(lists.begin(), lists.end(), [](const Postings* a, const Postings* b) { return a->size() < b->size(); });
    Postings acc = *lists.front();
    for (std::size_t k = 1; k < lists.size() && !acc.empty(); ++k) {
        Postings next;
        std::set_intersection(acc.begin(), acc.end(), lists[k]->begin(), lists[k]->end(), std::back_inserter(next));
        acc = std::move(next);
    }
    out.assign(acc.begin(), acc.end());
    return out;
}

/// Mean over query terms of the best (clamped) cosine to any document term.
inline double term_similarity(const std::vector<std::string>& query_terms, const std::vector<std::string>& doc_terms,
                              const EmbeddingProvider& provider) {
    if (query_terms.empty() || doc_terms.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& qt : query_terms) {
        auto qv = provider.vector(qt);
        double best = 0.0;
        for (const auto& dt : doc_terms) {
            best = std::max(best, cosine(qv, provider.vector(dt)));
        }
        sum += std::clamp(best, 0.0, 1.0);
    }
    return sum / static_cast<double>(query_terms.size());
}

/// Second stage: keep the K most similar candidates by document cosine, score
/// them by the harmonic mean of document and term similarity. Queries without
/// semantic terms fall back to newest-first.
inline std::vector<SearchResult> rank(const Query& query, const std::vector<std::size_t>& candidates, const Index& index,
                                      const EmbeddingProvider& provider, const SearchConfig& config = {}) {
    std::vector<SearchResult> results;
    results.reserve(candidates.size());
    for (auto d : candidates) {
        SearchResult r;
        r.doc = d;
        r.record_id = index.record(d).id;
        r.timestamp = index.timestamp(d);
        results.push_back(std::move(r));
    }
    if (query.semantic_terms.empty()) {
        std::sort(results.begin(), results.end(), result_before);
        if (results.size() > config.page_size) {
            results.resize(config.page_size);
        }
        assign_ranks(results);
        return results;
    }

    for (auto& r : results) {
        r.doc_sim = cosine(query.vector, index.doc_vector(r.doc));
    }
    auto by_doc_sim = [](const SearchResult& a, const SearchResult& b) {
        if (a.doc_sim != b.doc_sim) {
            return a.doc_sim > b.doc_sim;
        }
        if (a.timestamp != b.timestamp) {
            return a.timestamp > b.timestamp;
        }
        return a.record_id < b.record_id;
    };
    if (results.size() > config.K) {
        std::partial_sort(results.begin(), results.begin() + static_cast<std::ptrdiff_t>(config.K), results.end(),
                          by_doc_sim);
        results.resize(config.K);
    }
    for (auto& r : results) {
        r.term_sim = term_similarity(query.semantic_terms, index.doc_terms(r.doc), provider);
        r.score = harmonic_mean(std::clamp(r.doc_sim, 0.0, 1.0), r.term_sim);
    }
    std::sort(results.begin(), results.end(), result_before);
    if (results.size() > config.page_size) {
        results.resize(config.page_size);
    }
    assign_ranks(results);
    return results;
}

inline std::vector<SearchResult> semantic_search(std::string_view raw, const Index& index,
                                                 const EmbeddingProvider& provider, const SearchConfig& config = {}) {
    index.check_provider(provider);
    auto query = parse_query(raw, index, provider, config);
    return rank(query, retrieve_candidates(query, index), index, provider, config);
}

// ---------------------------------------------------------------------------
// Baselines

namespace detail {

inline std::string baseline_text(std::string_view raw, const Index& index, const SearchConfig& config) {
    return config.query_expansion ? expand_query_text(raw, index.dictionary()) : std::string(raw);
}

inline void finish_baseline(std::vector<SearchResult>& results, const SearchConfig& config) {
    std::sort(results.begin(), results.end(), result_before);
    if (results.size() > config.page_size) {
        results.resize(config.page_size);
    }
    assign_ranks(results);
}

}  // namespace detail

/// Lowercased OR retrieval ranked by overlapping term count, then timestamp.
inline std::vector<SearchResult> keyword_search(std::string_view raw, const Index& index,
                                                const SearchConfig& config = {}) {
    const auto& norm = index.config().normalization;
    std::set<std::string> terms;
    for (const auto& t : tokenize(detail::baseline_text(raw, index, config))) {
        if (t.kind == TokenKind::Word && norm.is_stopword(t.surface)) {
            continue;
        }
        terms.insert(text::fold(t.surface));
    }
    if (terms.empty()) {
        throw QueryError("empty query");
    }
    const auto& view = index.lexical(config.query_expansion);
    std::unordered_map<std::size_t, std::size_t> overlap;
    for (const auto& term : terms) {
        auto it = view.keyword_postings.find(term);
        if (it == view.keyword_postings.end()) {
            continue;
        }
        for (auto d : it->second) {
            ++overlap[d];
        }
    }
    std::vector<SearchResult> results;
    results.reserve(overlap.size());
    for (const auto& [d, count] : overlap) {
        SearchResult r;
        r.doc = d;
        r.record_id = index.record(d).id;
        r.timestamp = index.timestamp(d);
        r.score = static_cast<double>(count) / static_cast<double>(terms.size());
        results.push_back(std::move(r));
    }
    detail::finish_baseline(results, config);
    return results;
}

/// Okapi BM25 over lowercased lemmatized terms, divided by the best score of
/// the query; documents below the normalized threshold are dropped.
inline std::vector<SearchResult> bm25_search(std::string_view raw, const Index& index, const SearchConfig& config = {}) {
    const auto& norm = index.config().normalization;
    std::set<std::string> terms;
    for (const auto& t : tokenize(detail::baseline_text(raw, index, config))) {
        std::string lemma = t.surface;
        if (t.kind == TokenKind::Word) {
            auto it = norm.lemma_table.find(t.surface);
            if (it != norm.lemma_table.end()) {
                lemma = it->second;
            }
        }
        terms.insert(text::fold(lemma));
    }
    if (terms.empty()) {
        throw QueryError("empty query");
    }
    const auto& view = index.lexical(config.query_expansion);
    const double n = static_cast<double>(index.doc_count());
    std::vector<double> scores(index.doc_count(), 0.0);
    for (const auto& term : terms) {
        auto df_it = view.bm25_df.find(term);
        if (df_it == view.bm25_df.end()) {
            continue;
        }
        double df = static_cast<double>(df_it->second);
        double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (std::size_t d = 0; d < scores.size(); ++d) {
            auto tf_it = view.bm25_counts[d].find(term);
            if (tf_it == view.bm25_counts[d].end()) {
                continue;
            }
            double tf = static_cast<double>(tf_it->second);
            double len_norm = view.bm25_avg_length > 0.0
                                  ? static_cast<double>(view.bm25_length[d]) / view.bm25_avg_length
                                  : 1.0;
            scores[d] += idf * tf * (kBm25K1 + 1.0) / (tf + kBm25K1 * (1.0 - kBm25B + kBm25B * len_norm));
        }
    }
    double best = *std::max_element(scores.begin(), scores.end());
    std::vector<SearchResult> results;
    if (best <= 0.0) {
        return results;
    }
    for (std::size_t d = 0; d < scores.size(); ++d) {
        double s = scores[d] / best;
        if (scores[d] <= 0.0 || s < kBm25Threshold) {
            continue;
        }
        SearchResult r;
        r.doc = d;
        r.record_id = index.record(d).id;
        r.timestamp = index.timestamp(d);
        r.score = s;
        results.push_back(std::move(r));
    }
    detail::finish_baseline(results, config);
    return results;
}

/// Runs the configured method, then applies the sort order to the page.
inline std::vector<SearchResult> search(std::string_view raw, const Index& index, const EmbeddingProvider& provider,
                                        const SearchConfig& config = {}) {
    config.validate();
    std::vector<SearchResult> results;
    switch (config.method) {
    case Method::Semantic:
        results = semantic_search(raw, index, provider, config);
        break;
    case Method::Bm25:
        results = bm25_search(raw, index, config);
        break;
    case Method::Keyword:
        results = keyword_search(raw, index, config);
        break;
    }
    if (config.sort == SortOrder::Time) {
        std::stable_sort(results.begin(), results.end(), [](const SearchResult& a, const SearchResult& b) {
            if (a.timestamp != b.timestamp) {
                return a.timestamp > b.timestamp;
            }
            return a.record_id < b.record_id;
        });
        assign_ranks(results);
    }
    return results;
}

}  // namespace logsearch
