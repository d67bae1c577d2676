// logsearch command line: indexing, search, service, benchmark generation and evaluation.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "logsearch/config.hpp"
#include "logsearch/corpus.hpp"
#include "logsearch/eval.hpp"
#include "logsearch/experiment.hpp"
#include "logsearch/index.hpp"
#include "logsearch/plan.hpp"
#include "logsearch/search.hpp"
#include "logsearch/service.hpp"
#include "logsearch/synthetic.hpp"

namespace ls = logsearch;
using nlohmann::ordered_json;

namespace {

struct Globals {
    std::string config_path;
    bool json = false;
    ls::ConfigFile config;
};

// Flag value if given, else the config file key, else empty.
std::string pick(const std::string& flag, const Globals& g, const std::string& key) {
    if (!flag.empty()) {
        return flag;
    }
    return g.config.get_or(key, "");
}

std::string require(const std::string& flag, const Globals& g, const std::string& key, const std::string& what) {
    auto v = pick(flag, g, key);
    if (v.empty()) {
        throw ls::Error("missing " + what + " (flag or config key '" + key + "')");
    }
    return v;
}

void emit(const Globals& g, const ordered_json& j) {
    if (g.json) {
        std::cout << j.dump() << '\n';
    }
}

std::vector<std::size_t> parse_cutoffs(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& part : ls::text::split(s, ',')) {
        auto t = ls::text::trim(part);
        if (t.empty()) {
            continue;
        }
        std::size_t used = 0;
        long long n = 0;
        try {
            n = std::stoll(std::string(t), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != t.size() || n < 1) {
            throw ls::Error("invalid cutoff '" + std::string(t) + "'");
        }
        out.push_back(static_cast<std::size_t>(n));
    }
    if (out.empty()) {
        throw ls::Error("no cutoffs given");
    }
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (const auto& part : ls::text::split(s, ',')) {
        auto t = ls::text::trim(part);
        if (!t.empty()) {
            out.emplace_back(t);
        }
    }
    return out;
}

std::vector<bool> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ls::Error("cannot open label file '" + path + "'");
    }
    std::vector<bool> out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        auto t = ls::text::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        try {
            out.push_back(ls::parse_switch(t));
        } catch (const ls::Error&) {
            throw ls::FormatError("label file '" + path + "' line " + std::to_string(row) + ": expected 0/1");
        }
    }
    return out;
}

std::string format_time(std::int64_t ts) {
    std::time_t t = static_cast<std::time_t>(ts);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%d %H:%M", &tm);
    return buf;
}

// First non-empty line of the record text, cut to max_cps code points.
std::string snippet(const ls::Record& r, std::size_t max_cps) {
    std::string line;
    for (const auto& part : ls::text::split(r.full_text(), '\n')) {
        if (!ls::text::trim(part).empty()) {
            line = std::string(ls::text::trim(part));
            break;
        }
    }
    auto cps = ls::text::code_points(line);
    if (cps.size() <= max_cps) {
        return line;
    }
    cps.resize(max_cps);
    return ls::text::join(cps, "") + "...";
}

// ---------------------------------------------------------------------------
// index

struct IndexBuildArgs {
    std::string corpus, format, dictionary, out, stopwords, lemmas, provider, vectors;
    std::uint64_t seed = 1;
    std::size_t dim = 300;
    bool no_expand = false;
};

int index_build(const Globals& g, const IndexBuildArgs& a) {
    auto corpus = require(a.corpus, g, "corpus", "corpus path");
    auto out = require(a.out, g, "index", "index output directory");
    auto fmt_name = pick(a.format, g, "format");
    auto format = fmt_name.empty() ? ls::corpus_format_for(corpus) : ls::parse_corpus_format(fmt_name);
    auto records = ls::load_corpus(corpus, format);

    ls::Dictionary dict;
    if (auto d = pick(a.dictionary, g, "dictionary"); !d.empty()) {
        dict = ls::Dictionary(ls::load_dictionary(d));
    }
    ls::IndexConfig cfg;
    cfg.expand_documents = !a.no_expand;
    if (auto s = pick(a.stopwords, g, "stopwords"); !s.empty()) {
        cfg.normalization.stopwords = ls::load_stopwords(s);
    }
    if (auto l = pick(a.lemmas, g, "lemmas"); !l.empty()) {
        cfg.normalization.lemma_table = ls::load_lemma_table(l);
    }
    ls::ProviderSpec spec;
    spec.kind = pick(a.provider, g, "provider.kind");
    if (spec.kind.empty()) {
        spec.kind = "hashed";
    }
    spec.seed = a.seed;
    spec.dim = a.dim;
    spec.path = pick(a.vectors, g, "provider.path");
    auto provider = ls::make_provider(spec);

    auto index = ls::build_index(std::move(records), dict, *provider, cfg);
    ls::save_index(index, out);
    if (g.json) {
        emit(g, {{"index", out},
                 {"doc_count", index.doc_count()},
                 {"terms", index.postings().size()},
                 {"dim", index.dim()},
                 {"provider_fingerprint", index.provider_fingerprint()}});
    } else {
        std::cout << "indexed " << index.doc_count() << " records, " << index.postings().size() << " terms, dim "
                  << index.dim() << " -> " << out << '\n';
    }
    return 0;
}

int index_inspect(const Globals& g, const std::string& dir_flag) {
    auto dir = require(dir_flag, g, "index", "index directory");
    auto index = ls::load_index(dir);
    std::int64_t lo = index.timestamp(0), hi = lo;
    for (std::size_t d = 0; d < index.doc_count(); ++d) {
        lo = std::min(lo, index.timestamp(d));
        hi = std::max(hi, index.timestamp(d));
    }
    ordered_json j{{"index", dir},
                   {"format_version", ls::kIndexFormatVersion},
                   {"doc_count", index.doc_count()},
                   {"terms", index.postings().size()},
                   {"dim", index.dim()},
                   {"provider", ls::to_json(index.provider_spec())},
                   {"provider_fingerprint", index.provider_fingerprint()},
                   {"dictionary_entries", index.dictionary().size()},
                   {"expand_documents", index.config().expand_documents},
                   {"stopwords", index.config().normalization.stopwords.size()},
                   {"lemmas", index.config().normalization.lemma_table.size()},
                   {"first_timestamp", lo},
                   {"last_timestamp", hi}};
    if (g.json) {
        emit(g, j);
    } else {
        for (const auto& [k, v] : j.items()) {
            std::cout << std::left << std::setw(22) << k << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// search

struct SearchArgs {
    std::string index, q, queries, run, method, sort, expansion, tag;
    std::size_t limit = 0, k = 0;
};

ls::SearchConfig search_config(const Globals& g, const SearchArgs& a) {
    ls::SearchConfig cfg;
    if (auto v = g.config.get("k")) {
        cfg.K = std::stoul(*v);
    }
    if (auto v = g.config.get("page_size")) {
        cfg.page_size = std::stoul(*v);
    }
    if (a.k != 0) {
        cfg.K = a.k;
    }
    if (a.limit != 0) {
        cfg.page_size = a.limit;
    }
    if (auto m = pick(a.method, g, "method"); !m.empty()) {
        cfg.method = ls::parse_method(m);
    }
    if (!a.sort.empty()) {
        cfg.sort = ls::parse_sort(a.sort);
    }
    if (auto e = pick(a.expansion, g, "expansion"); !e.empty()) {
        cfg.query_expansion = ls::parse_switch(e);
    }
    cfg.validate();
    return cfg;
}

int run_search(const Globals& g, const SearchArgs& a) {
    auto dir = require(a.index, g, "index", "index directory");
    auto cfg = search_config(g, a);
    auto index = ls::load_index(dir);
    auto provider = index.open_provider();

    if (!a.queries.empty()) {
        auto queries = ls::load_queries(a.queries);
        auto tag = a.tag.empty() ? ls::run_tag(cfg.method, cfg.query_expansion) : a.tag;
        auto run = ls::run_queries(queries, index, *provider, cfg, tag);
        if (a.run.empty() || a.run == "-") {
            ls::write_run(std::cout, run);
        } else {
            std::ofstream out(a.run, std::ios::binary);
            if (!out) {
                throw ls::Error("cannot write run file '" + a.run + "'");
            }
            ls::write_run(out, run);
            if (g.json) {
                emit(g, {{"run", a.run}, {"tag", tag}, {"queries", queries.size()}});
            } else {
                std::cout << "wrote " << queries.size() << " queries to " << a.run << '\n';
            }
        }
        return 0;
    }

    auto results = ls::search(a.q, index, *provider, cfg);
    if (g.json) {
        for (const auto& r : results) {
            const auto& rec = index.record(r.doc);
            emit(g, {{"rank", r.rank},
                     {"record_id", r.record_id},
                     {"score", r.score},
                     {"doc_sim", r.doc_sim},
                     {"term_sim", r.term_sim},
                     {"timestamp", r.timestamp},
                     {"title", rec.title}});
        }
        return 0;
    }
    if (results.empty()) {
        std::cout << "no results\n";
        return 0;
    }
    std::cout << std::left << std::setw(5) << "rank" << std::setw(9) << "score" << std::setw(12) << "id"
              << std::setw(18) << "timestamp" << "text\n";
    for (const auto& r : results) {
        const auto& rec = index.record(r.doc);
        std::ostringstream score;
        score << std::fixed << std::setprecision(4) << r.score;
        std::cout << std::left << std::setw(5) << r.rank << std::setw(9) << score.str() << std::setw(12)
                  << r.record_id << std::setw(18) << format_time(r.timestamp) << snippet(rec, 60) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// serve

ls::Service* g_service = nullptr;

void on_signal(int) {
    if (g_service != nullptr) {
        g_service->stop();
    }
}

struct ServeArgs {
    std::string index, host, feedback_log, plan, static_dir;
    int port = 0;
};

int serve(const Globals& g, const ServeArgs& a) {
    auto cfg = ls::ServiceConfig::from(g.config);
    cfg.apply_env();
    if (!a.index.empty()) {
        cfg.index_dir = a.index;
    }
    if (!a.host.empty()) {
        cfg.host = a.host;
    }
    if (a.port != 0) {
        cfg.port = a.port;
    }
    if (!a.feedback_log.empty()) {
        cfg.feedback_log = a.feedback_log;
    }
    if (!a.plan.empty()) {
        cfg.plan_path = a.plan;
    }
    if (!a.static_dir.empty()) {
        cfg.static_dir = a.static_dir;
    }
    ls::Service service(cfg);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    if (g.json) {
        emit(g, {{"status", "listening"}, {"host", cfg.host}, {"port", cfg.port}, {"docs", service.index().doc_count()}});
    } else {
        std::cout << "serving " << service.index().doc_count() << " records on http://" << cfg.host << ':' << cfg.port
                  << std::endl;
    }
    bool ok = service.listen();
    g_service = nullptr;
    if (!ok) {
        throw ls::Error("cannot listen on " + cfg.host + ":" + std::to_string(cfg.port));
    }
    return 0;
}

// ---------------------------------------------------------------------------
// gen / stats

struct GenArgs {
    std::string out, format = "tsv";
    std::uint64_t seed = 7;
    std::size_t records = 500, locations = 40;
};

int gen_corpus(const Globals& g, const GenArgs& a) {
    auto out = require(a.out, g, "out", "output directory");
    auto bench = ls::generate_synthetic_corpus(a.seed, a.records, a.locations);
    auto format = ls::parse_corpus_format(a.format);
    ls::save_benchmark(bench, out, format);
    if (g.json) {
        emit(g, {{"out", out},
                 {"seed", a.seed},
                 {"records", bench.records.size()},
                 {"queries", bench.queries.size()},
                 {"dictionary_entries", bench.dictionary.size()}});
    } else {
        std::cout << "generated " << bench.records.size() << " records, " << bench.queries.size() << " queries, "
                  << bench.dictionary.size() << " locations -> " << out << '\n';
    }
    return 0;
}

int stats(const Globals& g, const std::string& corpus_flag, const std::string& format_flag, std::size_t bucket) {
    auto corpus = require(corpus_flag, g, "corpus", "corpus path");
    auto fmt_name = pick(format_flag, g, "format");
    auto format = fmt_name.empty() ? ls::corpus_format_for(corpus) : ls::parse_corpus_format(fmt_name);
    auto s = ls::corpus_stats(ls::load_corpus(corpus, format), bucket);
    if (g.json) {
        emit(g, ls::to_json(s));
        return 0;
    }
    std::cout << "records  " << s.record_count << "\ntokens   " << s.token_count << '\n';
    std::cout << std::fixed << std::setprecision(3) << "word     " << s.token_kind_shares.word << "\ncode     "
              << s.token_kind_shares.code << "\nnumeric  " << s.token_kind_shares.numeric << "\nlength histogram (code points)\n";
    for (const auto& [start, count] : s.length_histogram) {
        std::cout << "  " << std::setw(6) << start << "-" << std::setw(6) << std::left << (start + s.bucket_width - 1)
                  << std::right << count << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// eval

int eval_run(const Globals& g, const std::string& run_path, const std::string& qrels_flag, const std::string& cutoffs) {
    auto qrels_path = require(qrels_flag, g, "qrels", "qrels path");
    auto report = ls::evaluate_run(ls::load_run(run_path), ls::load_qrels(qrels_path), parse_cutoffs(cutoffs));
    if (g.json) {
        emit(g, ls::to_json(report));
        return 0;
    }
    std::cout << std::fixed << std::setprecision(4);
    std::cout << "run      " << report.run_tag << "\nqueries  " << report.query_count;
    if (report.queries_without_qrels > 0) {
        std::cout << " (" << report.queries_without_qrels << " without qrels)";
    }
    std::cout << "\nMRR      " << report.mrr << '\n';
    for (const auto& c : report.at) {
        std::cout << "P@" << c.cutoff << std::setw(7 - static_cast<int>(std::to_string(c.cutoff).size())) << ' '
                  << c.precision << "   mAP@" << c.cutoff << ' ' << c.map << "   nDCG@" << c.cutoff << ' ' << c.ndcg
                  << '\n';
    }
    return 0;
}

int eval_kappa(const Globals& g, const std::string& feedback, const std::string& a, const std::string& b) {
    std::vector<ordered_json> rows;
    if (!feedback.empty()) {
        auto events = ls::load_feedback_log(feedback);
        for (auto level : {ls::JudgmentLevel::Term, ls::JudgmentLevel::Phrase}) {
            auto agreement = ls::kappa_for_level(events, level);
            ordered_json j{{"level", std::string(ls::to_string(level))},
                           {"queries", agreement.queries},
                           {"pairs", agreement.pairs}};
            j["kappa"] = agreement.kappa ? ordered_json(*agreement.kappa) : ordered_json(nullptr);
            rows.push_back(j);
        }
    } else if (!a.empty() && !b.empty()) {
        auto la = load_labels(a);
        auto lb = load_labels(b);
        rows.push_back({{"pairs", la.size()}, {"kappa", ls::cohens_kappa(la, lb)}});
    } else {
        throw ls::Error("eval kappa needs --feedback or both --a and --b");
    }
    for (const auto& j : rows) {
        if (g.json) {
            emit(g, j);
            continue;
        }
        if (j.contains("level")) {
            std::cout << std::left << std::setw(8) << j["level"].get<std::string>();
        }
        std::cout << "kappa ";
        if (j["kappa"].is_null()) {
            std::cout << "n/a";
        } else {
            std::cout << std::fixed << std::setprecision(4) << j["kappa"].get<double>();
        }
        std::cout << "  (" << j["pairs"].get<std::size_t>() << " label pairs)\n";
    }
    return 0;
}

int eval_fuse(const Globals& g, const std::string& feedback_flag, const std::string& out) {
    auto feedback = require(feedback_flag, g, "feedback_log", "feedback log");
    auto qrels = ls::fuse_votes(ls::load_feedback_log(feedback));
    if (out.empty() || out == "-") {
        if (g.json) {
            for (const auto& [q, docs] : qrels) {
                for (const auto& [d, grade] : docs) {
                    emit(g, {{"query_id", q}, {"record_id", d}, {"grade", grade}});
                }
            }
        } else {
            ls::write_qrels(std::cout, qrels);
        }
        return 0;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) {
        throw ls::Error("cannot write qrels '" + out + "'");
    }
    ls::write_qrels(f, qrels);
    std::size_t n = 0;
    for (const auto& [_, docs] : qrels) {
        n += docs.size();
    }
    if (g.json) {
        emit(g, {{"qrels", out}, {"queries", qrels.size()}, {"judgments", n}});
    } else {
        std::cout << "wrote " << n << " judgments for " << qrels.size() << " queries to " << out << '\n';
    }
    return 0;
}

struct PlanArgs {
    std::string index, queries, assessors, out, id = "plan", methods = "semantic";
    std::size_t per_assessor = 0, redundancy = 2;
};

int eval_plan(const Globals& g, const PlanArgs& a) {
    auto dir = require(a.index, g, "index", "index directory");
    auto out = require(a.out, g, "plan", "plan output path");
    auto index = ls::load_index(dir);
    auto provider = index.open_provider();
    auto queries = ls::load_queries(a.queries);
    auto assessors = split_list(a.assessors);
    std::vector<ls::Method> methods;
    for (const auto& m : split_list(a.methods)) {
        methods.push_back(ls::parse_method(m));
    }
    std::size_t per = a.per_assessor;
    if (per == 0 && !assessors.empty()) {
        per = (queries.size() * a.redundancy + assessors.size() - 1) / assessors.size();
    }
    auto plan = ls::build_plan(a.id, queries, assessors, per, a.redundancy, index, *provider, methods);
    ls::save_plan(plan, out);
    if (g.json) {
        emit(g, {{"plan", out}, {"id", plan.id}, {"queries", plan.queries.size()}, {"assessors", assessors.size()}});
    } else {
        std::cout << "plan '" << plan.id << "': " << plan.queries.size() << " queries for " << assessors.size()
                  << " assessors -> " << out << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"logsearch: semantic search over short log records"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "key = value configuration file");
    app.add_flag("--json", g.json, "JSON lines output");

    // index
    auto* index = app.add_subcommand("index", "build or inspect an index");
    index->require_subcommand(1);
    IndexBuildArgs ib;
    auto* build = index->add_subcommand("build", "build an index from a corpus");
    build->add_option("--corpus", ib.corpus, "corpus file (.tsv/.csv/.jsonl)");
    build->add_option("--format", ib.format, "tsv | csv | jsonl");
    build->add_option("--dictionary", ib.dictionary, "functional location dictionary");
    build->add_option("--out,--index", ib.out, "index directory");
    build->add_option("--stopwords", ib.stopwords, "stopword list");
    build->add_option("--lemmas", ib.lemmas, "lemma table");
    build->add_option("--provider", ib.provider, "hashed | file");
    build->add_option("--vectors", ib.vectors, "word vector file (file provider)");
    build->add_option("--seed", ib.seed, "provider seed")->capture_default_str();
    build->add_option("--dim", ib.dim, "vector dimension")->capture_default_str();
    build->add_flag("--no-expand-docs", ib.no_expand, "skip document context expansion");
    std::string inspect_dir;
    auto* inspect = index->add_subcommand("inspect", "print index metadata");
    inspect->add_option("--index", inspect_dir, "index directory");

    // search
    SearchArgs sa;
    auto* search = app.add_subcommand("search", "query an index");
    search->add_option("--index", sa.index, "index directory");
    auto* q_opt = search->add_option("--q", sa.q, "query text");
    auto* qs_opt = search->add_option("--queries", sa.queries, "query file (id<TAB>text) for batch mode");
    q_opt->excludes(qs_opt);
    search->add_option("--run", sa.run, "run file output for batch mode (default stdout)");
    search->add_option("--tag", sa.tag, "run tag");
    search->add_option("--method", sa.method, "semantic | bm25 | keyword");
    search->add_option("--sort", sa.sort, "relevance | time");
    search->add_option("--limit", sa.limit, "results per query");
    search->add_option("--k", sa.k, "semantic candidate count K");
    search->add_option("--expansion", sa.expansion, "query context expansion on | off");

    // serve
    ServeArgs sv;
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    serve_cmd->add_option("--index", sv.index, "index directory");
    serve_cmd->add_option("--host", sv.host, "listen address");
    serve_cmd->add_option("--port", sv.port, "listen port");
    serve_cmd->add_option("--feedback-log", sv.feedback_log, "feedback log path");
    serve_cmd->add_option("--plan", sv.plan, "assessment plan");
    serve_cmd->add_option("--static-dir", sv.static_dir, "UI bundle directory");

    // gen
    auto* gen = app.add_subcommand("gen", "generate data");
    gen->require_subcommand(1);
    GenArgs ga;
    auto* gen_corpus_cmd = gen->add_subcommand("corpus", "synthetic benchmark corpus");
    gen_corpus_cmd->add_option("--out", ga.out, "output directory");
    gen_corpus_cmd->add_option("--seed", ga.seed)->capture_default_str();
    gen_corpus_cmd->add_option("--records", ga.records)->capture_default_str();
    gen_corpus_cmd->add_option("--locations", ga.locations)->capture_default_str();
    gen_corpus_cmd->add_option("--format", ga.format, "tsv | jsonl")->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "evaluation and assessment tools");
    eval->require_subcommand(1);
    std::string run_path, qrels_path, cutoffs = "5,20";
    auto* eval_run_cmd = eval->add_subcommand("run", "metrics of a run against qrels");
    eval_run_cmd->add_option("--run", run_path, "run file")->required();
    eval_run_cmd->add_option("--qrels", qrels_path, "qrels file");
    eval_run_cmd->add_option("--cutoffs", cutoffs, "comma separated cutoffs")->capture_default_str();
    std::string kappa_feedback, kappa_a, kappa_b;
    auto* kappa = eval->add_subcommand("kappa", "Cohen's kappa between two assessors");
    kappa->add_option("--feedback", kappa_feedback, "feedback log (per judgment level)");
    kappa->add_option("--a", kappa_a, "labels of assessor A, one 0/1 per line");
    kappa->add_option("--b", kappa_b, "labels of assessor B");
    std::string fuse_feedback, fuse_out;
    auto* fuse = eval->add_subcommand("fuse", "fuse feedback votes into graded qrels");
    fuse->add_option("--feedback", fuse_feedback, "feedback log");
    fuse->add_option("--out", fuse_out, "qrels output (default stdout)");
    PlanArgs pa;
    auto* plan = eval->add_subcommand("plan", "assign queries and freeze result lists");
    plan->add_option("--index", pa.index, "index directory");
    plan->add_option("--queries", pa.queries, "query file")->required();
    plan->add_option("--assessors", pa.assessors, "comma separated assessor ids")->required();
    plan->add_option("--per-assessor", pa.per_assessor, "queries per assessor (default: even split)");
    plan->add_option("--redundancy", pa.redundancy)->capture_default_str();
    plan->add_option("--methods", pa.methods, "comma separated methods")->capture_default_str();
    plan->add_option("--id", pa.id, "plan id")->capture_default_str();
    plan->add_option("--out", pa.out, "plan output path");

    // stats
    std::string stats_corpus, stats_format;
    std::size_t bucket = 50;
    auto* stats_cmd = app.add_subcommand("stats", "corpus statistics");
    stats_cmd->add_option("--corpus", stats_corpus, "corpus file");
    stats_cmd->add_option("--format", stats_format, "tsv | csv | jsonl");
    stats_cmd->add_option("--bucket", bucket, "histogram bucket width")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (!g.config_path.empty()) {
            g.config = ls::ConfigFile::load(g.config_path);
        } else if (auto path = ls::env("LOGSEARCH_CONFIG")) {
            g.config = ls::ConfigFile::load(*path);
        }
        if (*build) {
            return index_build(g, ib);
        }
        if (*inspect) {
            return index_inspect(g, inspect_dir);
        }
        if (*search) {
            if (sa.q.empty() && sa.queries.empty()) {
                throw ls::QueryError("empty query");
            }
            return run_search(g, sa);
        }
        if (*serve_cmd) {
            return serve(g, sv);
        }
        if (*gen_corpus_cmd) {
            return gen_corpus(g, ga);
        }
        if (*eval_run_cmd) {
            return eval_run(g, run_path, qrels_path, cutoffs);
        }
        if (*kappa) {
            return eval_kappa(g, kappa_feedback, kappa_a, kappa_b);
        }
        if (*fuse) {
            return eval_fuse(g, fuse_feedback, fuse_out);
        }
        if (*plan) {
            return eval_plan(g, pa);
        }
        if (*stats_cmd) {
            return stats(g, stats_corpus, stats_format, bucket);
        }
    } catch (const std::exception& e) {
        if (g.json) {
            std::cout << ordered_json{{"error", e.what()}}.dump() << '\n';
        }
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << app.help();
    return 2;
}
