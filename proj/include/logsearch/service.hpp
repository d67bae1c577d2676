#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "logsearch/config.hpp"
#include "logsearch/corpus.hpp"
#include "logsearch/eval.hpp"
#include "logsearch/feedback.hpp"
#include "logsearch/index.hpp"
#include "logsearch/plan.hpp"
#include "logsearch/search.hpp"

namespace logsearch {

inline constexpr std::string_view kAdHocPlan = "ad-hoc";

struct ServiceConfig {
    std::filesystem::path index_dir;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path feedback_log = "feedback.jsonl";
    std::optional<std::filesystem::path> plan_path;
    std::optional<std::filesystem::path> static_dir;
    std::optional<ProviderSpec> provider;  // defaults to the index's provider
    SearchConfig search;

    /// Reads the shared config file keys: index, host, port, feedback_log,
    /// plan, static_dir, k, page_size, expansion, method, provider.kind,
    /// provider.seed, provider.dim, provider.path.
    static ServiceConfig from(const ConfigFile& file) {
        ServiceConfig c;
        if (auto v = file.get("index")) {
            c.index_dir = *v;
        }
        c.host = file.get_or("host", c.host);
        if (auto v = file.get("port")) {
            c.port = parse_port(*v);
        }
        if (auto v = file.get("feedback_log")) {
            c.feedback_log = *v;
        }
        if (auto v = file.get("plan")) {
            c.plan_path = *v;
        }
        if (auto v = file.get("static_dir")) {
            c.static_dir = *v;
        }
        if (auto v = file.get("k")) {
            c.search.K = std::stoul(*v);
        }
        if (auto v = file.get("page_size")) {
            c.search.page_size = std::stoul(*v);
        }
        if (auto v = file.get("expansion")) {
            c.search.query_expansion = parse_switch(*v);
        }
        if (auto v = file.get("method")) {
            c.search.method = parse_method(*v);
        }
        if (auto kind = file.get("provider.kind")) {
            ProviderSpec spec;
            spec.kind = *kind;
            spec.seed = std::stoull(file.get_or("provider.seed", "1"));
            spec.dim = std::stoul(file.get_or("provider.dim", "300"));
            spec.path = file.get_or("provider.path", "");
            c.provider = spec;
        }
        return c;
    }

    /// LOGSEARCH_PORT, LOGSEARCH_HOST, LOGSEARCH_INDEX, LOGSEARCH_FEEDBACK_LOG,
    /// LOGSEARCH_PLAN and LOGSEARCH_STATIC_DIR override file values.
    void apply_env() {
        if (auto v = env("LOGSEARCH_PORT")) {
            port = parse_port(*v);
        }
        if (auto v = env("LOGSEARCH_HOST")) {
            host = *v;
        }
        if (auto v = env("LOGSEARCH_INDEX")) {
            index_dir = *v;
        }
        if (auto v = env("LOGSEARCH_FEEDBACK_LOG")) {
            feedback_log = *v;
        }
        if (auto v = env("LOGSEARCH_PLAN")) {
            plan_path = *v;
        }
        if (auto v = env("LOGSEARCH_STATIC_DIR")) {
            static_dir = *v;
        }
    }

    void validate() const {
        if (index_dir.empty()) {
            throw Error("service config: index directory is required");
        }
        if (port < 1 || port > 65535) {
            throw Error("service config: port must be in 1..65535");
        }
        search.validate();
    }

    static int parse_port(const std::string& v) {
        int p = 0;
        try {
            p = std::stoi(v);
        } catch (const std::exception&) {
            throw Error("invalid port '" + v + "'");
        }
        if (p < 1 || p > 65535) {
            throw Error("port must be in 1..65535, got " + v);
        }
        return p;
    }
};

/// HTTP+JSON back end: search, record detail, assessment plans, feedback
/// capture and exports. The index is read-only; feedback goes through one
/// append-only store.
class Service {
  public:
    explicit Service(ServiceConfig config) : config_(std::move(config)) {
        config_.validate();
        index_ = std::make_unique<Index>(load_index(config_.index_dir));
        provider_ = config_.provider ? make_provider(*config_.provider) : make_provider(index_->provider_spec());
        index_->check_provider(*provider_);
        if (config_.plan_path) {
            plan_ = load_plan(*config_.plan_path);
        }
        feedback_ = std::make_unique<FeedbackStore>(config_.feedback_log);
        routes();
    }

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    ~Service() { stop(); }

    /// Blocks serving on the configured host/port until stop().
    bool listen() { return http_.listen(config_.host, config_.port); }

    /// Binds an ephemeral port (returned) without serving yet; follow with serve_bound().
    int bind_any_port() { return http_.bind_to_any_port(config_.host); }
    bool serve_bound() { return http_.listen_after_bind(); }

    void stop() {
        if (http_.is_running()) {
            http_.stop();
        }
    }

    bool is_running() const { return http_.is_running(); }
    void wait_until_ready() const { http_.wait_until_ready(); }

    const Index& index() const { return *index_; }
    const FeedbackStore& feedback() const { return *feedback_; }

  private:
    static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, int status, std::string code, std::string message) {
        send_json(res, status, {{"code", std::move(code)}, {"message", std::move(message)}});
    }

    nlohmann::json record_json(std::size_t doc) const {
        const auto& r = index_->record(doc);
        nlohmann::json body = nlohmann::json::array();
        for (const auto& f : r.body) {
            body.push_back({{"name", f.name}, {"text", f.text}});
        }
        return {{"id", r.id}, {"timestamp", r.timestamp}, {"title", r.title}, {"attributes", r.attributes},
                {"body", body}};
    }

    void handle_search(const httplib::Request& req, httplib::Response& res) const {
        SearchConfig cfg = config_.search;
        try {
            if (req.has_param("method")) {
                cfg.method = parse_method(req.get_param_value("method"));
            }
            if (req.has_param("sort")) {
                cfg.sort = parse_sort(req.get_param_value("sort"));
            }
            if (req.has_param("expansion")) {
                cfg.query_expansion = parse_switch(req.get_param_value("expansion"));
            }
            if (req.has_param("limit")) {
                auto v = req.get_param_value("limit");
                std::size_t used = 0;
                long long limit = std::stoll(v, &used);
                if (used != v.size() || limit < 1) {
                    throw QueryError("limit must be a positive integer");
                }
                cfg.page_size = static_cast<std::size_t>(limit);
            }
            cfg.validate();
        } catch (const QueryError& e) {
            send_error(res, 400, "bad_request", e.what());
            return;
        } catch (const std::exception& e) {
            send_error(res, 400, "bad_request", e.what());
            return;
        }
        std::string q = req.has_param("q") ? req.get_param_value("q") : "";
        std::vector<SearchResult> results;
        try {
            results = search(q, *index_, *provider_, cfg);
        } catch (const QueryError& e) {
            std::string msg = e.what();
            send_error(res, 400, msg == "empty query" ? "empty_query" : "bad_request", msg);
            return;
        }
        nlohmann::json items = nlohmann::json::array();
        for (const auto& r : results) {
            auto item = record_json(r.doc);
            item["rank"] = r.rank;
            item["score"] = r.score;
            item["doc_sim"] = r.doc_sim;
            item["term_sim"] = r.term_sim;
            items.push_back(std::move(item));
        }
        send_json(res, 200,
                  {{"query", q},
                   {"method", std::string(to_string(cfg.method))},
                   {"sort", cfg.sort == SortOrder::Time ? "time" : "relevance"},
                   {"expansion", cfg.query_expansion},
                   {"count", items.size()},
                   {"results", items}});
    }

    void handle_record(const httplib::Request& req, httplib::Response& res) const {
        auto id = req.matches[1].str();
        auto doc = index_->find(id);
        if (!doc) {
            send_error(res, 404, "not_found", "unknown record '" + id + "'");
            return;
        }
        send_json(res, 200, record_json(*doc));
    }

    void handle_plan(const httplib::Request& req, httplib::Response& res) const {
        auto assessor = req.matches[1].str();
        if (!plan_) {
            send_error(res, 404, "not_found", "no assessment plan loaded");
            return;
        }
        auto it = plan_->assignments.find(assessor);
        if (it == plan_->assignments.end()) {
            send_error(res, 404, "not_found", "unknown assessor '" + assessor + "'");
            return;
        }
        nlohmann::json queries = nlohmann::json::array();
        for (const auto& qid : it->second) {
            const auto& pq = plan_->queries.at(qid);
            nlohmann::json results = nlohmann::json::object();
            for (const auto& [method, ids] : pq.results) {
                nlohmann::json list = nlohmann::json::array();
                std::size_t rank = 0;
                for (const auto& rid : ids) {
                    auto doc = index_->find(rid);
                    if (!doc) {
                        continue;
                    }
                    auto item = record_json(*doc);
                    item["rank"] = ++rank;
                    list.push_back(std::move(item));
                }
                results[method] = std::move(list);
            }
            queries.push_back({{"query_id", pq.id}, {"text", pq.text}, {"results", results}});
        }
        send_json(res, 200, {{"plan_id", plan_->id}, {"assessor_id", assessor}, {"queries", queries}});
    }

    void handle_feedback(const httplib::Request& req, httplib::Response& res) {
        auto j = nlohmann::json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            send_error(res, 400, "bad_request", "request body must be a JSON object");
            return;
        }
        FeedbackEvent event;
        try {
            event = feedback_from_json(j);
        } catch (const Error& e) {
            send_error(res, 400, "bad_request", e.what());
            return;
        }
        if (!index_->find(event.record_id)) {
            send_error(res, 404, "not_found", "unknown record '" + event.record_id + "'");
            return;
        }
        bool ad_hoc = event.plan == kAdHocPlan || !plan_;
        if (!ad_hoc && !plan_->has_query(event.query_id)) {
            send_error(res, 404, "not_found", "query '" + event.query_id + "' is not in the active plan");
            return;
        }
        if (event.plan.empty()) {
            event.plan = plan_ ? plan_->id : std::string(kAdHocPlan);
        }
        auto stored = feedback_->append(std::move(event));
        send_json(res, 201, {{"status", "stored"}, {"event", to_json(stored)}});
    }

    void routes() {
        http_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
            send_error(res, 500, "internal", "internal server error");
        });
        http_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                send_error(res, res.status, res.status == 404 ? "not_found" : "error",
                           httplib::status_message(res.status));
            }
        });

        http_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200,
                      {{"status", "ok"},
                       {"doc_count", index_->doc_count()},
                       {"provider_fingerprint", index_->provider_fingerprint()}});
        });
        http_.Get("/api/search", [this](const httplib::Request& req, httplib::Response& res) { handle_search(req, res); });
        http_.Get(R"(/api/records/([^/]+))",
                  [this](const httplib::Request& req, httplib::Response& res) { handle_record(req, res); });
        http_.Get(R"(/api/plan/([^/]+))",
                  [this](const httplib::Request& req, httplib::Response& res) { handle_plan(req, res); });
        http_.Post("/api/feedback",
                   [this](const httplib::Request& req, httplib::Response& res) { handle_feedback(req, res); });
        http_.Get("/api/export/qrels", [this](const httplib::Request&, httplib::Response& res) {
            std::ostringstream out;
            write_qrels(out, fuse_votes(feedback_->events()));
            res.set_content(out.str(), "text/plain");
        });
        http_.Get("/api/export/feedback", [this](const httplib::Request&, httplib::Response& res) {
            std::string out;
            for (const auto& e : feedback_->current()) {
                out += to_json(e).dump();
                out += '\n';
            }
            res.set_content(out, "application/x-ndjson");
        });
        if (config_.static_dir && std::filesystem::is_directory(*config_.static_dir)) {
            http_.set_mount_point("/", config_.static_dir->string());
        }
    }

    ServiceConfig config_;
    std::unique_ptr<Index> index_;
    std::unique_ptr<EmbeddingProvider> provider_;
    std::optional<AssessmentPlan> plan_;
    std::unique_ptr<FeedbackStore> feedback_;
    httplib::Server http_;
};

}  // namespace logsearch
