#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "logsearch/service.hpp"
#include "logsearch/synthetic.hpp"
#include "test_util.hpp"

using namespace logsearch;
using nlohmann::json;

namespace {

// Index of a small synthetic corpus saved under dir/index.
SyntheticBenchmark make_index(const testutil::TempDir& dir) {
    auto bench = generate_synthetic_corpus(3, 80, 8);
    HashedProvider p(1, 64);
    IndexConfig cfg;
    cfg.normalization.lemma_table = bench.lemma_table;
    save_index(build_index(bench.records, Dictionary(bench.dictionary), p, cfg), dir / "index");
    return bench;
}

// Service on an ephemeral port, served from a background thread.
class Running {
  public:
    explicit Running(ServiceConfig cfg) : service_(std::move(cfg)) {
        port_ = service_.bind_any_port();
        thread_ = std::thread([this] { service_.serve_bound(); });
        service_.wait_until_ready();
        client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    }
    ~Running() {
        service_.stop();
        thread_.join();
    }

    httplib::Client& client() { return *client_; }
    Service& service() { return service_; }

  private:
    Service service_;
    int port_ = 0;
    std::thread thread_;
    std::unique_ptr<httplib::Client> client_;
};

ServiceConfig config_for(const testutil::TempDir& dir) {
    ServiceConfig cfg;
    cfg.index_dir = dir / "index";
    cfg.feedback_log = dir / "feedback.jsonl";
    return cfg;
}

json feedback_body(const std::string& assessor, const std::string& query, const std::string& record,
                   const std::string& level, bool relevant) {
    return {{"assessor_id", assessor}, {"query_id", query}, {"record_id", record}, {"level", level},
            {"relevant", relevant}};
}

std::string encode(const std::string& q) { return httplib::detail::encode_query_param(q); }

}  // namespace

TEST(Service, SearchRoundTrip) {
    testutil::TempDir dir;
    auto bench = make_index(dir);
    Running s(config_for(dir));
    const auto& q = bench.queries.front();
    auto res = s.client().Get("/api/search?q=" + encode(q.text));
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    EXPECT_NE(res->get_header_value("Content-Type").find("application/json"), std::string::npos);
    auto body = json::parse(res->body);
    EXPECT_EQ(body["query"], q.text);
    EXPECT_EQ(body["method"], "semantic");
    EXPECT_EQ(body["sort"], "relevance");
    EXPECT_EQ(body["expansion"], true);

    // Same results as the library call.
    auto direct = search(q.text, s.service().index(), HashedProvider(1, 64));
    ASSERT_EQ(body["count"].get<std::size_t>(), direct.size());
    ASSERT_EQ(body["results"].size(), direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
        const auto& item = body["results"][i];
        EXPECT_EQ(item["id"], direct[i].record_id);
        EXPECT_EQ(item["rank"], i + 1);
        EXPECT_DOUBLE_EQ(item["score"].get<double>(), direct[i].score);
        EXPECT_TRUE(item.contains("body"));
        EXPECT_TRUE(item.contains("timestamp"));
    }

    res = s.client().Get("/api/search?q=" + encode(q.text) + "&method=bm25&sort=time&limit=3&expansion=off");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    body = json::parse(res->body);
    EXPECT_EQ(body["method"], "bm25");
    EXPECT_EQ(body["sort"], "time");
    EXPECT_EQ(body["expansion"], false);
    EXPECT_LE(body["results"].size(), 3u);
    for (std::size_t i = 1; i < body["results"].size(); ++i) {
        EXPECT_GE(body["results"][i - 1]["timestamp"].get<std::int64_t>(),
                  body["results"][i]["timestamp"].get<std::int64_t>());
    }
}

TEST(Service, EmptyQueryIs400) {
    testutil::TempDir dir;
    make_index(dir);
    Running s(config_for(dir));
    for (std::string path : {"/api/search", "/api/search?q=", "/api/search?q=%20%20", "/api/search?q=die"}) {
        auto res = s.client().Get(path);
        ASSERT_TRUE(res) << path;
        EXPECT_EQ(res->status, 400) << path;
        auto body = json::parse(res->body);
        EXPECT_EQ(body["code"], "empty_query") << path;
        EXPECT_EQ(body["message"], "empty query");
    }
}

TEST(Service, BadParametersAre400) {
    testutil::TempDir dir;
    make_index(dir);
    Running s(config_for(dir));
    for (std::string path : {"/api/search?q=Pumpe&method=magic", "/api/search?q=Pumpe&sort=sideways",
                             "/api/search?q=Pumpe&limit=0", "/api/search?q=Pumpe&limit=abc",
                             "/api/search?q=Pumpe&expansion=maybe"}) {
        auto res = s.client().Get(path);
        ASSERT_TRUE(res) << path;
        EXPECT_EQ(res->status, 400) << path;
        EXPECT_EQ(json::parse(res->body)["code"], "bad_request") << path;
    }
}

TEST(Service, RecordDetailAndHealth) {
    testutil::TempDir dir;
    auto bench = make_index(dir);
    Running s(config_for(dir));
    const auto& r = bench.records[4];
    auto res = s.client().Get("/api/records/" + r.id);
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    auto body = json::parse(res->body);
    EXPECT_EQ(body["id"], r.id);
    EXPECT_EQ(body["timestamp"], r.timestamp);
    EXPECT_EQ(body["body"][0]["text"], r.body[0].text);

    res = s.client().Get("/api/records/nope");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    EXPECT_EQ(json::parse(res->body)["code"], "not_found");

    res = s.client().Get("/healthz");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body)["doc_count"], 80);

    res = s.client().Get("/no/such/route");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    EXPECT_EQ(json::parse(res->body)["code"], "not_found");
}

TEST(Service, FeedbackValidation) {
    testutil::TempDir dir;
    auto bench = make_index(dir);
    Running s(config_for(dir));
    const auto& rid = bench.records[0].id;
    auto post = [&](const std::string& body) { return s.client().Post("/api/feedback", body, "application/json"); };

    auto res = post(feedback_body("alice", "q01", rid, "term", true).dump());
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    auto stored = json::parse(res->body);
    EXPECT_EQ(stored["status"], "stored");
    EXPECT_EQ(stored["event"]["plan"], "ad-hoc");
    EXPECT_GT(stored["event"]["timestamp"].get<std::int64_t>(), 0);

    res = post("{not json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    res = post(json{{"assessor_id", "alice"}}.dump());
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    res = post(feedback_body("alice", "q01", rid, "word", true).dump());
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    res = post(feedback_body("alice", "q01", "missing", "term", true).dump());
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    EXPECT_EQ(s.service().feedback().events().size(), 1u);
}

TEST(Service, FeedbackSurvivesRestart) {
    testutil::TempDir dir;
    auto bench = make_index(dir);
    const auto& rid = bench.records[1].id;
    {
        Running s(config_for(dir));
        for (auto [assessor, level] : {std::pair{"alice", "term"}, {"alice", "phrase"}, {"bob", "term"}, {"bob", "phrase"}}) {
            auto res = s.client().Post("/api/feedback", feedback_body(assessor, "q01", rid, level, true).dump(),
                                       "application/json");
            ASSERT_TRUE(res);
            ASSERT_EQ(res->status, 201);
        }
        // A later phrase-level vote from bob replaces the earlier one.
        auto res = s.client().Post("/api/feedback", feedback_body("bob", "q01", rid, "phrase", false).dump(),
                                   "application/json");
        ASSERT_TRUE(res);
        ASSERT_EQ(res->status, 201);
    }
    Running s(config_for(dir));
    EXPECT_EQ(s.service().feedback().events().size(), 5u);
    auto res = s.client().Get("/api/export/qrels");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->body, "q01 0 " + rid + " 3\n");
    res = s.client().Get("/api/export/feedback");
    ASSERT_TRUE(res);
    std::istringstream lines(res->body);
    auto current = parse_feedback_log(lines);
    EXPECT_EQ(current.size(), 4u);

    res = s.client().Post("/api/feedback", feedback_body("bob", "q01", rid, "phrase", true).dump(), "application/json");
    ASSERT_TRUE(res);
    res = s.client().Get("/api/export/qrels");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->body, "q01 0 " + rid + " 4\n");
}

TEST(Service, TornLogLineIsDropped) {
    testutil::TempDir dir;
    auto bench = make_index(dir);
    const auto& rid = bench.records[2].id;
    auto line = to_json(FeedbackEvent{"alice", "q01", rid, JudgmentLevel::Term, true, 5, "ad-hoc"}).dump();
    testutil::write_file(dir / "feedback.jsonl", line + "\n{\"assessor_id\":\"bo");
    {
        Running s(config_for(dir));
        EXPECT_EQ(s.service().feedback().events().size(), 1u);
        auto res = s.client().Post("/api/feedback", feedback_body("bob", "q01", rid, "term", true).dump(),
                                   "application/json");
        ASSERT_TRUE(res);
        EXPECT_EQ(res->status, 201);
    }
    std::istringstream in(testutil::read_file(dir / "feedback.jsonl"));
    auto events = parse_feedback_log(in);
    ASSERT_EQ(events.size(), 2u);
    EXPECT_GT(events[1].timestamp, events[0].timestamp);
}

TEST(Service, PlanEndpointAndPlanChecks) {
    testutil::TempDir dir;
    auto bench = make_index(dir);
    auto index = load_index(dir / "index");
    auto provider = index.open_provider();
    std::vector<BenchmarkQuery> queries(bench.queries.begin(), bench.queries.begin() + 4);
    auto plan = build_plan("study1", queries, {"alice", "bob"}, 4, 2, index, *provider,
                           {Method::Semantic, Method::Bm25});
    save_plan(plan, dir / "plan.json");
    auto cfg = config_for(dir);
    cfg.plan_path = dir / "plan.json";
    Running s(cfg);

    auto res = s.client().Get("/api/plan/alice");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    auto body = json::parse(res->body);
    EXPECT_EQ(body["plan_id"], "study1");
    ASSERT_EQ(body["queries"].size(), 4u);
    const auto& first = body["queries"][0];
    const auto& frozen = plan.queries.at(first["query_id"].get<std::string>()).results.at("semantic");
    ASSERT_EQ(first["results"]["semantic"].size(), frozen.size());
    for (std::size_t i = 0; i < frozen.size(); ++i) {
        EXPECT_EQ(first["results"]["semantic"][i]["id"], frozen[i]);
        EXPECT_FALSE(first["results"]["semantic"][i].contains("score"));
    }
    res = s.client().Get("/api/plan/mallory");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);

    const auto& rid = bench.records[0].id;
    res = s.client().Post("/api/feedback", feedback_body("alice", queries[0].id, rid, "term", true).dump(),
                          "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    EXPECT_EQ(json::parse(res->body)["event"]["plan"], "study1");
    res = s.client().Post("/api/feedback", feedback_body("alice", "q49", rid, "term", true).dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    auto ad_hoc = feedback_body("alice", "q49", rid, "term", true);
    ad_hoc["plan"] = "ad-hoc";
    res = s.client().Post("/api/feedback", ad_hoc.dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);
}

TEST(Service, StartupErrors) {
    testutil::TempDir dir;
    make_index(dir);
    ServiceConfig missing;
    EXPECT_THROW(Service{missing}, Error);

    auto cfg = config_for(dir);
    cfg.provider = ProviderSpec{"hashed", 2, 64, ""};
    try {
        Service s(cfg);
        FAIL() << "provider mismatch accepted";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("fingerprint"), std::string::npos) << e.what();
    }
    cfg = config_for(dir);
    cfg.index_dir = dir / "nothing";
    EXPECT_THROW(Service{cfg}, Error);
}

TEST(ServiceConfig, FileAndEnvironment) {
    std::istringstream in("index = /data/idx\nport = 9001\nmethod = bm25\nexpansion = off\nk = 50\n"
                          "provider.kind = hashed\nprovider.dim = 32\n");
    auto cfg = ServiceConfig::from(ConfigFile::parse(in));
    EXPECT_EQ(cfg.index_dir, "/data/idx");
    EXPECT_EQ(cfg.port, 9001);
    EXPECT_EQ(cfg.search.method, Method::Bm25);
    EXPECT_FALSE(cfg.search.query_expansion);
    EXPECT_EQ(cfg.search.K, 50u);
    ASSERT_TRUE(cfg.provider);
    EXPECT_EQ(cfg.provider->dim, 32u);

    ::setenv("LOGSEARCH_PORT", "9100", 1);
    ::setenv("LOGSEARCH_INDEX", "/other", 1);
    cfg.apply_env();
    ::unsetenv("LOGSEARCH_PORT");
    ::unsetenv("LOGSEARCH_INDEX");
    EXPECT_EQ(cfg.port, 9100);
    EXPECT_EQ(cfg.index_dir, "/other");
    EXPECT_NO_THROW(cfg.validate());

    EXPECT_THROW(ServiceConfig::parse_port("0"), Error);
    EXPECT_THROW(ServiceConfig::parse_port("http"), Error);
    EXPECT_EQ(ServiceConfig::parse_port("65535"), 65535);
}
