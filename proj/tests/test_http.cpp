#include <atomic>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "bwsann/http_api.hpp"
#include "bwsann/jsonl.hpp"
#include "bwsann/scoring.hpp"
#include "support.hpp"

namespace bwsann {
namespace {

using json = nlohmann::json;

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    auto clock = clock_;
    service_ = std::make_unique<AnnotationService>(ServiceOptions{
        dir_.path(), [clock] { return Timestamp(std::chrono::seconds(clock->load())); }, "Read carefully."});
    config_.admin_token = "admin-secret";
    mount_routes(server_, *service_, config_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    admin_ = {{"Authorization", "Bearer admin-secret"}};
  }

  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  httplib::Result post(const std::string& path, const json& body, const httplib::Headers& h) {
    return client_->Post(path, h, body.dump(), "application/json");
  }

  static httplib::Headers bearer(const std::string& token) { return {{"Authorization", "Bearer " + token}}; }

  std::string enroll(const std::string& annotator, const std::vector<std::string>& pools = {"general"}) {
    auto r = post("/campaigns/c/annotators", {{"annotator_id", annotator}, {"pools", pools}}, admin_);
    EXPECT_EQ(r->status, 201);
    r = post("/campaigns/c/annotators/" + annotator + "/consent", {{"acknowledged", true}}, {});
    EXPECT_EQ(r->status, 200) << r->body;
    return json::parse(r->body).at("token").get<std::string>();
  }

  void create_campaign(int items) {
    auto r = post("/campaigns", {{"campaign_id", "c"}, {"registry", testing::small_registry()}}, admin_);
    ASSERT_EQ(r->status, 201) << r->body;
    std::string jsonl;
    for (int i = 0; i < items; ++i) {
      jsonl += json{{"item_id", "i" + std::to_string(i)}, {"text", "text " + std::to_string(i)}}.dump() + "\n";
    }
    r = client_->Post("/campaigns/c/items", admin_, jsonl, "application/x-ndjson");
    ASSERT_EQ(r->status, 201) << r->body;
  }

  // Returns the number of units an annotator completed.
  int work(const std::string& token, const std::function<json(const json& task)>& answer) {
    int done = 0;
    for (;;) {
      auto r = client_->Get("/tasks/next", bearer(token));
      if (r->status == 404) {
        EXPECT_EQ(json::parse(r->body).at("error"), "no-task-available");
        return done;
      }
      EXPECT_EQ(r->status, 200) << r->body;
      const auto task = json::parse(r->body);
      r = post("/assignments/" + task.at("assignment_id").get<std::string>() + "/submit", answer(task), bearer(token));
      EXPECT_EQ(r->status, 200) << r->body;
      ++done;
    }
  }

  static json other_labels(const json&) { return {{"labels", json::array({testing::other_label()})}}; }
  static json first_best_second_worst(const json& task) {
    return {{"best", task.at("items")[0].at("item_id")}, {"worst", task.at("items")[1].at("item_id")}};
  }

  testing::TempDir dir_;
  std::shared_ptr<std::atomic<std::int64_t>> clock_ = std::make_shared<std::atomic<std::int64_t>>(1'620'000'000);
  std::unique_ptr<AnnotationService> service_;
  ServerConfig config_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
  httplib::Headers admin_;
};

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(Errc::kInvalidLabel), 400);
  EXPECT_EQ(http_status(Errc::kNotAuthorized), 401);
  EXPECT_EQ(http_status(Errc::kConsentRequired), 403);
  EXPECT_EQ(http_status(Errc::kNotFound), 404);
  EXPECT_EQ(http_status(Errc::kNoTaskAvailable), 404);
  EXPECT_EQ(http_status(Errc::kAssignmentExpired), 410);
  EXPECT_EQ(http_status(Errc::kAlreadySubmitted), 409);
  EXPECT_EQ(http_status(Errc::kPhaseOrderViolation), 409);
  EXPECT_EQ(http_status(Errc::kExposureLimitReached), 429);
  EXPECT_EQ(http_status(Errc::kIoError), 500);
}

TEST(ServerConfigTest, EnvironmentOverridesFile) {
  testing::TempDir dir;
  const auto file = dir.path() / "server.json";
  write_file(file, R"({"port": 9000, "data_dir": "from-file", "host": "0.0.0.0"})");
  const std::map<std::string, std::string> env{{"BWSANN_PORT", "9100"}};
  const auto cfg = load_server_config(file, [&](const char* k) -> const char* {
    const auto it = env.find(k);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  EXPECT_EQ(cfg.port, 9100);
  EXPECT_EQ(cfg.data_dir, "from-file");
  EXPECT_EQ(cfg.host, "0.0.0.0");
  const auto defaults = load_server_config(std::nullopt, [](const char*) -> const char* { return nullptr; });
  EXPECT_EQ(defaults.port, 8080);
  EXPECT_THROW(load_server_config(file, [](const char* k) -> const char* {
                 return std::string(k) == "BWSANN_PORT" ? "eighty" : nullptr;
               }),
               Error);
}

TEST_F(HttpTest, HealthAndAdminAuth) {
  EXPECT_EQ(client_->Get("/healthz")->status, 200);
  EXPECT_EQ(client_->Get("/instructions")->body, "Read carefully.");
  EXPECT_EQ(client_->Get("/campaigns")->status, 401);
  EXPECT_EQ(client_->Get("/campaigns", bearer("wrong"))->status, 401);
  EXPECT_EQ(json::parse(client_->Get("/campaigns", admin_)->body), json::array());
  EXPECT_EQ(client_->Get("/tasks/next")->status, 401);
  EXPECT_EQ(client_->Get("/campaigns/nope/status", admin_)->status, 404);
  EXPECT_EQ(client_->Post("/campaigns", admin_, "{not json", "application/json")->status, 400);
}

TEST_F(HttpTest, FullCampaignFlow) {
  create_campaign(8);
  std::vector<std::string> labelers, judges;
  for (const auto* a : {"l1", "l2", "l3"}) labelers.push_back(enroll(a));
  for (const auto* a : {"j1", "j2", "j3"}) judges.push_back(enroll(a));

  // Severity before subject matter is a conflict.
  EXPECT_EQ(post("/campaigns/c/phase", {{"phase", "Severity"}}, admin_)->status, 409);
  EXPECT_EQ(post("/campaigns/c/phase", {{"phase", "bogus"}}, admin_)->status, 400);
  auto r = post("/campaigns/c/phase", {{"phase", "SubjectMatter"}}, admin_);
  ASSERT_EQ(r->status, 200) << r->body;

  for (const auto& t : labelers) EXPECT_EQ(work(t, other_labels), 8);
  auto status = json::parse(client_->Get("/campaigns/c/status", admin_)->body);
  EXPECT_EQ(status.at("subject_matter").at("items_labeled"), 8);

  r = post("/campaigns/c/phase", {{"phase", "Severity"}}, admin_);
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(json::parse(r->body).at("designs").at("general"), 16);
  const auto designs = json::parse(client_->Get("/campaigns/c/designs", admin_)->body);
  EXPECT_TRUE(verify_design(designs.at("general").get<BwsDesign>()).valid());

  for (const auto& t : judges) EXPECT_EQ(work(t, first_best_second_worst), 16);
  status = json::parse(client_->Get("/campaigns/c/status", admin_)->body);
  EXPECT_TRUE(status.at("severity_complete").get<bool>());
  EXPECT_EQ(status.at("pools")[0].at("judgments_collected"), 48);

  r = client_->Get("/campaigns/c/exports/scores.csv", admin_);
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(scores_from_csv(r->body).size(), 8u);
  r = client_->Get("/campaigns/c/exports/judgments.jsonl", admin_);
  EXPECT_EQ(judgments_from_jsonl(r->body).size(), 48u);
  r = client_->Get("/campaigns/c/exports/reliability?trials=10&seed=3", admin_);
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(json::parse(r->body).at("trials"), 10);
  r = client_->Get("/campaigns/c/exports/balance?tau=0.5", admin_);
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(json::parse(r->body).at("totals").at("items"), 8);
  r = client_->Get("/campaigns/c/exports/datasheet", admin_);
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_NE(r->body.find("Split-half"), std::string::npos) << r->body;
}

TEST_F(HttpTest, AnnotatorErrors) {
  create_campaign(1);
  auto r = post("/campaigns/c/annotators", {{"annotator_id", "a"}}, admin_);
  ASSERT_EQ(r->status, 201);
  EXPECT_EQ(post("/campaigns/c/annotators/a/consent", {{"acknowledged", false}}, {})->status, 403);
  const auto token = json::parse(post("/campaigns/c/annotators/a/consent", {{"acknowledged", true}}, {})->body)
                         .at("token")
                         .get<std::string>();
  EXPECT_EQ(post("/campaigns/c/annotators/zz/consent", {{"acknowledged", true}}, {})->status, 404);
  // Setup phase: nothing to do yet.
  EXPECT_EQ(client_->Get("/tasks/next", bearer(token))->status, 404);
  post("/campaigns/c/phase", {{"phase", "SubjectMatter"}}, admin_);
  const auto task = json::parse(client_->Get("/tasks/next", bearer(token))->body);
  EXPECT_EQ(task.at("kind"), "item");
  EXPECT_EQ(task.at("items")[0].at("text"), "text 0");
  const auto path = "/assignments/" + task.at("assignment_id").get<std::string>() + "/submit";
  r = post(path, {{"labels", json::array()}}, bearer(token));
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(json::parse(r->body).at("error"), "invalid-label");
  EXPECT_EQ(post(path, {{"labels", json::array({testing::other_label()})}}, bearer("forged"))->status, 401);
  EXPECT_EQ(post("/assignments/c-a77/submit", other_labels({}), bearer(token))->status, 404);
  EXPECT_EQ(post(path, other_labels({}), bearer(token))->status, 200);
  r = post(path, other_labels({}), bearer(token));
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(json::parse(r->body).at("error"), "already-submitted");
}

TEST_F(HttpTest, LeaseExpiryAndRelease) {
  create_campaign(1);
  const auto a = enroll("a"), b = enroll("b");
  post("/campaigns/c/phase", {{"phase", "SubjectMatter"}}, admin_);
  const auto task = json::parse(client_->Get("/tasks/next", bearer(a))->body);
  const auto id = task.at("assignment_id").get<std::string>();
  *clock_ += 11 * 60;
  auto r = post("/assignments/" + id + "/submit", other_labels({}), bearer(a));
  EXPECT_EQ(r->status, 410);
  EXPECT_EQ(json::parse(r->body).at("error"), "assignment-expired");
  r = client_->Get("/tasks/next", bearer(b));
  ASSERT_EQ(r->status, 200);
  const auto again = json::parse(r->body);
  EXPECT_EQ(again.at("item_id"), "i0");
  r = post("/assignments/" + again.at("assignment_id").get<std::string>() + "/release", json::object(), bearer(b));
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(client_->Get("/tasks/next", bearer(a))->status, 200);
}

TEST_F(HttpTest, ExposureLimitIs429) {
  auto r = post("/campaigns",
                {{"campaign_id", "c"},
                 {"registry", testing::small_registry()},
                 {"policy", {{"max_session_minutes", 5}, {"labelers_per_item", 1}}}},
                admin_);
  ASSERT_EQ(r->status, 201) << r->body;
  client_->Post("/campaigns/c/items", admin_, R"([{"item_id":"x","text":"a"},{"item_id":"y","text":"b"}])",
                "application/json");
  const auto token = enroll("a");
  post("/campaigns/c/phase", {{"phase", "SubjectMatter"}}, admin_);
  const auto task = json::parse(client_->Get("/tasks/next", bearer(token))->body);
  *clock_ += 6 * 60;
  ASSERT_EQ(post("/assignments/" + task.at("assignment_id").get<std::string>() + "/submit", other_labels({}),
                 bearer(token))
                ->status,
            200);
  r = client_->Get("/tasks/next", bearer(token));
  EXPECT_EQ(r->status, 429);
  EXPECT_EQ(json::parse(r->body).at("error"), "exposure-limit-reached");
}

TEST_F(HttpTest, ConcurrentSubmitsOverHttp) {
  create_campaign(8);
  std::vector<std::string> labelers;
  for (const auto* a : {"l1", "l2", "l3"}) labelers.push_back(enroll(a));
  const auto token = enroll("j");
  post("/campaigns/c/phase", {{"phase", "SubjectMatter"}}, admin_);
  for (const auto& t : labelers) work(t, other_labels);
  ASSERT_EQ(post("/campaigns/c/phase", {{"phase", "Severity"}}, admin_)->status, 200);
  const auto task = json::parse(client_->Get("/tasks/next", bearer(token))->body);
  const auto path = "/assignments/" + task.at("assignment_id").get<std::string>() + "/submit";
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int k = 0; k < 8; ++k) {
    threads.emplace_back([&] {
      httplib::Client c("127.0.0.1", port_);
      const auto r = c.Post(path, bearer(token), first_best_second_worst(task).dump(), "application/json");
      (r->status == 200 ? ok : conflict)++;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 1);
  EXPECT_EQ(conflict.load(), 7);
}

}  // namespace
}  // namespace bwsann
