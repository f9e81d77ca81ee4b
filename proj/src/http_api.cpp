#include "bwsann/http_api.hpp"

#include <cstdlib>
#include <httplib.h>
#include <json.hpp>

#include "bwsann/audit.hpp"
#include "bwsann/jsonl.hpp"
#include "bwsann/labeling.hpp"
#include "bwsann/reliability.hpp"

namespace bwsann {

using nlohmann::json;

int http_status(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument:
    case Errc::kParseError:
    case Errc::kInvalidLabel:
    case Errc::kInvalidRegistry:
    case Errc::kDuplicateItems:
    case Errc::kInvalidChoice:
    case Errc::kChoiceOutsideTuple:
    case Errc::kUnknownTuple:
    case Errc::kItemSetMismatch:
      return 400;
    case Errc::kNotAuthorized:
      return 401;
    case Errc::kForbidden:
    case Errc::kConsentRequired:
      return 403;
    case Errc::kNotFound:
    case Errc::kNoTaskAvailable:
      return 404;
    case Errc::kAssignmentExpired:
      return 410;
    case Errc::kPhaseOrderViolation:
    case Errc::kAlreadySubmitted:
    case Errc::kDuplicateJudgment:
    case Errc::kDesignInfeasible:
    case Errc::kUnderLabeled:
    case Errc::kUnscoredItem:
    case Errc::kInsufficientRedundancy:
    case Errc::kMissingLabels:
      return 409;
    case Errc::kExposureLimitReached:
      return 429;
    case Errc::kIoError:
      return 500;
  }
  return 500;
}

ServerConfig load_server_config(const std::optional<std::filesystem::path>& config_file,
                                const std::function<const char*(const char*)>& getenv) {
  ServerConfig config;
  if (config_file) {
    const json j = json::parse(read_file(*config_file));
    config.host = j.value("host", config.host);
    config.port = j.value("port", config.port);
    config.data_dir = j.value("data_dir", config.data_dir.string());
    config.admin_token = j.value("admin_token", config.admin_token);
    config.instructions = j.value("instructions", config.instructions);
    if (j.contains("instructions_file")) {
      std::filesystem::path p = j.at("instructions_file").get<std::string>();
      if (p.is_relative()) p = config_file->parent_path() / p;
      config.instructions = read_file(p);
    }
  }
  const auto env = getenv ? getenv : [](const char* name) -> const char* { return std::getenv(name); };
  if (const char* v = env("BWSANN_HOST"); v && *v) config.host = v;
  if (const char* v = env("BWSANN_PORT"); v && *v) {
    char* end = nullptr;
    const long port = std::strtol(v, &end, 10);
    if (*end != '\0' || port < 0 || port > 65535) throw Error(Errc::kInvalidArgument, "BWSANN_PORT", v);
    config.port = static_cast<int>(port);
  }
  if (const char* v = env("BWSANN_DATA_DIR"); v && *v) config.data_dir = v;
  if (const char* v = env("BWSANN_ADMIN_TOKEN"); v && *v) config.admin_token = v;
  return config;
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, {{"error", code}, {"message", message}}, status);
}

std::string bearer(const httplib::Request& req) {
  const auto header = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (header.size() <= kPrefix.size() || header.compare(0, kPrefix.size(), kPrefix) != 0) return {};
  return header.substr(kPrefix.size());
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

std::string query(const httplib::Request& req, const char* key, std::string fallback) {
  return req.has_param(key) ? req.get_param_value(key) : fallback;
}

double query_double(const httplib::Request& req, const char* key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw Error(Errc::kInvalidArgument, key, "not a number: " + v);
  return out;
}

std::uint64_t query_u64(const httplib::Request& req, const char* key, std::uint64_t fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  char* end = nullptr;
  const auto out = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw Error(Errc::kInvalidArgument, key, "not an integer: " + v);
  return out;
}

std::vector<SeverityScore> scores_of(const std::vector<ScoreRow>& rows) {
  std::vector<SeverityScore> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.score);
  return out;
}

GroupBalanceReport campaign_balance(const AnnotationService& service, const std::string& id, double tau) {
  const auto campaign = service.campaign(id);
  return balance_report(scores_of(service.export_scores(id)), service.aggregated_labels(id), tau, &campaign.registry);
}

ReliabilityReport campaign_reliability(const AnnotationService& service, const std::string& id, int trials,
                                       std::uint64_t seed) {
  const auto [design, judgments] = service.merged_severity_data(id);
  return split_half_reliability(judgments, design, trials, seed, id);
}

class Api : public std::enable_shared_from_this<Api> {
 public:
  Api(AnnotationService& service, ServerConfig config) : service_(service), config_(std::move(config)) {}

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Wraps a handler with error mapping and, for admin routes, the admin check.
  Handler admin(Handler inner) const {
    return guard([self = shared_from_this(), inner](const httplib::Request& req, httplib::Response& res) {
      if (!self->config_.admin_token.empty() && bearer(req) != self->config_.admin_token) {
        send_error(res, 401, "not-authorized", "admin token required");
        return;
      }
      inner(req, res);
    });
  }

  using AnnotatorHandler =
      std::function<void(const AnnotationService::Principal&, const httplib::Request&, httplib::Response&)>;

  Handler annotator(AnnotatorHandler inner) const {
    return guard([self = shared_from_this(), inner](const httplib::Request& req, httplib::Response& res) {
      const auto principal = self->service_.authenticate(bearer(req));
      if (!principal) {
        send_error(res, 401, "not-authorized", "valid annotator bearer token required");
        return;
      }
      inner(*principal, req, res);
    });
  }

  static Handler guard(Handler inner) {
    return [inner](const httplib::Request& req, httplib::Response& res) {
      try {
        inner(req, res);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), errc_name(e.code()), e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, "parse-error", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void mount(httplib::Server& s) {
    auto& svc = service_;

    s.Get("/healthz", guard([](const auto&, auto& res) { send_json(res, {{"ok", true}}); }));
    s.Get("/instructions", guard([&svc](const auto&, auto& res) { res.set_content(svc.instructions(), "text/plain"); }));

    s.Get("/campaigns", admin([&svc](const auto&, auto& res) { send_json(res, svc.campaign_ids()); }));

    s.Post("/campaigns", admin([&svc](const auto& req, auto& res) {
      const json j = body_json(req);
      const auto id = j.at("campaign_id").template get<std::string>();
      const auto policy = j.value("policy", json::object()).template get<CampaignPolicy>();
      const auto registry = j.at("registry").template get<IdentityRegistry>();
      svc.create_campaign(id, policy, registry);
      send_json(res, {{"campaign_id", id}, {"phase", to_string(Phase::kSetup)}}, 201);
    }));

    s.Get(R"(/campaigns/([^/]+)/status)", admin([&svc](const auto& req, auto& res) {
      send_json(res, svc.campaign_status(req.matches[1]));
    }));

    // Items: JSONL body, or a JSON array when Content-Type is application/json.
    s.Post(R"(/campaigns/([^/]+)/items)", admin([&svc](const auto& req, auto& res) {
      std::vector<Item> items;
      if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
        items = json::parse(req.body).template get<std::vector<Item>>();
      } else {
        items = items_from_jsonl(req.body);
      }
      svc.add_items(req.matches[1], items);
      send_json(res, {{"added", items.size()}}, 201);
    }));

    s.Put(R"(/campaigns/([^/]+)/registry)", admin([&svc](const auto& req, auto& res) {
      const auto registry = body_json(req).template get<IdentityRegistry>();
      svc.set_registry(req.matches[1], registry);
      send_json(res, {{"version", registry.version()}});
    }));

    s.Post(R"(/campaigns/([^/]+)/annotators)", admin([&svc](const auto& req, auto& res) {
      const json j = body_json(req);
      const auto id = j.at("annotator_id").template get<std::string>();
      svc.register_annotator(req.matches[1], id, j.value("pools", std::set<std::string>{std::string(kGeneralPool)}));
      send_json(res, {{"annotator_id", id}}, 201);
    }));

    // Consent acknowledgment by the annotator; returns the bearer token.
    s.Post(R"(/campaigns/([^/]+)/annotators/([^/]+)/consent)", guard([&svc](const auto& req, auto& res) {
      const json j = body_json(req);
      if (!j.value("acknowledged", false)) {
        throw Error(Errc::kConsentRequired, req.matches[2].str(), "consent must be acknowledged");
      }
      const auto token = svc.record_consent(req.matches[1], req.matches[2]);
      send_json(res, {{"token", token}, {"instructions", svc.instructions()}});
    }));

    s.Post(R"(/campaigns/([^/]+)/phase)", admin([&svc](const auto& req, auto& res) {
      const auto name = body_json(req).at("phase").template get<std::string>();
      const auto phase = parse_phase(name);
      if (!phase) throw Error(Errc::kInvalidArgument, name, "unknown phase");
      const auto st = svc.open_phase(req.matches[1], *phase);
      send_json(res, {{"phase", to_string(st.phase)}, {"designs", st.design_sizes}});
    }));

    s.Post(R"(/campaigns/([^/]+)/adjudications)", admin([&svc](const auto& req, auto& res) {
      const json j = body_json(req);
      const auto item = j.at("item_id").template get<std::string>();
      svc.adjudicate(req.matches[1], item, j.at("labels").template get<std::set<SubjectMatterLabel>>());
      send_json(res, {{"item_id", item}});
    }));

    s.Get(R"(/campaigns/([^/]+)/designs)", admin([&svc](const auto& req, auto& res) {
      send_json(res, svc.designs(req.matches[1]));
    }));

    s.Get(R"(/campaigns/([^/]+)/exports/scores\.csv)", admin([&svc](const auto& req, auto& res) {
      res.set_content(scores_to_csv(svc.export_scores(req.matches[1])), "text/csv");
    }));

    s.Get(R"(/campaigns/([^/]+)/exports/labels\.jsonl)", admin([&svc](const auto& req, auto& res) {
      res.set_content(labels_to_jsonl(svc.aggregated_labels(req.matches[1])), "application/x-ndjson");
    }));

    s.Get(R"(/campaigns/([^/]+)/exports/judgments\.jsonl)", admin([&svc](const auto& req, auto& res) {
      res.set_content(judgments_to_jsonl(svc.merged_severity_data(req.matches[1]).second), "application/x-ndjson");
    }));

    s.Get(R"(/campaigns/([^/]+)/exports/balance)", admin([&svc](const auto& req, auto& res) {
      const auto report = campaign_balance(svc, req.matches[1], query_double(req, "tau", 0.5));
      if (query(req, "format", "json") == "text") {
        res.set_content(balance_table(report), "text/plain");
      } else {
        send_json(res, report);
      }
    }));

    s.Get(R"(/campaigns/([^/]+)/exports/reliability)", admin([&svc](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      const auto trials = static_cast<int>(query_u64(req, "trials", kDefaultReliabilityTrials));
      const auto seed = query_u64(req, "seed", svc.campaign(id).policy.rng_seed);
      send_json(res, campaign_reliability(svc, id, trials, seed));
    }));

    s.Get(R"(/campaigns/([^/]+)/exports/datasheet)", admin([&svc](const auto& req, auto& res) {
      const std::string id = req.matches[1];
      const auto campaign = svc.campaign(id);
      const auto balance = campaign_balance(svc, id, query_double(req, "tau", 0.5));
      std::optional<ReliabilityReport> reliability;
      try {
        reliability = campaign_reliability(svc, id, kDefaultReliabilityTrials, campaign.policy.rng_seed);
      } catch (const Error& e) {
        if (e.code() != Errc::kInsufficientRedundancy) throw;
      }
      res.set_content(export_datasheet(campaign, balance, reliability), "text/markdown");
    }));

    s.Get("/tasks/next", annotator([&svc](const auto& who, const auto&, auto& res) {
      send_json(res, svc.next_task(who.campaign_id, who.annotator_id));
    }));

    s.Post(R"(/assignments/([^/]+)/submit)", annotator([&svc](const auto& who, const auto& req, auto& res) {
      const json j = body_json(req);
      Answer answer;
      if (j.contains("labels")) {
        answer = LabelAnswer{j.at("labels").template get<std::set<SubjectMatterLabel>>()};
      } else {
        answer = BestWorstAnswer{j.at("best").template get<std::string>(), j.at("worst").template get<std::string>()};
      }
      const auto ack = svc.submit(who.campaign_id, who.annotator_id, req.matches[1], answer);
      send_json(res, {{"assignment_id", ack.assignment_id},
                      {"kind", ack.kind == UnitKind::kItem ? "item" : "tuple"},
                      {"unit", ack.unit},
                      {"progress", ack.progress}});
    }));

    s.Post(R"(/assignments/([^/]+)/release)", annotator([&svc](const auto& who, const auto& req, auto& res) {
      svc.release(who.campaign_id, who.annotator_id, req.matches[1]);
      send_json(res, {{"assignment_id", req.matches[1].str()}, {"released", true}});
    }));
  }

 private:
  AnnotationService& service_;
  ServerConfig config_;
};

}  // namespace

void mount_routes(httplib::Server& server, AnnotationService& service, const ServerConfig& config) {
  std::make_shared<Api>(service, config)->mount(server);
}

}  // namespace bwsann
