// bwsann: command-line front end for design, scoring, reliability, audit,
// sampling, simulation and the annotation server.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "bwsann/audit.hpp"
#include "bwsann/csv.hpp"
#include "bwsann/design.hpp"
#include "bwsann/error.hpp"
#include "bwsann/http_api.hpp"
#include "bwsann/jsonl.hpp"
#include "bwsann/labeling.hpp"
#include "bwsann/reliability.hpp"
#include "bwsann/sampler.hpp"
#include "bwsann/scoring.hpp"
#include "bwsann/service.hpp"
#include "bwsann/simulate.hpp"

namespace {

using namespace bwsann;
using nlohmann::json;

void emit(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::cout << content;
  } else {
    write_file(out, content);
  }
}

void emit_json(const std::string& out, const json& j) { emit(out, j.dump(2) + "\n"); }

std::vector<ItemId> item_ids_from(const std::string& path) {
  std::vector<ItemId> ids;
  for (const auto& item : items_from_jsonl(read_file(path))) ids.push_back(item.item_id);
  return ids;
}

BwsDesign load_design(const std::string& path) { return json::parse(read_file(path)).get<BwsDesign>(); }

std::vector<SeverityScore> load_scores(const std::string& path) {
  std::vector<SeverityScore> out;
  for (auto& row : scores_from_csv(read_file(path))) out.push_back(row.score);
  return out;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-worst scaling annotation toolkit for abusive-language datasets"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ---- design ----
  auto* design = app.add_subcommand("design", "Generate or verify best-worst tuple designs");
  design->require_subcommand(1);

  struct {
    std::string items, out, id = "design";
    int n = 4;
    double multiplier = 2.0;
    std::uint64_t seed = 0;
  } gen;
  auto* generate = design->add_subcommand("generate", "Generate a tuple design over the items of a JSONL file");
  generate->add_option("--items", gen.items, "Items, one JSON object per line with item_id")->required()->check(CLI::ExistingFile);
  generate->add_option("--n", gen.n, "Tuple size")->capture_default_str()->check(CLI::PositiveNumber);
  generate->add_option("--multiplier", gen.multiplier, "Tuples per item (m = ceil(multiplier * N))")
      ->capture_default_str()
      ->check(CLI::Range(1.0, 4.0));
  generate->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  generate->add_option("--id", gen.id, "Design id")->capture_default_str();
  generate->add_option("--out", gen.out, "Output file (default stdout)");
  generate->callback([&] {
    const auto d = generate_design(item_ids_from(gen.items), gen.n, multiplier_to_milli(gen.multiplier), gen.seed, gen.id);
    emit_json(gen.out, d);
    for (const auto& w : d.warnings) std::cerr << "warning: " << w << '\n';
  });

  std::string verify_file;
  auto* verify = design->add_subcommand("verify", "Check every design invariant; exit 1 when invalid");
  verify->add_option("file", verify_file, "Design JSON")->required()->check(CLI::ExistingFile);
  verify->callback([&] {
    const auto verdict = verify_design(load_design(verify_file));
    json out = {{"valid", verdict.valid()}, {"violations", json::array()}};
    for (const auto& v : verdict.violations) {
      out["violations"].push_back({{"kind", v.kind}, {"subject", v.subject}, {"detail", v.detail}});
    }
    emit_json("", out);
    if (!verdict.valid()) exit_code = 1;
  });

  // ---- score ----
  auto* score = app.add_subcommand("score", "Best-worst scores");
  score->require_subcommand(1);
  struct {
    std::string design, judgments, out, items, labels;
    bool allow_unscored = false;
  } sc;
  auto* compute = score->add_subcommand("compute", "Counting scores as ranked CSV");
  compute->add_option("--design", sc.design)->required()->check(CLI::ExistingFile);
  compute->add_option("--judgments", sc.judgments, "Judgments JSONL")->required()->check(CLI::ExistingFile);
  compute->add_option("--out", sc.out, "CSV output (default stdout)");
  compute->add_option("--items", sc.items, "Items JSONL, for the text column")->check(CLI::ExistingFile);
  compute->add_option("--labels", sc.labels, "Aggregated labels JSONL, for the labels column")->check(CLI::ExistingFile);
  compute->add_flag("--allow-unscored", sc.allow_unscored, "Keep items with no judged appearance (scored 0)");
  compute->callback([&] {
    const auto d = load_design(sc.design);
    const auto scores =
        rank_items(compute_scores(judgments_from_jsonl(read_file(sc.judgments)), d, {.allow_unscored = sc.allow_unscored}));
    std::map<ItemId, std::string> texts;
    if (!sc.items.empty()) {
      for (auto& item : items_from_jsonl(read_file(sc.items))) texts[item.item_id] = std::move(item.text);
    }
    LabelTable labels;
    if (!sc.labels.empty()) labels = labels_from_jsonl(read_file(sc.labels));
    std::vector<ScoreRow> rows;
    for (const auto& s : scores) {
      ScoreRow row{s, texts[s.item_id], {}};
      if (const auto it = labels.find(s.item_id); it != labels.end()) {
        for (const auto& l : it->second.labels) row.labels += (row.labels.empty() ? "" : ";") + to_path(l);
      }
      rows.push_back(std::move(row));
    }
    emit(sc.out, scores_to_csv(rows));
  });

  // ---- reliability ----
  struct {
    std::string design, judgments, out, campaign;
    int trials = kDefaultReliabilityTrials;
    std::uint64_t seed = 0;
  } rel;
  auto* reliability = app.add_subcommand("reliability", "Split-half reliability of best-worst scores");
  reliability->add_option("--design", rel.design)->required()->check(CLI::ExistingFile);
  reliability->add_option("--judgments", rel.judgments)->required()->check(CLI::ExistingFile);
  reliability->add_option("--trials", rel.trials)->capture_default_str()->check(CLI::PositiveNumber);
  reliability->add_option("--seed", rel.seed)->capture_default_str();
  reliability->add_option("--campaign-id", rel.campaign);
  reliability->add_option("--out", rel.out, "Report JSON (default stdout)");
  reliability->callback([&] {
    emit_json(rel.out, split_half_reliability(judgments_from_jsonl(read_file(rel.judgments)), load_design(rel.design),
                                              rel.trials, rel.seed, rel.campaign));
  });

  // ---- audit ----
  auto* audit = app.add_subcommand("audit", "Per-group balance, error-rate disparity and datasheet reports");
  audit->require_subcommand(1);
  struct {
    std::string scores, labels, registry, format = "json", out, gold, predictions, items, reliability, policy,
        campaign = "campaign", sampling;
    double tau = 0.5;
    double low_reliability = 0.6;
    std::vector<std::string> limitations;
  } au;
  const auto load_registry = [&]() -> std::optional<IdentityRegistry> {
    if (au.registry.empty()) return std::nullopt;
    return json::parse(read_file(au.registry)).get<IdentityRegistry>();
  };
  const auto compute_balance = [&] {
    const auto registry = load_registry();
    return balance_report(load_scores(au.scores), labels_from_jsonl(read_file(au.labels)), au.tau,
                          registry ? &*registry : nullptr);
  };

  auto* balance = audit->add_subcommand("balance", "Abusive/benign counts per identity group at threshold tau");
  balance->add_option("--scores", au.scores, "Scores CSV")->required()->check(CLI::ExistingFile);
  balance->add_option("--labels", au.labels, "Aggregated labels JSONL")->required()->check(CLI::ExistingFile);
  balance->add_option("--tau", au.tau, "Abusive when normalized score >= tau")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  balance->add_option("--registry", au.registry, "Registry JSON; empty groups get rows")->check(CLI::ExistingFile);
  balance->add_option("--format", au.format)->check(CLI::IsMember({"json", "text"}))->capture_default_str();
  balance->add_option("--out", au.out);
  balance->callback([&] {
    const auto report = compute_balance();
    if (au.format == "text") {
      emit(au.out, balance_table(report));
    } else {
      emit_json(au.out, report);
    }
  });

  auto* disparity = audit->add_subcommand("disparity", "Per-group false positive / false negative rates of a model");
  disparity->add_option("--gold", au.gold, "JSONL of {item_id, abusive}")->required()->check(CLI::ExistingFile);
  disparity->add_option("--predictions", au.predictions, "JSONL of {item_id, abusive}")->required()->check(CLI::ExistingFile);
  disparity->add_option("--labels", au.labels, "Aggregated labels JSONL")->required()->check(CLI::ExistingFile);
  disparity->add_option("--format", au.format)->check(CLI::IsMember({"json", "text"}))->capture_default_str();
  disparity->add_option("--out", au.out);
  disparity->callback([&] {
    const auto report = disparity_report(flags_from_jsonl(read_file(au.gold)), flags_from_jsonl(read_file(au.predictions)),
                                         labels_from_jsonl(read_file(au.labels)));
    if (au.format == "text") {
      emit(au.out, disparity_table(report));
    } else {
      emit_json(au.out, report);
    }
  });

  auto* datasheet = audit->add_subcommand("datasheet", "Markdown datasheet for a scored dataset");
  datasheet->add_option("--scores", au.scores, "Scores CSV")->required()->check(CLI::ExistingFile);
  datasheet->add_option("--labels", au.labels, "Aggregated labels JSONL")->required()->check(CLI::ExistingFile);
  datasheet->add_option("--registry", au.registry, "Registry JSON")->required()->check(CLI::ExistingFile);
  datasheet->add_option("--items", au.items, "Items JSONL")->check(CLI::ExistingFile);
  datasheet->add_option("--reliability", au.reliability, "Reliability report JSON")->check(CLI::ExistingFile);
  datasheet->add_option("--policy", au.policy, "Campaign policy JSON")->check(CLI::ExistingFile);
  datasheet->add_option("--sampling", au.sampling, "Sampled items JSONL, to summarize strategies")->check(CLI::ExistingFile);
  datasheet->add_option("--campaign-id", au.campaign)->capture_default_str();
  datasheet->add_option("--tau", au.tau)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  datasheet->add_option("--low-reliability", au.low_reliability, "Warn below this mean split-half correlation")
      ->capture_default_str();
  datasheet->add_option("--limitation", au.limitations, "Extra limitation line (repeatable)");
  datasheet->add_option("--out", au.out);
  datasheet->callback([&] {
    Campaign campaign;
    campaign.campaign_id = au.campaign;
    campaign.phase = Phase::kClosed;
    campaign.registry = *load_registry();
    if (!au.items.empty()) campaign.items = items_from_jsonl(read_file(au.items));
    if (!au.policy.empty()) campaign.policy = json::parse(read_file(au.policy)).get<CampaignPolicy>();
    std::optional<ReliabilityReport> rel_report;
    if (!au.reliability.empty()) rel_report = json::parse(read_file(au.reliability)).get<ReliabilityReport>();
    DatasheetOptions options;
    options.low_reliability_threshold = au.low_reliability;
    options.extra_limitations = au.limitations;
    if (!au.sampling.empty()) {
      for (const auto& rec : parse_jsonl(read_file(au.sampling))) {
        ++options.sampling_strategies[rec.at("provenance").at("strategy").get<std::string>()];
      }
    }
    emit(au.out, export_datasheet(campaign, compute_balance(), rel_report, options));
  });

  // ---- labels ----
  auto* labels = app.add_subcommand("labels", "Subject-matter labels");
  labels->require_subcommand(1);
  struct {
    std::string labelings, items, out;
    int labelers = 3;
  } lb;
  auto* aggregate = labels->add_subcommand("aggregate", "Per-label strict-majority aggregation");
  aggregate->add_option("--labelings", lb.labelings, "ItemLabeling JSONL")->required()->check(CLI::ExistingFile);
  aggregate->add_option("--labelers", lb.labelers, "Required labelings per item")->capture_default_str()->check(CLI::PositiveNumber);
  aggregate->add_option("--items", lb.items, "Items JSONL; every item must be labeled")->check(CLI::ExistingFile);
  aggregate->add_option("--out", lb.out);
  aggregate->callback([&] {
    std::vector<ItemLabeling> all;
    for (const auto& j : parse_jsonl(read_file(lb.labelings))) all.push_back(j.get<ItemLabeling>());
    CampaignPolicy policy;
    policy.labelers_per_item = lb.labelers;
    const auto table = lb.items.empty() ? aggregate_labelings(all, policy)
                                        : aggregate_labelings(all, policy, item_ids_from(lb.items));
    emit(lb.out, labels_to_jsonl(table));
  });

  // ---- sample ----
  struct {
    std::string corpus, plan, out, report;
    std::optional<std::uint64_t> seed;
  } sp;
  auto* sample = app.add_subcommand("sample", "Quota-driven corpus sampling with per-item provenance");
  sample->add_option("--corpus", sp.corpus, "Corpus JSONL {id, text, source, timestamp}")->required()->check(CLI::ExistingFile);
  sample->add_option("--plan", sp.plan, "Sampling plan JSON")->required()->check(CLI::ExistingFile);
  sample->add_option("--seed", sp.seed, "Overrides the plan's seed");
  sample->add_option("--out", sp.out, "Sampled items JSONL (default stdout)");
  sample->add_option("--report", sp.report, "Summary JSON (default stderr)");
  sample->callback([&] {
    auto plan = json::parse(read_file(sp.plan)).get<SamplingPlan>();
    if (sp.seed) plan.seed = *sp.seed;
    const auto result = sample_corpus(corpus_from_jsonl(read_file(sp.corpus)), plan);
    std::string lines;
    std::map<std::string, int> per_strategy;
    for (const auto& s : result.items) {
      lines += json(s).dump() + "\n";
      ++per_strategy[s.strategy];
    }
    emit(sp.out, lines);
    json summary = {{"sampled", result.items.size()}, {"by_strategy", per_strategy}, {"shortfalls", json::array()}};
    for (const auto& s : result.shortfalls) {
      summary["shortfalls"].push_back({{"quota", s.quota}, {"achieved", s.achieved}, {"target", s.target}});
    }
    if (sp.report.empty()) {
      std::cerr << summary.dump(2) << '\n';
    } else {
      emit_json(sp.report, summary);
    }
  });

  // ---- simulate ----
  struct {
    int n_items = 50, n = 4, annotators = 3;
    double multiplier = 2.0, sigma = 0.05;
    std::uint64_t seed = 0;
    std::string out_dir;
  } sim;
  auto* simulate = app.add_subcommand("simulate", "Simulated annotators over a latent-severity world");
  simulate->add_option("--n-items", sim.n_items)->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--n", sim.n)->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--multiplier", sim.multiplier)->capture_default_str()->check(CLI::Range(1.0, 4.0));
  simulate->add_option("--annotators", sim.annotators, "Judgments per tuple")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--sigma", sim.sigma, "Perception noise")->capture_default_str()->check(CLI::NonNegativeNumber);
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--out-dir", sim.out_dir, "Write items.jsonl, design.json, judgments.jsonl, latent.csv here");
  simulate->callback([&] {
    const auto world = make_uniform_world(sim.n_items, sim.sigma, sim.seed);
    const auto d = generate_design(world.items, sim.n, multiplier_to_milli(sim.multiplier), sim.seed, "simulated");
    const auto judgments = simulate_judgments(world, d, sim.annotators);
    const auto scores = compute_scores(judgments, d, {.allow_unscored = true});
    const double rho = recovery_spearman(world, scores);
    if (!sim.out_dir.empty()) {
      const std::filesystem::path dir = sim.out_dir;
      std::filesystem::create_directories(dir);
      std::vector<Item> items;
      for (const auto& id : world.items) items.push_back({id, "simulated " + id, "simulation", {}});
      write_file(dir / "items.jsonl", items_to_jsonl(items));
      write_file(dir / "design.json", json(d).dump(2) + "\n");
      write_file(dir / "judgments.jsonl", judgments_to_jsonl(judgments));
      CsvWriter csv;
      csv.row({"item_id", "latent_severity"});
      for (std::size_t i = 0; i < world.items.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", world.severity[i]);
        csv.row({world.items[i], buf});
      }
      write_file(dir / "latent.csv", csv.str());
    }
    char rho_text[32];
    std::snprintf(rho_text, sizeof rho_text, "%.17g", rho);
    emit_json("", {{"n_items", sim.n_items},
                   {"n", sim.n},
                   {"m", d.m},
                   {"annotators_per_tuple", sim.annotators},
                   {"sigma", sim.sigma},
                   {"seed", sim.seed},
                   {"judgments", judgments.size()},
                   {"spearman", rho},
                   {"spearman_text", rho_text}});
  });

  // ---- serve ----
  struct {
    std::string config, data_dir, host, admin_token;
    std::optional<int> port;
  } sv;
  auto* serve = app.add_subcommand("serve", "Run the annotation HTTP/JSON service");
  serve->add_option("--config", sv.config, "Server config JSON")->check(CLI::ExistingFile);
  serve->add_option("--port", sv.port, "Overrides BWSANN_PORT and the config file");
  serve->add_option("--data-dir", sv.data_dir, "Overrides BWSANN_DATA_DIR and the config file");
  serve->add_option("--host", sv.host);
  serve->add_option("--admin-token", sv.admin_token);
  serve->callback([&] {
    auto config = load_server_config(sv.config.empty() ? std::nullopt : std::optional<std::filesystem::path>(sv.config));
    if (sv.port) config.port = *sv.port;
    if (!sv.data_dir.empty()) config.data_dir = sv.data_dir;
    if (!sv.host.empty()) config.host = sv.host;
    if (!sv.admin_token.empty()) config.admin_token = sv.admin_token;
    AnnotationService service({config.data_dir, nullptr, config.instructions});
    httplib::Server server;
    mount_routes(server, service, config);
    g_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    std::cerr << "listening on " << config.host << ':' << config.port << ", data in " << config.data_dir << '\n';
    if (!server.listen(config.host, config.port)) {
      throw Error(Errc::kIoError, config.host + ":" + std::to_string(config.port), "cannot listen");
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return exit_code;
}
