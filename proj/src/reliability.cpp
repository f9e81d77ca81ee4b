#include "bwsann/reliability.hpp"

#include <algorithm>
#include <numeric>

#include "bwsann/error.hpp"
#include "bwsann/rank_stats.hpp"
#include "bwsann/rng.hpp"

namespace bwsann {

void to_json(nlohmann::json& j, const ReliabilityReport& r) {
  j = {{"campaign_id", r.campaign_id}, {"trials", r.trials},           {"seed", r.seed},
       {"mean_shr", r.mean_shr},       {"correlations", r.correlations}, {"degenerate_trials", r.degenerate_trials}};
}

void from_json(const nlohmann::json& j, ReliabilityReport& r) {
  r.campaign_id = j.value("campaign_id", "");
  r.trials = j.at("trials").get<int>();
  r.seed = j.value("seed", std::uint64_t{0});
  r.mean_shr = j.at("mean_shr").get<double>();
  r.correlations = j.value("correlations", std::vector<double>{});
  r.degenerate_trials = j.value("degenerate_trials", 0);
}

namespace {

struct SplitPlan {
  JudgmentIndex index;
  // Judgment positions per judged tuple, ordered by judgment_id so the split
  // does not depend on input order.
  std::vector<std::vector<int>> groups;
};

SplitPlan prepare(const std::vector<Judgment>& judgments, const BwsDesign& design, int trials) {
  if (trials < 1) throw Error(Errc::kInvalidArgument, "trials", "must be >= 1");
  SplitPlan plan{JudgmentIndex::build(judgments, design), {}};
  std::vector<std::vector<int>> by_tuple(design.tuples.size());
  for (std::size_t k = 0; k < judgments.size(); ++k) {
    by_tuple[static_cast<std::size_t>(plan.index.tuple_of[k])].push_back(static_cast<int>(k));
  }
  for (std::size_t t = 0; t < by_tuple.size(); ++t) {
    auto& group = by_tuple[t];
    if (group.empty()) continue;
    if (group.size() < 2) throw Error(Errc::kInsufficientRedundancy, design.tuples[t].tuple_id);
    std::stable_sort(group.begin(), group.end(), [&](int a, int b) {
      return judgments[static_cast<std::size_t>(a)].judgment_id < judgments[static_cast<std::size_t>(b)].judgment_id;
    });
    plan.groups.push_back(std::move(group));
  }
  return plan;
}

// One trial; returns nullopt for a degenerate split.
std::optional<double> run_trial(const SplitPlan& plan, std::uint64_t trial_seed) {
  Rng rng(trial_seed);
  std::vector<int> half_a, half_b, scratch;
  for (const auto& group : plan.groups) {
    scratch = group;
    rng.shuffle(std::span<int>(scratch));
    const std::size_t half = scratch.size() / 2;
    half_a.insert(half_a.end(), scratch.begin(), scratch.begin() + static_cast<long>(half));
    half_b.insert(half_b.end(), scratch.begin() + static_cast<long>(half), scratch.begin() + static_cast<long>(2 * half));
    if (scratch.size() % 2 == 1) (rng.coin() ? half_a : half_b).push_back(scratch.back());
  }
  ItemCounts a, b;
  accumulate_counts(plan.index, half_a, a);
  accumulate_counts(plan.index, half_b, b);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < plan.index.items.size(); ++i) {
    if (a.appearances[i] == 0 || b.appearances[i] == 0) continue;
    xs.push_back(SeverityScore{{}, a.best[i], a.worst[i], a.appearances[i]}.normalized());
    ys.push_back(SeverityScore{{}, b.best[i], b.worst[i], b.appearances[i]}.normalized());
  }
  return spearman(xs, ys);
}

ReliabilityReport finish(std::vector<std::optional<double>> results, std::uint64_t seed, std::string campaign_id) {
  ReliabilityReport report;
  report.campaign_id = std::move(campaign_id);
  report.seed = seed;
  report.trials = static_cast<int>(results.size());
  for (const auto& r : results) {
    if (!r) ++report.degenerate_trials;
    report.correlations.push_back(r.value_or(0.0));
  }
  // Summed in trial order so serial and parallel agree bit-for-bit.
  double sum = 0.0;
  for (double c : report.correlations) sum += c;
  report.mean_shr = sum / static_cast<double>(report.trials);
  return report;
}

}  // namespace

ReliabilityReport split_half_reliability_serial(const std::vector<Judgment>& judgments, const BwsDesign& design,
                                                int trials, std::uint64_t seed, std::string campaign_id) {
  const auto plan = prepare(judgments, design, trials);
  std::vector<std::optional<double>> results(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) results[static_cast<std::size_t>(t)] = run_trial(plan, derive_seed(seed, t));
  return finish(std::move(results), seed, std::move(campaign_id));
}

ReliabilityReport split_half_reliability(const std::vector<Judgment>& judgments, const BwsDesign& design, int trials,
                                         std::uint64_t seed, std::string campaign_id) {
  const auto plan = prepare(judgments, design, trials);
  std::vector<std::optional<double>> results(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) results[static_cast<std::size_t>(t)] = run_trial(plan, derive_seed(seed, t));
  return finish(std::move(results), seed, std::move(campaign_id));
}

}  // namespace bwsann
