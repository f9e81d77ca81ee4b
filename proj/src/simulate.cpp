#include "bwsann/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "bwsann/error.hpp"
#include "bwsann/rank_stats.hpp"
#include "bwsann/rng.hpp"

namespace bwsann {

namespace {

constexpr std::uint64_t kLatentStream = 0x1a7e47;
constexpr std::uint64_t kTupleStreamBase = 1'000'000;
constexpr double kTruncation = 6.0;

double truncated_normal(Rng& rng) {
  for (;;) {
    const double z = rng.normal();
    if (std::fabs(z) <= kTruncation) return z;
  }
}

// Uniform choice among positions holding the extreme value.
std::size_t pick_extreme(const std::vector<double>& values, std::size_t skip, bool want_max, Rng& rng) {
  std::vector<std::size_t> ties;
  double best = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i == skip) continue;
    const bool better = ties.empty() || (want_max ? values[i] > best : values[i] < best);
    if (better) {
      best = values[i];
      ties.assign(1, i);
    } else if (values[i] == best) {
      ties.push_back(i);
    }
  }
  return ties.size() == 1 ? ties.front() : ties[rng.below(ties.size())];
}

}  // namespace

LatentWorld make_uniform_world(int count, double sigma, std::uint64_t seed) {
  if (count < 1) throw Error(Errc::kInvalidArgument, "count", "need at least one item");
  if (sigma < 0.0) throw Error(Errc::kInvalidArgument, "sigma", "must be >= 0");
  LatentWorld world;
  world.sigma = sigma;
  world.seed = seed;
  Rng rng(derive_seed(seed, kLatentStream));
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "item-%03d", i);
    world.items.emplace_back(id);
    world.severity.push_back(rng.uniform());
  }
  return world;
}

std::vector<Judgment> simulate_judgments(const LatentWorld& world, const BwsDesign& design, int annotators_per_tuple) {
  if (annotators_per_tuple < 1) throw Error(Errc::kInvalidArgument, "annotators_per_tuple", "must be >= 1");
  std::unordered_map<std::string_view, double> latent;
  for (std::size_t i = 0; i < world.items.size(); ++i) latent.emplace(world.items[i], world.severity[i]);

  const long long tuple_count = static_cast<long long>(design.tuples.size());
  std::vector<std::vector<double>> truth(design.tuples.size());
  for (std::size_t t = 0; t < design.tuples.size(); ++t) {
    for (const auto& id : design.tuples[t].item_ids) {
      const auto it = latent.find(id);
      if (it == latent.end()) throw Error(Errc::kNotFound, id, "design item missing from latent world");
      truth[t].push_back(it->second);
    }
  }

  const auto per_tuple = static_cast<std::size_t>(annotators_per_tuple);
  std::vector<Judgment> out(design.tuples.size() * per_tuple);
#pragma omp parallel for schedule(static)
  for (long long tl = 0; tl < tuple_count; ++tl) {
    const auto t = static_cast<std::size_t>(tl);
    const auto& tuple = design.tuples[t];
    Rng rng(derive_seed(world.seed, kTupleStreamBase + t));
    std::vector<double> perceived(truth[t].size());
    for (std::size_t a = 0; a < per_tuple; ++a) {
      for (std::size_t i = 0; i < perceived.size(); ++i) {
        perceived[i] = truth[t][i] + (world.sigma > 0.0 ? world.sigma * truncated_normal(rng) : 0.0);
      }
      const std::size_t best = pick_extreme(perceived, perceived.size(), true, rng);
      const std::size_t worst = pick_extreme(perceived, best, false, rng);
      char annotator[32];
      std::snprintf(annotator, sizeof(annotator), "sim-%03zu", a);
      auto& j = out[t * per_tuple + a];
      j.judgment_id = tuple.tuple_id + "/" + annotator;
      j.tuple_id = tuple.tuple_id;
      j.annotator_id = annotator;
      j.best = tuple.item_ids[best];
      j.worst = tuple.item_ids[worst];
    }
  }
  return out;
}

double recovery_spearman(const LatentWorld& world, const std::vector<SeverityScore>& scores) {
  std::unordered_map<std::string_view, double> latent;
  for (std::size_t i = 0; i < world.items.size(); ++i) latent.emplace(world.items[i], world.severity[i]);
  std::vector<double> recovered, truth;
  for (const auto& s : scores) {
    const auto it = latent.find(s.item_id);
    if (it == latent.end() || s.judged_appearances == 0) continue;
    recovered.push_back(s.normalized());
    truth.push_back(it->second);
  }
  return spearman(recovered, truth).value_or(0.0);
}

}  // namespace bwsann
