#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bwsann/scoring.hpp"

namespace bwsann {

/// Items with known latent severities plus a perception-noise level.
struct LatentWorld {
  std::vector<ItemId> items;
  std::vector<double> severity;  // parallel to items, each in [0, 1]
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// `count` items "item-000"... with severities drawn uniformly from [0, 1).
LatentWorld make_uniform_world(int count, double sigma, std::uint64_t seed);

/// Simulated annotators perceive s_i + sigma * z (z standard normal,
/// truncated at |z| <= 6) independently per (annotator, tuple, item), pick the
/// perceived maximum as best and the minimum of the rest as worst; exact
/// perceived ties are broken uniformly at random. Tuple t draws from its own
/// stream, so the result is independent of thread count.
std::vector<Judgment> simulate_judgments(const LatentWorld& world, const BwsDesign& design, int annotators_per_tuple);

/// Spearman's rho between recovered normalized scores and latent severity,
/// over the world's items that were scored. 0 when undefined.
double recovery_spearman(const LatentWorld& world, const std::vector<SeverityScore>& scores);

}  // namespace bwsann
