#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bwsann/scoring.hpp"

namespace bwsann {

struct ReliabilityReport {
  std::string campaign_id;
  int trials = 0;
  std::vector<double> correlations;
  double mean_shr = 0.0;
  std::uint64_t seed = 0;
  /// Trials where a half had fewer than two common items or a constant
  /// ranking; their correlation is recorded as 0.
  int degenerate_trials = 0;
};

void to_json(nlohmann::json& j, const ReliabilityReport& report);
void from_json(const nlohmann::json& j, ReliabilityReport& report);

inline constexpr int kDefaultReliabilityTrials = 100;

/// Split-half reliability: each trial splits every tuple's judgments into two
/// random halves (an odd leftover goes to a random half), scores each half
/// and takes Spearman's rho over items scored in both. Trial t draws from
/// derive_seed(seed, t), so the result does not depend on the thread count.
///
/// Throws Error(kInsufficientRedundancy) for a judged tuple with a single
/// judgment.
ReliabilityReport split_half_reliability(const std::vector<Judgment>& judgments, const BwsDesign& design, int trials,
                                         std::uint64_t seed, std::string campaign_id = {});

/// Serial reference for split_half_reliability.
ReliabilityReport split_half_reliability_serial(const std::vector<Judgment>& judgments, const BwsDesign& design,
                                                int trials, std::uint64_t seed, std::string campaign_id = {});

}  // namespace bwsann
