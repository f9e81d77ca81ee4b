#include <gtest/gtest.h>

#include "bwsann/design.hpp"
#include "bwsann/error.hpp"
#include "bwsann/reliability.hpp"
#include "bwsann/simulate.hpp"

namespace bwsann {
namespace {

Judgment judge(std::string tuple, std::string who, std::string best, std::string worst) {
  return {tuple + "/" + who, std::move(tuple), std::move(who), std::move(best), std::move(worst), {}};
}

// Each tuple judged twice, identically: whatever the split, the halves agree.
TEST(SplitHalf, IdenticalHalvesCorrelatePerfectly) {
  const auto world = make_uniform_world(12, 0.0, 4);
  const auto design = generate_design(world.items, 4, 2000, 4);
  const auto once = simulate_judgments(world, design, 1);
  std::vector<Judgment> twice;
  for (const auto& j : once) {
    twice.push_back(judge(j.tuple_id, "a", j.best, j.worst));
    twice.push_back(judge(j.tuple_id, "b", j.best, j.worst));
  }
  const auto report = split_half_reliability(twice, design, 50, 9);
  ASSERT_EQ(report.trials, 50);
  ASSERT_EQ(report.correlations.size(), 50u);
  for (double c : report.correlations) EXPECT_EQ(c, 1.0);
  EXPECT_EQ(report.mean_shr, 1.0);
  EXPECT_EQ(report.degenerate_trials, 0);
}

TEST(SplitHalf, ReversedHalvesCorrelateNegatively) {
  BwsDesign d;
  d.items = {"A", "B", "C", "D"};
  d.n = 4;
  d.m = 1;
  d.tuples = {{"t0", {"A", "B", "C", "D"}}};
  const auto report = split_half_reliability({judge("t0", "x", "A", "D"), judge("t0", "y", "D", "A")}, d, 20, 1);
  for (double c : report.correlations) EXPECT_EQ(c, -1.0);
  EXPECT_EQ(report.mean_shr, -1.0);
}

TEST(SplitHalf, SingleJudgmentTupleIsInsufficient) {
  BwsDesign d;
  d.items = {"A", "B", "C"};
  d.n = 3;
  d.m = 2;
  d.tuples = {{"t0", {"A", "B", "C"}}, {"t1", {"C", "B", "A"}}};
  try {
    split_half_reliability({judge("t0", "x", "A", "C"), judge("t0", "y", "A", "C"), judge("t1", "x", "A", "B")}, d,
                           5, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInsufficientRedundancy);
    EXPECT_EQ(e.subject(), "t1");
  }
  // Unjudged tuples are fine.
  EXPECT_NO_THROW(split_half_reliability({judge("t0", "x", "A", "C"), judge("t0", "y", "A", "C")}, d, 5, 0));
  EXPECT_THROW(split_half_reliability({}, d, 0, 0), Error);
}

TEST(SplitHalf, DeterministicAndThreadIndependent) {
  const auto world = make_uniform_world(40, 0.1, 77);
  const auto design = generate_design(world.items, 4, 2000, 77);
  auto judgments = simulate_judgments(world, design, 3);  // odd: leftover goes to a random half
  const auto a = split_half_reliability(judgments, design, 64, 5, "c1");
  const auto b = split_half_reliability(judgments, design, 64, 5, "c1");
  const auto s = split_half_reliability_serial(judgments, design, 64, 5, "c1");
  EXPECT_EQ(a.correlations, b.correlations);
  EXPECT_EQ(a.correlations, s.correlations);
  EXPECT_EQ(a.mean_shr, s.mean_shr);
  EXPECT_EQ(a.campaign_id, "c1");
  EXPECT_EQ(a.seed, 5u);
  std::reverse(judgments.begin(), judgments.end());
  EXPECT_EQ(split_half_reliability(judgments, design, 64, 5).correlations, a.correlations);
  EXPECT_NE(split_half_reliability(judgments, design, 64, 6).correlations, a.correlations);

  double sum = 0;
  for (double c : a.correlations) {
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
    sum += c;
  }
  EXPECT_DOUBLE_EQ(a.mean_shr, sum / 64);
}

TEST(SplitHalf, SimulatedCampaignIsReliable) {
  const auto world = make_uniform_world(30, 0.1, 30);
  const auto design = generate_design(world.items, 4, 2000, 30);
  const auto report = split_half_reliability(simulate_judgments(world, design, 4), design, 100, 30);
  EXPECT_GE(report.mean_shr, 0.8);
}

TEST(SplitHalf, MoreAnnotatorsDoNotReduceReliability) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto world = make_uniform_world(30, 0.1, seed);
    const auto design = generate_design(world.items, 4, 2000, seed);
    const double two = split_half_reliability(simulate_judgments(world, design, 2), design, 100, seed).mean_shr;
    const double four = split_half_reliability(simulate_judgments(world, design, 4), design, 100, seed).mean_shr;
    EXPECT_GE(four, two - 0.02) << "seed " << seed;
  }
}

TEST(ReliabilityJson, RoundTrip) {
  ReliabilityReport r{"camp", 3, {0.5, 0.25, 1.0}, 0.5833333333333334, 7, 0};
  const auto back = nlohmann::json(r).get<ReliabilityReport>();
  EXPECT_EQ(back.correlations, r.correlations);
  EXPECT_EQ(back.mean_shr, r.mean_shr);
  EXPECT_EQ(back.seed, 7u);
}

}  // namespace
}  // namespace bwsann
