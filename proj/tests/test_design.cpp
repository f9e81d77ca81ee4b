#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "bwsann/design.hpp"
#include "bwsann/error.hpp"
#include "bwsann/rng.hpp"

namespace bwsann {
namespace {

std::vector<ItemId> ids(int count, const std::string& prefix = "i") {
  std::vector<ItemId> out;
  for (int i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Independent recount straight from the tuples.
std::map<ItemId, int> recount(const BwsDesign& d) {
  std::map<ItemId, int> out;
  for (const auto& id : d.items) out[id] = 0;
  for (const auto& t : d.tuples) {
    for (const auto& id : t.item_ids) ++out[id];
  }
  return out;
}

int max_pair(const BwsDesign& d) {
  std::map<std::pair<ItemId, ItemId>, int> pairs;
  for (const auto& t : d.tuples) {
    for (std::size_t a = 0; a < t.item_ids.size(); ++a) {
      for (std::size_t b = a + 1; b < t.item_ids.size(); ++b) {
        ++pairs[std::minmax(t.item_ids[a], t.item_ids[b])];
      }
    }
  }
  int best = 0;
  for (const auto& [p, c] : pairs) best = std::max(best, c);
  return best;
}

void expect_structure(const BwsDesign& d, int N, int n, int multiplier_milli) {
  const int m = static_cast<int>((static_cast<long long>(multiplier_milli) * N + 999) / 1000);
  ASSERT_EQ(d.m, m);
  ASSERT_EQ(static_cast<int>(d.tuples.size()), m);
  const int lo = m * n / N;
  const int hi = (m * n + N - 1) / N;
  int total = 0, at_hi = 0;
  for (const auto& [id, count] : recount(d)) {
    EXPECT_TRUE(count == lo || count == hi) << id << " appears " << count;
    total += count;
    at_hi += count == hi && hi != lo;
  }
  EXPECT_EQ(total, m * n);
  if (hi != lo) {
    EXPECT_EQ(at_hi, m * n - lo * N);
  }
  for (const auto& t : d.tuples) {
    ASSERT_EQ(static_cast<int>(t.item_ids.size()), n);
    EXPECT_EQ(std::set<ItemId>(t.item_ids.begin(), t.item_ids.end()).size(), t.item_ids.size());
  }
  EXPECT_EQ(recount(d), d.appearance_counts);
}

TEST(GenerateDesign, TenItemsDoubleMultiplier) {
  const auto d = generate_design(ids(10), 4, 2000, 1);
  expect_structure(d, 10, 4, 2000);
  EXPECT_EQ(d.m, 20);
  for (const auto& [id, c] : recount(d)) EXPECT_EQ(c, 8);
  EXPECT_TRUE(d.extra_appearance_items.empty());
}

TEST(GenerateDesign, TenItemsOneAndAHalf) {
  const auto d = generate_design(ids(10), 4, 1500, 2);
  EXPECT_EQ(d.m, 15);
  for (const auto& [id, c] : recount(d)) EXPECT_EQ(c, 6);
}

TEST(GenerateDesign, SevenItemsSplitAppearances) {
  const auto d = generate_design(ids(7), 4, 1500, 3);
  EXPECT_EQ(d.m, 11);
  std::map<int, int> histogram;
  for (const auto& [id, c] : recount(d)) ++histogram[c];
  EXPECT_EQ(histogram, (std::map<int, int>{{6, 5}, {7, 2}}));
  ASSERT_EQ(d.extra_appearance_items.size(), 2u);
  for (const auto& id : d.extra_appearance_items) EXPECT_EQ(recount(d)[id], 7);
  EXPECT_TRUE(verify_design(d).valid());
}

TEST(GenerateDesign, Errors) {
  const auto code = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::kIoError;
  };
  EXPECT_EQ(code([] { generate_design(ids(3), 4, 2000, 0); }), Errc::kDesignInfeasible);
  EXPECT_EQ(code([] { generate_design({"a", "b", "a", "c", "d"}, 4, 2000, 0); }), Errc::kDuplicateItems);
  EXPECT_EQ(code([] { generate_design(ids(5), 1, 2000, 0); }), Errc::kInvalidArgument);
  EXPECT_EQ(code([] { generate_design(ids(5), 2, 500, 0); }), Errc::kInvalidArgument);
  EXPECT_EQ(code([] { generate_design(ids(5), 2, 4500, 0); }), Errc::kInvalidArgument);
}

TEST(GenerateDesign, WarnsOutsideRecommendedMultipliers) {
  EXPECT_TRUE(generate_design(ids(20), 4, 2000, 0).warnings.empty());
  EXPECT_FALSE(generate_design(ids(20), 4, 3000, 0).warnings.empty());
  EXPECT_FALSE(generate_design(ids(20), 4, 1000, 0).warnings.empty());
}

TEST(GenerateDesign, DeterministicInArguments) {
  const auto a = nlohmann::json(generate_design(ids(40), 4, 1750, 12345)).dump();
  const auto b = nlohmann::json(generate_design(ids(40), 4, 1750, 12345)).dump();
  const auto c = nlohmann::json(generate_design(ids(40), 4, 1750, 12346)).dump();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(GenerateDesign, RandomizedConfigurationsAreValid) {
  Rng rng(2024);
  const int multipliers[] = {1500, 1750, 2000};
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(4));
    const int N = n + static_cast<int>(rng.below(static_cast<std::uint64_t>(201 - n)));
    const int mult = multipliers[rng.below(3)];
    const auto seed = rng.next();
    const auto d = generate_design(ids(N), n, mult, seed);
    SCOPED_TRACE("N=" + std::to_string(N) + " n=" + std::to_string(n) + " mult=" + std::to_string(mult));
    expect_structure(d, N, n, mult);
    const auto verdict = verify_design(d);
    EXPECT_TRUE(verdict.valid()) << verdict.violations.front().kind << ": " << verdict.violations.front().detail;
    EXPECT_EQ(max_pair(d), d.pair_stats.max_count);
    EXPECT_LE(d.pair_stats.max_count, d.pair_stats.cap);
    EXPECT_TRUE(d.pair_stats.cap_met);
  }
}

TEST(GenerateDesign, PairCountsAtMostLowerBoundPlusOne) {
  // N=5, n=2, m=10: each item meets 4 partners in 4 appearances, so the bound is 1.
  const auto d = generate_design(ids(5), 2, 2000, 8);
  EXPECT_EQ(d.pair_stats.lower_bound, 1);
  EXPECT_LE(max_pair(d), 2);
  for (int N : {12, 30, 61}) {
    const auto e = generate_design(ids(N), 4, 2000, static_cast<std::uint64_t>(N));
    EXPECT_LE(max_pair(e), e.pair_stats.lower_bound + 1);
  }
}

TEST(GenerateDesign, HigherMultiplierDoesNotWorsenPairsByMoreThanOne) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (int N : {8, 25, 60}) {
      const int lo = max_pair(generate_design(ids(N), 4, 1500, seed));
      const int hi = max_pair(generate_design(ids(N), 4, 2000, seed));
      EXPECT_LE(hi, lo + 1) << "N=" << N << " seed=" << seed;
    }
  }
}

TEST(GenerateDesign, LargeDesignUsesSparsePairCounts) {
  const auto d = generate_design(ids(5000), 4, 1500, 77);
  expect_structure(d, 5000, 4, 1500);
  EXPECT_TRUE(verify_design(d).valid());
}

TEST(VerifyDesign, DuplicatedItemInTuple) {
  auto d = generate_design(ids(10), 4, 2000, 5);
  d.tuples[3].item_ids[1] = d.tuples[3].item_ids[0];
  const auto verdict = verify_design(d);
  EXPECT_FALSE(verdict.valid());
  EXPECT_EQ(verdict.of_kind("duplicate-in-tuple").size(), 1u);
}

TEST(VerifyDesign, DeletedTupleFlagsItsItems) {
  auto d = generate_design(ids(10), 4, 2000, 5);
  const auto removed = d.tuples.back().item_ids;
  d.tuples.pop_back();
  const auto verdict = verify_design(d);
  const auto bad = verdict.of_kind("appearance-count");
  ASSERT_EQ(bad.size(), 4u);
  std::set<std::string> subjects;
  for (const auto& v : bad) subjects.insert(v.subject);
  EXPECT_EQ(subjects, std::set<std::string>(removed.begin(), removed.end()));
  EXPECT_FALSE(verdict.of_kind("tuple-count").empty());
}

TEST(VerifyDesign, OtherViolations) {
  auto d = generate_design(ids(10), 4, 2000, 5);
  auto unknown = d;
  unknown.tuples[0].item_ids[0] = "ghost";
  EXPECT_FALSE(verify_design(unknown).of_kind("unknown-item").empty());
  auto short_tuple = d;
  short_tuple.tuples[0].item_ids.pop_back();
  EXPECT_FALSE(verify_design(short_tuple).of_kind("tuple-size").empty());
  auto dup_id = d;
  dup_id.tuples[1].tuple_id = dup_id.tuples[0].tuple_id;
  EXPECT_FALSE(verify_design(dup_id).of_kind("duplicate-tuple-id").empty());
  auto lied = d;
  lied.appearance_counts.begin()->second += 1;
  EXPECT_FALSE(verify_design(lied).of_kind("appearance-count").empty());
}

TEST(VerifyDesign, PairImbalanceIsFlagged) {
  // Same pair in every tuple of a 6-item, n=2 design: appearances fine, pairs not.
  BwsDesign d;
  d.design_id = "bad";
  d.items = {"a", "b", "c", "d", "e", "f"};
  d.n = 2;
  d.multiplier_milli = 1000;
  d.m = 6;
  d.tuples = {{"t0", {"a", "b"}}, {"t1", {"a", "b"}}, {"t2", {"c", "d"}},
              {"t3", {"c", "d"}}, {"t4", {"e", "f"}}, {"t5", {"e", "f"}}};
  for (const auto& id : d.items) d.appearance_counts[id] = 2;
  d.pair_stats = {2, 2, 1, 2, true};
  EXPECT_TRUE(verify_design(d).valid());  // cap = lower bound + 1 = 2 is met
  d.tuples = {{"t0", {"a", "b"}}, {"t1", {"a", "b"}}, {"t2", {"a", "b"}},
              {"t3", {"c", "d"}}, {"t4", {"e", "f"}}, {"t5", {"c", "e"}}};
  d.appearance_counts = {{"a", 3}, {"b", 3}, {"c", 2}, {"d", 1}, {"e", 2}, {"f", 1}};
  const auto verdict = verify_design(d);
  EXPECT_FALSE(verdict.of_kind("pair-balance").empty());
  EXPECT_FALSE(verdict.of_kind("appearance-count").empty());
}

TEST(DesignJson, RoundTripStaysValid) {
  const auto d = generate_design(ids(23), 5, 1750, 9, "pool-x");
  const auto back = nlohmann::json::parse(nlohmann::json(d).dump()).get<BwsDesign>();
  EXPECT_EQ(back.design_id, "pool-x");
  EXPECT_EQ(back.m, d.m);
  EXPECT_EQ(back.tuples.size(), d.tuples.size());
  EXPECT_EQ(back.tuples[4].item_ids, d.tuples[4].item_ids);
  EXPECT_TRUE(verify_design(back).valid());
  ASSERT_NE(back.find_tuple(d.tuples[2].tuple_id), nullptr);
  EXPECT_EQ(back.find_tuple("nope"), nullptr);
}

TEST(PairCounts, KeyedBySortedIds) {
  BwsDesign d;
  d.items = {"b", "a", "c"};
  d.n = 2;
  d.tuples = {{"t0", {"b", "a"}}, {"t1", {"a", "b"}}, {"t2", {"c", "a"}}};
  const auto pc = pair_counts(d);
  EXPECT_EQ(pc.at({"a", "b"}), 2);
  EXPECT_EQ(pc.at({"a", "c"}), 1);
  EXPECT_EQ(pc.count({"b", "c"}), 0u);
}

}  // namespace
}  // namespace bwsann
