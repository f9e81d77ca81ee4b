#include <algorithm>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "bwsann/design.hpp"
#include "bwsann/error.hpp"
#include "bwsann/rng.hpp"
#include "bwsann/scoring.hpp"
#include "bwsann/simulate.hpp"

namespace bwsann {
namespace {

BwsDesign single_tuple() {
  BwsDesign d;
  d.design_id = "one";
  d.items = {"A", "B", "C", "D"};
  d.n = 4;
  d.m = 1;
  d.tuples = {{"t0", {"A", "B", "C", "D"}}};
  return d;
}

Judgment judge(std::string tuple, std::string who, std::string best, std::string worst) {
  return {tuple + "/" + who, std::move(tuple), std::move(who), std::move(best), std::move(worst), {}};
}

const SeverityScore& of(const std::vector<SeverityScore>& scores, const std::string& id) {
  return *std::find_if(scores.begin(), scores.end(), [&](const auto& s) { return s.item_id == id; });
}

TEST(ComputeScores, TwoJudgmentsOnOneTuple) {
  const auto scores = compute_scores({judge("t0", "a1", "A", "D"), judge("t0", "a2", "A", "C")}, single_tuple());
  ASSERT_EQ(scores.size(), 4u);
  EXPECT_EQ(of(scores, "A").raw(), 1.0);
  EXPECT_EQ(of(scores, "B").raw(), 0.0);
  EXPECT_EQ(of(scores, "C").raw(), -0.5);
  EXPECT_EQ(of(scores, "D").raw(), -0.5);
  EXPECT_EQ(of(scores, "A").normalized(), 1.0);
  EXPECT_EQ(of(scores, "B").normalized(), 0.5);
  EXPECT_EQ(of(scores, "C").normalized(), 0.25);
  EXPECT_EQ(of(scores, "D").normalized(), 0.25);
  for (const auto& s : scores) EXPECT_EQ(s.judged_appearances, 2);

  const auto ranked = rank_items(scores);
  std::vector<std::string> order;
  for (const auto& s : ranked) order.push_back(s.item_id);
  EXPECT_EQ(order, (std::vector<std::string>{"A", "B", "C", "D"}));
}

TEST(ComputeScores, AlwaysBestScoresOne) {
  const auto scores = compute_scores(
      {judge("t0", "a1", "B", "A"), judge("t0", "a2", "B", "C"), judge("t0", "a3", "B", "D")}, single_tuple());
  EXPECT_EQ(of(scores, "B").raw(), 1.0);
  EXPECT_EQ(of(scores, "B").normalized(), 1.0);
}

TEST(ComputeScores, BalancedBestAndWorstIsNeutral) {
  const auto scores = compute_scores({judge("t0", "a1", "C", "A"), judge("t0", "a2", "A", "C")}, single_tuple());
  EXPECT_EQ(of(scores, "A").raw(), 0.0);
  EXPECT_EQ(of(scores, "A").normalized(), 0.5);
}

TEST(ComputeScores, ErrorsPassThrough) {
  const auto code = [](std::vector<Judgment> js, ScoreOptions opt = {}) {
    try {
      compute_scores(js, single_tuple(), opt);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::kIoError;
  };
  EXPECT_EQ(code({}), Errc::kUnscoredItem);
  EXPECT_EQ(code({}, {.allow_unscored = true}), Errc::kIoError);
  EXPECT_EQ(code({judge("t0", "a", "A", "A")}), Errc::kInvalidChoice);
  EXPECT_EQ(code({judge("t0", "a", "A", "E")}), Errc::kChoiceOutsideTuple);
  EXPECT_EQ(code({judge("t7", "a", "A", "B")}), Errc::kUnknownTuple);
}

TEST(ComputeScores, UnjudgedTuplesContributeNothing) {
  BwsDesign d = single_tuple();
  d.items.push_back("E");
  d.tuples.push_back({"t1", {"B", "C", "D", "E"}});
  d.m = 2;
  const auto partial = compute_scores({judge("t0", "a", "A", "D")}, d, {.allow_unscored = true});
  EXPECT_EQ(partial.size(), 4u);  // E never judged
  EXPECT_EQ(of(partial, "B").judged_appearances, 1);
  EXPECT_THROW(compute_scores({judge("t0", "a", "A", "D")}, d), Error);
}

TEST(RankItems, TieBreaks) {
  std::vector<SeverityScore> scores{{"D", 1, 2, 4}, {"C", 1, 2, 4}, {"B", 2, 2, 4}, {"A", 4, 0, 4}};
  auto ranked = rank_items(scores);
  EXPECT_EQ(ranked[2].item_id, "C");
  EXPECT_EQ(ranked[3].item_id, "D");

  // All at 0.5: lexicographic.
  ranked = rank_items({{"b", 1, 1, 2}, {"c", 0, 0, 2}, {"a", 2, 2, 4}});
  EXPECT_EQ(ranked[0].item_id, "a");  // equal score, more appearances first
  EXPECT_EQ(ranked[1].item_id, "b");
  EXPECT_EQ(ranked[2].item_id, "c");

  // Exact rationals: 1/3 vs 2/6 tie; appearance count then decides.
  ranked = rank_items({{"x", 1, 0, 3}, {"y", 2, 0, 6}, {"z", 3, 1, 6}});
  EXPECT_EQ(ranked[0].item_id, "y");
  EXPECT_EQ(ranked[1].item_id, "z");
  EXPECT_EQ(ranked[2].item_id, "x");
}

// Exhaustive oracle comparison over small designs: every combination of
// (no judgment | one ordered best/worst choice) per tuple for up to 4 tuples,
// and every pair of judgments per tuple for up to 2 tuples.
struct Oracle {
  std::map<ItemId, std::array<int, 3>> counts;  // best, worst, appearances
};

Oracle brute_force(const std::vector<Judgment>& js, const BwsDesign& d) {
  Oracle o;
  for (const auto& j : js) {
    ++o.counts[j.best][0];
    ++o.counts[j.worst][1];
    for (const auto& t : d.tuples) {
      if (t.tuple_id != j.tuple_id) continue;
      for (const auto& id : t.item_ids) ++o.counts[id][2];
    }
  }
  return o;
}

void compare_with_oracle(const std::vector<Judgment>& js, const BwsDesign& d, long long& checked) {
  const auto scores = compute_scores(js, d, {.allow_unscored = true});
  const auto serial = compute_scores_serial(js, d, {.allow_unscored = true});
  const auto oracle = brute_force(js, d);
  std::size_t scored = 0;
  for (const auto& [id, c] : oracle.counts) scored += c[2] > 0;
  ASSERT_EQ(scores.size(), scored);
  ASSERT_EQ(serial.size(), scored);
  long long sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    const auto& c = oracle.counts.at(s.item_id);
    ASSERT_EQ(s.best_count, c[0]);
    ASSERT_EQ(s.worst_count, c[1]);
    ASSERT_EQ(s.judged_appearances, c[2]);
    ASSERT_EQ(serial[i].item_id, s.item_id);
    ASSERT_EQ(serial[i].best_count, s.best_count);
    ASSERT_EQ(serial[i].judged_appearances, s.judged_appearances);
    ASSERT_EQ(s.raw(), static_cast<double>(c[0] - c[1]) / c[2]);
    ASSERT_GE(s.raw(), -1.0);
    ASSERT_LE(s.raw(), 1.0);
    ASSERT_LE(s.best_count + s.worst_count, s.judged_appearances);
    sum += s.best_count - s.worst_count;
  }
  ASSERT_EQ(sum, 0);
  ++checked;
}

std::vector<std::vector<ItemId>> combinations(const std::vector<ItemId>& items, int n) {
  std::vector<std::vector<ItemId>> out;
  std::vector<bool> pick(items.size(), false);
  std::fill(pick.begin(), pick.begin() + n, true);
  do {
    std::vector<ItemId> c;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (pick[i]) c.push_back(items[i]);
    }
    out.push_back(c);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

TEST(ComputeScores, ExhaustiveOracleEquivalence) {
  const std::vector<ItemId> all{"a", "b", "c", "d", "e"};
  long long checked = 0;
  for (int N = 2; N <= 5; ++N) {
    const std::vector<ItemId> items(all.begin(), all.begin() + N);
    for (int n = 2; n <= N; ++n) {
      const auto combos = combinations(items, n);
      for (int m = 1; m <= 4; ++m) {
        BwsDesign d;
        d.items = items;
        d.n = n;
        d.m = m;
        for (int t = 0; t < m; ++t) {
          d.tuples.push_back({"t" + std::to_string(t), combos[static_cast<std::size_t>(t * 3) % combos.size()]});
        }
        // Ordered (best, worst) choices per tuple.
        std::vector<std::vector<std::pair<ItemId, ItemId>>> choices(static_cast<std::size_t>(m));
        for (int t = 0; t < m; ++t) {
          for (const auto& b : d.tuples[static_cast<std::size_t>(t)].item_ids) {
            for (const auto& w : d.tuples[static_cast<std::size_t>(t)].item_ids) {
              if (b != w) choices[static_cast<std::size_t>(t)].push_back({b, w});
            }
          }
        }
        const int per_tuple_max = m <= 2 ? 2 : 1;
        std::vector<Judgment> current;
        std::function<void(int)> rec = [&](int t) {
          if (t == m) {
            compare_with_oracle(current, d, checked);
            return;
          }
          const auto tid = d.tuples[static_cast<std::size_t>(t)].tuple_id;
          const auto& opts = choices[static_cast<std::size_t>(t)];
          rec(t + 1);
          for (const auto& [b, w] : opts) {
            current.push_back(judge(tid, "x", b, w));
            rec(t + 1);
            if (per_tuple_max >= 2) {
              for (const auto& [b2, w2] : opts) {
                current.push_back(judge(tid, "y", b2, w2));
                rec(t + 1);
                current.pop_back();
              }
            }
            current.pop_back();
          }
        };
        rec(0);
        if (::testing::Test::HasFatalFailure()) return;
      }
    }
  }
  EXPECT_GT(checked, 100000);
}

struct Campaign {
  BwsDesign design;
  std::vector<Judgment> judgments;
};

Campaign random_campaign(std::uint64_t seed) {
  Rng rng(seed);
  const int N = 4 + static_cast<int>(rng.below(60));
  const int n = 2 + static_cast<int>(rng.below(4));
  const int annotators = 1 + static_cast<int>(rng.below(4));
  const auto world = make_uniform_world(std::max(N, n), rng.uniform() * 0.3, seed);
  Campaign c{generate_design(world.items, n, 1500 + 250 * static_cast<int>(rng.below(3)), seed), {}};
  c.judgments = simulate_judgments(world, c.design, annotators);
  return c;
}

TEST(ScoreProperties, SwappingBestAndWorstNegatesRaw) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto c = random_campaign(seed);
    const auto before = compute_scores(c.judgments, c.design);
    for (auto& j : c.judgments) std::swap(j.best, j.worst);
    const auto after = compute_scores(c.judgments, c.design);
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
      ASSERT_EQ(after[i].raw(), -before[i].raw()) << "seed " << seed << " item " << before[i].item_id;
      // normalized = (b - w + a) / 2a; 1 - normalized as an exact rational.
      const auto& b = before[i];
      const auto& a = after[i];
      ASSERT_EQ(Ratio::of(a.best_count - a.worst_count + a.judged_appearances, 2 * a.judged_appearances),
                Ratio::of(b.judged_appearances - (b.best_count - b.worst_count), 2 * b.judged_appearances));
      ASSERT_NEAR(a.normalized(), 1.0 - b.normalized(), 1e-15);
    }
  }
}

TEST(ScoreProperties, JudgmentOrderDoesNotMatter) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto c = random_campaign(seed + 1000);
    const auto before = compute_scores(c.judgments, c.design);
    Rng rng(seed);
    rng.shuffle(std::span<Judgment>(c.judgments));
    const auto after = compute_scores(c.judgments, c.design);
    ASSERT_EQ(before.size(), after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
      EXPECT_EQ(before[i].best_count, after[i].best_count);
      EXPECT_EQ(before[i].worst_count, after[i].worst_count);
      EXPECT_EQ(before[i].judged_appearances, after[i].judged_appearances);
    }
  }
}

TEST(ScoreProperties, ParallelMatchesSerialReference) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = random_campaign(seed + 5000);
    const auto par = compute_scores(c.judgments, c.design);
    const auto ser = compute_scores_serial(c.judgments, c.design);
    ASSERT_EQ(par.size(), ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      EXPECT_EQ(par[i].item_id, ser[i].item_id);
      EXPECT_EQ(par[i].best_count, ser[i].best_count);
      EXPECT_EQ(par[i].worst_count, ser[i].worst_count);
      EXPECT_EQ(par[i].judged_appearances, ser[i].judged_appearances);
    }
  }
}

TEST(ScoresCsv, RoundTrip) {
  const std::vector<ScoreRow> rows{
      {{"i1", 2, 0, 3}, "a text, with \"quotes\"", "People/Personal;Other"},
      {{"i2", 0, 1, 3}, "", ""},
  };
  const auto csv = scores_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "item_id,text,labels,raw,normalized,best_count,worst_count,judged_appearances");
  const auto back = scores_from_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].text, rows[0].text);
  EXPECT_EQ(back[0].labels, rows[0].labels);
  EXPECT_EQ(back[0].score.best_count, 2);
  EXPECT_EQ(back[1].score.worst_count, 1);
  EXPECT_EQ(back[1].score.raw(), rows[1].score.raw());
}

TEST(JudgmentJson, RoundTrip) {
  Judgment j{"j1", "t0", "ann", "A", "B", {}};
  const auto back = judgments_from_jsonl(judgments_to_jsonl({j}));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].judgment_id, "j1");
  EXPECT_EQ(back[0].worst, "B");
}

}  // namespace
}  // namespace bwsann
