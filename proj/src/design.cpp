#include "bwsann/design.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "bwsann/error.hpp"
#include "bwsann/rng.hpp"

namespace bwsann {

namespace {

// Upper-triangle pair counter; dense for moderate N, hashed beyond that.
class PairCounter {
 public:
  explicit PairCounter(int n) : n_(n) {
    if (n_ <= kDenseLimit) dense_.assign(static_cast<std::size_t>(n_) * (n_ - 1) / 2 + 1, 0);
  }

  int get(int a, int b) const {
    if (!dense_.empty()) return dense_[slot(a, b)];
    const auto it = sparse_.find(key(a, b));
    return it == sparse_.end() ? 0 : it->second;
  }

  void add(int a, int b, int delta) {
    if (!dense_.empty()) {
      dense_[slot(a, b)] += delta;
    } else {
      sparse_[key(a, b)] += delta;
    }
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    if (!dense_.empty()) {
      for (int a = 0; a < n_; ++a) {
        for (int b = a + 1; b < n_; ++b) fn(a, b, dense_[slot(a, b)]);
      }
    } else {
      for (const auto& [k, c] : sparse_) fn(static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffu), c);
    }
  }

 private:
  static constexpr int kDenseLimit = 4096;

  std::size_t slot(int a, int b) const {
    if (a > b) std::swap(a, b);
    // Row-major upper triangle without the diagonal.
    return static_cast<std::size_t>(a) * (2 * n_ - a - 1) / 2 + static_cast<std::size_t>(b - a - 1);
  }
  static std::uint64_t key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  }

  int n_;
  std::vector<int> dense_;
  std::unordered_map<std::uint64_t, int> sparse_;
};

using Tuples = std::vector<std::vector<int>>;

bool contains(const std::vector<int>& tuple, int item) {
  return std::find(tuple.begin(), tuple.end(), item) != tuple.end();
}

int ceil_div(long long a, long long b) { return static_cast<int>((a + b - 1) / b); }

int pair_lower_bound(const std::vector<int>& appearances, int n, int item_count) {
  if (item_count < 2) return 0;
  int bound = 0;
  for (int a : appearances) bound = std::max(bound, ceil_div(static_cast<long long>(a) * (n - 1), item_count - 1));
  return bound;
}

// Moves duplicate occurrences out of their tuple by swapping with a slot of
// another tuple that accepts the item and gives back one that fits.
void repair_duplicates(Tuples& tuples, Rng& rng) {
  const std::size_t m = tuples.size();
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t s = 0; s < tuples[t].size(); ++s) {
      const int x = tuples[t][s];
      const bool duplicated = std::count(tuples[t].begin(), tuples[t].end(), x) > 1;
      if (!duplicated) continue;
      bool fixed = false;
      const std::size_t start = static_cast<std::size_t>(rng.below(m));
      for (std::size_t k = 0; k < m && !fixed; ++k) {
        const std::size_t u = (start + k) % m;
        if (u == t || contains(tuples[u], x)) continue;
        for (std::size_t v = 0; v < tuples[u].size(); ++v) {
          const int z = tuples[u][v];
          if (contains(tuples[t], z)) continue;
          std::swap(tuples[t][s], tuples[u][v]);
          fixed = true;
          break;
        }
      }
      if (!fixed) throw Error(Errc::kDesignInfeasible, "", "cannot separate duplicate item within a tuple");
    }
  }
}

class PairBalancer {
 public:
  PairBalancer(Tuples& tuples, int item_count, int lower_bound)
      : tuples_(tuples), counts_(item_count), lower_bound_(lower_bound) {
    for (const auto& tuple : tuples_) {
      for (std::size_t i = 0; i < tuple.size(); ++i) {
        for (std::size_t j = i + 1; j < tuple.size(); ++j) counts_.add(tuple[i], tuple[j], 1);
      }
    }
  }

  // Greedy swaps that strictly lower sum(max(0, c - lower_bound)^2), aimed
  // at tuples holding a pair above the cap. Stops when no pair exceeds the
  // cap or the move budget is spent.
  void run(Rng& rng, long long budget) {
    const int cap = lower_bound_ + 1;
    const std::size_t m = tuples_.size();
    while (budget > 0) {
      auto hot = hot_slots(cap);
      if (hot.empty()) return;
      rng.shuffle(std::span<std::pair<std::size_t, std::size_t>>(hot));
      long long moves = 0;
      for (const auto& [t, i] : hot) {
        if (!is_hot(t, i, cap)) continue;
        for (int attempt = 0; attempt < 64 && budget > 0; ++attempt, --budget) {
          const std::size_t u = static_cast<std::size_t>(rng.below(m));
          if (u == t) continue;
          const std::size_t v = static_cast<std::size_t>(rng.below(tuples_[u].size()));
          if (try_swap(t, i, u, v)) {
            ++moves;
            break;
          }
        }
      }
      if (moves == 0) return;
    }
  }

  const PairCounter& counts() const { return counts_; }

 private:
  long long penalty(int c) const {
    const long long excess = c - lower_bound_;
    return excess > 0 ? excess * excess : 0;
  }

  bool is_hot(std::size_t t, std::size_t i, int cap) const {
    const auto& tuple = tuples_[t];
    for (std::size_t j = 0; j < tuple.size(); ++j) {
      if (i != j && counts_.get(tuple[i], tuple[j]) > cap) return true;
    }
    return false;
  }

  // (tuple, slot) positions whose item co-occurs above cap with a tuple-mate.
  std::vector<std::pair<std::size_t, std::size_t>> hot_slots(int cap) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t t = 0; t < tuples_.size(); ++t) {
      for (std::size_t i = 0; i < tuples_[t].size(); ++i) {
        if (is_hot(t, i, cap)) out.emplace_back(t, i);
      }
    }
    return out;
  }

  bool try_swap(std::size_t t, std::size_t i, std::size_t u, std::size_t v) {
    auto& a = tuples_[t];
    auto& b = tuples_[u];
    const int x = a[i];
    const int z = b[v];
    if (x == z || contains(a, z) || contains(b, x)) return false;

    deltas_.clear();
    const auto note = [&](int p, int q, int d) {
      if (p > q) std::swap(p, q);
      for (auto& e : deltas_) {
        if (e.p == p && e.q == q) {
          e.d += d;
          return;
        }
      }
      deltas_.push_back({p, q, d});
    };
    for (int other : a) {
      if (other == x) continue;
      note(x, other, -1);
      note(z, other, +1);
    }
    for (int other : b) {
      if (other == z) continue;
      note(z, other, -1);
      note(x, other, +1);
    }
    long long change = 0;
    for (const auto& e : deltas_) {
      if (e.d == 0) continue;
      const int c = counts_.get(e.p, e.q);
      change += penalty(c + e.d) - penalty(c);
    }
    if (change >= 0) return false;
    for (const auto& e : deltas_) {
      if (e.d != 0) counts_.add(e.p, e.q, e.d);
    }
    a[i] = z;
    b[v] = x;
    return true;
  }

  struct Delta {
    int p, q, d;
  };

  Tuples& tuples_;
  PairCounter counts_;
  int lower_bound_;
  std::vector<Delta> deltas_;
};

}  // namespace

const BwsTuple* BwsDesign::find_tuple(std::string_view tuple_id) const {
  for (const auto& t : tuples) {
    if (t.tuple_id == tuple_id) return &t;
  }
  return nullptr;
}

int tuple_count_for(int item_count, int multiplier_milli) {
  return ceil_div(static_cast<long long>(multiplier_milli) * item_count, 1000);
}

BwsDesign generate_design(const std::vector<ItemId>& items, int n, int multiplier_milli, std::uint64_t seed,
                          std::string design_id) {
  if (n < 2) throw Error(Errc::kInvalidArgument, "n", "tuple size must be >= 2");
  if (multiplier_milli < 1000 || multiplier_milli > 4000) {
    throw Error(Errc::kInvalidArgument, "multiplier", "must lie in [1.0, 4.0]");
  }
  {
    std::unordered_set<std::string_view> seen;
    for (const auto& id : items) {
      if (!seen.insert(id).second) throw Error(Errc::kDuplicateItems, id);
    }
  }
  const int item_count = static_cast<int>(items.size());
  if (item_count < n) {
    throw Error(Errc::kDesignInfeasible, "", std::to_string(item_count) + " items for tuples of " + std::to_string(n));
  }

  BwsDesign design;
  design.design_id = std::move(design_id);
  design.items = items;
  design.n = n;
  design.multiplier_milli = multiplier_milli;
  design.seed = seed;
  design.m = tuple_count_for(item_count, multiplier_milli);
  if (multiplier_milli < 1500 || multiplier_milli > 2000) {
    design.warnings.push_back("multiplier outside the recommended [1.5, 2.0] range");
  }

  const long long total = static_cast<long long>(design.m) * n;

  // Concatenated seeded permutations; the final partial pass decides which
  // items get the extra appearance.
  Rng slot_rng(derive_seed(seed, 0));
  std::vector<int> slots;
  slots.reserve(static_cast<std::size_t>(total));
  std::vector<int> perm(static_cast<std::size_t>(item_count));
  while (static_cast<long long>(slots.size()) < total) {
    std::iota(perm.begin(), perm.end(), 0);
    slot_rng.shuffle(std::span<int>(perm));
    const auto take = std::min<long long>(item_count, total - static_cast<long long>(slots.size()));
    slots.insert(slots.end(), perm.begin(), perm.begin() + take);
    if (take < item_count) {
      std::vector<int> extra(perm.begin(), perm.begin() + take);
      std::sort(extra.begin(), extra.end());
      for (int idx : extra) design.extra_appearance_items.push_back(items[static_cast<std::size_t>(idx)]);
    }
  }

  Tuples tuples(static_cast<std::size_t>(design.m));
  for (int t = 0; t < design.m; ++t) {
    tuples[static_cast<std::size_t>(t)].assign(slots.begin() + static_cast<long long>(t) * n,
                                               slots.begin() + static_cast<long long>(t + 1) * n);
  }

  Rng repair_rng(derive_seed(seed, 1));
  repair_duplicates(tuples, repair_rng);

  std::vector<int> appearances(static_cast<std::size_t>(item_count), 0);
  for (int s : slots) ++appearances[static_cast<std::size_t>(s)];
  const int lower_bound = pair_lower_bound(appearances, n, item_count);

  PairBalancer balancer(tuples, item_count, lower_bound);
  balancer.run(repair_rng, 50LL * design.m * n + 1000);

  design.pair_stats.lower_bound = lower_bound;
  design.pair_stats.cap = lower_bound + 1;
  int max_pair = 0;
  int min_pair = std::numeric_limits<int>::max();
  balancer.counts().for_each([&](int, int, int c) {
    if (c <= 0) return;
    max_pair = std::max(max_pair, c);
    min_pair = std::min(min_pair, c);
  });
  design.pair_stats.max_count = max_pair;
  design.pair_stats.min_count = max_pair == 0 ? 0 : min_pair;
  design.pair_stats.cap_met = max_pair <= design.pair_stats.cap;
  if (!design.pair_stats.cap_met) {
    design.warnings.push_back("pair co-occurrence cap " + std::to_string(design.pair_stats.cap) +
                              " not reached; best max " + std::to_string(max_pair));
  }

  Rng order_rng(derive_seed(seed, 2));
  design.tuples.reserve(tuples.size());
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    order_rng.shuffle(std::span<int>(tuples[t]));
    BwsTuple tuple;
    tuple.tuple_id = "t" + std::to_string(t);
    for (int idx : tuples[t]) tuple.item_ids.push_back(items[static_cast<std::size_t>(idx)]);
    design.tuples.push_back(std::move(tuple));
  }
  for (std::size_t i = 0; i < items.size(); ++i) design.appearance_counts[items[i]] = appearances[i];
  return design;
}

std::vector<DesignViolation> DesignVerdict::of_kind(std::string_view kind) const {
  std::vector<DesignViolation> out;
  for (const auto& v : violations) {
    if (v.kind == kind) out.push_back(v);
  }
  return out;
}

PairCountMap pair_counts(const BwsDesign& design) {
  PairCountMap out;
  for (const auto& tuple : design.tuples) {
    const auto& ids = tuple.item_ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        if (ids[i] == ids[j]) continue;
        ++out[std::minmax(ids[i], ids[j])];
      }
    }
  }
  return out;
}

DesignVerdict verify_design(const BwsDesign& design) {
  DesignVerdict verdict;
  const auto fail = [&](std::string kind, std::string subject, std::string detail = {}) {
    verdict.violations.push_back({std::move(kind), std::move(subject), std::move(detail)});
  };

  const int item_count = design.item_count();
  std::map<ItemId, int> index;
  for (const auto& id : design.items) {
    if (!index.emplace(id, static_cast<int>(index.size())).second) fail("duplicate-items", id);
  }
  if (design.n < 2) fail("tuple-size", design.design_id, "n < 2");
  if (item_count < design.n) fail("infeasible", design.design_id, "N < n");
  if (design.m != static_cast<int>(design.tuples.size())) {
    fail("tuple-count", design.design_id,
         "declared m=" + std::to_string(design.m) + ", found " + std::to_string(design.tuples.size()));
  }
  if (item_count > 0 && design.m != tuple_count_for(item_count, design.multiplier_milli)) {
    fail("tuple-count", design.design_id, "m != ceil(multiplier * N)");
  }

  std::map<ItemId, int> recount;
  for (const auto& id : design.items) recount[id] = 0;
  std::set<TupleId> tuple_ids;
  for (const auto& tuple : design.tuples) {
    if (!tuple_ids.insert(tuple.tuple_id).second) fail("duplicate-tuple-id", tuple.tuple_id);
    if (static_cast<int>(tuple.item_ids.size()) != design.n) {
      fail("tuple-size", tuple.tuple_id, std::to_string(tuple.item_ids.size()) + " items");
    }
    std::set<ItemId> seen;
    for (const auto& id : tuple.item_ids) {
      if (!seen.insert(id).second) fail("duplicate-in-tuple", tuple.tuple_id, id);
      auto it = recount.find(id);
      if (it == recount.end()) {
        fail("unknown-item", tuple.tuple_id, id);
      } else {
        ++it->second;
      }
    }
  }

  if (item_count > 0) {
    const long long total = static_cast<long long>(design.m) * design.n;
    const int lo = static_cast<int>(total / item_count);
    const int hi = static_cast<int>((total + item_count - 1) / item_count);
    for (const auto& id : design.items) {
      const int actual = recount[id];
      const auto recorded = design.appearance_counts.find(id);
      if (recorded == design.appearance_counts.end() || recorded->second != actual) {
        fail("appearance-count", id, "recorded count disagrees with tuples (found " + std::to_string(actual) + ")");
      } else if (actual < lo || actual > hi) {
        fail("appearance-count", id,
             std::to_string(actual) + " outside {" + std::to_string(lo) + ", " + std::to_string(hi) + "}");
      }
    }
  }

  std::vector<int> appearances;
  appearances.reserve(recount.size());
  for (const auto& id : design.items) appearances.push_back(recount[id]);
  const int lower_bound = pair_lower_bound(appearances, design.n, item_count);
  int max_pair = 0;
  for (const auto& [pair, c] : pair_counts(design)) max_pair = std::max(max_pair, c);
  if (max_pair > lower_bound + 1) {
    if (design.pair_stats.cap_met) {
      fail("pair-balance", design.design_id,
           "max pair count " + std::to_string(max_pair) + " exceeds cap " + std::to_string(lower_bound + 1));
    } else if (design.pair_stats.max_count != max_pair) {
      fail("pair-balance", design.design_id, "recorded relaxed max pair count disagrees with tuples");
    }
  }
  return verdict;
}

void to_json(nlohmann::json& j, const BwsDesign& d) {
  j = nlohmann::json::object();
  j["design_id"] = d.design_id;
  j["n"] = d.n;
  j["N"] = d.item_count();
  j["m"] = d.m;
  j["multiplier"] = d.multiplier_milli / 1000.0;
  j["seed"] = d.seed;
  j["items"] = d.items;
  auto& tuples = j["tuples"] = nlohmann::json::array();
  for (const auto& t : d.tuples) tuples.push_back({{"tuple_id", t.tuple_id}, {"items", t.item_ids}});
  j["appearance_counts"] = d.appearance_counts;
  j["extra_appearance_items"] = d.extra_appearance_items;
  j["pair_stats"] = {{"max", d.pair_stats.max_count},
                     {"min", d.pair_stats.min_count},
                     {"lower_bound", d.pair_stats.lower_bound},
                     {"cap", d.pair_stats.cap},
                     {"cap_met", d.pair_stats.cap_met}};
  j["warnings"] = d.warnings;
}

void from_json(const nlohmann::json& j, BwsDesign& d) {
  d = BwsDesign{};
  d.design_id = j.value("design_id", "design");
  d.n = j.at("n").get<int>();
  d.m = j.at("m").get<int>();
  d.multiplier_milli = multiplier_to_milli(j.at("multiplier").get<double>());
  d.seed = j.value("seed", std::uint64_t{0});
  d.items = j.at("items").get<std::vector<ItemId>>();
  for (const auto& t : j.at("tuples")) {
    d.tuples.push_back({t.at("tuple_id").get<std::string>(), t.at("items").get<std::vector<ItemId>>()});
  }
  d.appearance_counts = j.value("appearance_counts", std::map<ItemId, int>{});
  d.extra_appearance_items = j.value("extra_appearance_items", std::vector<ItemId>{});
  if (auto ps = j.find("pair_stats"); ps != j.end()) {
    d.pair_stats.max_count = ps->value("max", 0);
    d.pair_stats.min_count = ps->value("min", 0);
    d.pair_stats.lower_bound = ps->value("lower_bound", 0);
    d.pair_stats.cap = ps->value("cap", 0);
    d.pair_stats.cap_met = ps->value("cap_met", false);
  }
  d.warnings = j.value("warnings", std::vector<std::string>{});
}

}  // namespace bwsann
