#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bwsann/model.hpp"

namespace bwsann {

using TupleId = std::string;

struct BwsTuple {
  TupleId tuple_id;
  std::vector<ItemId> item_ids;  // presentation order
};

struct PairStats {
  int max_count = 0;
  int min_count = 0;     // over co-occurring pairs only
  int lower_bound = 0;   // max over items of ceil(a_i (n-1) / (N-1))
  int cap = 0;           // lower_bound + 1
  bool cap_met = false;  // false: generator could not reach cap, max_count is its best
};

struct BwsDesign {
  std::string design_id;
  std::vector<ItemId> items;  // input order; N = items.size()
  int n = 0;
  int m = 0;
  int multiplier_milli = 0;
  std::uint64_t seed = 0;
  std::vector<BwsTuple> tuples;
  std::map<ItemId, int> appearance_counts;
  /// Items that received ceil(m n / N) appearances when m n is not divisible by N.
  std::vector<ItemId> extra_appearance_items;
  PairStats pair_stats;
  std::vector<std::string> warnings;

  int item_count() const noexcept { return static_cast<int>(items.size()); }
  const BwsTuple* find_tuple(std::string_view tuple_id) const;
};

/// ceil(multiplier * N) with the multiplier in thousandths.
int tuple_count_for(int item_count, int multiplier_milli);

/// Generates m = ceil(multiplier N) n-tuples where each item appears
/// floor(mn/N) or ceil(mn/N) times and pair co-occurrence is kept near the
/// per-item lower bound. Pure function of its arguments.
///
/// Throws Error(kDesignInfeasible) if N < n, Error(kDuplicateItems) on repeated
/// ids, Error(kInvalidArgument) if n < 2 or the multiplier is outside [1, 4].
BwsDesign generate_design(const std::vector<ItemId>& items, int n, int multiplier_milli, std::uint64_t seed,
                          std::string design_id = "design");

struct DesignViolation {
  std::string kind;  // duplicate-in-tuple, appearance-count, tuple-count, ...
  std::string subject;
  std::string detail;
};

struct DesignVerdict {
  std::vector<DesignViolation> violations;
  bool valid() const noexcept { return violations.empty(); }
  std::vector<DesignViolation> of_kind(std::string_view kind) const;
};

/// Recomputes appearance and pair counts from the tuples and checks every
/// design invariant against them and against the recorded metadata.
DesignVerdict verify_design(const BwsDesign& design);

using PairCountMap = std::map<std::pair<ItemId, ItemId>, int>;

/// Co-occurrence counts keyed by (smaller id, larger id).
PairCountMap pair_counts(const BwsDesign& design);

void to_json(nlohmann::json& j, const BwsDesign& design);
void from_json(const nlohmann::json& j, BwsDesign& design);

}  // namespace bwsann
