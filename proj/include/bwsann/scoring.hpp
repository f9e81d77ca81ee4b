#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bwsann/design.hpp"

namespace bwsann {

struct Judgment {
  std::string judgment_id;
  TupleId tuple_id;
  AnnotatorId annotator_id;
  ItemId best;
  ItemId worst;
  Timestamp submitted_at{};
};

void to_json(nlohmann::json& j, const Judgment& judgment);
void from_json(const nlohmann::json& j, Judgment& judgment);

std::vector<Judgment> judgments_from_jsonl(std::string_view text);
std::string judgments_to_jsonl(const std::vector<Judgment>& judgments);

/// Throws kInvalidChoice (best == worst), kUnknownTuple, or kChoiceOutsideTuple.
void check_judgment(const Judgment& judgment, const BwsDesign& design);

struct SeverityScore {
  ItemId item_id;
  int best_count = 0;
  int worst_count = 0;
  int judged_appearances = 0;

  /// (best - worst) / judged_appearances, in [-1, 1].
  double raw() const noexcept;
  /// (raw + 1) / 2, in [0, 1].
  double normalized() const noexcept;
};

struct ScoreOptions {
  /// Progressive scoring: omit items with no judged appearances instead of
  /// throwing kUnscoredItem.
  bool allow_unscored = false;
};

/// Counting aggregation over every design item, in design item order.
/// OpenMP-parallel over judgments; integer counts make it exact and
/// independent of thread count.
std::vector<SeverityScore> compute_scores(const std::vector<Judgment>& judgments, const BwsDesign& design,
                                          ScoreOptions options = {});

/// Single-threaded reference for compute_scores.
std::vector<SeverityScore> compute_scores_serial(const std::vector<Judgment>& judgments, const BwsDesign& design,
                                                 ScoreOptions options = {});

/// Most to least abusive: normalized score descending, then more judged
/// appearances, then item_id ascending. Scores are compared as exact rationals.
std::vector<SeverityScore> rank_items(std::vector<SeverityScore> scores);

/// Dense index of items and per-judgment (tuple, best, worst) indices, shared
/// by the scoring and reliability kernels.
struct JudgmentIndex {
  std::vector<ItemId> items;
  std::vector<std::vector<int>> tuple_items;     // by tuple index
  std::vector<int> tuple_of;                      // by judgment
  std::vector<int> best_of;
  std::vector<int> worst_of;

  static JudgmentIndex build(const std::vector<Judgment>& judgments, const BwsDesign& design);
};

struct ItemCounts {
  std::vector<int> best;
  std::vector<int> worst;
  std::vector<int> appearances;
};

/// Counts over the judgments whose positions are listed in `selection`.
void accumulate_counts(const JudgmentIndex& index, std::span<const int> selection, ItemCounts& counts);

std::vector<SeverityScore> to_scores(const JudgmentIndex& index, const ItemCounts& counts, ScoreOptions options);

struct ScoreRow {
  SeverityScore score;
  std::string text;
  std::string labels;  // ';'-joined taxonomy paths
};

/// item_id,text,labels,raw,normalized,best_count,worst_count,judged_appearances
std::string scores_to_csv(const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> scores_from_csv(std::string_view text);

}  // namespace bwsann
