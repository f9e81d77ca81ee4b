#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bwsann/labeling.hpp"
#include "bwsann/reliability.hpp"
#include "bwsann/scoring.hpp"

namespace bwsann {

struct GroupBalanceRow {
  std::string group_id;
  int item_count = 0;
  int abusive_count = 0;
  int benign_count = 0;
  std::optional<Ratio> abusive_ratio;  // nullopt when item_count == 0
};

/// Per-group class balance at threshold tau. An item labeled with k groups
/// contributes to k rows; items without any identity group fall under the
/// synthetic "other" row.
struct GroupBalanceReport {
  double tau = 0.5;
  std::vector<GroupBalanceRow> rows;  // sorted by group_id
  int total_items = 0;                // distinct items
  int total_abusive = 0;
  int total_benign = 0;
  int multi_group_items = 0;
};

inline constexpr std::string_view kMultiLabelNote =
    "Items labeled with several identity groups are counted once in each of their group rows; "
    "row counts may therefore sum to more than the item total.";

/// Throws Error(kMissingLabels) for a scored item absent from `labels` or with
/// an empty aggregated label set, kInvalidArgument when tau is outside [0, 1].
/// When `registry` is given, every registry group gets a row even if empty.
GroupBalanceReport balance_report(const std::vector<SeverityScore>& scores, const LabelTable& labels, double tau,
                                  const IdentityRegistry* registry = nullptr);

struct ConfusionCounts {
  int tp = 0, fp = 0, tn = 0, fn = 0;
  int support() const noexcept { return tp + fp + tn + fn; }
  /// FP / (FP + TN); nullopt when there are no gold negatives.
  std::optional<Ratio> false_positive_rate() const;
  /// FN / (FN + TP); nullopt when there are no gold positives.
  std::optional<Ratio> false_negative_rate() const;
};

struct DisparityRow {
  std::string group_id;
  ConfusionCounts counts;
  std::optional<Ratio> fpr;
  std::optional<Ratio> fnr;
};

struct DisparityReport {
  std::vector<DisparityRow> rows;  // sorted by group_id
  DisparityRow overall;
  /// Max over pairs of groups with a defined rate of |rate_i - rate_j|.
  Ratio fpr_gap;
  Ratio fnr_gap;
};

/// Per-group false positive / false negative rates of an external model.
/// Throws Error(kItemSetMismatch) unless gold and predictions cover the same
/// items, Error(kMissingLabels) for an item without aggregated labels.
DisparityReport disparity_report(const std::map<ItemId, bool>& gold, const std::map<ItemId, bool>& predictions,
                                 const LabelTable& labels);

/// Identity groups an item reports under ("other" when none).
std::vector<std::string> report_groups(const AggregatedLabels& labels);

void to_json(nlohmann::json& j, const GroupBalanceReport& report);
void from_json(const nlohmann::json& j, GroupBalanceReport& report);
void to_json(nlohmann::json& j, const DisparityReport& report);

std::string balance_table(const GroupBalanceReport& report);
std::string disparity_table(const DisparityReport& report);

/// Reads {"item_id": ..., "abusive": true|false} lines.
std::map<ItemId, bool> flags_from_jsonl(std::string_view text);

struct DatasheetOptions {
  double low_reliability_threshold = 0.6;
  /// Sampling strategy -> emitted item count, if the items came from the sampler.
  std::map<std::string, int> sampling_strategies;
  std::vector<std::string> extra_limitations;
};

/// Human-readable (Markdown) dataset datasheet. Deterministic in its inputs.
std::string export_datasheet(const Campaign& campaign, const GroupBalanceReport& balance,
                             const std::optional<ReliabilityReport>& reliability, const DatasheetOptions& options = {});

}  // namespace bwsann
