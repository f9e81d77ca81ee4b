#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "bwsann/model.hpp"

namespace bwsann {

struct AggregatedLabels {
  std::set<SubjectMatterLabel> labels;
  int labeler_count = 0;
  bool needs_adjudication = false;

  /// Identity groups referenced by the aggregated labels (identity or related_group).
  std::set<std::string> groups() const;
};

using LabelTable = std::map<ItemId, AggregatedLabels>;

/// Per-label strict majority: a label survives iff more than half of the
/// item's labelings contain it. Items where nothing survives are flagged
/// needs_adjudication. Throws Error(kUnderLabeled) for an item with fewer
/// than policy.labelers_per_item labelings.
LabelTable aggregate_labelings(const std::vector<ItemLabeling>& labelings, const CampaignPolicy& policy);

/// Same, but also requires every id in `items` to be present (an item with no
/// labelings at all is UnderLabeled) and rejects labelings for unknown items.
LabelTable aggregate_labelings(const std::vector<ItemLabeling>& labelings, const CampaignPolicy& policy,
                               const std::vector<ItemId>& items);

void to_json(nlohmann::json& j, const LabelTable& table);
void from_json(const nlohmann::json& j, LabelTable& table);

/// Line-delimited export: {"item_id", "labels", "labeler_count", "needs_adjudication"}.
std::string labels_to_jsonl(const LabelTable& table);
LabelTable labels_from_jsonl(std::string_view text);

}  // namespace bwsann
