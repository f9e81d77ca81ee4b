#include "bwsann/labeling.hpp"

#include <sstream>

#include "bwsann/error.hpp"
#include "bwsann/jsonl.hpp"

namespace bwsann {

std::set<std::string> AggregatedLabels::groups() const {
  std::set<std::string> out;
  for (const auto& label : labels) {
    if (auto g = label.group()) out.insert(*g);
  }
  return out;
}

LabelTable aggregate_labelings(const std::vector<ItemLabeling>& labelings, const CampaignPolicy& policy) {
  std::map<ItemId, std::map<SubjectMatterLabel, int>> votes;
  std::map<ItemId, int> counts;
  for (const auto& labeling : labelings) {
    ++counts[labeling.item_id];
    auto& item_votes = votes[labeling.item_id];
    for (const auto& label : labeling.labels) ++item_votes[label];
  }

  LabelTable table;
  for (const auto& [item_id, count] : counts) {
    if (count < policy.labelers_per_item) {
      throw Error(Errc::kUnderLabeled, item_id,
                  std::to_string(count) + " of " + std::to_string(policy.labelers_per_item) + " labelings");
    }
    AggregatedLabels agg;
    agg.labeler_count = count;
    for (const auto& [label, n] : votes[item_id]) {
      if (2 * n > count) agg.labels.insert(label);
    }
    agg.needs_adjudication = agg.labels.empty();
    table.emplace(item_id, std::move(agg));
  }
  return table;
}

LabelTable aggregate_labelings(const std::vector<ItemLabeling>& labelings, const CampaignPolicy& policy,
                               const std::vector<ItemId>& items) {
  const std::set<ItemId> known(items.begin(), items.end());
  for (const auto& labeling : labelings) {
    if (!known.count(labeling.item_id)) throw Error(Errc::kNotFound, labeling.item_id, "labeling for unknown item");
  }
  auto table = aggregate_labelings(labelings, policy);
  for (const auto& id : items) {
    if (!table.count(id)) throw Error(Errc::kUnderLabeled, id, "no labelings");
  }
  return table;
}

void to_json(nlohmann::json& j, const LabelTable& table) {
  j = nlohmann::json::array();
  for (const auto& [item_id, agg] : table) {
    nlohmann::json row = {{"item_id", item_id},
                          {"labels", nlohmann::json::array()},
                          {"labeler_count", agg.labeler_count},
                          {"needs_adjudication", agg.needs_adjudication}};
    for (const auto& label : agg.labels) row["labels"].push_back(label);
    j.push_back(std::move(row));
  }
}

void from_json(const nlohmann::json& j, LabelTable& table) {
  table.clear();
  for (const auto& row : j) {
    AggregatedLabels agg;
    for (const auto& label : row.at("labels")) agg.labels.insert(label.get<SubjectMatterLabel>());
    agg.labeler_count = row.value("labeler_count", 0);
    agg.needs_adjudication = row.value("needs_adjudication", agg.labels.empty());
    table[row.at("item_id").get<std::string>()] = std::move(agg);
  }
}

std::string labels_to_jsonl(const LabelTable& table) {
  nlohmann::json rows = table;
  std::string out;
  for (const auto& row : rows) out += row.dump() + "\n";
  return out;
}

LabelTable labels_from_jsonl(std::string_view text) {
  LabelTable table;
  from_json(parse_jsonl(text), table);
  return table;
}

}  // namespace bwsann
