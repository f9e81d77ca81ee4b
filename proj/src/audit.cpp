#include "bwsann/audit.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "bwsann/error.hpp"
#include "bwsann/jsonl.hpp"

namespace bwsann {

namespace {

std::string ratio_text(const std::optional<Ratio>& r) {
  if (!r) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s (%.4f)", r->str().c_str(), r->value());
  return buf;
}

nlohmann::json ratio_json(const std::optional<Ratio>& r) {
  if (!r) return nullptr;
  return {{"num", r->num}, {"den", r->den}, {"value", r->value()}};
}

std::optional<Ratio> ratio_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return Ratio::of(j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>());
}

const AggregatedLabels& labels_for(const LabelTable& labels, const ItemId& id) {
  const auto it = labels.find(id);
  if (it == labels.end() || it->second.labels.empty()) throw Error(Errc::kMissingLabels, id);
  return it->second;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::vector<std::string> report_groups(const AggregatedLabels& labels) {
  const auto groups = labels.groups();
  if (groups.empty()) return {std::string(kOtherGroup)};
  return {groups.begin(), groups.end()};
}

GroupBalanceReport balance_report(const std::vector<SeverityScore>& scores, const LabelTable& labels, double tau,
                                  const IdentityRegistry* registry) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(Errc::kInvalidArgument, "tau", "must lie in [0, 1]");
  GroupBalanceReport report;
  report.tau = tau;
  std::map<std::string, GroupBalanceRow> rows;
  if (registry != nullptr) {
    for (const auto& g : registry->groups()) rows[g.group_id].group_id = g.group_id;
  }
  for (const auto& score : scores) {
    const auto groups = report_groups(labels_for(labels, score.item_id));
    const bool abusive = score.normalized() >= tau;
    ++report.total_items;
    ++(abusive ? report.total_abusive : report.total_benign);
    if (groups.size() > 1) ++report.multi_group_items;
    for (const auto& g : groups) {
      auto& row = rows[g];
      row.group_id = g;
      ++row.item_count;
      ++(abusive ? row.abusive_count : row.benign_count);
    }
  }
  for (auto& [id, row] : rows) {
    if (row.item_count > 0) row.abusive_ratio = Ratio::of(row.abusive_count, row.item_count);
    report.rows.push_back(row);
  }
  return report;
}

std::optional<Ratio> ConfusionCounts::false_positive_rate() const {
  if (fp + tn == 0) return std::nullopt;
  return Ratio::of(fp, fp + tn);
}

std::optional<Ratio> ConfusionCounts::false_negative_rate() const {
  if (fn + tp == 0) return std::nullopt;
  return Ratio::of(fn, fn + tp);
}

DisparityReport disparity_report(const std::map<ItemId, bool>& gold, const std::map<ItemId, bool>& predictions,
                                 const LabelTable& labels) {
  for (const auto& [id, flag] : predictions) {
    if (!gold.count(id)) throw Error(Errc::kItemSetMismatch, id, "prediction without gold label");
  }
  for (const auto& [id, flag] : gold) {
    if (!predictions.count(id)) throw Error(Errc::kItemSetMismatch, id, "gold label without prediction");
  }

  const auto tally = [](ConfusionCounts& c, bool truth, bool predicted) {
    if (truth) {
      ++(predicted ? c.tp : c.fn);
    } else {
      ++(predicted ? c.fp : c.tn);
    }
  };

  DisparityReport report;
  report.overall.group_id = "overall";
  std::map<std::string, ConfusionCounts> per_group;
  for (const auto& [id, truth] : gold) {
    const bool predicted = predictions.at(id);
    tally(report.overall.counts, truth, predicted);
    for (const auto& g : report_groups(labels_for(labels, id))) tally(per_group[g], truth, predicted);
  }
  report.overall.fpr = report.overall.counts.false_positive_rate();
  report.overall.fnr = report.overall.counts.false_negative_rate();

  std::optional<Ratio> fpr_lo, fpr_hi, fnr_lo, fnr_hi;
  const auto widen = [](std::optional<Ratio>& lo, std::optional<Ratio>& hi, const std::optional<Ratio>& r) {
    if (!r) return;
    if (!lo || *r < *lo) lo = r;
    if (!hi || *r > *hi) hi = r;
  };
  for (const auto& [g, counts] : per_group) {
    DisparityRow row{g, counts, counts.false_positive_rate(), counts.false_negative_rate()};
    widen(fpr_lo, fpr_hi, row.fpr);
    widen(fnr_lo, fnr_hi, row.fnr);
    report.rows.push_back(std::move(row));
  }
  // max |r_i - r_j| over pairs is the spread between extremes.
  report.fpr_gap = fpr_lo ? *fpr_hi - *fpr_lo : Ratio{};
  report.fnr_gap = fnr_lo ? *fnr_hi - *fnr_lo : Ratio{};
  return report;
}

void to_json(nlohmann::json& j, const GroupBalanceReport& r) {
  j = {{"tau", r.tau},
       {"note", kMultiLabelNote},
       {"totals",
        {{"items", r.total_items},
         {"abusive", r.total_abusive},
         {"benign", r.total_benign},
         {"multi_group_items", r.multi_group_items}}},
       {"rows", nlohmann::json::array()}};
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"group_id", row.group_id},
                         {"item_count", row.item_count},
                         {"abusive_count", row.abusive_count},
                         {"benign_count", row.benign_count},
                         {"abusive_ratio", ratio_json(row.abusive_ratio)}});
  }
}

void from_json(const nlohmann::json& j, GroupBalanceReport& r) {
  r = GroupBalanceReport{};
  r.tau = j.at("tau").get<double>();
  const auto& totals = j.at("totals");
  r.total_items = totals.at("items").get<int>();
  r.total_abusive = totals.at("abusive").get<int>();
  r.total_benign = totals.at("benign").get<int>();
  r.multi_group_items = totals.value("multi_group_items", 0);
  for (const auto& row : j.at("rows")) {
    r.rows.push_back({row.at("group_id").get<std::string>(), row.at("item_count").get<int>(),
                      row.at("abusive_count").get<int>(), row.at("benign_count").get<int>(),
                      ratio_from_json(row.at("abusive_ratio"))});
  }
}

void to_json(nlohmann::json& j, const DisparityReport& r) {
  const auto row_json = [](const DisparityRow& row) {
    return nlohmann::json{{"group_id", row.group_id},
                          {"support", row.counts.support()},
                          {"tp", row.counts.tp},
                          {"fp", row.counts.fp},
                          {"tn", row.counts.tn},
                          {"fn", row.counts.fn},
                          {"false_positive_rate", ratio_json(row.fpr)},
                          {"false_negative_rate", ratio_json(row.fnr)}};
  };
  j = {{"overall", row_json(r.overall)},
       {"fpr_gap", ratio_json(r.fpr_gap)},
       {"fnr_gap", ratio_json(r.fnr_gap)},
       {"rows", nlohmann::json::array()}};
  for (const auto& row : r.rows) j["rows"].push_back(row_json(row));
}

std::string balance_table(const GroupBalanceReport& r) {
  std::ostringstream out;
  char tau[32];
  std::snprintf(tau, sizeof(tau), "%g", r.tau);
  out << "# abusive := normalized severity >= " << tau << "\n# " << kMultiLabelNote << "\n";
  out << pad("group", 24) << pad("items", 8) << pad("abusive", 9) << pad("benign", 8) << "abusive_ratio\n";
  for (const auto& row : r.rows) {
    out << pad(row.group_id, 24) << pad(std::to_string(row.item_count), 8) << pad(std::to_string(row.abusive_count), 9)
        << pad(std::to_string(row.benign_count), 8) << ratio_text(row.abusive_ratio) << "\n";
  }
  out << pad("(distinct items)", 24) << pad(std::to_string(r.total_items), 8) << pad(std::to_string(r.total_abusive), 9)
      << pad(std::to_string(r.total_benign), 8) << "\n";
  return out.str();
}

std::string disparity_table(const DisparityReport& r) {
  std::ostringstream out;
  out << pad("group", 24) << pad("support", 9) << pad("FPR", 22) << "FNR\n";
  const auto line = [&](const DisparityRow& row) {
    out << pad(row.group_id, 24) << pad(std::to_string(row.counts.support()), 9) << pad(ratio_text(row.fpr), 22)
        << ratio_text(row.fnr) << "\n";
  };
  for (const auto& row : r.rows) line(row);
  line(r.overall);
  out << "max FPR gap: " << ratio_text(r.fpr_gap) << "\nmax FNR gap: " << ratio_text(r.fnr_gap) << "\n";
  return out.str();
}

std::map<ItemId, bool> flags_from_jsonl(std::string_view text) {
  std::map<ItemId, bool> out;
  for (const auto& row : parse_jsonl(text)) {
    const auto id = row.at("item_id").get<std::string>();
    if (!out.emplace(id, row.at("abusive").get<bool>()).second) throw Error(Errc::kDuplicateItems, id);
  }
  return out;
}

std::string export_datasheet(const Campaign& campaign, const GroupBalanceReport& balance,
                             const std::optional<ReliabilityReport>& reliability, const DatasheetOptions& options) {
  std::ostringstream out;
  char buf[128];
  out << "# Datasheet: " << campaign.campaign_id << "\n\n";

  out << "## Collection\n\n";
  std::map<std::string, int> sources;
  for (const auto& item : campaign.items) ++sources[item.source.empty() ? "(unspecified)" : item.source];
  out << "Items: " << campaign.items.size() << "\n\n";
  if (sources.empty()) out << "- no sources recorded\n";
  for (const auto& [source, count] : sources) out << "- source `" << source << "`: " << count << " items\n";
  if (!campaign.items.empty()) {
    const auto [lo, hi] = std::minmax_element(campaign.items.begin(), campaign.items.end(),
                                              [](const Item& a, const Item& b) { return a.collected_at < b.collected_at; });
    out << "\nCollected between " << format_timestamp(lo->collected_at) << " and " << format_timestamp(hi->collected_at)
        << ".\n";
  }

  out << "\n## Sampling strategies\n\n";
  if (options.sampling_strategies.empty()) out << "- not recorded\n";
  for (const auto& [strategy, count] : options.sampling_strategies) out << "- " << strategy << ": " << count << " items\n";

  out << "\n## Identity registry\n\nVersion " << campaign.registry.version() << ", "
      << campaign.registry.groups().size() << " groups.\n\n";
  for (const auto& g : campaign.registry.groups()) {
    out << "- `" << g.group_id << "` (" << g.display_name << ", basis " << to_string(g.basis) << "): "
        << g.abusive_terms.size() << " abusive-leaning and " << g.benign_terms.size() << " benign query terms\n";
  }

  out << "\n## Per-group balance\n\n";
  std::snprintf(buf, sizeof(buf), "%g", balance.tau);
  out << "Abusive means normalized severity >= " << buf << ". " << kMultiLabelNote << "\n\n";
  out << "| group | items | abusive | benign | abusive ratio |\n|---|---|---|---|---|\n";
  for (const auto& row : balance.rows) {
    out << "| " << row.group_id << " | " << row.item_count << " | " << row.abusive_count << " | " << row.benign_count
        << " | " << ratio_text(row.abusive_ratio) << " |\n";
  }
  out << "| total (distinct items) | " << balance.total_items << " | " << balance.total_abusive << " | "
      << balance.total_benign << " | "
      << ratio_text(balance.total_items ? std::optional(Ratio::of(balance.total_abusive, balance.total_items))
                                        : std::nullopt)
      << " |\n";

  out << "\n## Reliability\n\n";
  bool low_reliability = false;
  if (reliability) {
    std::snprintf(buf, sizeof(buf), "%.4f", reliability->mean_shr);
    out << "Split-half reliability (Spearman, " << reliability->trials << " trials, seed " << reliability->seed
        << "): mean " << buf << ".\n";
    if (reliability->degenerate_trials > 0) {
      out << "Degenerate trials (scored as 0): " << reliability->degenerate_trials << ".\n";
    }
    low_reliability = reliability->mean_shr < options.low_reliability_threshold;
    if (low_reliability) {
      std::snprintf(buf, sizeof(buf), "%g", options.low_reliability_threshold);
      out << "\n**WARNING: low reliability** - mean split-half correlation is below " << buf
          << "; severity scores should be treated as unreliable.\n";
    }
  } else {
    out << "Not computed.\n";
  }

  const auto& p = campaign.policy;
  out << "\n## Annotation policy\n\n";
  out << "- tuple size n: " << p.tuple_size << "\n";
  std::snprintf(buf, sizeof(buf), "%.3f", p.multiplier());
  out << "- tuples per item (m / N): " << buf << "\n";
  out << "- annotators per tuple: " << p.annotators_per_tuple << "\n";
  out << "- labelers per item (subject matter): " << p.labelers_per_item << "\n";
  out << "- max session exposure: " << p.max_session_minutes << " min; max daily exposure: " << p.max_daily_minutes
      << " min\n";
  out << "- task lease: " << p.lease_minutes << " min\n";
  out << "- design seed: " << p.rng_seed << "\n";
  out << "- annotators are expected to receive fair compensation; payment is handled outside this tool.\n";

  out << "\n## Known limitations\n\n";
  if (campaign.items.empty() || balance.total_items == 0) out << "- no data: the campaign has no scored items.\n";
  out << "- severity scores use counting aggregation; the absolute values are not meaningful, only their order.\n";
  out << "- subject-matter labels are per-label majority votes; items without a majority were excluded.\n";
  if (balance.multi_group_items > 0) {
    out << "- " << balance.multi_group_items << " items belong to several groups and are double counted.\n";
  }
  if (low_reliability) out << "- low annotation reliability (see above).\n";
  for (const auto& extra : options.extra_limitations) out << "- " << extra << "\n";
  return out.str();
}

}  // namespace bwsann
