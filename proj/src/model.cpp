#include "bwsann/model.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

#include "bwsann/error.hpp"

namespace bwsann {

void check_item(const Item& item) {
  if (item.item_id.empty()) throw Error(Errc::kInvalidArgument, "", "item_id must be non-empty");
  const bool blank = item.text.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
  if (blank) throw Error(Errc::kInvalidArgument, item.item_id, "item text is empty after trimming");
}

void check_items(const std::vector<Item>& items) {
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    check_item(item);
    if (!seen.insert(item.item_id).second) throw Error(Errc::kDuplicateItems, item.item_id);
  }
}

void to_json(nlohmann::json& j, const Item& item) {
  j = {{"item_id", item.item_id},
       {"text", item.text},
       {"source", item.source},
       {"collected_at", format_timestamp(item.collected_at)}};
}

void from_json(const nlohmann::json& j, Item& item) {
  item.item_id = j.at("item_id").get<std::string>();
  item.text = j.at("text").get<std::string>();
  item.source = j.value("source", "");
  item.collected_at = j.contains("collected_at") ? parse_timestamp(j.at("collected_at").get<std::string>()) : Timestamp{};
}

void to_json(nlohmann::json& j, const ItemLabeling& labeling) {
  j = {{"item_id", labeling.item_id},
       {"annotator_id", labeling.annotator_id},
       {"labeled_at", format_timestamp(labeling.labeled_at)},
       {"labels", nlohmann::json::array()}};
  for (const auto& label : labeling.labels) j["labels"].push_back(label);
}

void from_json(const nlohmann::json& j, ItemLabeling& labeling) {
  labeling.item_id = j.at("item_id").get<std::string>();
  labeling.annotator_id = j.value("annotator_id", "");
  labeling.labeled_at = j.contains("labeled_at") ? parse_timestamp(j.at("labeled_at").get<std::string>()) : Timestamp{};
  labeling.labels.clear();
  for (const auto& label : j.at("labels")) labeling.labels.insert(label.get<SubjectMatterLabel>());
  if (labeling.labels.empty()) throw Error(Errc::kInvalidLabel, labeling.item_id, "labeling has no labels");
}

Ratio Ratio::of(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(Errc::kInvalidArgument, "", "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return g > 1 ? Ratio{num / g, den / g} : Ratio{num, den};
}

std::string Ratio::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Ratio operator-(const Ratio& a, const Ratio& b) { return Ratio::of(a.num * b.den - b.num * a.den, a.den * b.den); }

std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
  return static_cast<__int128>(a.num) * b.den <=> static_cast<__int128>(b.num) * a.den;
}

int multiplier_to_milli(double multiplier) { return static_cast<int>(std::lround(multiplier * 1000.0)); }

void CampaignPolicy::check() const {
  if (tuple_size < 2) throw Error(Errc::kInvalidArgument, "tuple_size", "n must be >= 2");
  if (multiplier_milli < 1000 || multiplier_milli > 4000) {
    throw Error(Errc::kInvalidArgument, "tuple_multiplier", "must lie in [1.0, 4.0]");
  }
  if (annotators_per_tuple < 1) throw Error(Errc::kInvalidArgument, "annotators_per_tuple", "must be >= 1");
  if (labelers_per_item < 1) throw Error(Errc::kInvalidArgument, "labelers_per_item", "must be >= 1");
  if (max_session_minutes <= 0 || max_daily_minutes <= 0 || lease_minutes <= 0) {
    throw Error(Errc::kInvalidArgument, "policy", "durations must be positive");
  }
}

void to_json(nlohmann::json& j, const CampaignPolicy& p) {
  j = {{"tuple_size", p.tuple_size},
       {"tuple_multiplier", p.multiplier()},
       {"annotators_per_tuple", p.annotators_per_tuple},
       {"max_session_minutes", p.max_session_minutes},
       {"max_daily_minutes", p.max_daily_minutes},
       {"session_break_minutes", p.session_break_minutes},
       {"lease_minutes", p.lease_minutes},
       {"labelers_per_item", p.labelers_per_item},
       {"rng_seed", p.rng_seed}};
}

void from_json(const nlohmann::json& j, CampaignPolicy& p) {
  p = CampaignPolicy{};
  p.tuple_size = j.value("tuple_size", p.tuple_size);
  if (j.contains("tuple_multiplier")) p.multiplier_milli = multiplier_to_milli(j.at("tuple_multiplier").get<double>());
  p.annotators_per_tuple = j.value("annotators_per_tuple", p.annotators_per_tuple);
  p.max_session_minutes = j.value("max_session_minutes", p.max_session_minutes);
  p.max_daily_minutes = j.value("max_daily_minutes", p.max_daily_minutes);
  p.session_break_minutes = j.value("session_break_minutes", p.session_break_minutes);
  p.lease_minutes = j.value("lease_minutes", p.lease_minutes);
  p.labelers_per_item = j.value("labelers_per_item", p.labelers_per_item);
  p.rng_seed = j.value("rng_seed", p.rng_seed);
  p.check();
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kSetup: return "Setup";
    case Phase::kSubjectMatter: return "SubjectMatter";
    case Phase::kSeverity: return "Severity";
    case Phase::kClosed: return "Closed";
  }
  return "?";
}

std::optional<Phase> parse_phase(std::string_view s) {
  for (Phase p : {Phase::kSetup, Phase::kSubjectMatter, Phase::kSeverity, Phase::kClosed}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

}  // namespace bwsann
