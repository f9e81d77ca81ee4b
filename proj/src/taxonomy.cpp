#include "bwsann/taxonomy.hpp"

#include <algorithm>
#include <set>

#include "bwsann/error.hpp"

namespace bwsann {

namespace {

constexpr std::pair<Basis, std::string_view> kBasisNames[] = {
    {Basis::kRace, "race"},
    {Basis::kReligion, "religion"},
    {Basis::kGender, "gender"},
    {Basis::kSexualOrientation, "sexual-orientation"},
    {Basis::kDisability, "disability"},
    {Basis::kOccupation, "occupation"},
    {Basis::kPoliticalAffiliation, "political-affiliation"},
    {Basis::kAppearance, "appearance"},
    {Basis::kOther, "other"},
};

}  // namespace

std::string_view to_string(TopCategory v) {
  switch (v) {
    case TopCategory::kPeople: return "People";
    case TopCategory::kEntities: return "Entities";
    case TopCategory::kOther: return "Other";
  }
  return "?";
}

std::string_view to_string(Reference v) {
  return v == Reference::kPersonal ? "Personal" : "IdentityGroupRelated";
}

std::string_view to_string(Basis v) {
  for (const auto& [basis, name] : kBasisNames) {
    if (basis == v) return name;
  }
  return "?";
}

std::optional<TopCategory> parse_top(std::string_view s) {
  if (s == "People") return TopCategory::kPeople;
  if (s == "Entities") return TopCategory::kEntities;
  if (s == "Other") return TopCategory::kOther;
  return std::nullopt;
}

std::optional<Reference> parse_reference(std::string_view s) {
  if (s == "Personal") return Reference::kPersonal;
  if (s == "IdentityGroupRelated") return Reference::kIdentityGroupRelated;
  return std::nullopt;
}

std::optional<Basis> parse_basis(std::string_view s) {
  for (const auto& [basis, name] : kBasisNames) {
    if (name == s) return basis;
  }
  return std::nullopt;
}

std::optional<std::string> SubjectMatterLabel::group() const {
  if (identity) return identity;
  if (related_group) return related_group;
  return std::nullopt;
}

std::string to_path(const SubjectMatterLabel& label) {
  std::string out(to_string(label.top));
  if (label.reference) out += "/" + std::string(to_string(*label.reference));
  if (label.basis) out += "/" + std::string(to_string(*label.basis));
  if (label.identity) out += "/" + *label.identity;
  if (label.related_group) out += "/" + *label.related_group;
  return out;
}

void to_json(nlohmann::json& j, const SubjectMatterLabel& label) {
  j = nlohmann::json::object();
  j["top"] = to_string(label.top);
  if (label.reference) j["reference"] = to_string(*label.reference);
  if (label.basis) j["basis"] = to_string(*label.basis);
  if (label.identity) j["identity"] = *label.identity;
  if (label.related_group) j["related_group"] = *label.related_group;
}

void from_json(const nlohmann::json& j, SubjectMatterLabel& label) {
  if (!j.is_object() || !j.contains("top")) throw Error(Errc::kInvalidLabel, "", "label needs a 'top' field");
  const auto top = parse_top(j.at("top").get<std::string>());
  if (!top) throw Error(Errc::kInvalidLabel, j.at("top").get<std::string>(), "unknown top category");
  label = SubjectMatterLabel{};
  label.top = *top;
  if (auto it = j.find("reference"); it != j.end() && !it->is_null()) {
    const auto ref = parse_reference(it->get<std::string>());
    if (!ref) throw Error(Errc::kInvalidLabel, it->get<std::string>(), "unknown reference");
    label.reference = ref;
  }
  if (auto it = j.find("basis"); it != j.end() && !it->is_null()) {
    const auto basis = parse_basis(it->get<std::string>());
    if (!basis) throw Error(Errc::kInvalidLabel, it->get<std::string>(), "unknown basis");
    label.basis = basis;
  }
  if (auto it = j.find("identity"); it != j.end() && !it->is_null()) label.identity = it->get<std::string>();
  if (auto it = j.find("related_group"); it != j.end() && !it->is_null()) {
    label.related_group = it->get<std::string>();
  }
}

IdentityRegistry::IdentityRegistry(int version, std::vector<IdentityGroup> groups)
    : version_(version), groups_(std::move(groups)) {
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    const auto& g = groups_[i];
    if (g.group_id.empty()) throw Error(Errc::kInvalidRegistry, "", "empty group_id");
    if (g.group_id == kGeneralPool || g.group_id == kOtherGroup) {
      throw Error(Errc::kInvalidRegistry, g.group_id, "reserved group id");
    }
    if (!index_.emplace(g.group_id, i).second) throw Error(Errc::kInvalidRegistry, g.group_id, "duplicate group_id");
    if (g.abusive_terms.empty() && g.benign_terms.empty()) {
      throw Error(Errc::kInvalidRegistry, g.group_id, "empty term lexicon");
    }
    const std::set<std::string> abusive(g.abusive_terms.begin(), g.abusive_terms.end());
    for (const auto& term : g.benign_terms) {
      if (abusive.count(term)) throw Error(Errc::kInvalidRegistry, g.group_id, "term in both sub-lists: " + term);
    }
  }
}

const IdentityGroup* IdentityRegistry::find(std::string_view group_id) const {
  const auto it = index_.find(group_id);
  return it == index_.end() ? nullptr : &groups_[it->second];
}

void IdentityRegistry::check_successor(const IdentityRegistry& next) const {
  if (next.version() <= version_) {
    throw Error(Errc::kInvalidRegistry, std::to_string(next.version()), "registry version must increase");
  }
  for (const auto& g : groups_) {
    const auto* kept = next.find(g.group_id);
    if (kept == nullptr) throw Error(Errc::kInvalidRegistry, g.group_id, "newer registry drops a group");
    if (kept->basis != g.basis) throw Error(Errc::kInvalidRegistry, g.group_id, "newer registry changes a basis");
  }
}

void to_json(nlohmann::json& j, const IdentityRegistry& registry) {
  j = nlohmann::json::object();
  j["version"] = registry.version();
  auto& groups = j["groups"] = nlohmann::json::array();
  for (const auto& g : registry.groups()) {
    groups.push_back({{"group_id", g.group_id},
                      {"name", g.display_name},
                      {"basis", to_string(g.basis)},
                      {"terms", {{"abusive", g.abusive_terms}, {"benign", g.benign_terms}}}});
  }
}

void from_json(const nlohmann::json& j, IdentityRegistry& registry) {
  std::vector<IdentityGroup> groups;
  for (const auto& g : j.value("groups", nlohmann::json::array())) {
    IdentityGroup group;
    group.group_id = g.at("group_id").get<std::string>();
    group.display_name = g.value("name", group.group_id);
    const auto basis = parse_basis(g.value("basis", "other"));
    if (!basis) throw Error(Errc::kInvalidRegistry, group.group_id, "unknown basis");
    group.basis = *basis;
    if (auto terms = g.find("terms"); terms != g.end()) {
      group.abusive_terms = terms->value("abusive", std::vector<std::string>{});
      group.benign_terms = terms->value("benign", std::vector<std::string>{});
    }
    groups.push_back(std::move(group));
  }
  registry = IdentityRegistry(j.value("version", 1), std::move(groups));
}

std::string_view to_string(LabelRule rule) {
  switch (rule) {
    case LabelRule::kValid: return "valid";
    case LabelRule::kMissingReference: return "missing-reference";
    case LabelRule::kOrphanRefinement: return "orphan-refinement";
    case LabelRule::kUnknownIdentity: return "unknown-identity";
    case LabelRule::kBasisMismatch: return "basis-mismatch";
  }
  return "?";
}

LabelVerdict validate_label(const SubjectMatterLabel& label, const IdentityRegistry& registry) {
  const auto orphan = [](std::string detail) { return LabelVerdict{LabelRule::kOrphanRefinement, std::move(detail)}; };

  switch (label.top) {
    case TopCategory::kOther:
      if (label.reference || label.basis || label.identity || label.related_group) {
        return orphan("Other admits no refinement");
      }
      return {};

    case TopCategory::kEntities:
      if (label.reference || label.basis || label.identity) return orphan("person refinement on Entities branch");
      if (label.related_group && registry.find(*label.related_group) == nullptr) {
        return {LabelRule::kUnknownIdentity, *label.related_group};
      }
      return {};

    case TopCategory::kPeople:
      if (label.related_group) return orphan("related_group on People branch");
      if (!label.reference) {
        if (label.basis || label.identity) return orphan("basis/identity without reference");
        return {LabelRule::kMissingReference, "People requires a reference"};
      }
      if (*label.reference == Reference::kPersonal) {
        if (label.basis || label.identity) return orphan("basis/identity under Personal");
        return {};
      }
      if (!label.basis) {
        if (label.identity) return orphan("identity without basis");
        return {};
      }
      if (!label.identity) return {};
      {
        const auto* group = registry.find(*label.identity);
        if (group == nullptr) return {LabelRule::kUnknownIdentity, *label.identity};
        if (group->basis != *label.basis) return {LabelRule::kBasisMismatch, *label.identity};
      }
      return {};
  }
  return {};
}

}  // namespace bwsann
