#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace bwsann {

enum class TopCategory { kPeople, kEntities, kOther };
enum class Reference { kPersonal, kIdentityGroupRelated };

/// Closed set of identity bases with an "other" escape.
enum class Basis {
  kRace,
  kReligion,
  kGender,
  kSexualOrientation,
  kDisability,
  kOccupation,
  kPoliticalAffiliation,
  kAppearance,
  kOther,
};

std::string_view to_string(TopCategory v);
std::string_view to_string(Reference v);
std::string_view to_string(Basis v);
std::optional<TopCategory> parse_top(std::string_view s);
std::optional<Reference> parse_reference(std::string_view s);
std::optional<Basis> parse_basis(std::string_view s);

/// One path in the subject-matter taxonomy:
///
///   People ─┬─ Personal
///           └─ IdentityGroupRelated ─ basis ─ identity
///   Entities ─ related_group
///   Other
///
/// A field may only be set when its parent is set and lies on its branch.
struct SubjectMatterLabel {
  TopCategory top = TopCategory::kOther;
  std::optional<Reference> reference;
  std::optional<Basis> basis;
  std::optional<std::string> identity;
  std::optional<std::string> related_group;

  auto operator<=>(const SubjectMatterLabel&) const = default;
  bool operator==(const SubjectMatterLabel&) const = default;

  /// The identity group this label points at, if any (identity or related_group).
  std::optional<std::string> group() const;
};

/// "People/IdentityGroupRelated/gender/transgender", "Entities/lgbtq", "Other".
std::string to_path(const SubjectMatterLabel& label);

void to_json(nlohmann::json& j, const SubjectMatterLabel& label);
/// Throws Error(kInvalidLabel) for unknown enum spellings.
void from_json(const nlohmann::json& j, SubjectMatterLabel& label);

struct IdentityGroup {
  std::string group_id;
  std::string display_name;
  Basis basis = Basis::kOther;
  std::vector<std::string> abusive_terms;
  std::vector<std::string> benign_terms;
};

/// Campaign-scoped identity registry. Versions only grow: a newer registry
/// must keep every group of the older one, so earlier labels stay valid.
class IdentityRegistry {
 public:
  IdentityRegistry() = default;
  /// Throws Error(kInvalidRegistry) when an invariant is broken.
  IdentityRegistry(int version, std::vector<IdentityGroup> groups);

  int version() const noexcept { return version_; }
  const std::vector<IdentityGroup>& groups() const noexcept { return groups_; }
  const IdentityGroup* find(std::string_view group_id) const;

  /// Throws Error(kInvalidRegistry) unless `next` is a valid successor.
  void check_successor(const IdentityRegistry& next) const;

 private:
  int version_ = 0;
  std::vector<IdentityGroup> groups_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

void to_json(nlohmann::json& j, const IdentityRegistry& registry);
void from_json(const nlohmann::json& j, IdentityRegistry& registry);

/// Reserved pool / report row names that registry groups may not use.
inline constexpr std::string_view kGeneralPool = "general";
inline constexpr std::string_view kOtherGroup = "other";

enum class LabelRule {
  kValid,
  kMissingReference,   // People without Personal/IdentityGroupRelated
  kOrphanRefinement,   // field set without its parent, or on the wrong branch
  kUnknownIdentity,    // identity / related_group not in the registry
  kBasisMismatch,      // identity's registered basis differs from the label's
};

std::string_view to_string(LabelRule rule);

struct LabelVerdict {
  LabelRule rule = LabelRule::kValid;
  std::string detail;

  bool valid() const noexcept { return rule == LabelRule::kValid; }
};

/// Checks that the label is a root-to-node path of the taxonomy. Structural
/// rules are checked top-down and the first violation is reported.
LabelVerdict validate_label(const SubjectMatterLabel& label, const IdentityRegistry& registry);

}  // namespace bwsann
