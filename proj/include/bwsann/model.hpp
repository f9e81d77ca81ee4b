#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bwsann/taxonomy.hpp"
#include "bwsann/time.hpp"

namespace bwsann {

using ItemId = std::string;
using AnnotatorId = std::string;

struct Item {
  ItemId item_id;
  std::string text;
  std::string source;
  Timestamp collected_at{};
};

/// Throws Error(kInvalidArgument) for an empty id or whitespace-only text.
void check_item(const Item& item);

/// Throws Error(kDuplicateItems) on a repeated id, then checks every item.
void check_items(const std::vector<Item>& items);

void to_json(nlohmann::json& j, const Item& item);
void from_json(const nlohmann::json& j, Item& item);

struct ItemLabeling {
  ItemId item_id;
  std::set<SubjectMatterLabel> labels;  // non-empty
  AnnotatorId annotator_id;
  Timestamp labeled_at{};
};

void to_json(nlohmann::json& j, const ItemLabeling& labeling);
void from_json(const nlohmann::json& j, ItemLabeling& labeling);

/// Exact rational in lowest terms with a positive denominator.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Ratio of(std::int64_t num, std::int64_t den);
  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  friend Ratio operator-(const Ratio& a, const Ratio& b);
  friend std::strong_ordering operator<=>(const Ratio& a, const Ratio& b);
  friend bool operator==(const Ratio& a, const Ratio& b) = default;
};

struct CampaignPolicy {
  int tuple_size = 4;
  /// m = ceil(multiplier * N); stored in thousandths so m is exact.
  int multiplier_milli = 2000;
  int annotators_per_tuple = 3;
  int max_session_minutes = 60;
  int max_daily_minutes = 240;
  /// Gap after which a new exposure session starts.
  int session_break_minutes = 15;
  int lease_minutes = 10;
  int labelers_per_item = 3;
  std::uint64_t rng_seed = 0;

  double multiplier() const noexcept { return multiplier_milli / 1000.0; }
  /// Throws Error(kInvalidArgument).
  void check() const;
};

void to_json(nlohmann::json& j, const CampaignPolicy& policy);
void from_json(const nlohmann::json& j, CampaignPolicy& policy);

/// Parses a decimal multiplier such as "1.75" into thousandths.
int multiplier_to_milli(double multiplier);

struct ConsentRecord {
  Timestamp at{};
};

struct AnnotatorProfile {
  AnnotatorId annotator_id;
  std::set<std::string> pools;  // group ids and/or "general"
  std::map<long, std::int64_t> exposure_seconds_by_day;
  std::optional<ConsentRecord> consent;
};

enum class Phase { kSetup, kSubjectMatter, kSeverity, kClosed };

std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view s);

struct Campaign {
  std::string campaign_id;
  Phase phase = Phase::kSetup;
  std::vector<Item> items;
  IdentityRegistry registry;
  CampaignPolicy policy;
};

}  // namespace bwsann
