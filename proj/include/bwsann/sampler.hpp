#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bwsann/model.hpp"

namespace bwsann {

struct GroupQuota {
  std::string group_id;
  int target = 0;
  std::vector<std::string> terms;
};

struct SamplingPlan {
  std::vector<GroupQuota> groups;
  /// Generic abusive-word lexicon strategy.
  int profanity_target = 0;
  std::vector<std::string> profanity_terms;
  /// Seeded reservoir over records matching no lexicon term.
  int random_target = 0;
  std::optional<Timestamp> window_start;  // inclusive
  std::optional<Timestamp> window_end;    // exclusive
  std::uint64_t seed = 0;

  /// Throws Error(kInvalidArgument) for negative quotas or no active strategy.
  void check() const;
};

void from_json(const nlohmann::json& j, SamplingPlan& plan);
void to_json(nlohmann::json& j, const SamplingPlan& plan);

/// Group quotas built from a registry, querying each group with both its
/// abusive-leaning and benign terms.
std::vector<GroupQuota> quotas_from_registry(const IdentityRegistry& registry, int target_per_group);

struct CorpusRecord {
  std::string id;  // may be empty; the sampler then assigns "rec-<line>"
  std::string text;
  std::string source;
  Timestamp timestamp{};
};

std::vector<CorpusRecord> corpus_from_jsonl(std::string_view text);

struct SampledItem {
  Item item;
  std::string strategy;  // "group-term", "profanity-lexicon", "random"
  std::vector<std::string> matched_terms;
  std::vector<std::string> group_hits;
};

struct QuotaShortfall {
  std::string quota;  // group id, "profanity" or "random"
  int achieved = 0;
  int target = 0;
};

struct SampleResult {
  std::vector<SampledItem> items;
  std::vector<QuotaShortfall> shortfalls;
};

/// Case-folded, word-boundary term match: the term's tokens must appear as a
/// contiguous run of the text's tokens. Tokens are maximal runs of ASCII
/// letters/digits or non-ASCII bytes.
bool matches_term(std::string_view text, std::string_view term);

/// Single pass over `corpus` in order. Records outside the window and exact
/// duplicates of an earlier text are skipped. A record matching terms of a
/// group whose quota is open is emitted under every open matched group;
/// otherwise, if it matches the profanity lexicon and that quota is open, it
/// is emitted as such; records matching no term at all feed the random
/// reservoir. Unfilled quotas are reported, not thrown.
SampleResult sample_corpus(const std::vector<CorpusRecord>& corpus, const SamplingPlan& plan);

void to_json(nlohmann::json& j, const SampledItem& item);

}  // namespace bwsann
