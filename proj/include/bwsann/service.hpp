#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bwsann/audit.hpp"
#include "bwsann/design.hpp"
#include "bwsann/labeling.hpp"
#include "bwsann/model.hpp"
#include "bwsann/reliability.hpp"
#include "bwsann/scoring.hpp"

namespace bwsann {

struct ServiceOptions {
  std::filesystem::path data_dir;
  /// Injectable clock; defaults to the system clock.
  std::function<Timestamp()> now;
  std::string instructions;
};

enum class UnitKind { kItem, kTuple };

struct TaskAssignment {
  std::string assignment_id;
  std::string campaign_id;
  AnnotatorId annotator_id;
  UnitKind kind = UnitKind::kItem;
  ItemId item_id;        // kItem
  std::string pool;      // kTuple
  TupleId tuple_id;      // kTuple
  std::vector<Item> payload;  // one item, or the tuple's items in presentation order
  Timestamp issued_at{};
  Timestamp expires_at{};
};

void to_json(nlohmann::json& j, const TaskAssignment& a);

struct LabelAnswer {
  std::set<SubjectMatterLabel> labels;
};

struct BestWorstAnswer {
  ItemId best;
  ItemId worst;
};

using Answer = std::variant<LabelAnswer, BestWorstAnswer>;

struct SubmitAck {
  std::string assignment_id;
  UnitKind kind = UnitKind::kItem;
  std::string unit;  // item id or "<pool>/<tuple id>"
  int progress = 0;  // answers now stored for the unit
};

struct PoolStatus {
  std::string pool;
  int items = 0;
  int tuples = 0;
  int tuples_complete = 0;
  int judgments_collected = 0;
  int judgments_required = 0;  // m * annotators_per_tuple

  bool operator==(const PoolStatus&) const = default;
};

struct CampaignStatus {
  std::string campaign_id;
  Phase phase = Phase::kSetup;
  int items_total = 0;
  int items_labeled = 0;  // at least labelers_per_item labelings
  int labelings_collected = 0;
  int labelings_required = 0;
  int needs_adjudication = 0;
  std::vector<PoolStatus> pools;  // sorted by pool name
  int open_assignments = 0;

  bool severity_complete() const;
  bool operator==(const CampaignStatus&) const = default;
};

void to_json(nlohmann::json& j, const CampaignStatus& s);

struct PhaseState {
  Phase phase = Phase::kSetup;
  std::map<std::string, int> design_sizes;  // pool -> m
};

/// Campaign orchestration. Every mutation is validated, appended to the
/// campaign's event log (<data_dir>/<campaign_id>/events.jsonl) and then
/// applied; construction replays all logs, so state after a restart equals
/// state before it. Mutations of one campaign are serialized by a
/// per-campaign mutex; campaigns share no mutable state.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceOptions options);
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  void create_campaign(const std::string& campaign_id, const CampaignPolicy& policy, const IdentityRegistry& registry);
  void add_items(const std::string& campaign_id, const std::vector<Item>& items);
  void set_registry(const std::string& campaign_id, const IdentityRegistry& registry);
  /// Adds or updates an annotator's pool memberships ("general" or registry group ids).
  void register_annotator(const std::string& campaign_id, const AnnotatorId& annotator_id,
                          const std::set<std::string>& pools);
  /// Records consent and returns the annotator's bearer token.
  std::string record_consent(const std::string& campaign_id, const AnnotatorId& annotator_id);

  struct Principal {
    std::string campaign_id;
    AnnotatorId annotator_id;
  };
  std::optional<Principal> authenticate(const std::string& token) const;

  /// Throws kPhaseOrderViolation for out-of-order transitions or a Severity
  /// open with an under-labeled routable item.
  PhaseState open_phase(const std::string& campaign_id, Phase phase);

  /// Throws kConsentRequired, kExposureLimitReached or kNoTaskAvailable.
  /// Returns the annotator's current open lease if there is one.
  TaskAssignment next_task(const std::string& campaign_id, const AnnotatorId& annotator_id);

  /// Throws kAssignmentExpired, kAlreadySubmitted, kNotAuthorized, kNotFound,
  /// or the labeling / judgment validation errors.
  SubmitAck submit(const std::string& campaign_id, const AnnotatorId& annotator_id, const std::string& assignment_id,
                   const Answer& answer);

  /// Returns an open lease to the queue without answering.
  void release(const std::string& campaign_id, const AnnotatorId& annotator_id, const std::string& assignment_id);

  /// Sets the final label set of an item whose labelers had no majority.
  void adjudicate(const std::string& campaign_id, const ItemId& item_id, const std::set<SubjectMatterLabel>& labels);

  CampaignStatus campaign_status(const std::string& campaign_id) const;

  std::vector<std::string> campaign_ids() const;
  Campaign campaign(const std::string& campaign_id) const;
  std::vector<ItemLabeling> labelings(const std::string& campaign_id) const;
  /// Aggregated labels of fully labeled items, adjudications applied.
  LabelTable aggregated_labels(const std::string& campaign_id) const;
  std::map<std::string, BwsDesign> designs(const std::string& campaign_id) const;
  /// Judgments keyed by pool.
  std::map<std::string, std::vector<Judgment>> judgments(const std::string& campaign_id) const;
  AnnotatorProfile annotator(const std::string& campaign_id, const AnnotatorId& annotator_id) const;
  std::filesystem::path event_log_path(const std::string& campaign_id) const;
  const std::string& instructions() const noexcept { return options_.instructions; }

  /// All pool designs as one design with tuple ids "<pool>/<tuple id>", and
  /// the judgments re-keyed to match; used for campaign-wide scoring.
  std::pair<BwsDesign, std::vector<Judgment>> merged_severity_data(const std::string& campaign_id) const;
  std::vector<ScoreRow> export_scores(const std::string& campaign_id) const;

 private:
  struct CampaignState;

  CampaignState& state(const std::string& campaign_id) const;
  void load_campaign(const std::filesystem::path& dir);
  Timestamp now() const;

  ServiceOptions options_;
  mutable std::shared_mutex campaigns_mutex_;
  std::map<std::string, std::unique_ptr<CampaignState>, std::less<>> campaigns_;
  mutable std::mutex tokens_mutex_;
  std::map<std::string, Principal, std::less<>> tokens_;
};

/// Status recomputed by replaying an event log from scratch, counting
/// directly from the logged answers rather than maintained counters.
CampaignStatus status_from_log(const std::filesystem::path& event_log);

}  // namespace bwsann
