#include "bwsann/service.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "bwsann/error.hpp"
#include "bwsann/jsonl.hpp"
#include "bwsann/rng.hpp"

namespace bwsann {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class LeaseState { kOpen, kSubmitted, kExpired, kReleased };

struct Assignment {
  std::string id;
  AnnotatorId annotator;
  UnitKind kind = UnitKind::kItem;
  ItemId item_id;
  std::string pool;
  int tuple_index = -1;
  Timestamp issued_at{};
  Timestamp expires_at{};
  LeaseState state = LeaseState::kOpen;
};

struct AnnotatorState {
  AnnotatorProfile profile;
  std::string token;
  std::optional<Timestamp> last_activity_end;
  std::int64_t session_seconds = 0;
};

struct PoolState {
  BwsDesign design;
  std::vector<int> judged;  // per tuple
  std::vector<int> leased;  // per tuple
  std::set<std::pair<int, AnnotatorId>> answered;
  std::vector<Judgment> judgments;
  int tuples_complete = 0;
  std::map<TupleId, int, std::less<>> tuple_index;
};

std::string unit_kind_name(UnitKind kind) { return kind == UnitKind::kItem ? "item" : "tuple"; }

std::int64_t seconds_between(Timestamp from, Timestamp to) {
  return std::max<std::int64_t>(0, (to - from).count());
}

std::string new_token() {
  std::random_device rd;
  std::string token;
  static constexpr char kHex[] = "0123456789abcdef";
  for (int i = 0; i < 8; ++i) {
    auto word = rd();
    for (int k = 0; k < 8; ++k) {
      token += kHex[word & 0xf];
      word >>= 4;
    }
  }
  return token;
}

std::set<SubjectMatterLabel> labels_from(const json& j) {
  std::set<SubjectMatterLabel> out;
  for (const auto& l : j) out.insert(l.get<SubjectMatterLabel>());
  return out;
}

json labels_to(const std::set<SubjectMatterLabel>& labels) {
  json out = json::array();
  for (const auto& l : labels) out.push_back(l);
  return out;
}

}  // namespace

struct AnnotationService::CampaignState {
  mutable std::mutex mutex;
  fs::path log_path;
  std::ofstream log;
  long long seq = 0;

  Campaign campaign;
  std::map<ItemId, std::size_t, std::less<>> item_index;

  std::vector<ItemLabeling> labelings;
  std::map<ItemId, int, std::less<>> labeling_count;
  std::map<ItemId, int, std::less<>> item_leased;
  std::set<std::pair<ItemId, AnnotatorId>> labeled_by;
  std::map<ItemId, std::set<SubjectMatterLabel>, std::less<>> adjudicated;

  std::map<ItemId, std::string, std::less<>> routing;
  std::map<std::string, PoolState, std::less<>> pools;

  std::map<std::string, Assignment, std::less<>> assignments;
  std::map<AnnotatorId, std::string, std::less<>> open_by_annotator;
  std::map<AnnotatorId, AnnotatorState, std::less<>> annotators;
  long long next_assignment = 0;

  // ---- event application (shared by live mutations and replay) ----

  void apply(const json& e) {
    const auto type = e.at("type").get<std::string>();
    const Timestamp at = parse_timestamp(e.at("at").get<std::string>());
    seq = std::max(seq, e.at("seq").get<long long>());

    if (type == "created") {
      campaign.campaign_id = e.at("campaign_id").get<std::string>();
      campaign.policy = e.at("policy").get<CampaignPolicy>();
      campaign.registry = e.at("registry").get<IdentityRegistry>();
    } else if (type == "items_added") {
      for (const auto& j : e.at("items")) {
        auto item = j.get<Item>();
        item_index.emplace(item.item_id, campaign.items.size());
        campaign.items.push_back(std::move(item));
      }
    } else if (type == "registry_updated") {
      campaign.registry = e.at("registry").get<IdentityRegistry>();
    } else if (type == "annotator_registered") {
      auto& a = annotators[e.at("annotator_id").get<std::string>()];
      a.profile.annotator_id = e.at("annotator_id").get<std::string>();
      a.profile.pools = e.at("pools").get<std::set<std::string>>();
    } else if (type == "consent") {
      auto& a = annotators.at(e.at("annotator_id").get<std::string>());
      a.profile.consent = ConsentRecord{at};
      a.token = e.at("token").get<std::string>();
    } else if (type == "phase_opened") {
      campaign.phase = *parse_phase(e.at("phase").get<std::string>());
      if (e.contains("routing")) {
        routing = e.at("routing").get<std::map<ItemId, std::string, std::less<>>>();
      }
      if (e.contains("designs")) {
        for (const auto& d : e.at("designs")) {
          PoolState pool;
          pool.design = d.get<BwsDesign>();
          pool.judged.assign(pool.design.tuples.size(), 0);
          pool.leased.assign(pool.design.tuples.size(), 0);
          for (std::size_t t = 0; t < pool.design.tuples.size(); ++t) {
            pool.tuple_index.emplace(pool.design.tuples[t].tuple_id, static_cast<int>(t));
          }
          pools.emplace(pool.design.design_id, std::move(pool));
        }
      }
    } else if (type == "adjudicated") {
      adjudicated[e.at("item_id").get<std::string>()] = labels_from(e.at("labels"));
    } else if (type == "assignment_issued") {
      Assignment a;
      a.id = e.at("assignment_id").get<std::string>();
      a.annotator = e.at("annotator_id").get<std::string>();
      a.kind = e.at("kind").get<std::string>() == "item" ? UnitKind::kItem : UnitKind::kTuple;
      a.issued_at = at;
      a.expires_at = parse_timestamp(e.at("expires_at").get<std::string>());
      if (a.kind == UnitKind::kItem) {
        a.item_id = e.at("item_id").get<std::string>();
        ++item_leased[a.item_id];
      } else {
        a.pool = e.at("pool").get<std::string>();
        a.tuple_index = e.at("tuple_index").get<int>();
        ++pools.at(a.pool).leased[static_cast<std::size_t>(a.tuple_index)];
      }
      open_by_annotator[a.annotator] = a.id;
      ++next_assignment;
      assignments.emplace(a.id, std::move(a));
    } else if (type == "assignment_expired" || type == "assignment_released") {
      close(assignments.at(e.at("assignment_id").get<std::string>()), at,
            type == "assignment_expired" ? LeaseState::kExpired : LeaseState::kReleased);
    } else if (type == "labeling_submitted") {
      auto& a = assignments.at(e.at("assignment_id").get<std::string>());
      auto labeling = e.at("labeling").get<ItemLabeling>();
      ++labeling_count[labeling.item_id];
      labeled_by.emplace(labeling.item_id, labeling.annotator_id);
      labelings.push_back(std::move(labeling));
      close(a, at, LeaseState::kSubmitted);
    } else if (type == "judgment_submitted") {
      auto& a = assignments.at(e.at("assignment_id").get<std::string>());
      auto& pool = pools.at(a.pool);
      auto judgment = e.at("judgment").get<Judgment>();
      const auto t = static_cast<std::size_t>(a.tuple_index);
      ++pool.judged[t];
      if (pool.judged[t] == campaign.policy.annotators_per_tuple) ++pool.tuples_complete;
      pool.answered.emplace(a.tuple_index, judgment.annotator_id);
      pool.judgments.push_back(std::move(judgment));
      close(a, at, LeaseState::kSubmitted);
    } else {
      throw Error(Errc::kParseError, type, "unknown event type");
    }
  }

  void close(Assignment& a, Timestamp at, LeaseState state) {
    if (a.state != LeaseState::kOpen) return;
    a.state = state;
    if (a.kind == UnitKind::kItem) {
      --item_leased[a.item_id];
    } else {
      --pools.at(a.pool).leased[static_cast<std::size_t>(a.tuple_index)];
    }
    if (auto it = open_by_annotator.find(a.annotator); it != open_by_annotator.end() && it->second == a.id) {
      open_by_annotator.erase(it);
    }
    // Exposure counts lease-open wall time.
    auto& who = annotators.at(a.annotator);
    const Timestamp end = std::min(at, a.expires_at);
    const std::int64_t spent = seconds_between(a.issued_at, end);
    const auto break_len = std::chrono::minutes(campaign.policy.session_break_minutes);
    if (!who.last_activity_end || a.issued_at - *who.last_activity_end >= break_len) who.session_seconds = 0;
    who.session_seconds += spent;
    who.profile.exposure_seconds_by_day[day_of(a.issued_at)] += spent;
    if (!who.last_activity_end || end > *who.last_activity_end) who.last_activity_end = end;
  }

  // ---- persistence ----

  void commit(json e, Timestamp at) {
    e["seq"] = seq + 1;
    e["at"] = format_timestamp(at);
    log << e.dump() << '\n';
    log.flush();
    if (!log) throw Error(Errc::kIoError, log_path.string(), "event append failed");
    apply(e);
  }

  void open_log() {
    log.open(log_path, std::ios::app);
    if (!log) throw Error(Errc::kIoError, log_path.string(), "cannot open event log");
  }

  // ---- queries ----

  const Item& item(std::string_view id) const { return campaign.items.at(item_index.find(id)->second); }

  AnnotatorState& annotator(std::string_view id) {
    const auto it = annotators.find(id);
    if (it == annotators.end()) throw Error(Errc::kNotFound, std::string(id), "unknown annotator");
    return it->second;
  }

  void sweep_expired(Timestamp now) {
    std::vector<std::string> expired;
    for (const auto& [id, a] : assignments) {
      if (a.state == LeaseState::kOpen && a.expires_at <= now) expired.push_back(id);
    }
    for (const auto& id : expired) {
      const auto& a = assignments.at(id);
      commit({{"type", "assignment_expired"}, {"assignment_id", id}}, a.expires_at);
    }
  }

  LabelTable aggregate(bool strict) const {
    std::vector<ItemLabeling> complete;
    for (const auto& l : labelings) {
      const auto it = labeling_count.find(l.item_id);
      if (it != labeling_count.end() && it->second >= campaign.policy.labelers_per_item) complete.push_back(l);
    }
    auto table = aggregate_labelings(complete, campaign.policy);
    for (const auto& [id, labels] : adjudicated) {
      auto& agg = table[id];
      agg.labels = labels;
      agg.needs_adjudication = false;
    }
    if (strict) {
      for (const auto& item : campaign.items) {
        if (!table.count(item.item_id)) {
          throw Error(Errc::kPhaseOrderViolation, item.item_id, "subject-matter labeling incomplete");
        }
      }
    }
    return table;
  }

  CampaignStatus status() const {
    CampaignStatus s;
    s.campaign_id = campaign.campaign_id;
    s.phase = campaign.phase;
    s.items_total = static_cast<int>(campaign.items.size());
    s.labelings_required = s.items_total * campaign.policy.labelers_per_item;
    s.labelings_collected = static_cast<int>(labelings.size());
    for (const auto& item : campaign.items) {
      const auto it = labeling_count.find(item.item_id);
      if ((it != labeling_count.end() && it->second >= campaign.policy.labelers_per_item) ||
          adjudicated.count(item.item_id)) {
        ++s.items_labeled;
      }
    }
    for (const auto& [id, agg] : aggregate(false)) {
      if (agg.needs_adjudication) ++s.needs_adjudication;
    }
    for (const auto& [name, pool] : pools) {
      PoolStatus p;
      p.pool = name;
      p.items = pool.design.item_count();
      p.tuples = pool.design.m;
      p.tuples_complete = pool.tuples_complete;
      p.judgments_collected = static_cast<int>(pool.judgments.size());
      p.judgments_required = pool.design.m * campaign.policy.annotators_per_tuple;
      s.pools.push_back(p);
    }
    for (const auto& [id, a] : assignments) {
      if (a.state == LeaseState::kOpen) ++s.open_assignments;
    }
    return s;
  }

  TaskAssignment describe(const Assignment& a) const {
    TaskAssignment t;
    t.assignment_id = a.id;
    t.campaign_id = campaign.campaign_id;
    t.annotator_id = a.annotator;
    t.kind = a.kind;
    t.issued_at = a.issued_at;
    t.expires_at = a.expires_at;
    if (a.kind == UnitKind::kItem) {
      t.item_id = a.item_id;
      t.payload.push_back(item(a.item_id));
    } else {
      const auto& tuple = pools.at(a.pool).design.tuples[static_cast<std::size_t>(a.tuple_index)];
      t.pool = a.pool;
      t.tuple_id = tuple.tuple_id;
      for (const auto& id : tuple.item_ids) t.payload.push_back(item(id));
    }
    return t;
  }
};

bool CampaignStatus::severity_complete() const {
  if (pools.empty()) return false;
  return std::all_of(pools.begin(), pools.end(),
                     [](const PoolStatus& p) { return p.judgments_collected >= p.judgments_required; });
}

void to_json(json& j, const CampaignStatus& s) {
  j = {{"campaign_id", s.campaign_id},
       {"phase", to_string(s.phase)},
       {"subject_matter",
        {{"items_total", s.items_total},
         {"items_labeled", s.items_labeled},
         {"labelings_collected", s.labelings_collected},
         {"labelings_required", s.labelings_required},
         {"needs_adjudication", s.needs_adjudication}}},
       {"pools", json::array()},
       {"open_assignments", s.open_assignments},
       {"severity_complete", s.severity_complete()}};
  for (const auto& p : s.pools) {
    j["pools"].push_back({{"pool", p.pool},
                          {"items", p.items},
                          {"tuples", p.tuples},
                          {"tuples_complete", p.tuples_complete},
                          {"judgments_collected", p.judgments_collected},
                          {"judgments_required", p.judgments_required}});
  }
}

void to_json(json& j, const TaskAssignment& a) {
  j = {{"assignment_id", a.assignment_id},
       {"campaign_id", a.campaign_id},
       {"annotator_id", a.annotator_id},
       {"kind", unit_kind_name(a.kind)},
       {"issued_at", format_timestamp(a.issued_at)},
       {"expires_at", format_timestamp(a.expires_at)},
       {"items", json::array()}};
  if (a.kind == UnitKind::kItem) {
    j["item_id"] = a.item_id;
  } else {
    j["pool"] = a.pool;
    j["tuple_id"] = a.tuple_id;
  }
  for (const auto& item : a.payload) j["items"].push_back({{"item_id", item.item_id}, {"text", item.text}});
}

AnnotationService::AnnotationService(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.now) options_.now = [] { return std::chrono::floor<std::chrono::seconds>(Clock::now()); };
  if (options_.data_dir.empty()) throw Error(Errc::kInvalidArgument, "data_dir", "a data directory is required");
  fs::create_directories(options_.data_dir);
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(options_.data_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "events.jsonl")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) load_campaign(dir);
}

AnnotationService::~AnnotationService() = default;

Timestamp AnnotationService::now() const { return options_.now(); }

void AnnotationService::load_campaign(const fs::path& dir) {
  auto st = std::make_unique<CampaignState>();
  st->log_path = dir / "events.jsonl";
  const std::string text = read_file(st->log_path);
  std::size_t pos = 0;
  std::size_t valid_end = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final write: ignored and truncated below
    const std::string_view line(text.data() + pos, nl - pos);
    if (!line.empty()) st->apply(json::parse(line));
    pos = nl + 1;
    valid_end = pos;
  }
  if (valid_end < text.size()) fs::resize_file(st->log_path, valid_end);
  st->open_log();
  {
    std::lock_guard lock(tokens_mutex_);
    for (const auto& [id, a] : st->annotators) {
      if (!a.token.empty()) tokens_[a.token] = {st->campaign.campaign_id, id};
    }
  }
  const std::string id = st->campaign.campaign_id;
  campaigns_.emplace(id, std::move(st));
}

AnnotationService::CampaignState& AnnotationService::state(const std::string& campaign_id) const {
  std::shared_lock lock(campaigns_mutex_);
  const auto it = campaigns_.find(campaign_id);
  if (it == campaigns_.end()) throw Error(Errc::kNotFound, campaign_id, "unknown campaign");
  return *it->second;
}

void AnnotationService::create_campaign(const std::string& campaign_id, const CampaignPolicy& policy,
                                        const IdentityRegistry& registry) {
  const bool safe_id = !campaign_id.empty() && std::all_of(campaign_id.begin(), campaign_id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
  if (!safe_id) throw Error(Errc::kInvalidArgument, campaign_id, "campaign ids use [A-Za-z0-9_-]");
  policy.check();
  std::unique_lock lock(campaigns_mutex_);
  if (campaigns_.count(campaign_id)) throw Error(Errc::kInvalidArgument, campaign_id, "campaign already exists");
  auto st = std::make_unique<CampaignState>();
  const fs::path dir = options_.data_dir / campaign_id;
  fs::create_directories(dir);
  st->log_path = dir / "events.jsonl";
  st->open_log();
  st->commit({{"type", "created"}, {"campaign_id", campaign_id}, {"policy", policy}, {"registry", registry}}, now());
  campaigns_.emplace(campaign_id, std::move(st));
}

void AnnotationService::add_items(const std::string& campaign_id, const std::vector<Item>& items) {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  if (st.campaign.phase != Phase::kSetup && st.campaign.phase != Phase::kSubjectMatter) {
    throw Error(Errc::kPhaseOrderViolation, campaign_id, "items can only be added before the Severity phase");
  }
  check_items(items);
  for (const auto& item : items) {
    if (st.item_index.count(item.item_id)) throw Error(Errc::kDuplicateItems, item.item_id);
  }
  st.commit({{"type", "items_added"}, {"items", items}}, now());
}

void AnnotationService::set_registry(const std::string& campaign_id, const IdentityRegistry& registry) {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  st.campaign.registry.check_successor(registry);
  st.commit({{"type", "registry_updated"}, {"registry", registry}}, now());
}

void AnnotationService::register_annotator(const std::string& campaign_id, const AnnotatorId& annotator_id,
                                           const std::set<std::string>& pools) {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  if (annotator_id.empty()) throw Error(Errc::kInvalidArgument, "annotator_id", "must be non-empty");
  for (const auto& pool : pools) {
    if (pool != kGeneralPool && st.campaign.registry.find(pool) == nullptr) {
      throw Error(Errc::kInvalidArgument, pool, "pool is neither 'general' nor a registry group");
    }
  }
  st.commit({{"type", "annotator_registered"}, {"annotator_id", annotator_id}, {"pools", pools}}, now());
}

std::string AnnotationService::record_consent(const std::string& campaign_id, const AnnotatorId& annotator_id) {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  auto& who = st.annotator(annotator_id);
  if (!who.token.empty()) return who.token;
  const std::string token = new_token();
  st.commit({{"type", "consent"}, {"annotator_id", annotator_id}, {"token", token}}, now());
  std::lock_guard tl(tokens_mutex_);
  tokens_[token] = {campaign_id, annotator_id};
  return token;
}

std::optional<AnnotationService::Principal> AnnotationService::authenticate(const std::string& token) const {
  std::lock_guard lock(tokens_mutex_);
  const auto it = tokens_.find(token);
  if (it == tokens_.end()) return std::nullopt;
  return it->second;
}

PhaseState AnnotationService::open_phase(const std::string& campaign_id, Phase phase) {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  const Phase current = st.campaign.phase;
  const auto summary = [&] {
    PhaseState out{st.campaign.phase, {}};
    for (const auto& [name, pool] : st.pools) out.design_sizes[name] = pool.design.m;
    return out;
  };
  if (phase == current) return summary();
  const auto violation = [&](const std::string& why) {
    return Error(Errc::kPhaseOrderViolation, campaign_id,
                 std::string(to_string(current)) + " -> " + std::string(to_string(phase)) + ": " + why);
  };

  switch (phase) {
    case Phase::kSetup:
      throw violation("cannot return to Setup");
    case Phase::kSubjectMatter:
      if (current != Phase::kSetup) throw violation("subject matter must come first");
      st.commit({{"type", "phase_opened"}, {"phase", to_string(phase)}}, now());
      return summary();
    case Phase::kClosed:
      st.sweep_expired(now());
      st.commit({{"type", "phase_opened"}, {"phase", to_string(phase)}}, now());
      return summary();
    case Phase::kSeverity:
      break;
  }
  if (current != Phase::kSubjectMatter) throw violation("subject-matter phase has not run");
  st.sweep_expired(now());
  const LabelTable table = st.aggregate(true);

  // Route each item to the identity-group pool named by its aggregated
  // labels; several groups -> the one with the fewest items so far; none ->
  // general. Items needing adjudication stay out of severity annotation.
  std::map<std::string, std::vector<ItemId>> pool_items;
  json routing = json::object();
  json notes = json::array();
  const auto& policy = st.campaign.policy;
  for (const auto& item : st.campaign.items) {
    const auto& agg = table.at(item.item_id);
    if (agg.needs_adjudication) {
      notes.push_back({{"item_id", item.item_id}, {"note", "needs-adjudication"}});
      continue;
    }
    std::vector<std::string> candidates;
    for (const auto& g : agg.groups()) {
      if (st.campaign.registry.find(g) != nullptr) candidates.push_back(g);
    }
    std::string pool(kGeneralPool);
    if (!candidates.empty()) {
      pool = *std::min_element(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
        const auto na = pool_items[a].size(), nb = pool_items[b].size();
        return na != nb ? na < nb : a < b;
      });
      if (candidates.size() > 1) {
        notes.push_back({{"item_id", item.item_id}, {"note", "multi-group, load-balanced"}, {"candidates", candidates}});
      }
    }
    pool_items[pool].push_back(item.item_id);
  }
  // Pools too small for one tuple fall back to general.
  for (auto it = pool_items.begin(); it != pool_items.end();) {
    if (it->first != kGeneralPool && static_cast<int>(it->second.size()) < policy.tuple_size) {
      for (const auto& id : it->second) {
        notes.push_back({{"item_id", id}, {"note", "pool " + it->first + " below tuple size, routed to general"}});
        pool_items[std::string(kGeneralPool)].push_back(id);
      }
      it = pool_items.erase(it);
    } else {
      ++it;
    }
  }
  if (auto general = pool_items.find(std::string(kGeneralPool)); general != pool_items.end()) {
    auto& ids = general->second;
    std::sort(ids.begin(), ids.end(),
              [&](const ItemId& a, const ItemId& b) { return st.item_index.at(a) < st.item_index.at(b); });
    if (static_cast<int>(ids.size()) < policy.tuple_size) {
      throw Error(Errc::kDesignInfeasible, std::string(kGeneralPool),
                  std::to_string(ids.size()) + " items cannot fill a tuple of " + std::to_string(policy.tuple_size));
    }
  }

  json designs = json::array();
  for (const auto& [pool, ids] : pool_items) {
    for (const auto& id : ids) routing[id] = pool;
    designs.push_back(generate_design(ids, policy.tuple_size, policy.multiplier_milli,
                                      derive_seed(policy.rng_seed, hash_string(pool)), pool));
  }
  st.commit({{"type", "phase_opened"},
             {"phase", to_string(phase)},
             {"routing", routing},
             {"routing_notes", notes},
             {"designs", designs}},
            now());
  return summary();
}

TaskAssignment AnnotationService::next_task(const std::string& campaign_id, const AnnotatorId& annotator_id) {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  const Timestamp t = now();
  auto& who = st.annotator(annotator_id);
  if (!who.profile.consent) throw Error(Errc::kConsentRequired, annotator_id);
  st.sweep_expired(t);

  if (auto open = st.open_by_annotator.find(annotator_id); open != st.open_by_annotator.end()) {
    return st.describe(st.assignments.at(open->second));
  }

  const auto& policy = st.campaign.policy;
  const auto daily = who.profile.exposure_seconds_by_day[day_of(t)];
  if (daily >= std::int64_t{policy.max_daily_minutes} * 60) {
    throw Error(Errc::kExposureLimitReached, annotator_id, "daily exposure limit");
  }
  const bool same_session =
      who.last_activity_end && t - *who.last_activity_end < std::chrono::minutes(policy.session_break_minutes);
  if (same_session && who.session_seconds >= std::int64_t{policy.max_session_minutes} * 60) {
    throw Error(Errc::kExposureLimitReached, annotator_id, "session exposure limit; take a break");
  }

  json issue = {{"type", "assignment_issued"},
                {"assignment_id", campaign_id + "-a" + std::to_string(st.next_assignment)},
                {"annotator_id", annotator_id},
                {"expires_at", format_timestamp(t + std::chrono::minutes(policy.lease_minutes))}};

  if (st.campaign.phase == Phase::kSubjectMatter) {
    const ItemId* chosen = nullptr;
    int chosen_load = 0;
    for (const auto& item : st.campaign.items) {
      const int load = st.labeling_count[item.item_id] + st.item_leased[item.item_id];
      if (load >= policy.labelers_per_item || st.labeled_by.count({item.item_id, annotator_id})) continue;
      if (chosen == nullptr || load < chosen_load) {
        chosen = &item.item_id;
        chosen_load = load;
      }
    }
    if (chosen == nullptr) throw Error(Errc::kNoTaskAvailable, annotator_id);
    issue["kind"] = "item";
    issue["item_id"] = *chosen;
  } else if (st.campaign.phase == Phase::kSeverity) {
    const std::string* chosen_pool = nullptr;
    int chosen_tuple = -1;
    int chosen_load = 0;
    for (const auto& [name, pool] : st.pools) {
      if (!who.profile.pools.count(name)) continue;
      for (std::size_t i = 0; i < pool.design.tuples.size(); ++i) {
        const int load = pool.judged[i] + pool.leased[i];
        if (load >= policy.annotators_per_tuple || pool.answered.count({static_cast<int>(i), annotator_id})) continue;
        if (chosen_pool == nullptr || load < chosen_load) {
          chosen_pool = &name;
          chosen_tuple = static_cast<int>(i);
          chosen_load = load;
        }
      }
    }
    if (chosen_pool == nullptr) throw Error(Errc::kNoTaskAvailable, annotator_id);
    issue["kind"] = "tuple";
    issue["pool"] = *chosen_pool;
    issue["tuple_index"] = chosen_tuple;
  } else {
    throw Error(Errc::kNoTaskAvailable, annotator_id, "no annotation phase is open");
  }
  st.commit(issue, t);
  return st.describe(st.assignments.at(issue.at("assignment_id").get<std::string>()));
}

SubmitAck AnnotationService::submit(const std::string& campaign_id, const AnnotatorId& annotator_id,
                                    const std::string& assignment_id, const Answer& answer) {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  const Timestamp t = now();
  const auto it = st.assignments.find(assignment_id);
  if (it == st.assignments.end()) throw Error(Errc::kNotFound, assignment_id, "unknown assignment");
  Assignment& a = it->second;
  if (a.annotator != annotator_id) throw Error(Errc::kNotAuthorized, assignment_id, "assignment owned by another annotator");
  if (a.state == LeaseState::kSubmitted) throw Error(Errc::kAlreadySubmitted, assignment_id);
  if (a.state == LeaseState::kOpen && a.expires_at <= t) {
    st.commit({{"type", "assignment_expired"}, {"assignment_id", assignment_id}}, a.expires_at);
  }
  if (a.state != LeaseState::kOpen) throw Error(Errc::kAssignmentExpired, assignment_id);

  SubmitAck ack;
  ack.assignment_id = assignment_id;
  ack.kind = a.kind;
  if (a.kind == UnitKind::kItem) {
    const auto* labels = std::get_if<LabelAnswer>(&answer);
    if (labels == nullptr) throw Error(Errc::kInvalidArgument, assignment_id, "expected a label set");
    if (labels->labels.empty()) throw Error(Errc::kInvalidLabel, assignment_id, "label set is empty");
    for (const auto& label : labels->labels) {
      const auto verdict = validate_label(label, st.campaign.registry);
      if (!verdict.valid()) {
        throw Error(Errc::kInvalidLabel, std::string(to_string(verdict.rule)), to_path(label) + ": " + verdict.detail);
      }
    }
    ItemLabeling labeling{a.item_id, labels->labels, annotator_id, t};
    st.commit({{"type", "labeling_submitted"}, {"assignment_id", assignment_id}, {"labeling", labeling}}, t);
    ack.unit = a.item_id;
    ack.progress = st.labeling_count[a.item_id];
  } else {
    const auto* choice = std::get_if<BestWorstAnswer>(&answer);
    if (choice == nullptr) throw Error(Errc::kInvalidArgument, assignment_id, "expected a best/worst choice");
    auto& pool = st.pools.at(a.pool);
    const auto& tuple = pool.design.tuples[static_cast<std::size_t>(a.tuple_index)];
    Judgment judgment{assignment_id, tuple.tuple_id, annotator_id, choice->best, choice->worst, t};
    check_judgment(judgment, pool.design);
    if (pool.answered.count({a.tuple_index, annotator_id})) {
      throw Error(Errc::kDuplicateJudgment, tuple.tuple_id + "/" + annotator_id);
    }
    st.commit({{"type", "judgment_submitted"}, {"assignment_id", assignment_id}, {"judgment", judgment}}, t);
    ack.unit = a.pool + "/" + tuple.tuple_id;
    ack.progress = pool.judged[static_cast<std::size_t>(a.tuple_index)];
  }
  return ack;
}

void AnnotationService::release(const std::string& campaign_id, const AnnotatorId& annotator_id,
                                const std::string& assignment_id) {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  const auto it = st.assignments.find(assignment_id);
  if (it == st.assignments.end()) throw Error(Errc::kNotFound, assignment_id, "unknown assignment");
  if (it->second.annotator != annotator_id) throw Error(Errc::kNotAuthorized, assignment_id);
  if (it->second.state != LeaseState::kOpen) return;
  const Timestamp t = now();
  if (it->second.expires_at <= t) {
    st.commit({{"type", "assignment_expired"}, {"assignment_id", assignment_id}}, it->second.expires_at);
  } else {
    st.commit({{"type", "assignment_released"}, {"assignment_id", assignment_id}}, t);
  }
}

void AnnotationService::adjudicate(const std::string& campaign_id, const ItemId& item_id,
                                   const std::set<SubjectMatterLabel>& labels) {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  if (!st.item_index.count(item_id)) throw Error(Errc::kNotFound, item_id, "unknown item");
  if (st.campaign.phase != Phase::kSubjectMatter) {
    throw Error(Errc::kPhaseOrderViolation, item_id, "adjudication happens during the subject-matter phase");
  }
  if (labels.empty()) throw Error(Errc::kInvalidLabel, item_id, "label set is empty");
  for (const auto& label : labels) {
    const auto verdict = validate_label(label, st.campaign.registry);
    if (!verdict.valid()) throw Error(Errc::kInvalidLabel, std::string(to_string(verdict.rule)), to_path(label));
  }
  st.commit({{"type", "adjudicated"}, {"item_id", item_id}, {"labels", labels_to(labels)}}, now());
}

CampaignStatus AnnotationService::campaign_status(const std::string& campaign_id) const {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  return st.status();
}

std::vector<std::string> AnnotationService::campaign_ids() const {
  std::shared_lock lock(campaigns_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, st] : campaigns_) out.push_back(id);
  return out;
}

Campaign AnnotationService::campaign(const std::string& campaign_id) const {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  return st.campaign;
}

std::vector<ItemLabeling> AnnotationService::labelings(const std::string& campaign_id) const {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  return st.labelings;
}

LabelTable AnnotationService::aggregated_labels(const std::string& campaign_id) const {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  return st.aggregate(false);
}

std::map<std::string, BwsDesign> AnnotationService::designs(const std::string& campaign_id) const {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  std::map<std::string, BwsDesign> out;
  for (const auto& [name, pool] : st.pools) out.emplace(name, pool.design);
  return out;
}

std::map<std::string, std::vector<Judgment>> AnnotationService::judgments(const std::string& campaign_id) const {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  std::map<std::string, std::vector<Judgment>> out;
  for (const auto& [name, pool] : st.pools) out.emplace(name, pool.judgments);
  return out;
}

AnnotatorProfile AnnotationService::annotator(const std::string& campaign_id, const AnnotatorId& annotator_id) const {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  return st.annotator(annotator_id).profile;
}

fs::path AnnotationService::event_log_path(const std::string& campaign_id) const { return state(campaign_id).log_path; }

std::pair<BwsDesign, std::vector<Judgment>> AnnotationService::merged_severity_data(
    const std::string& campaign_id) const {
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  BwsDesign merged;
  merged.design_id = campaign_id;
  merged.n = st.campaign.policy.tuple_size;
  std::vector<Judgment> judgments;
  for (const auto& [name, pool] : st.pools) {
    merged.items.insert(merged.items.end(), pool.design.items.begin(), pool.design.items.end());
    for (const auto& t : pool.design.tuples) merged.tuples.push_back({name + "/" + t.tuple_id, t.item_ids});
    for (auto j : pool.judgments) {
      j.tuple_id = name + "/" + j.tuple_id;
      judgments.push_back(std::move(j));
    }
  }
  merged.m = static_cast<int>(merged.tuples.size());
  return {std::move(merged), std::move(judgments)};
}

std::vector<ScoreRow> AnnotationService::export_scores(const std::string& campaign_id) const {
  const auto [design, judgments] = merged_severity_data(campaign_id);
  const auto scores = rank_items(compute_scores(judgments, design, {.allow_unscored = true}));
  const auto table = aggregated_labels(campaign_id);
  auto& st = state(campaign_id);
  std::lock_guard lock(st.mutex);
  std::vector<ScoreRow> rows;
  for (const auto& s : scores) {
    ScoreRow row{s, st.item(s.item_id).text, {}};
    if (const auto it = table.find(s.item_id); it != table.end()) {
      for (const auto& label : it->second.labels) {
        if (!row.labels.empty()) row.labels += ';';
        row.labels += to_path(label);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

CampaignStatus status_from_log(const fs::path& event_log) {
  CampaignPolicy policy;
  CampaignStatus s;
  std::vector<ItemId> items;
  std::map<ItemId, std::vector<ItemLabeling>> labelings;
  std::set<ItemId> adjudicated;
  std::map<std::string, std::pair<int, int>> pool_shape;  // pool -> (items, m)
  std::map<std::string, std::map<TupleId, int>> judged;
  std::map<std::string, std::string> assignment_pool;
  std::set<std::string> open;
  for (const auto& e : parse_jsonl(read_file(event_log))) {
    const auto type = e.at("type").get<std::string>();
    if (type == "created") {
      s.campaign_id = e.at("campaign_id").get<std::string>();
      policy = e.at("policy").get<CampaignPolicy>();
    } else if (type == "items_added") {
      for (const auto& item : e.at("items")) items.push_back(item.at("item_id").get<std::string>());
    } else if (type == "phase_opened") {
      s.phase = *parse_phase(e.at("phase").get<std::string>());
      for (const auto& d : e.value("designs", json::array())) {
        pool_shape[d.at("design_id").get<std::string>()] = {d.at("N").get<int>(), d.at("m").get<int>()};
      }
    } else if (type == "adjudicated") {
      adjudicated.insert(e.at("item_id").get<std::string>());
    } else if (type == "assignment_issued") {
      open.insert(e.at("assignment_id").get<std::string>());
      assignment_pool[e.at("assignment_id").get<std::string>()] = e.value("pool", "");
    } else if (type == "assignment_expired" || type == "assignment_released") {
      open.erase(e.at("assignment_id").get<std::string>());
    } else if (type == "labeling_submitted") {
      open.erase(e.at("assignment_id").get<std::string>());
      auto labeling = e.at("labeling").get<ItemLabeling>();
      labelings[labeling.item_id].push_back(std::move(labeling));
    } else if (type == "judgment_submitted") {
      const auto id = e.at("assignment_id").get<std::string>();
      open.erase(id);
      ++judged[assignment_pool.at(id)][e.at("judgment").at("tuple_id").get<std::string>()];
    }
  }
  s.items_total = static_cast<int>(items.size());
  s.labelings_required = s.items_total * policy.labelers_per_item;
  std::vector<ItemLabeling> complete;
  for (const auto& id : items) {
    const auto& ls = labelings[id];
    s.labelings_collected += static_cast<int>(ls.size());
    const bool full = static_cast<int>(ls.size()) >= policy.labelers_per_item;
    if (full || adjudicated.count(id)) ++s.items_labeled;
    if (full) complete.insert(complete.end(), ls.begin(), ls.end());
  }
  for (const auto& [id, agg] : aggregate_labelings(complete, policy)) {
    if (agg.needs_adjudication && !adjudicated.count(id)) ++s.needs_adjudication;
  }
  for (const auto& [pool, shape] : pool_shape) {
    PoolStatus p{pool, shape.first, shape.second, 0, 0, shape.second * policy.annotators_per_tuple};
    for (const auto& [tuple, count] : judged[pool]) {
      p.judgments_collected += count;
      if (count >= policy.annotators_per_tuple) ++p.tuples_complete;
    }
    s.pools.push_back(p);
  }
  s.open_assignments = static_cast<int>(open.size());
  return s;
}

}  // namespace bwsann
