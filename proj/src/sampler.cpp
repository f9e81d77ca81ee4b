#include "bwsann/sampler.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "bwsann/error.hpp"
#include "bwsann/jsonl.hpp"
#include "bwsann/rng.hpp"

namespace bwsann {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool contains_run(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

struct CompiledTerm {
  std::string term;
  std::vector<std::string> tokens;
};

std::vector<CompiledTerm> compile(const std::vector<std::string>& terms) {
  std::vector<CompiledTerm> out;
  for (const auto& t : terms) out.push_back({t, tokenize(t)});
  return out;
}

std::vector<std::string> matched(const std::vector<std::string>& tokens, const std::vector<CompiledTerm>& terms) {
  std::vector<std::string> out;
  for (const auto& t : terms) {
    if (contains_run(tokens, t.tokens)) out.push_back(t.term);
  }
  return out;
}

std::optional<Timestamp> optional_time(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return parse_timestamp(it->get<std::string>());
}

}  // namespace

bool matches_term(std::string_view text, std::string_view term) { return contains_run(tokenize(text), tokenize(term)); }

void SamplingPlan::check() const {
  bool active = profanity_target > 0 || random_target > 0;
  for (const auto& g : groups) {
    if (g.target < 0) throw Error(Errc::kInvalidArgument, g.group_id, "negative quota");
    if (g.target > 0 && !g.terms.empty()) active = true;
  }
  if (profanity_target < 0 || random_target < 0) throw Error(Errc::kInvalidArgument, "plan", "negative quota");
  if (!active) throw Error(Errc::kInvalidArgument, "plan", "no sampling strategy is active");
  if (window_start && window_end && *window_end <= *window_start) {
    throw Error(Errc::kInvalidArgument, "plan", "empty time window");
  }
}

void from_json(const nlohmann::json& j, SamplingPlan& plan) {
  plan = SamplingPlan{};
  for (const auto& g : j.value("groups", nlohmann::json::array())) {
    plan.groups.push_back({g.at("group_id").get<std::string>(), g.value("target", 0),
                           g.value("terms", std::vector<std::string>{})});
  }
  if (auto p = j.find("profanity"); p != j.end()) {
    plan.profanity_target = p->value("target", 0);
    plan.profanity_terms = p->value("terms", std::vector<std::string>{});
  }
  if (auto r = j.find("random"); r != j.end()) plan.random_target = r->value("target", 0);
  if (auto w = j.find("window"); w != j.end()) {
    plan.window_start = optional_time(*w, "start");
    plan.window_end = optional_time(*w, "end");
  }
  plan.seed = j.value("seed", std::uint64_t{0});
}

void to_json(nlohmann::json& j, const SamplingPlan& plan) {
  j = nlohmann::json::object();
  j["groups"] = nlohmann::json::array();
  for (const auto& g : plan.groups) j["groups"].push_back({{"group_id", g.group_id}, {"target", g.target}, {"terms", g.terms}});
  j["profanity"] = {{"target", plan.profanity_target}, {"terms", plan.profanity_terms}};
  j["random"] = {{"target", plan.random_target}};
  j["window"] = {{"start", plan.window_start ? nlohmann::json(format_timestamp(*plan.window_start)) : nullptr},
                 {"end", plan.window_end ? nlohmann::json(format_timestamp(*plan.window_end)) : nullptr}};
  j["seed"] = plan.seed;
}

std::vector<GroupQuota> quotas_from_registry(const IdentityRegistry& registry, int target_per_group) {
  std::vector<GroupQuota> out;
  for (const auto& g : registry.groups()) {
    GroupQuota q{g.group_id, target_per_group, g.abusive_terms};
    q.terms.insert(q.terms.end(), g.benign_terms.begin(), g.benign_terms.end());
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<CorpusRecord> corpus_from_jsonl(std::string_view text) {
  std::vector<CorpusRecord> out;
  for (const auto& row : parse_jsonl(text)) {
    CorpusRecord r;
    r.id = row.value("id", row.value("item_id", ""));
    r.text = row.at("text").get<std::string>();
    r.source = row.value("source", "corpus");
    const std::string ts = row.contains("timestamp") ? row.at("timestamp").get<std::string>()
                                                     : row.value("collected_at", std::string{});
    if (ts.empty()) throw Error(Errc::kParseError, r.id, "corpus record without timestamp");
    r.timestamp = parse_timestamp(ts);
    out.push_back(std::move(r));
  }
  return out;
}

SampleResult sample_corpus(const std::vector<CorpusRecord>& corpus, const SamplingPlan& plan) {
  plan.check();
  std::vector<std::vector<CompiledTerm>> group_terms;
  for (const auto& g : plan.groups) group_terms.push_back(compile(g.terms));
  const auto profanity_terms = compile(plan.profanity_terms);

  std::vector<int> filled(plan.groups.size(), 0);
  int profanity_filled = 0;
  // (corpus position, item) so the merged output keeps corpus order.
  std::vector<std::pair<std::size_t, SampledItem>> emitted;
  std::vector<std::size_t> reservoir;
  std::size_t reservoir_seen = 0;
  Rng rng(derive_seed(plan.seed, 0x5a3e));
  std::unordered_set<std::string_view> seen_texts;

  const auto to_item = [&](std::size_t pos) {
    const auto& r = corpus[pos];
    return Item{r.id.empty() ? "rec-" + std::to_string(pos + 1) : r.id, r.text, r.source, r.timestamp};
  };

  for (std::size_t pos = 0; pos < corpus.size(); ++pos) {
    const auto& record = corpus[pos];
    if (plan.window_start && record.timestamp < *plan.window_start) continue;
    if (plan.window_end && record.timestamp >= *plan.window_end) continue;
    if (record.text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (!seen_texts.insert(record.text).second) continue;

    const auto tokens = tokenize(record.text);
    SampledItem out;
    bool any_match = false;
    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
      const auto hits = matched(tokens, group_terms[g]);
      if (hits.empty()) continue;
      any_match = true;
      if (filled[g] >= plan.groups[g].target) continue;
      ++filled[g];
      out.group_hits.push_back(plan.groups[g].group_id);
      for (const auto& h : hits) {
        if (std::find(out.matched_terms.begin(), out.matched_terms.end(), h) == out.matched_terms.end()) {
          out.matched_terms.push_back(h);
        }
      }
    }
    if (!out.group_hits.empty()) {
      out.strategy = "group-term";
    } else {
      const auto hits = matched(tokens, profanity_terms);
      if (!hits.empty()) {
        any_match = true;
        if (profanity_filled < plan.profanity_target) {
          ++profanity_filled;
          out.strategy = "profanity-lexicon";
          out.matched_terms = hits;
        }
      }
    }
    if (!out.strategy.empty()) {
      out.item = to_item(pos);
      emitted.emplace_back(pos, std::move(out));
      continue;
    }
    if (any_match || plan.random_target == 0) continue;

    // Algorithm R over term-free records.
    const auto k = static_cast<std::size_t>(plan.random_target);
    if (reservoir.size() < k) {
      reservoir.push_back(pos);
    } else {
      const auto j = static_cast<std::size_t>(rng.below(reservoir_seen + 1));
      if (j < k) reservoir[j] = pos;
    }
    ++reservoir_seen;
  }

  for (std::size_t pos : reservoir) emitted.emplace_back(pos, SampledItem{to_item(pos), "random", {}, {}});
  std::stable_sort(emitted.begin(), emitted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  SampleResult result;
  for (auto& [pos, item] : emitted) result.items.push_back(std::move(item));
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    if (filled[g] < plan.groups[g].target) {
      result.shortfalls.push_back({plan.groups[g].group_id, filled[g], plan.groups[g].target});
    }
  }
  if (profanity_filled < plan.profanity_target) {
    result.shortfalls.push_back({"profanity", profanity_filled, plan.profanity_target});
  }
  if (static_cast<int>(reservoir.size()) < plan.random_target) {
    result.shortfalls.push_back({"random", static_cast<int>(reservoir.size()), plan.random_target});
  }
  return result;
}

void to_json(nlohmann::json& j, const SampledItem& s) {
  to_json(j, s.item);
  j["provenance"] = {{"strategy", s.strategy}, {"matched_terms", s.matched_terms}, {"group_hits", s.group_hits}};
}

}  // namespace bwsann
