#include "bwsann/scoring.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "bwsann/csv.hpp"
#include "bwsann/error.hpp"
#include "bwsann/jsonl.hpp"

namespace bwsann {

void to_json(nlohmann::json& j, const Judgment& x) {
  j = {{"judgment_id", x.judgment_id},   {"tuple_id", x.tuple_id}, {"annotator_id", x.annotator_id},
       {"best", x.best},                 {"worst", x.worst},       {"submitted_at", format_timestamp(x.submitted_at)}};
}

void from_json(const nlohmann::json& j, Judgment& x) {
  x.judgment_id = j.value("judgment_id", "");
  x.tuple_id = j.at("tuple_id").get<std::string>();
  x.annotator_id = j.value("annotator_id", "");
  x.best = j.at("best").get<std::string>();
  x.worst = j.at("worst").get<std::string>();
  x.submitted_at = j.contains("submitted_at") ? parse_timestamp(j.at("submitted_at").get<std::string>()) : Timestamp{};
}

std::vector<Judgment> judgments_from_jsonl(std::string_view text) {
  std::vector<Judgment> out;
  for (const auto& row : parse_jsonl(text)) out.push_back(row.get<Judgment>());
  return out;
}

std::string judgments_to_jsonl(const std::vector<Judgment>& judgments) {
  std::string out;
  for (const auto& j : judgments) out += nlohmann::json(j).dump() + "\n";
  return out;
}

void check_judgment(const Judgment& judgment, const BwsDesign& design) {
  if (judgment.best == judgment.worst) throw Error(Errc::kInvalidChoice, judgment.tuple_id, "best equals worst");
  const auto* tuple = design.find_tuple(judgment.tuple_id);
  if (tuple == nullptr) throw Error(Errc::kUnknownTuple, judgment.tuple_id);
  const auto in_tuple = [&](const ItemId& id) {
    return std::find(tuple->item_ids.begin(), tuple->item_ids.end(), id) != tuple->item_ids.end();
  };
  if (!in_tuple(judgment.best)) throw Error(Errc::kChoiceOutsideTuple, judgment.best);
  if (!in_tuple(judgment.worst)) throw Error(Errc::kChoiceOutsideTuple, judgment.worst);
}

double SeverityScore::raw() const noexcept {
  if (judged_appearances == 0) return 0.0;
  return static_cast<double>(best_count - worst_count) / static_cast<double>(judged_appearances);
}

double SeverityScore::normalized() const noexcept { return (raw() + 1.0) / 2.0; }

JudgmentIndex JudgmentIndex::build(const std::vector<Judgment>& judgments, const BwsDesign& design) {
  JudgmentIndex index;
  index.items = design.items;
  std::unordered_map<std::string_view, int> item_pos;
  for (std::size_t i = 0; i < design.items.size(); ++i) item_pos.emplace(design.items[i], static_cast<int>(i));
  std::unordered_map<std::string_view, int> tuple_pos;
  index.tuple_items.reserve(design.tuples.size());
  for (std::size_t t = 0; t < design.tuples.size(); ++t) {
    tuple_pos.emplace(design.tuples[t].tuple_id, static_cast<int>(t));
    std::vector<int> members;
    for (const auto& id : design.tuples[t].item_ids) {
      const auto it = item_pos.find(id);
      if (it == item_pos.end()) throw Error(Errc::kNotFound, id, "tuple item not in design item list");
      members.push_back(it->second);
    }
    index.tuple_items.push_back(std::move(members));
  }
  index.tuple_of.reserve(judgments.size());
  index.best_of.reserve(judgments.size());
  index.worst_of.reserve(judgments.size());
  for (const auto& j : judgments) {
    if (j.best == j.worst) throw Error(Errc::kInvalidChoice, j.tuple_id, "best equals worst");
    const auto t = tuple_pos.find(j.tuple_id);
    if (t == tuple_pos.end()) throw Error(Errc::kUnknownTuple, j.tuple_id);
    const auto& members = index.tuple_items[static_cast<std::size_t>(t->second)];
    const auto locate = [&](const ItemId& id) {
      const auto it = item_pos.find(id);
      if (it == item_pos.end() || std::find(members.begin(), members.end(), it->second) == members.end()) {
        throw Error(Errc::kChoiceOutsideTuple, id);
      }
      return it->second;
    };
    index.tuple_of.push_back(t->second);
    index.best_of.push_back(locate(j.best));
    index.worst_of.push_back(locate(j.worst));
  }
  return index;
}

void accumulate_counts(const JudgmentIndex& index, std::span<const int> selection, ItemCounts& counts) {
  const std::size_t n_items = index.items.size();
  counts.best.assign(n_items, 0);
  counts.worst.assign(n_items, 0);
  counts.appearances.assign(n_items, 0);
  for (int k : selection) {
    const auto j = static_cast<std::size_t>(k);
    ++counts.best[static_cast<std::size_t>(index.best_of[j])];
    ++counts.worst[static_cast<std::size_t>(index.worst_of[j])];
    for (int member : index.tuple_items[static_cast<std::size_t>(index.tuple_of[j])]) {
      ++counts.appearances[static_cast<std::size_t>(member)];
    }
  }
}

std::vector<SeverityScore> to_scores(const JudgmentIndex& index, const ItemCounts& counts, ScoreOptions options) {
  std::vector<SeverityScore> scores;
  scores.reserve(index.items.size());
  for (std::size_t i = 0; i < index.items.size(); ++i) {
    if (counts.appearances[i] == 0) {
      if (options.allow_unscored) continue;
      throw Error(Errc::kUnscoredItem, index.items[i], "no judged appearances");
    }
    scores.push_back({index.items[i], counts.best[i], counts.worst[i], counts.appearances[i]});
  }
  return scores;
}

std::vector<SeverityScore> compute_scores_serial(const std::vector<Judgment>& judgments, const BwsDesign& design,
                                                 ScoreOptions options) {
  const auto index = JudgmentIndex::build(judgments, design);
  std::vector<int> all(judgments.size());
  std::iota(all.begin(), all.end(), 0);
  ItemCounts counts;
  accumulate_counts(index, all, counts);
  return to_scores(index, counts, options);
}

std::vector<SeverityScore> compute_scores(const std::vector<Judgment>& judgments, const BwsDesign& design,
                                          ScoreOptions options) {
  const auto index = JudgmentIndex::build(judgments, design);
  const std::size_t n_items = index.items.size();
  const long long n_judgments = static_cast<long long>(judgments.size());
  ItemCounts counts;
  counts.best.assign(n_items, 0);
  counts.worst.assign(n_items, 0);
  counts.appearances.assign(n_items, 0);

#pragma omp parallel
  {
    std::vector<int> best(n_items, 0), worst(n_items, 0), seen(n_items, 0);
#pragma omp for schedule(static) nowait
    for (long long k = 0; k < n_judgments; ++k) {
      const auto j = static_cast<std::size_t>(k);
      ++best[static_cast<std::size_t>(index.best_of[j])];
      ++worst[static_cast<std::size_t>(index.worst_of[j])];
      for (int member : index.tuple_items[static_cast<std::size_t>(index.tuple_of[j])]) {
        ++seen[static_cast<std::size_t>(member)];
      }
    }
#pragma omp critical(bwsann_score_reduce)
    for (std::size_t i = 0; i < n_items; ++i) {
      counts.best[i] += best[i];
      counts.worst[i] += worst[i];
      counts.appearances[i] += seen[i];
    }
  }
  return to_scores(index, counts, options);
}

std::vector<SeverityScore> rank_items(std::vector<SeverityScore> scores) {
  // normalized_a > normalized_b  <=>  (b_a - w_a) / n_a > (b_b - w_b) / n_b
  std::sort(scores.begin(), scores.end(), [](const SeverityScore& a, const SeverityScore& b) {
    const long long lhs = static_cast<long long>(a.best_count - a.worst_count) * b.judged_appearances;
    const long long rhs = static_cast<long long>(b.best_count - b.worst_count) * a.judged_appearances;
    if (lhs != rhs) return lhs > rhs;
    if (a.judged_appearances != b.judged_appearances) return a.judged_appearances > b.judged_appearances;
    return a.item_id < b.item_id;
  });
  return scores;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string scores_to_csv(const std::vector<ScoreRow>& rows) {
  CsvWriter out;
  out.row({"item_id", "text", "labels", "raw", "normalized", "best_count", "worst_count", "judged_appearances"});
  for (const auto& r : rows) {
    out.row({r.score.item_id, r.text, r.labels, format_double(r.score.raw()), format_double(r.score.normalized()),
             std::to_string(r.score.best_count), std::to_string(r.score.worst_count),
             std::to_string(r.score.judged_appearances)});
  }
  return out.str();
}

std::vector<ScoreRow> scores_from_csv(std::string_view text) {
  const auto table = parse_csv(text);
  std::vector<ScoreRow> rows;
  if (table.empty()) return rows;
  const auto& header = table.front();
  const auto col = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw Error(Errc::kParseError, std::string(name), "missing CSV column");
  };
  const std::size_t c_id = col("item_id"), c_text = col("text"), c_labels = col("labels"), c_best = col("best_count"),
                    c_worst = col("worst_count"), c_seen = col("judged_appearances");
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& f = table[r];
    if (f.size() != header.size()) throw Error(Errc::kParseError, "row " + std::to_string(r + 1), "column count");
    ScoreRow row;
    row.score.item_id = f[c_id];
    row.text = f[c_text];
    row.labels = f[c_labels];
    row.score.best_count = std::stoi(f[c_best]);
    row.score.worst_count = std::stoi(f[c_worst]);
    row.score.judged_appearances = std::stoi(f[c_seen]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bwsann
