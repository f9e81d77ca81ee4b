#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "bwsann/scoring.hpp"

namespace bwsann {

/// Append-only judgment log for one design. Writes are serialized; readers
/// get a copy of the log. Optionally backed by a JSONL file that is replayed
/// on construction.
class JudgmentStore {
 public:
  explicit JudgmentStore(BwsDesign design, std::optional<std::filesystem::path> log_path = std::nullopt);

  JudgmentStore(const JudgmentStore&) = delete;
  JudgmentStore& operator=(const JudgmentStore&) = delete;

  /// Validates and appends. Throws kInvalidChoice, kUnknownTuple,
  /// kChoiceOutsideTuple, or kDuplicateJudgment (first submission wins).
  /// Returns the stored judgment (with judgment_id assigned if it was empty).
  Judgment record(Judgment judgment);

  std::vector<Judgment> snapshot() const;
  std::size_t size() const;
  const BwsDesign& design() const noexcept { return design_; }

 private:
  void append_locked(const Judgment& judgment);

  BwsDesign design_;
  std::optional<std::filesystem::path> log_path_;
  std::ofstream log_;
  mutable std::mutex mutex_;
  std::vector<Judgment> judgments_;
  std::set<std::pair<TupleId, AnnotatorId>> seen_;
};

/// Convenience wrapper matching the record_judgment operation.
inline Judgment record_judgment(JudgmentStore& store, Judgment judgment) { return store.record(std::move(judgment)); }

}  // namespace bwsann
