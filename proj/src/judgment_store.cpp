#include "bwsann/judgment_store.hpp"

#include "bwsann/error.hpp"
#include "bwsann/jsonl.hpp"

namespace bwsann {

JudgmentStore::JudgmentStore(BwsDesign design, std::optional<std::filesystem::path> log_path)
    : design_(std::move(design)), log_path_(std::move(log_path)) {
  if (!log_path_) return;
  if (std::filesystem::exists(*log_path_)) {
    for (auto& j : judgments_from_jsonl(read_file(*log_path_))) {
      check_judgment(j, design_);
      if (!seen_.emplace(j.tuple_id, j.annotator_id).second) throw Error(Errc::kDuplicateJudgment, j.judgment_id);
      judgments_.push_back(std::move(j));
    }
  }
  log_.open(*log_path_, std::ios::app);
  if (!log_) throw Error(Errc::kIoError, log_path_->string(), "cannot open judgment log");
}

Judgment JudgmentStore::record(Judgment judgment) {
  check_judgment(judgment, design_);
  std::lock_guard lock(mutex_);
  if (seen_.count({judgment.tuple_id, judgment.annotator_id})) {
    throw Error(Errc::kDuplicateJudgment, judgment.tuple_id + "/" + judgment.annotator_id);
  }
  if (judgment.judgment_id.empty()) judgment.judgment_id = "j" + std::to_string(judgments_.size());
  append_locked(judgment);
  seen_.emplace(judgment.tuple_id, judgment.annotator_id);
  judgments_.push_back(judgment);
  return judgment;
}

void JudgmentStore::append_locked(const Judgment& judgment) {
  if (!log_.is_open()) return;
  log_ << nlohmann::json(judgment).dump() << '\n';
  log_.flush();
  if (!log_) throw Error(Errc::kIoError, log_path_->string(), "append failed");
}

std::vector<Judgment> JudgmentStore::snapshot() const {
  std::lock_guard lock(mutex_);
  return judgments_;
}

std::size_t JudgmentStore::size() const {
  std::lock_guard lock(mutex_);
  return judgments_.size();
}

}  // namespace bwsann
