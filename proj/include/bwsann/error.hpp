#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bwsann {

enum class Errc {
  kInvalidArgument,
  kParseError,
  kIoError,
  kNotFound,
  kForbidden,
  // core_model
  kUnderLabeled,
  kInvalidLabel,
  kInvalidRegistry,
  // bws_design
  kDesignInfeasible,
  kDuplicateItems,
  // scoring
  kInvalidChoice,
  kChoiceOutsideTuple,
  kDuplicateJudgment,
  kUnknownTuple,
  kUnscoredItem,
  // reliability
  kInsufficientRedundancy,
  // auditing
  kMissingLabels,
  kItemSetMismatch,
  // annotation_service
  kPhaseOrderViolation,
  kExposureLimitReached,
  kConsentRequired,
  kNoTaskAvailable,
  kAssignmentExpired,
  kAlreadySubmitted,
  kNotAuthorized,
};

std::string_view errc_name(Errc code);

/// Domain error carrying a machine-readable code and, where relevant, the id
/// of the offending entity (item, tuple, group, assignment...).
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string subject, const std::string& message = {});

  Errc code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  Errc code_;
  std::string subject_;
};

}  // namespace bwsann
