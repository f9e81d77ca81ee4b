#include "bwsann/error.hpp"

namespace bwsann {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid-argument";
    case Errc::kParseError: return "parse-error";
    case Errc::kIoError: return "io-error";
    case Errc::kNotFound: return "not-found";
    case Errc::kForbidden: return "forbidden";
    case Errc::kUnderLabeled: return "under-labeled";
    case Errc::kInvalidLabel: return "invalid-label";
    case Errc::kInvalidRegistry: return "invalid-registry";
    case Errc::kDesignInfeasible: return "design-infeasible";
    case Errc::kDuplicateItems: return "duplicate-items";
    case Errc::kInvalidChoice: return "invalid-choice";
    case Errc::kChoiceOutsideTuple: return "choice-outside-tuple";
    case Errc::kDuplicateJudgment: return "duplicate-judgment";
    case Errc::kUnknownTuple: return "unknown-tuple";
    case Errc::kUnscoredItem: return "unscored-item";
    case Errc::kInsufficientRedundancy: return "insufficient-redundancy";
    case Errc::kMissingLabels: return "missing-labels";
    case Errc::kItemSetMismatch: return "item-set-mismatch";
    case Errc::kPhaseOrderViolation: return "phase-order-violation";
    case Errc::kExposureLimitReached: return "exposure-limit-reached";
    case Errc::kConsentRequired: return "consent-required";
    case Errc::kNoTaskAvailable: return "no-task-available";
    case Errc::kAssignmentExpired: return "assignment-expired";
    case Errc::kAlreadySubmitted: return "already-submitted";
    case Errc::kNotAuthorized: return "not-authorized";
  }
  return "unknown";
}

namespace {

std::string compose(Errc code, const std::string& subject, const std::string& message) {
  std::string out(errc_name(code));
  if (!subject.empty()) out += "(" + subject + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(Errc code, std::string subject, const std::string& message)
    : std::runtime_error(compose(code, subject, message)), code_(code), subject_(std::move(subject)) {}

}  // namespace bwsann
