#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pecs {

/// Machine-readable failure kinds. The names double as the wire-level error
/// codes returned by the HTTP service, so keep them stable.
enum class ErrorCode {
  // card_catalog
  MalformedDocument,
  DuplicateCardId,
  UnknownCategory,
  UnknownRole,
  RoleCategoryMismatch,
  InvalidCard,
  UnknownDeck,
  // sentence_engine
  UnknownCardId,
  StripTooLong,
  PrefixNotExtendable,
  StripNotValid,
  // activity_engine
  InsufficientCards,
  ChoiceNotInOptions,
  IndexOutOfRange,
  InvalidArgument,
  // learner_model
  UsernameTaken,
  WeakPassword,
  AuthFailed,
  UnknownLearner,
  InconsistentAttempt,
  UnknownTheme,
  UnknownAccountRole,
  ActivityLocked,
  // service_api
  NotLinked,
  EmptyBody,
  BodyTooLong,
  Forbidden,
  RateLimited,
  MalformedSnapshot,
  VersionUnsupported,
  NotFound,
  BadRequest,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace pecs
