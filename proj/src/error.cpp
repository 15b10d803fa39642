#include "pecs/error.hpp"

namespace pecs {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::DuplicateCardId: return "DuplicateCardId";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::UnknownRole: return "UnknownRole";
    case ErrorCode::RoleCategoryMismatch: return "RoleCategoryMismatch";
    case ErrorCode::InvalidCard: return "InvalidCard";
    case ErrorCode::UnknownDeck: return "UnknownDeck";
    case ErrorCode::UnknownCardId: return "UnknownCardId";
    case ErrorCode::StripTooLong: return "StripTooLong";
    case ErrorCode::PrefixNotExtendable: return "PrefixNotExtendable";
    case ErrorCode::StripNotValid: return "StripNotValid";
    case ErrorCode::InsufficientCards: return "InsufficientCards";
    case ErrorCode::ChoiceNotInOptions: return "ChoiceNotInOptions";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UsernameTaken: return "UsernameTaken";
    case ErrorCode::WeakPassword: return "WeakPassword";
    case ErrorCode::AuthFailed: return "AuthFailed";
    case ErrorCode::UnknownLearner: return "UnknownLearner";
    case ErrorCode::InconsistentAttempt: return "InconsistentAttempt";
    case ErrorCode::UnknownTheme: return "UnknownTheme";
    case ErrorCode::UnknownAccountRole: return "UnknownAccountRole";
    case ErrorCode::ActivityLocked: return "ActivityLocked";
    case ErrorCode::NotLinked: return "NotLinked";
    case ErrorCode::EmptyBody: return "EmptyBody";
    case ErrorCode::BodyTooLong: return "BodyTooLong";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedSnapshot: return "MalformedSnapshot";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

}  // namespace pecs
