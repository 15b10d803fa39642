#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pecs/card_catalog.hpp"

namespace pecs {

inline constexpr std::size_t kMaxStripLength = 6;

enum class StripVerdict { Incomplete, Valid, Invalid };

std::string_view to_string(StripVerdict verdict) noexcept;

struct StripState {
  StripVerdict verdict = StripVerdict::Incomplete;
  /// Index of the first card no derivation can continue past. Set only for
  /// Invalid.
  std::optional<std::size_t> position;
  std::string reason;

  bool operator==(const StripState&) const = default;
};

/// Grammar verdict over a role sequence.
///
///   S  -> STARTER VERB NP | STARTER VERB ACTION
///   NP -> ADJECTIVE* NOUN [PREPOSITION NP]
///
/// A sequence is Valid when it derives S within kMaxStripLength cards,
/// Incomplete when it is a proper prefix of such a sentence, and Invalid
/// otherwise. Sequences longer than kMaxStripLength are rejected by the
/// card-level entry points, not here.
StripState classify_roles(std::span<const Role> roles);

/// Throws UnknownCardId, StripTooLong.
StripState validate_strip(const Deck& deck, std::span<const std::string> card_ids);

/// Ordered card ids whose state always matches validate_strip for the deck
/// it was built against.
class SentenceStrip {
 public:
  SentenceStrip() = default;
  SentenceStrip(const Deck& deck, std::vector<std::string> card_ids);

  const std::vector<std::string>& card_ids() const noexcept { return card_ids_; }
  const StripState& state() const noexcept { return state_; }
  std::size_t size() const noexcept { return card_ids_.size(); }

  /// New strip with `card_id` appended / the card at `index` removed.
  SentenceStrip with_card(const Deck& deck, std::string card_id) const;
  SentenceStrip without_card(const Deck& deck, std::size_t index) const;

 private:
  std::vector<std::string> card_ids_;
  StripState state_;
};

std::string render_strip_text(const Deck& deck, const SentenceStrip& strip);
std::vector<std::string> audio_sequence(const Deck& deck, const SentenceStrip& strip);

/// Card-usage counts that drive the picture prediction row.
struct UsageModel {
  std::map<std::string, std::uint64_t> unigram;
  std::map<std::pair<std::string, std::string>, std::uint64_t> bigram;

  std::uint64_t unigram_count(const std::string& id) const;
  std::uint64_t bigram_count(const std::string& prev, const std::string& next) const;
  std::uint64_t total() const;

  bool operator==(const UsageModel&) const = default;
};

struct Suggestion {
  std::string card_id;
  double score = 0.0;

  bool operator==(const Suggestion&) const = default;
};

/// Ranks the cards that can legally extend `prefix`.
///
/// With last card p and candidate set C:
///   score(c) = (bigram(p, c) + 1) / (unigram(p) + |C|)
/// and for an empty prefix
///   score(c) = (unigram(c) + 1) / (total + |C|).
/// Ties go to the higher unigram count, then the smaller id.
///
/// Throws PrefixNotExtendable unless the prefix is Incomplete; UnknownCardId.
std::vector<Suggestion> predict_next(const Deck& deck,
                                     std::span<const std::string> prefix,
                                     const UsageModel& model, std::size_t k);

/// Counts every card and adjacent pair of a Valid strip. Throws StripNotValid.
UsageModel update_usage_model(const UsageModel& model, const SentenceStrip& strip);

}  // namespace pecs
