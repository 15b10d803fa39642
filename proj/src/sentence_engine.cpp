#include "pecs/sentence_engine.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "pecs/error.hpp"

namespace pecs {

std::string_view to_string(StripVerdict verdict) noexcept {
  switch (verdict) {
    case StripVerdict::Incomplete: return "INCOMPLETE";
    case StripVerdict::Valid: return "VALID";
    case StripVerdict::Invalid: return "INVALID";
  }
  return "?";
}

namespace {

// The strip language is regular, so the grammar runs as a small automaton.
enum class GrammarState {
  Start,         // expects STARTER
  AfterStarter,  // expects VERB
  AfterVerb,     // ACTION, or the first card of a noun phrase
  Action,        // accepting, nothing may follow
  Adjectives,    // inside a noun phrase, NOUN still owed
  Noun,          // accepting, PREPOSITION may open another noun phrase
  Preposition,   // noun phrase owed
};

constexpr std::size_t kStateCount = 7;

std::optional<GrammarState> step(GrammarState state, Role role) {
  switch (state) {
    case GrammarState::Start:
      if (role == Role::Starter) return GrammarState::AfterStarter;
      break;
    case GrammarState::AfterStarter:
      if (role == Role::Verb) return GrammarState::AfterVerb;
      break;
    case GrammarState::AfterVerb:
      if (role == Role::Action) return GrammarState::Action;
      [[fallthrough]];
    case GrammarState::Adjectives:
    case GrammarState::Preposition:
      if (role == Role::Adjective) return GrammarState::Adjectives;
      if (role == Role::Noun) return GrammarState::Noun;
      break;
    case GrammarState::Noun:
      if (role == Role::Preposition) return GrammarState::Preposition;
      break;
    case GrammarState::Action:
      break;
  }
  return std::nullopt;
}

// Fewest cards still needed to reach an accepting state.
constexpr std::array<std::size_t, kStateCount> kCardsToFinish = {3, 2, 1, 0, 1, 0, 1};

std::size_t cards_to_finish(GrammarState state) {
  return kCardsToFinish[static_cast<std::size_t>(state)];
}

bool accepting(GrammarState state) {
  return state == GrammarState::Action || state == GrammarState::Noun;
}

std::string expected_roles(GrammarState state) {
  std::string out;
  for (Role role : kAllRoles) {
    if (step(state, role)) {
      if (!out.empty()) out += " or ";
      out += to_string(role);
    }
  }
  return out.empty() ? "end of sentence" : out;
}

std::vector<Role> resolve_roles(const Deck& deck, std::span<const std::string> ids) {
  std::vector<Role> roles;
  roles.reserve(ids.size());
  for (const std::string& id : ids) roles.push_back(deck.at(id).role);
  return roles;
}

}  // namespace

StripState classify_roles(std::span<const Role> roles) {
  GrammarState state = GrammarState::Start;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    auto next = step(state, roles[i]);
    if (!next) {
      return {StripVerdict::Invalid, i,
              "expected " + expected_roles(state) + ", found " +
                  std::string(to_string(roles[i]))};
    }
    if (i + 1 + cards_to_finish(*next) > kMaxStripLength) {
      return {StripVerdict::Invalid, i,
              "sentence cannot be finished within " +
                  std::to_string(kMaxStripLength) + " cards"};
    }
    state = *next;
  }
  if (accepting(state)) return {StripVerdict::Valid, std::nullopt, {}};
  return {StripVerdict::Incomplete, std::nullopt,
          "expected " + expected_roles(state) + " next"};
}

StripState validate_strip(const Deck& deck, std::span<const std::string> card_ids) {
  if (card_ids.size() > kMaxStripLength) {
    fail(ErrorCode::StripTooLong, "strip has " + std::to_string(card_ids.size()) +
                                      " cards, at most " +
                                      std::to_string(kMaxStripLength) + " allowed");
  }
  const std::vector<Role> roles = resolve_roles(deck, card_ids);
  return classify_roles(roles);
}

SentenceStrip::SentenceStrip(const Deck& deck, std::vector<std::string> card_ids)
    : card_ids_(std::move(card_ids)), state_(validate_strip(deck, card_ids_)) {}

SentenceStrip SentenceStrip::with_card(const Deck& deck, std::string card_id) const {
  std::vector<std::string> ids = card_ids_;
  ids.push_back(std::move(card_id));
  return SentenceStrip(deck, std::move(ids));
}

SentenceStrip SentenceStrip::without_card(const Deck& deck, std::size_t index) const {
  if (index >= card_ids_.size()) {
    fail(ErrorCode::IndexOutOfRange, "no card at strip position " + std::to_string(index));
  }
  std::vector<std::string> ids = card_ids_;
  ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(index));
  return SentenceStrip(deck, std::move(ids));
}

std::string render_strip_text(const Deck& deck, const SentenceStrip& strip) {
  std::string text;
  for (const std::string& id : strip.card_ids()) {
    if (!text.empty()) text += ' ';
    text += deck.at(id).word;
  }
  return text;
}

std::vector<std::string> audio_sequence(const Deck& deck, const SentenceStrip& strip) {
  std::vector<std::string> cues;
  for (const std::string& id : strip.card_ids()) {
    const Card& card = deck.at(id);
    if (card.audio_ref) cues.push_back(*card.audio_ref);
  }
  return cues;
}

std::uint64_t UsageModel::unigram_count(const std::string& id) const {
  auto it = unigram.find(id);
  return it == unigram.end() ? 0 : it->second;
}

std::uint64_t UsageModel::bigram_count(const std::string& prev,
                                       const std::string& next) const {
  auto it = bigram.find({prev, next});
  return it == bigram.end() ? 0 : it->second;
}

std::uint64_t UsageModel::total() const {
  return std::accumulate(unigram.begin(), unigram.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

std::vector<Suggestion> predict_next(const Deck& deck,
                                     std::span<const std::string> prefix,
                                     const UsageModel& model, std::size_t k) {
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be positive");
  const StripState state = validate_strip(deck, prefix);
  if (state.verdict != StripVerdict::Incomplete) {
    fail(ErrorCode::PrefixNotExtendable,
         std::string("prefix is ") + std::string(to_string(state.verdict)) +
             "; only an unfinished sentence can be extended");
  }

  std::vector<Role> roles = resolve_roles(deck, prefix);
  std::array<bool, kAllRoles.size()> extends{};
  for (std::size_t r = 0; r < kAllRoles.size(); ++r) {
    roles.push_back(kAllRoles[r]);
    extends[r] = classify_roles(roles).verdict != StripVerdict::Invalid;
    roles.pop_back();
  }

  struct Ranked {
    const Card* card;
    std::uint64_t numerator;
    std::uint64_t unigram;
  };
  std::vector<Ranked> candidates;
  for (const Card& card : deck.cards()) {
    if (!extends[static_cast<std::size_t>(card.role)]) continue;
    const std::uint64_t count = prefix.empty()
                                    ? model.unigram_count(card.id)
                                    : model.bigram_count(prefix.back(), card.id);
    candidates.push_back({&card, count + 1, model.unigram_count(card.id)});
  }

  const double denominator =
      static_cast<double>(prefix.empty() ? model.total()
                                         : model.unigram_count(prefix.back())) +
      static_cast<double>(candidates.size());

  // The denominator is shared, so ordering by numerator is ordering by score
  // without floating-point ties.
  std::sort(candidates.begin(), candidates.end(), [](const Ranked& a, const Ranked& b) {
    if (a.numerator != b.numerator) return a.numerator > b.numerator;
    if (a.unigram != b.unigram) return a.unigram > b.unigram;
    return a.card->id < b.card->id;
  });

  std::vector<Suggestion> out;
  const std::size_t n = std::min(k, candidates.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({candidates[i].card->id,
                   static_cast<double>(candidates[i].numerator) / denominator});
  }
  return out;
}

UsageModel update_usage_model(const UsageModel& model, const SentenceStrip& strip) {
  if (strip.state().verdict != StripVerdict::Valid) {
    fail(ErrorCode::StripNotValid, "only a finished, valid sentence trains the model");
  }
  UsageModel out = model;
  const auto& ids = strip.card_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ++out.unigram[ids[i]];
    if (i + 1 < ids.size()) ++out.bigram[{ids[i], ids[i + 1]}];
  }
  return out;
}

}  // namespace pecs
