#include "pecs/activity_engine.hpp"

#include <algorithm>

#include "pecs/error.hpp"
#include "pecs/rng.hpp"
#include "pecs/sentence_engine.hpp"

namespace pecs {

std::string_view to_string(Activity activity) noexcept {
  switch (activity) {
    case Activity::SingleWord: return "SINGLE_WORD";
    case Activity::PecsBook: return "PECS_BOOK";
    case Activity::Differentiate: return "DIFFERENTIATE";
    case Activity::QA: return "QA";
  }
  return "?";
}

std::optional<Activity> parse_activity(std::string_view text) noexcept {
  for (Activity a : kAllActivities) {
    if (to_string(a) == text) return a;
  }
  return std::nullopt;
}

namespace {

std::uint64_t seed_bits(std::int64_t seed) { return static_cast<std::uint64_t>(seed); }

// Draws `count` distinct items from `pool`; the pool order is consumed.
std::vector<const Card*> draw(SplitMix64& rng, std::vector<const Card*> pool,
                              std::size_t count) {
  rng.shuffle(std::span<const Card*>(pool));
  pool.resize(count);
  return pool;
}

EvaluationResult correct_result() { return {true, 1, kCorrectFeedback}; }

EvaluationResult try_again(const std::string& word) {
  return {false, 0, "Try again — find the " + word};
}

}  // namespace

DiscriminationTask gen_discrimination_task(const Deck& deck, Category target_category,
                                           int n_options, std::int64_t seed) {
  if (n_options < 2 || n_options > 6) {
    fail(ErrorCode::InvalidArgument, "n_options must be between 2 and 6");
  }
  std::vector<const Card*> targets;
  std::vector<const Card*> others;
  for (const Card& card : deck.cards()) {
    (card.category == target_category ? targets : others).push_back(&card);
  }
  const auto distractor_count = static_cast<std::size_t>(n_options - 1);
  if (targets.empty()) {
    fail(ErrorCode::InsufficientCards,
         "no cards in category " + std::string(to_string(target_category)));
  }
  if (others.size() < distractor_count) {
    fail(ErrorCode::InsufficientCards,
         "need " + std::to_string(distractor_count) +
             " cards outside " + std::string(to_string(target_category)) +
             ", deck has " + std::to_string(others.size()));
  }

  SplitMix64 rng(seed_bits(seed));
  const Card* target = targets[rng.uniform(targets.size())];
  std::vector<const Card*> picked = draw(rng, std::move(others), distractor_count);
  picked.push_back(target);
  rng.shuffle(std::span<const Card*>(picked));

  DiscriminationTask task;
  task.task_id = "diff-" + std::string(to_string(target_category)) + "-" +
                 std::to_string(n_options) + "-" + std::to_string(seed);
  task.target = target->id;
  task.target_word = target->word;
  task.target_category = target_category;
  task.n_options = n_options;
  task.seed = seed;
  for (const Card* card : picked) task.options.push_back(card->id);
  return task;
}

EvaluationResult evaluate_discrimination(const DiscriminationTask& task,
                                         const std::string& chosen) {
  if (std::find(task.options.begin(), task.options.end(), chosen) == task.options.end()) {
    fail(ErrorCode::ChoiceNotInOptions, "'" + chosen + "' is not one of the options");
  }
  return chosen == task.target ? correct_result() : try_again(task.target_word);
}

Question gen_question(const Deck& deck, int phase, std::int64_t seed) {
  if (phase < 1 || phase > 4) fail(ErrorCode::InvalidArgument, "phase must be 1..4");
  std::vector<const Card*> pool;
  for (const Card& card : deck.cards()) {
    if (card.role == Role::Noun || card.role == Role::Action) pool.push_back(&card);
  }
  if (pool.size() < 3) {
    fail(ErrorCode::InsufficientCards,
         "need 3 NOUN/ACTION cards, deck has " + std::to_string(pool.size()));
  }

  SplitMix64 rng(seed_bits(seed));
  const Card* answer = pool[rng.uniform(pool.size())];

  std::vector<const Card*> rest;
  std::vector<const Card*> same_category;
  for (const Card* card : pool) {
    if (card == answer) continue;
    rest.push_back(card);
    if (card->category == answer->category) same_category.push_back(card);
  }
  const bool hard = phase >= 3 && same_category.size() >= 2;
  std::vector<const Card*> options = draw(rng, hard ? same_category : rest, 2);
  options.push_back(answer);
  rng.shuffle(std::span<const Card*>(options));

  Question q;
  q.question_id = "qa-p" + std::to_string(phase) + "-" + std::to_string(seed);
  q.prompt_text = phase == 4 ? kPhaseFourPrompt : "Find the " + answer->word;
  q.prompt_card = answer->id;
  q.answer_word = answer->word;
  q.phase = phase;
  q.seed = seed;
  for (std::size_t i = 0; i < options.size(); ++i) {
    q.options.push_back(options[i]->id);
    if (options[i] == answer) q.correct_index = i;
  }
  return q;
}

EvaluationResult evaluate_answer(const Question& question, std::size_t chosen_index) {
  if (chosen_index >= question.options.size()) {
    fail(ErrorCode::IndexOutOfRange,
         "option index " + std::to_string(chosen_index) + " out of range");
  }
  return chosen_index == question.correct_index ? correct_result()
                                                : try_again(question.answer_word);
}

EvaluationResult evaluate_strip_submission(const Deck& deck,
                                           const std::vector<std::string>& card_ids) {
  const StripState state = validate_strip(deck, card_ids);
  switch (state.verdict) {
    case StripVerdict::Valid:
      return correct_result();
    case StripVerdict::Incomplete:
      return {false, 0, kUnfinishedFeedback};
    case StripVerdict::Invalid:
      return {false, 0, "Check card " + std::to_string(*state.position + 1)};
  }
  return {false, 0, kUnfinishedFeedback};
}

TapEvent record_single_word_tap(const Deck& deck, const std::string& card_id) {
  const Card& card = deck.at(card_id);
  return {card.id, card.audio_ref, card.word};
}

}  // namespace pecs
