#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pecs/card_catalog.hpp"

namespace pecs {

/// The four main-menu activities.
enum class Activity { SingleWord, PecsBook, Differentiate, QA };

inline constexpr std::array kAllActivities = {
    Activity::SingleWord, Activity::PecsBook, Activity::Differentiate, Activity::QA};

std::string_view to_string(Activity activity) noexcept;
std::optional<Activity> parse_activity(std::string_view text) noexcept;

inline constexpr const char* kPhaseFourPrompt = "What do you want?";
inline constexpr const char* kCorrectFeedback = "Well done!";
inline constexpr const char* kUnfinishedFeedback = "sentence not finished";

struct DiscriminationTask {
  std::string task_id;
  std::string target;
  std::string target_word;
  std::vector<std::string> options;
  Category target_category = Category::Core;
  int n_options = 2;
  std::int64_t seed = 0;

  bool operator==(const DiscriminationTask&) const = default;
};

struct Question {
  std::string question_id;
  std::string prompt_text;
  std::string prompt_card;
  std::vector<std::string> options;  // exactly three
  std::size_t correct_index = 0;
  std::string answer_word;
  int phase = 1;
  std::int64_t seed = 0;

  bool operator==(const Question&) const = default;
};

struct EvaluationResult {
  bool correct = false;
  int stars_awarded = 0;
  std::string feedback_text;

  bool operator==(const EvaluationResult&) const = default;
};

struct TapEvent {
  std::string card_id;
  std::optional<std::string> audio_ref;
  std::string word;

  bool operator==(const TapEvent&) const = default;
};

/// Target from `target_category`, distractors from every other category.
/// Throws InsufficientCards, InvalidArgument (n_options outside 2..6).
DiscriminationTask gen_discrimination_task(const Deck& deck, Category target_category,
                                           int n_options, std::int64_t seed);

/// Throws ChoiceNotInOptions.
EvaluationResult evaluate_discrimination(const DiscriminationTask& task,
                                         const std::string& chosen);

/// Three NOUN/ACTION options. From phase 3 on, distractors come from the
/// answer's own category when it has enough cards. Phase 4 asks
/// "What do you want?". Throws InsufficientCards, InvalidArgument.
Question gen_question(const Deck& deck, int phase, std::int64_t seed);

/// Throws IndexOutOfRange.
EvaluationResult evaluate_answer(const Question& question, std::size_t chosen_index);

/// Throws UnknownCardId, StripTooLong.
EvaluationResult evaluate_strip_submission(const Deck& deck,
                                           const std::vector<std::string>& card_ids);

/// Throws UnknownCardId.
TapEvent record_single_word_tap(const Deck& deck, const std::string& card_id);

}  // namespace pecs
