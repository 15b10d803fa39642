#include <gtest/gtest.h>

#include <set>

#include "pecs/activity_engine.hpp"
#include "pecs/error.hpp"
#include "pecs/json_codec.hpp"
#include "pecs/rng.hpp"
#include "support.hpp"

using namespace pecs;
using testing_support::card;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::BadRequest;
}

void expect_task_invariants(const Deck& d, const DiscriminationTask& t) {
  const std::set<std::string> distinct(t.options.begin(), t.options.end());
  ASSERT_EQ(distinct.size(), t.options.size());
  ASSERT_EQ(static_cast<int>(t.options.size()), t.n_options);
  ASSERT_EQ(std::count(t.options.begin(), t.options.end(), t.target), 1);
  ASSERT_EQ(d.at(t.target).category, t.target_category);
  for (const auto& o : t.options) {
    if (o != t.target) ASSERT_NE(d.at(o).category, t.target_category) << o;
  }
  ASSERT_EQ(t.target_word, d.at(t.target).word);
}

void expect_question_invariants(const Deck& d, const Question& q) {
  ASSERT_EQ(q.options.size(), 3u);
  const std::set<std::string> distinct(q.options.begin(), q.options.end());
  ASSERT_EQ(distinct.size(), 3u);
  ASSERT_LT(q.correct_index, 3u);
  ASSERT_EQ(q.prompt_card, q.options[q.correct_index]);
  int correct = 0;
  for (std::size_t i = 0; i < 3; ++i) correct += evaluate_answer(q, i).correct ? 1 : 0;
  ASSERT_EQ(correct, 1);
  for (const auto& o : q.options) {
    const Role r = d.at(o).role;
    ASSERT_TRUE(r == Role::Noun || r == Role::Action);
  }
  if (q.phase == 4) {
    ASSERT_EQ(q.prompt_text, "What do you want?");
  } else {
    ASSERT_EQ(q.prompt_text, "Find the " + q.answer_word);
  }
}

}  // namespace

TEST(SplitMix64, MatchesPublishedSequence) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next(), 0x06C45D188009454FULL);
  EXPECT_EQ(rng.next(), 0xF88BB8A8724C81ECULL);
}

TEST(SplitMix64, UniformStaysInRange) {
  SplitMix64 rng(3);
  std::vector<int> hits(7);
  for (int i = 0; i < 7000; ++i) ++hits.at(rng.uniform(7));
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(DiscriminationTask, FruitExample) {
  const Deck& d = reference_deck();
  const auto t = gen_discrimination_task(d, Category::Fruits, 2, 7);
  expect_task_invariants(d, t);
  EXPECT_EQ(t.options.size(), 2u);
  EXPECT_EQ(t.seed, 7);
  EXPECT_EQ(gen_discrimination_task(d, Category::Fruits, 2, 7), t);
}

TEST(DiscriminationTask, ForcedPair) {
  const Deck d({card("apple", Category::Fruits, Role::Noun),
                card("cat", Category::Animals, Role::Noun)});
  for (std::int64_t seed = -5; seed < 50; ++seed) {
    const auto t = gen_discrimination_task(d, Category::Fruits, 2, seed);
    EXPECT_EQ(t.target, "apple");
    EXPECT_EQ(std::set<std::string>(t.options.begin(), t.options.end()),
              (std::set<std::string>{"apple", "cat"}));
  }
}

TEST(DiscriminationTask, Errors) {
  const Deck d({card("apple", Category::Fruits, Role::Noun),
                card("cat", Category::Animals, Role::Noun)});
  EXPECT_EQ(code_of([&] { gen_discrimination_task(d, Category::Fruits, 3, 1); }),
            ErrorCode::InsufficientCards);
  EXPECT_EQ(code_of([&] { gen_discrimination_task(d, Category::Shapes, 2, 1); }),
            ErrorCode::InsufficientCards);
  EXPECT_EQ(code_of([&] { gen_discrimination_task(d, Category::Fruits, 1, 1); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { gen_discrimination_task(d, Category::Fruits, 7, 1); }),
            ErrorCode::InvalidArgument);
}

TEST(DiscriminationTask, SeedSweep) {
  const Deck& d = reference_deck();
  std::set<std::string> targets;
  for (std::int64_t seed = 0; seed < 1000; ++seed) {
    const Category c = kAllCategories[static_cast<std::size_t>(seed) % kAllCategories.size()];
    const int n = 2 + static_cast<int>(seed % 5);
    const auto t = gen_discrimination_task(d, c, n, seed * 7919);
    expect_task_invariants(d, t);
    targets.insert(t.target);
  }
  EXPECT_GT(targets.size(), 30u);
}

TEST(EvaluateDiscrimination, Outcomes) {
  const Deck& d = reference_deck();
  const auto t = gen_discrimination_task(d, Category::Fruits, 3, 1);
  const auto right = evaluate_discrimination(t, t.target);
  EXPECT_TRUE(right.correct);
  EXPECT_EQ(right.stars_awarded, 1);
  const std::string wrong_id = t.options[0] == t.target ? t.options[1] : t.options[0];
  const auto wrong = evaluate_discrimination(t, wrong_id);
  EXPECT_FALSE(wrong.correct);
  EXPECT_EQ(wrong.stars_awarded, 0);
  EXPECT_EQ(wrong.feedback_text, "Try again — find the " + t.target_word);
  EXPECT_EQ(code_of([&] { evaluate_discrimination(t, "unicorn"); }),
            ErrorCode::ChoiceNotInOptions);
}

TEST(Question, PhaseFourPrompt) {
  const Deck& d = reference_deck();
  const auto q = gen_question(d, 4, 1);
  expect_question_invariants(d, q);
  EXPECT_EQ(q.prompt_text, "What do you want?");
}

TEST(Question, ForcedOptionSet) {
  const Deck d({card("apple", Category::Fruits, Role::Noun),
                card("cat", Category::Animals, Role::Noun),
                card("red", Category::Colours, Role::Adjective),
                card("circle", Category::Shapes, Role::Noun)});
  std::set<std::vector<std::string>> orders;
  for (std::int64_t seed = 0; seed < 200; ++seed) {
    const auto q = gen_question(d, 1 + static_cast<int>(seed % 4), seed);
    expect_question_invariants(d, q);
    EXPECT_EQ(std::set<std::string>(q.options.begin(), q.options.end()),
              (std::set<std::string>{"apple", "cat", "circle"}));
    orders.insert(q.options);
  }
  EXPECT_EQ(orders.size(), 6u);
  const Deck tiny({card("apple", Category::Fruits, Role::Noun),
                   card("cat", Category::Animals, Role::Noun)});
  EXPECT_EQ(code_of([&] { gen_question(tiny, 1, 0); }), ErrorCode::InsufficientCards);
  EXPECT_EQ(code_of([&] { gen_question(d, 5, 0); }), ErrorCode::InvalidArgument);
}

TEST(Question, SeedSweep) {
  const Deck& d = reference_deck();
  for (std::int64_t seed = 0; seed < 1000; ++seed) {
    expect_question_invariants(d, gen_question(d, 1 + static_cast<int>(seed % 4), seed));
  }
}

TEST(Question, LaterPhasesUseSameCategoryDistractors) {
  const Deck& d = reference_deck();
  for (std::int64_t seed = 0; seed < 200; ++seed) {
    const auto q = gen_question(d, 3, seed);
    const Category c = d.at(q.prompt_card).category;
    for (const auto& o : q.options) EXPECT_EQ(d.at(o).category, c);
  }
}

TEST(Generators, DeterministicAcrossCalls) {
  const Deck& d = reference_deck();
  std::string first, second;
  for (int run = 0; run < 2; ++run) {
    std::string& out = run == 0 ? first : second;
    for (std::int64_t seed = 0; seed < 300; ++seed) {
      out += codec::task_to_json(gen_discrimination_task(d, Category::Animals, 4, seed)).dump();
      out += codec::question_to_json(gen_question(d, 4, seed), true).dump();
    }
  }
  EXPECT_EQ(first, second);
}

TEST(EvaluateAnswer, Outcomes) {
  const auto q = gen_question(reference_deck(), 2, 9);
  const auto right = evaluate_answer(q, q.correct_index);
  EXPECT_EQ(right.stars_awarded, 1);
  const auto wrong = evaluate_answer(q, (q.correct_index + 1) % 3);
  EXPECT_EQ(wrong.stars_awarded, 0);
  EXPECT_FALSE(wrong.feedback_text.empty());
  EXPECT_EQ(code_of([&] { evaluate_answer(q, 5); }), ErrorCode::IndexOutOfRange);
}

TEST(EvaluateStripSubmission, Outcomes) {
  const Deck& d = reference_deck();
  const auto ok = evaluate_strip_submission(d, {"i", "want", "food"});
  EXPECT_TRUE(ok.correct);
  EXPECT_EQ(ok.stars_awarded, 1);
  const auto unfinished = evaluate_strip_submission(d, {"i", "want"});
  EXPECT_FALSE(unfinished.correct);
  EXPECT_EQ(unfinished.stars_awarded, 0);
  EXPECT_EQ(unfinished.feedback_text, "sentence not finished");
  const auto bad = evaluate_strip_submission(d, {"apple", "i"});
  EXPECT_FALSE(bad.correct);
  EXPECT_EQ(bad.feedback_text, "Check card 1");
  EXPECT_EQ(code_of([&] { evaluate_strip_submission(d, {"nope"}); }), ErrorCode::UnknownCardId);
}

TEST(EvaluationResults, StarIffCorrect) {
  const Deck& d = reference_deck();
  for (std::int64_t seed = 0; seed < 200; ++seed) {
    const auto t = gen_discrimination_task(d, Category::Shapes, 3, seed);
    for (const auto& o : t.options) {
      const auto r = evaluate_discrimination(t, o);
      ASSERT_EQ(r.stars_awarded == 1, r.correct);
      ASSERT_TRUE(r.correct || !r.feedback_text.empty());
    }
    const auto q = gen_question(d, 2, seed);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto r = evaluate_answer(q, i);
      ASSERT_EQ(r.stars_awarded == 1, r.correct);
      ASSERT_TRUE(r.correct || !r.feedback_text.empty());
    }
  }
}

TEST(SingleWordTap, Lookup) {
  const Deck d = add_custom_card(reference_deck(),
                                 card("mango", Category::Fruits, Role::Noun, /*silent=*/true));
  const auto apple = record_single_word_tap(d, "apple");
  EXPECT_EQ(apple.audio_ref, "audio/apple.ogg");
  EXPECT_EQ(apple.word, "apple");
  const auto mango = record_single_word_tap(d, "mango");
  EXPECT_FALSE(mango.audio_ref.has_value());
  EXPECT_EQ(mango.word, "mango");
  EXPECT_EQ(code_of([&] { record_single_word_tap(d, "unicorn"); }), ErrorCode::UnknownCardId);
}
