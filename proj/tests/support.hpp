#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "pecs/card_catalog.hpp"
#include "pecs/clock.hpp"
#include "pecs/learner_model.hpp"
#include "pecs/store.hpp"

namespace testing_support {

/// Clock that only moves when told to.
struct ManualClock {
  std::shared_ptr<std::atomic<pecs::Millis>> now =
      std::make_shared<std::atomic<pecs::Millis>>(1'700'000'000'000);

  pecs::Clock fn() const {
    auto n = now;
    return [n] { return n->load(); };
  }
  void advance(pecs::Millis ms) const { *now += ms; }
};

inline pecs::Card card(std::string id, pecs::Category category, pecs::Role role,
                       bool silent = false) {
  pecs::Card c;
  c.id = id;
  c.word = id;
  c.category = category;
  c.role = role;
  c.picture_ref = "pictures/" + id + ".png";
  if (!silent) c.audio_ref = "audio/" + id + ".ogg";
  return c;
}

/// Ten cards covering every role, used for exhaustive grammar checks.
inline pecs::Deck grammar_deck() {
  using pecs::Category;
  using pecs::Role;
  return pecs::Deck({
      card("i", Category::Core, Role::Starter),
      card("want", Category::Core, Role::Verb),
      card("like", Category::Core, Role::Verb),
      card("to-run", Category::Motions, Role::Action),
      card("red", Category::Colours, Role::Adjective),
      card("happy", Category::Emotions, Role::Adjective),
      card("apple", Category::Fruits, Role::Noun),
      card("food", Category::Food, Role::Noun),
      card("in", Category::Core, Role::Preposition),
      card("with", Category::Core, Role::Preposition),
  });
}

/// Fast password hashing; production uses the interactive cost.
inline pecs::RegistryOptions fast_registry() {
  pecs::RegistryOptions o;
  o.password_cost = pecs::PasswordCost::Minimal;
  return o;
}

inline pecs::StoreOptions fast_store() {
  pecs::StoreOptions o;
  o.registry = fast_registry();
  return o;
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("pecs-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace testing_support
