#pragma once

// Reference implementations the tests compare the library against. None of
// them share code with the library's automaton or ranking.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pecs/card_catalog.hpp"
#include "pecs/learner_model.hpp"
#include "pecs/sentence_engine.hpp"
#include "pecs/store.hpp"

namespace oracle {

using pecs::Role;

// Symbols of the strip grammar. Terminals are the card roles.
enum class Sym { Starter, Verb, Action, Adjective, Noun, Preposition, S, NP, Adjs, Tail };

inline bool terminal(Sym s) { return s < Sym::S; }

inline Role role_of(Sym s) {
  switch (s) {
    case Sym::Starter: return Role::Starter;
    case Sym::Verb: return Role::Verb;
    case Sym::Action: return Role::Action;
    case Sym::Adjective: return Role::Adjective;
    case Sym::Noun: return Role::Noun;
    default: return Role::Preposition;
  }
}

// S    -> STARTER VERB NP | STARTER VERB ACTION
// NP   -> Adjs NOUN Tail
// Adjs -> "" | ADJECTIVE Adjs
// Tail -> "" | PREPOSITION NP
inline std::vector<std::vector<Sym>> productions(Sym lhs) {
  switch (lhs) {
    case Sym::S:
      return {{Sym::Starter, Sym::Verb, Sym::NP}, {Sym::Starter, Sym::Verb, Sym::Action}};
    case Sym::NP: return {{Sym::Adjs, Sym::Noun, Sym::Tail}};
    case Sym::Adjs: return {{}, {Sym::Adjective, Sym::Adjs}};
    case Sym::Tail: return {{}, {Sym::Preposition, Sym::NP}};
    default: return {};
  }
}

inline std::size_t min_yield(Sym s) {
  if (terminal(s)) return 1;
  switch (s) {
    case Sym::S: return 3;
    case Sym::NP: return 1;
    default: return 0;
  }
}

/// Every role sequence derivable from S with at most `max_len` cards, found by
/// exhaustive leftmost derivation.
inline std::set<std::vector<Role>> sentences(std::size_t max_len = pecs::kMaxStripLength) {
  std::set<std::vector<Role>> out;
  std::vector<std::vector<Sym>> work{{Sym::S}};
  while (!work.empty()) {
    std::vector<Sym> form = std::move(work.back());
    work.pop_back();
    std::size_t floor = 0;
    for (Sym s : form) floor += min_yield(s);
    if (floor > max_len) continue;
    auto nt = std::find_if(form.begin(), form.end(), [](Sym s) { return !terminal(s); });
    if (nt == form.end()) {
      std::vector<Role> roles;
      for (Sym s : form) roles.push_back(role_of(s));
      out.insert(roles);
      continue;
    }
    const auto at = nt - form.begin();
    for (const auto& rhs : productions(*nt)) {
      std::vector<Sym> next(form.begin(), form.begin() + at);
      next.insert(next.end(), rhs.begin(), rhs.end());
      next.insert(next.end(), form.begin() + at + 1, form.end());
      work.push_back(std::move(next));
    }
  }
  return out;
}

struct Verdict {
  pecs::StripVerdict verdict;
  std::optional<std::size_t> position;
};

/// Classifies role sequences by lookup in the enumerated language.
class GrammarOracle {
 public:
  GrammarOracle() : language_(sentences()) {
    for (const auto& s : language_) {
      for (std::size_t n = 0; n <= s.size(); ++n) prefixes_.insert({s.begin(), s.begin() + n});
    }
  }

  Verdict classify(const std::vector<Role>& roles) const {
    if (language_.contains(roles)) return {pecs::StripVerdict::Valid, std::nullopt};
    if (prefixes_.contains(roles)) return {pecs::StripVerdict::Incomplete, std::nullopt};
    for (std::size_t i = 0; i < roles.size(); ++i) {
      if (!prefixes_.contains({roles.begin(), roles.begin() + i + 1})) {
        return {pecs::StripVerdict::Invalid, i};
      }
    }
    return {pecs::StripVerdict::Invalid, roles.size()};  // unreachable
  }

  bool viable(const std::vector<Role>& roles) const { return prefixes_.contains(roles); }
  const std::set<std::vector<Role>>& language() const { return language_; }

 private:
  std::set<std::vector<Role>> language_;
  std::set<std::vector<Role>> prefixes_;
};

inline std::vector<Role> roles_of(const pecs::Deck& deck, const std::vector<std::string>& ids) {
  std::vector<Role> roles;
  for (const auto& id : ids) roles.push_back(deck.at(id).role);
  return roles;
}

struct Ranked {
  std::string id;
  double score;
};

/// Scores every legal next card with the smoothed bigram formula and sorts.
inline std::vector<Ranked> rank(const GrammarOracle& grammar, const pecs::Deck& deck,
                                const std::vector<std::string>& prefix,
                                const pecs::UsageModel& model, std::size_t k) {
  auto count = [](const auto& map, const auto& key) -> double {
    auto it = map.find(key);
    return it == map.end() ? 0.0 : static_cast<double>(it->second);
  };
  std::vector<const pecs::Card*> legal;
  const auto base = roles_of(deck, prefix);
  for (const auto& card : deck.cards()) {
    auto roles = base;
    roles.push_back(card.role);
    if (grammar.viable(roles)) legal.push_back(&card);
  }
  double total = 0;
  for (const auto& [id, n] : model.unigram) total += static_cast<double>(n);

  std::vector<std::pair<Ranked, double>> scored;
  for (const auto* c : legal) {
    double score = 0;
    if (prefix.empty()) {
      score = (count(model.unigram, c->id) + 1) / (total + static_cast<double>(legal.size()));
    } else {
      score = (count(model.bigram, std::pair{prefix.back(), c->id}) + 1) /
              (count(model.unigram, prefix.back()) + static_cast<double>(legal.size()));
    }
    scored.push_back({{c->id, score}, count(model.unigram, c->id)});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first.score != b.first.score) return a.first.score > b.first.score;
    if (a.second != b.second) return a.second > b.second;
    return a.first.id < b.first.id;
  });
  std::vector<Ranked> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].first);
  return out;
}

/// Stars in a ledger, counted attempt by attempt.
inline std::uint64_t star_recount(const std::vector<pecs::ActivityAttempt>& ledger) {
  std::uint64_t total = 0;
  for (const auto& a : ledger) total += a.stars_awarded == 1 ? 1 : 0;
  return total;
}

/// The conversation between two accounts, filtered and sorted from scratch.
inline std::vector<pecs::Message> conversation(const std::vector<pecs::Message>& all,
                                               const std::string& a, const std::string& b,
                                               std::optional<pecs::Millis> since) {
  std::vector<pecs::Message> out;
  for (const auto& m : all) {
    const bool between = (m.from_learner_id == a && m.to_learner_id == b) ||
                         (m.from_learner_id == b && m.to_learner_id == a);
    if (between && (!since || m.sent_at > *since)) out.push_back(m);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& x, const auto& y) { return x.sent_at < y.sent_at; });
  return out;
}

}  // namespace oracle
