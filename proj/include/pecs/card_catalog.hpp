#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pecs {

enum class Category {
  Animals,
  Food,
  Colours,
  Shapes,
  Fruits,
  Emotions,
  Motions,
  Vegetables,
  Core,
};

inline constexpr std::array kAllCategories = {
    Category::Animals, Category::Food,     Category::Colours,
    Category::Shapes,  Category::Fruits,   Category::Emotions,
    Category::Motions, Category::Vegetables, Category::Core,
};

/// Grammatical role of a card inside a sentence strip.
enum class Role {
  Starter,
  Verb,
  Action,
  Adjective,
  Noun,
  Preposition,
};

inline constexpr std::array kAllRoles = {
    Role::Starter, Role::Verb, Role::Action,
    Role::Adjective, Role::Noun, Role::Preposition,
};

std::string_view to_string(Category category) noexcept;
std::string_view to_string(Role role) noexcept;
std::optional<Category> parse_category(std::string_view text) noexcept;
std::optional<Role> parse_role(std::string_view text) noexcept;

/// True when a card of `category` may carry `role`. Content categories map to a
/// single role; Core words carry the sentence scaffolding roles.
bool role_allowed(Category category, Role role) noexcept;

struct Card {
  std::string id;
  std::string word;
  Category category = Category::Core;
  Role role = Role::Noun;
  std::string picture_ref;
  std::optional<std::string> audio_ref;  // absent: tappable but silent

  bool operator==(const Card&) const = default;
};

/// Throws InvalidCard / RoleCategoryMismatch for a card that breaks a field
/// invariant. Uniqueness is a deck-level check.
void validate_card(const Card& card);

/// A relative asset path with no parent traversal and no root or drive prefix.
bool is_safe_relative_path(std::string_view path) noexcept;

/// Immutable ordered card collection. All mutation goes through free
/// functions that return a new Deck.
class Deck {
 public:
  static constexpr int kFormatVersion = 1;

  Deck() = default;
  /// Validates every card and id uniqueness.
  explicit Deck(std::vector<Card> cards, int format_version = kFormatVersion);

  int format_version() const noexcept { return format_version_; }
  const std::vector<Card>& cards() const noexcept { return cards_; }
  std::size_t size() const noexcept { return cards_.size(); }
  bool empty() const noexcept { return cards_.empty(); }

  const Card* find(std::string_view id) const noexcept;
  /// Throws UnknownCardId.
  const Card& at(std::string_view id) const;

  bool operator==(const Deck&) const = default;

 private:
  int format_version_ = kFormatVersion;
  std::vector<Card> cards_;
};

/// Parses a deck interchange document (UTF-8 JSON).
Deck load_deck(std::string_view document);

/// Canonical serialization. Keys appear in interchange order, cards in deck
/// order, and the document ends with a single newline.
std::string export_deck(const Deck& deck);

/// One card in interchange form, keys in canonical order.
nlohmann::ordered_json card_to_json(const Card& card);
/// Throws MalformedDocument, UnknownCategory, UnknownRole and the
/// validate_card errors.
Card card_from_json(const nlohmann::ordered_json& node);

Deck add_custom_card(const Deck& deck, Card card);

struct CardFilter {
  std::optional<Category> category;
  std::optional<Role> role;
};

std::vector<Card> query_cards(const Deck& deck, const CardFilter& filter = {});

/// The deck bundled with the application, covering all eight picture
/// categories plus the Core sentence words.
const Deck& reference_deck();
std::string_view reference_deck_document() noexcept;

}  // namespace pecs
