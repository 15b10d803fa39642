#include "pecs/card_catalog.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "pecs/error.hpp"
#include "reference_deck_data.hpp"

namespace pecs {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Category category) noexcept {
  switch (category) {
    case Category::Animals: return "Animals";
    case Category::Food: return "Food";
    case Category::Colours: return "Colours";
    case Category::Shapes: return "Shapes";
    case Category::Fruits: return "Fruits";
    case Category::Emotions: return "Emotions";
    case Category::Motions: return "Motions";
    case Category::Vegetables: return "Vegetables";
    case Category::Core: return "Core";
  }
  return "?";
}

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::Starter: return "STARTER";
    case Role::Verb: return "VERB";
    case Role::Action: return "ACTION";
    case Role::Adjective: return "ADJECTIVE";
    case Role::Noun: return "NOUN";
    case Role::Preposition: return "PREPOSITION";
  }
  return "?";
}

std::optional<Category> parse_category(std::string_view text) noexcept {
  for (Category c : kAllCategories) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::optional<Role> parse_role(std::string_view text) noexcept {
  for (Role r : kAllRoles) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

bool role_allowed(Category category, Role role) noexcept {
  switch (category) {
    case Category::Animals:
    case Category::Food:
    case Category::Fruits:
    case Category::Vegetables:
    case Category::Shapes:
      return role == Role::Noun;
    case Category::Colours:
    case Category::Emotions:
      return role == Role::Adjective;
    case Category::Motions:
      return role == Role::Action;
    case Category::Core:
      return role == Role::Starter || role == Role::Verb ||
             role == Role::Preposition;
  }
  return false;
}

bool is_safe_relative_path(std::string_view path) noexcept {
  if (path.empty() || path.front() == '/' || path.front() == '\\') return false;
  if (path.size() >= 2 && path[1] == ':') return false;  // C:foo
  if (path.find('\\') != std::string_view::npos) return false;
  if (path.find('\0') != std::string_view::npos) return false;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    std::string_view segment = path.substr(start, end - start);
    if (segment == "..") return false;
    start = end + 1;
  }
  return true;
}

void validate_card(const Card& card) {
  if (card.id.empty()) fail(ErrorCode::InvalidCard, "card id must be non-empty");
  if (card.word.empty()) {
    fail(ErrorCode::InvalidCard, "card '" + card.id + "' has an empty word");
  }
  if (!role_allowed(card.category, card.role)) {
    fail(ErrorCode::RoleCategoryMismatch,
         "card '" + card.id + "': role " + std::string(to_string(card.role)) +
             " is not allowed in category " +
             std::string(to_string(card.category)));
  }
  if (!is_safe_relative_path(card.picture_ref)) {
    fail(ErrorCode::InvalidCard,
         "card '" + card.id + "': picture must be a relative path");
  }
  if (card.audio_ref && !is_safe_relative_path(*card.audio_ref)) {
    fail(ErrorCode::InvalidCard,
         "card '" + card.id + "': audio must be a relative path");
  }
}

Deck::Deck(std::vector<Card> cards, int format_version)
    : format_version_(format_version), cards_(std::move(cards)) {
  if (format_version_ < 1) {
    fail(ErrorCode::MalformedDocument, "format_version must be positive");
  }
  std::unordered_set<std::string_view> seen;
  for (const Card& card : cards_) {
    validate_card(card);
    if (!seen.insert(card.id).second) {
      fail(ErrorCode::DuplicateCardId, "duplicate card id '" + card.id + "'");
    }
  }
}

const Card* Deck::find(std::string_view id) const noexcept {
  auto it = std::find_if(cards_.begin(), cards_.end(),
                         [&](const Card& c) { return c.id == id; });
  return it == cards_.end() ? nullptr : &*it;
}

const Card& Deck::at(std::string_view id) const {
  if (const Card* card = find(id)) return *card;
  fail(ErrorCode::UnknownCardId, "unknown card id '" + std::string(id) + "'");
}

namespace {

const std::set<std::string, std::less<>> kCardKeys = {
    "id", "word", "category", "role", "picture", "audio"};

std::string required_string(const ordered_json& node, const char* key,
                            const std::string& card_label) {
  auto it = node.find(key);
  if (it == node.end() || !it->is_string()) {
    fail(ErrorCode::MalformedDocument,
         "card " + card_label + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

Card card_from_json_at(const ordered_json& node, std::size_t index) {
  std::string label = "#" + std::to_string(index);
  if (!node.is_object()) {
    fail(ErrorCode::MalformedDocument, "card " + label + " is not an object");
  }
  if (auto it = node.find("id"); it != node.end() && it->is_string()) {
    label = "'" + it->get<std::string>() + "'";
  }
  for (const auto& [key, value] : node.items()) {
    if (!kCardKeys.contains(key)) {
      fail(ErrorCode::MalformedDocument,
           "card " + label + ": unexpected field '" + key + "'");
    }
  }

  Card card;
  card.id = required_string(node, "id", label);
  card.word = required_string(node, "word", label);
  const std::string category = required_string(node, "category", label);
  const std::string role = required_string(node, "role", label);
  card.picture_ref = required_string(node, "picture", label);

  if (auto it = node.find("audio"); it != node.end() && !it->is_null()) {
    if (!it->is_string()) {
      fail(ErrorCode::MalformedDocument,
           "card " + label + ": field 'audio' must be a string or null");
    }
    card.audio_ref = it->get<std::string>();
  }

  auto parsed_category = parse_category(category);
  if (!parsed_category) {
    fail(ErrorCode::UnknownCategory,
         "card " + label + ": unknown category '" + category + "'");
  }
  auto parsed_role = parse_role(role);
  if (!parsed_role) {
    fail(ErrorCode::UnknownRole,
         "card " + label + ": unknown role '" + role + "'");
  }
  card.category = *parsed_category;
  card.role = *parsed_role;
  return card;
}

}  // namespace

ordered_json card_to_json(const Card& card) {
  ordered_json node;
  node["id"] = card.id;
  node["word"] = card.word;
  node["category"] = to_string(card.category);
  node["role"] = to_string(card.role);
  node["picture"] = card.picture_ref;
  node["audio"] = card.audio_ref ? ordered_json(*card.audio_ref) : ordered_json();
  return node;
}

Card card_from_json(const ordered_json& node) {
  Card card = card_from_json_at(node, 0);
  validate_card(card);
  return card;
}

Deck load_deck(std::string_view document) {
  ordered_json root;
  try {
    root = ordered_json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::MalformedDocument, std::string("deck is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) {
    fail(ErrorCode::MalformedDocument, "deck document must be a JSON object");
  }
  for (const auto& [key, value] : root.items()) {
    if (key != "format_version" && key != "cards") {
      fail(ErrorCode::MalformedDocument, "unexpected top-level field '" + key + "'");
    }
  }
  auto version = root.find("format_version");
  if (version == root.end() || !version->is_number_integer() ||
      version->get<long long>() < 1) {
    fail(ErrorCode::MalformedDocument, "format_version must be a positive integer");
  }
  if (version->get<long long>() > Deck::kFormatVersion) {
    fail(ErrorCode::MalformedDocument,
         "unsupported format_version " + std::to_string(version->get<long long>()));
  }
  auto cards_node = root.find("cards");
  if (cards_node == root.end() || !cards_node->is_array()) {
    fail(ErrorCode::MalformedDocument, "'cards' must be an array");
  }

  std::vector<Card> cards;
  cards.reserve(cards_node->size());
  for (std::size_t i = 0; i < cards_node->size(); ++i) {
    cards.push_back(card_from_json_at((*cards_node)[i], i));
  }
  return Deck(std::move(cards), static_cast<int>(version->get<long long>()));
}

std::string export_deck(const Deck& deck) {
  ordered_json root;
  root["format_version"] = deck.format_version();
  root["cards"] = ordered_json::array();
  for (const Card& card : deck.cards()) root["cards"].push_back(card_to_json(card));
  return root.dump(2) + "\n";
}

Deck add_custom_card(const Deck& deck, Card card) {
  validate_card(card);
  if (deck.find(card.id)) {
    fail(ErrorCode::DuplicateCardId, "duplicate card id '" + card.id + "'");
  }
  std::vector<Card> cards = deck.cards();
  cards.push_back(std::move(card));
  return Deck(std::move(cards), deck.format_version());
}

std::vector<Card> query_cards(const Deck& deck, const CardFilter& filter) {
  std::vector<Card> out;
  for (const Card& card : deck.cards()) {
    if (filter.category && card.category != *filter.category) continue;
    if (filter.role && card.role != *filter.role) continue;
    out.push_back(card);
  }
  return out;
}

std::string_view reference_deck_document() noexcept {
  return detail::kReferenceDeckJson;
}

const Deck& reference_deck() {
  static const Deck deck = load_deck(reference_deck_document());
  return deck;
}

}  // namespace pecs
