#include "pecs/service.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <sodium.h>

#include "pecs/activity_engine.hpp"
#include "pecs/error.hpp"
#include "pecs/json_codec.hpp"

namespace pecs {

using codec::Json;

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '+') {
      out += ' ';
    } else if (in[i] == '%' && i + 2 < in.size() && hex_value(in[i + 1]) >= 0 && hex_value(in[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(in[i + 1]) * 16 + hex_value(in[i + 2]));
      i += 2;
    } else {
      out += in[i];
    }
  }
  return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(sep, start);
    if (end == std::string_view::npos) end = text.size();
    if (end > start) parts.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Response json_response(int status, const Json& body) { return {status, body.dump()}; }

Response error_response(ErrorCode code, const std::string& message) {
  Json body;
  body["error"] = Json{{"code", to_string(code)}, {"message", message}};
  return json_response(http_status(code), body);
}

[[noreturn]] void bad_request(const std::string& message) { fail(ErrorCode::BadRequest, message); }

Json parse_body(const Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    Json body = Json::parse(req.body);
    if (!body.is_object()) bad_request("request body must be a JSON object");
    return body;
  } catch (const nlohmann::json::parse_error&) {
    bad_request("request body is not valid JSON");
  }
}

std::string body_string(const Json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    bad_request(std::string("'") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::optional<std::string> body_optional_string(const Json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) bad_request(std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

std::optional<std::int64_t> body_optional_int(const Json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) bad_request(std::string("'") + key + "' must be an integer");
  return it->get<std::int64_t>();
}

std::vector<std::string> body_string_list(const Json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_array()) {
    bad_request(std::string("'") + key + "' must be an array of strings");
  }
  std::vector<std::string> out;
  for (const Json& v : *it) {
    if (!v.is_string()) bad_request(std::string("'") + key + "' must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::optional<std::string> query_param(const Request& req, const std::string& key) {
  auto it = req.query.find(key);
  if (it == req.query.end()) return std::nullopt;
  return it->second;
}

std::int64_t parse_int(const std::string& text, const char* what) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    bad_request(std::string("'") + what + "' must be an integer");
  }
  return value;
}

std::int64_t random_seed() {
  return static_cast<std::int64_t>(randombytes_uniform(0x7fffffffU));
}

Category category_arg(const std::string& text) {
  auto c = parse_category(text);
  if (!c) fail(ErrorCode::UnknownCategory, "unknown category '" + text + "'");
  return *c;
}

// Canonical prompt descriptors: regenerating a task from its descriptor
// reproduces it exactly, so clients never hold the answer key.
std::string differentiate_descriptor(const std::string& deck, Category category, int n,
                                     std::int64_t seed) {
  Json d;
  d["deck"] = deck;
  d["category"] = to_string(category);
  d["n_options"] = n;
  d["seed"] = seed;
  return d.dump();
}

std::string qa_descriptor(const std::string& deck, int phase, std::int64_t seed) {
  Json d;
  d["deck"] = deck;
  d["phase"] = phase;
  d["seed"] = seed;
  return d.dump();
}

class Handler {
 public:
  Handler(Store& store, const Service::SeedSource& seeds, const Request& req)
      : store_(store), seeds_(seeds), req_(req), segments_(split(req.path, '/')) {}

  Response dispatch() {
    const std::string& m = req_.method;
    const std::size_t n = segments_.size();
    const std::string root = n > 0 ? segments_[0] : "";

    if (m == "POST" && is({"register"})) return register_account();
    if (m == "POST" && is({"login"})) return login();

    caller_ = authenticate();
    if (m == "POST" && is({"logout"})) return logout();
    if (m == "GET" && is({"decks"})) return list_decks();
    if (m == "GET" && is({"cards"})) return list_cards();
    if (m == "POST" && is({"cards"})) return add_card();
    if (m == "POST" && is({"strips", "validate"})) return validate_strip_request();
    if (m == "GET" && is({"predict"})) return predict();
    if (m == "POST" && is({"tasks", "differentiate"})) return differentiate_task();
    if (m == "POST" && is({"tasks", "qa"})) return qa_task();
    if (m == "POST" && is({"attempts"})) return attempt();
    if (m == "GET" && root == "progress" && n == 2) return progress(segments_[1]);
    if (m == "GET" && root == "profile" && n == 2) return profile(segments_[1]);
    if (m == "PUT" && root == "settings" && n == 2) return settings(segments_[1]);
    if (m == "POST" && is({"messages"})) return send_message();
    if (m == "GET" && is({"messages"})) return list_messages();
    if (m == "POST" && is({"links"})) return link();
    fail(ErrorCode::NotFound, "no route for " + m + " " + req_.path);
  }

 private:
  bool is(std::initializer_list<const char*> path) const {
    if (path.size() != segments_.size()) return false;
    return std::equal(path.begin(), path.end(), segments_.begin());
  }

  std::string authenticate() {
    auto it = req_.headers.find("authorization");
    if (it == req_.headers.end() || it->second.rfind("Bearer ", 0) != 0) {
      fail(ErrorCode::AuthFailed, "missing bearer token");
    }
    return store_.authenticate(it->second.substr(7));
  }

  std::string deck_id(const std::optional<std::string>& requested) const {
    return requested.value_or(kDefaultDeckId);
  }

  // Unknown ids and unlinked ids look the same to the caller.
  void require_view(const std::string& subject) const {
    if (!store_.may_view(caller_, subject)) {
      fail(ErrorCode::NotLinked, "no link to learner '" + subject + "'");
    }
  }

  Response register_account() {
    const Json body = parse_body(req_);
    const std::string role_text = body_optional_string(body, "role").value_or("CHILD");
    auto role = parse_account_role(role_text);
    if (!role) fail(ErrorCode::UnknownAccountRole, "unknown account role '" + role_text + "'");
    std::map<std::string, std::string> demographics;
    if (auto it = body.find("demographics"); it != body.end() && !it->is_null()) {
      if (!it->is_object()) bad_request("'demographics' must be an object");
      for (const auto& [k, v] : it->items()) {
        demographics[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    LearnerProfile p = store_.register_learner(body_string(body, "username"),
                                               body_string(body, "password"), *role,
                                               std::move(demographics));
    return json_response(201, Json{{"profile", codec::public_profile(p)}});
  }

  Response login() {
    const Json body = parse_body(req_);
    auto [session, profile] =
        store_.login(body_string(body, "username"), body_string(body, "password"));
    Json out;
    out["token"] = session.token;
    out["expires_at"] = session.expires_at;
    out["learner_id"] = session.learner_id;
    out["profile"] = codec::public_profile(profile);
    return json_response(200, out);
  }

  Response logout() {
    store_.logout(req_.headers.at("authorization").substr(7));
    return json_response(200, Json::object());
  }

  Response list_decks() {
    Json decks = Json::array();
    for (const std::string& id : store_.deck_ids()) {
      const Deck d = store_.deck(id);
      decks.push_back(Json{{"deck_id", id},
                           {"format_version", d.format_version()},
                           {"card_count", d.size()}});
    }
    return json_response(200, Json{{"decks", decks}});
  }

  Response list_cards() {
    const std::string id = deck_id(query_param(req_, "deck"));
    const Deck d = store_.deck(id);
    CardFilter filter;
    bool impossible = false;
    if (auto c = query_param(req_, "category"); c && !c->empty()) {
      filter.category = parse_category(*c);
      impossible = impossible || !filter.category;
    }
    if (auto r = query_param(req_, "role"); r && !r->empty()) {
      filter.role = parse_role(*r);
      impossible = impossible || !filter.role;
    }
    Json cards = Json::array();
    if (!impossible) {
      for (const Card& card : query_cards(d, filter)) cards.push_back(card_to_json(card));
    }
    return json_response(200, Json{{"deck_id", id}, {"cards", cards}});
  }

  Response add_card() {
    const Json body = parse_body(req_);
    const std::string id = deck_id(body_optional_string(body, "deck"));
    auto card_node = body.find("card");
    if (card_node == body.end()) bad_request("'card' is required");
    Card card;
    try {
      card = card_from_json(*card_node);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MalformedDocument) bad_request(e.what());
      throw;
    }
    const Deck updated = store_.add_card(id, card);
    return json_response(201, Json{{"deck_id", id},
                                   {"card", card_to_json(card)},
                                   {"card_count", updated.size()}});
  }

  Response validate_strip_request() {
    const Json body = parse_body(req_);
    const Deck d = store_.deck(deck_id(body_optional_string(body, "deck")));
    SentenceStrip strip(d, body_string_list(body, "card_ids"));
    Json out = codec::strip_state_to_json(strip.state());
    out["card_ids"] = strip.card_ids();
    out["text"] = render_strip_text(d, strip);
    out["audio"] = audio_sequence(d, strip);
    return json_response(200, out);
  }

  Response predict() {
    const Deck d = store_.deck(deck_id(query_param(req_, "deck")));
    const std::vector<std::string> prefix = split(query_param(req_, "prefix").value_or(""), ',');
    const std::int64_t k = parse_int(query_param(req_, "k").value_or("5"), "k");
    if (k < 1) fail(ErrorCode::InvalidArgument, "k must be positive");
    const UsageModel model = store_.usage_model(caller_);
    Json suggestions = Json::array();
    for (const Suggestion& s : predict_next(d, prefix, model, static_cast<std::size_t>(k))) {
      suggestions.push_back(
          Json{{"card_id", s.card_id}, {"word", d.at(s.card_id).word}, {"score", s.score}});
    }
    return json_response(200, Json{{"prefix", prefix}, {"suggestions", suggestions}});
  }

  Response differentiate_task() {
    const Json body = parse_body(req_);
    const std::string id = deck_id(body_optional_string(body, "deck"));
    const Category category = category_arg(body_string(body, "category"));
    const auto n = body_optional_int(body, "n_options").value_or(2);
    const auto seed = body_optional_int(body, "seed").value_or(seeds_());
    DiscriminationTask task =
        gen_discrimination_task(store_.deck(id), category, static_cast<int>(n), seed);
    Json out = codec::task_to_json(task);
    out["deck"] = id;
    return json_response(200, out);
  }

  int question_phase(const Json& body) const {
    const int current = store_.profile(caller_).current_phase;
    const auto phase = body_optional_int(body, "phase").value_or(current);
    if (phase < kFirstPhase || phase > kLastPhase) {
      fail(ErrorCode::InvalidArgument, "phase must be 1..4");
    }
    return static_cast<int>(phase);
  }

  Response qa_task() {
    const Json body = parse_body(req_);
    const std::string id = deck_id(body_optional_string(body, "deck"));
    const int phase = question_phase(body);
    const auto seed = body_optional_int(body, "seed").value_or(seeds_());
    Question q = gen_question(store_.deck(id), phase, seed);
    Json out = codec::question_to_json(q);
    out["deck"] = id;
    return json_response(200, out);
  }

  Response attempt() {
    const Json body = parse_body(req_);
    const std::string activity_text = body_string(body, "activity");
    auto activity = parse_activity(activity_text);
    if (!activity) fail(ErrorCode::InvalidArgument, "unknown activity '" + activity_text + "'");

    ActivityAttempt a;
    a.activity = *activity;
    EvaluationResult evaluation;
    Json extra = Json::object();

    switch (*activity) {
      case Activity::SingleWord: {
        const std::string id = deck_id(body_optional_string(body, "deck"));
        const Deck d = store_.deck(id);
        const TapEvent tap = record_single_word_tap(d, body_string(body, "card_id"));
        a.prompt_descriptor = Json{{"deck", id}, {"card_id", tap.card_id}}.dump();
        a.response = tap.card_id;
        a.correct = true;
        a.category = d.at(tap.card_id).category;
        evaluation = {true, 0, ""};
        extra["tap"] = Json{{"card_id", tap.card_id},
                            {"audio_ref", tap.audio_ref ? Json(*tap.audio_ref) : Json()},
                            {"word", tap.word}};
        break;
      }
      case Activity::Differentiate: {
        auto task_node = body.find("task");
        if (task_node == body.end() || !task_node->is_object()) bad_request("'task' is required");
        const std::string id = deck_id(body_optional_string(*task_node, "deck"));
        const Category category = category_arg(body_string(*task_node, "category"));
        const auto n = static_cast<int>(body_optional_int(*task_node, "n_options").value_or(2));
        const auto seed = body_optional_int(*task_node, "seed");
        if (!seed) bad_request("'task.seed' is required");
        const DiscriminationTask task = gen_discrimination_task(store_.deck(id), category, n, *seed);
        const std::string chosen = body_string(body, "chosen");
        evaluation = evaluate_discrimination(task, chosen);
        a.prompt_descriptor = differentiate_descriptor(id, category, n, *seed);
        a.response = chosen;
        a.correct = evaluation.correct;
        a.category = category;
        break;
      }
      case Activity::QA: {
        auto q_node = body.find("question");
        if (q_node == body.end() || !q_node->is_object()) bad_request("'question' is required");
        const std::string id = deck_id(body_optional_string(*q_node, "deck"));
        const int phase = question_phase(*q_node);
        const auto seed = body_optional_int(*q_node, "seed");
        if (!seed) bad_request("'question.seed' is required");
        const auto chosen = body_optional_int(body, "chosen_index");
        if (!chosen) bad_request("'chosen_index' is required");
        const Deck d = store_.deck(id);
        const Question q = gen_question(d, phase, *seed);
        if (*chosen < 0) fail(ErrorCode::IndexOutOfRange, "option index out of range");
        evaluation = evaluate_answer(q, static_cast<std::size_t>(*chosen));
        a.prompt_descriptor = qa_descriptor(id, phase, *seed);
        a.response = std::to_string(*chosen);
        a.correct = evaluation.correct;
        a.category = d.at(q.options[q.correct_index]).category;
        const auto ledger = store_.ledger(caller_);
        a.retry = std::any_of(ledger.begin(), ledger.end(), [&](const ActivityAttempt& prior) {
          return prior.activity == Activity::QA && prior.prompt_descriptor == a.prompt_descriptor;
        });
        if (a.retry && evaluation.correct) {
          evaluation.stars_awarded = 0;
          evaluation.feedback_text = "Well done! Stars are earned on the first try.";
        }
        break;
      }
      case Activity::PecsBook: {
        const std::string id = deck_id(body_optional_string(body, "deck"));
        const Deck d = store_.deck(id);
        const std::vector<std::string> ids = body_string_list(body, "card_ids");
        evaluation = evaluate_strip_submission(d, ids);
        a.prompt_descriptor = Json{{"deck", id}}.dump();
        a.response = Json(ids).dump();
        a.correct = evaluation.correct;
        if (!ids.empty()) a.category = d.at(ids.back()).category;
        break;
      }
    }
    a.stars_awarded = expected_stars(a.activity, a.correct, a.retry);

    const ProgressReport report = store_.record_attempt(caller_, a);
    const auto ledger = store_.ledger(caller_);
    Json out;
    out["evaluation"] = codec::evaluation_to_json(evaluation);
    out["attempt"] = codec::attempt_to_json(ledger.back());
    out["progress"] = codec::report_to_json(report);
    for (auto& [k, v] : extra.items()) out[k] = v;
    return json_response(200, out);
  }

  Response progress(const std::string& learner_id) {
    require_view(learner_id);
    return json_response(200, codec::report_to_json(store_.progress(learner_id)));
  }

  Response profile(const std::string& learner_id) {
    require_view(learner_id);
    return json_response(200, Json{{"profile", codec::public_profile(store_.profile(learner_id))}});
  }

  Response settings(const std::string& learner_id) {
    require_view(learner_id);
    const Json body = parse_body(req_);
    const std::string theme_text = body_string(body, "background_theme");
    auto theme = parse_theme(theme_text);
    if (!theme) fail(ErrorCode::UnknownTheme, "unknown theme '" + theme_text + "'");
    const LearnerProfile p = store_.update_settings(learner_id, Settings{*theme});
    return json_response(200, Json{{"profile", codec::public_profile(p)}});
  }

  Response send_message() {
    const Json body = parse_body(req_);
    const Message m = store_.send_message(caller_, body_string(body, "to"),
                                          body_string(body, "body"));
    return json_response(201, codec::message_to_json(m));
  }

  Response list_messages() {
    auto peer = query_param(req_, "peer");
    if (!peer || peer->empty()) bad_request("'peer' is required");
    std::optional<Millis> since;
    if (auto s = query_param(req_, "since"); s && !s->empty()) since = parse_int(*s, "since");
    Json messages = Json::array();
    for (const Message& m : store_.list_messages(caller_, *peer, since)) {
      messages.push_back(codec::message_to_json(m));
    }
    return json_response(200, Json{{"messages", messages}});
  }

  Response link() {
    const Json body = parse_body(req_);
    if (store_.profile(caller_).account_role == AccountRole::Child) {
      fail(ErrorCode::Forbidden, "only THERAPIST or PARENT accounts can link a child");
    }
    const std::string child = store_.link_child(caller_, body_string(body, "child_username"),
                                                body_string(body, "child_password"));
    return json_response(200, Json{{"child_id", child}, {"adult_id", caller_}});
  }

  Store& store_;
  const Service::SeedSource& seeds_;
  const Request& req_;
  std::vector<std::string> segments_;
  std::string caller_;
};

}  // namespace

Request Request::make(std::string method, std::string_view target, std::string body,
                      std::map<std::string, std::string> headers) {
  Request req;
  req.method = std::move(method);
  const std::size_t q = target.find('?');
  req.path = percent_decode(target.substr(0, q));
  if (q != std::string_view::npos) {
    for (const std::string& pair : split(target.substr(q + 1), '&')) {
      const std::size_t eq = pair.find('=');
      if (eq == std::string::npos) {
        req.query.emplace(percent_decode(pair), "");
      } else {
        req.query.emplace(percent_decode(std::string_view(pair).substr(0, eq)),
                          percent_decode(std::string_view(pair).substr(eq + 1)));
      }
    }
  }
  for (auto& [k, v] : headers) req.headers[to_lower(k)] = std::move(v);
  req.body = std::move(body);
  return req;
}

Request& Request::bearer(const std::string& token) {
  headers["authorization"] = "Bearer " + token;
  return *this;
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::AuthFailed:
      return 401;
    case ErrorCode::NotLinked:
    case ErrorCode::Forbidden:
    case ErrorCode::ActivityLocked:
      return 403;
    case ErrorCode::UnknownDeck:
    case ErrorCode::UnknownCardId:
    case ErrorCode::UnknownLearner:
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::UsernameTaken:
    case ErrorCode::DuplicateCardId:
      return 409;
    case ErrorCode::RateLimited:
      return 429;
    case ErrorCode::MalformedSnapshot:
    case ErrorCode::VersionUnsupported:
      return 500;
    default:
      return 400;
  }
}

Service::Service(Store& store, SeedSource seeds) : store_(store), seeds_(std::move(seeds)) {
  if (!seeds_) {
    if (sodium_init() < 0) throw std::runtime_error("libsodium failed to initialise");
    seeds_ = random_seed;
  }
}

Response Service::handle_request(const Request& request) {
  try {
    return Handler(store_, seeds_, request).dispatch();
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const std::exception& e) {
    Json body;
    body["error"] = Json{{"code", "Internal"}, {"message", e.what()}};
    return json_response(500, body);
  }
}

}  // namespace pecs
