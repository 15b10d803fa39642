#include "pecs/json_codec.hpp"

#include "pecs/error.hpp"

namespace pecs::codec {

namespace {

const Json& field(const Json& node, const char* key) {
  if (!node.is_object()) fail(ErrorCode::MalformedSnapshot, "expected an object");
  auto it = node.find(key);
  if (it == node.end()) {
    fail(ErrorCode::MalformedSnapshot, std::string("missing field '") + key + "'");
  }
  return *it;
}

template <typename T>
T get(const Json& node, const char* key) {
  try {
    return field(node, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::MalformedSnapshot, std::string("field '") + key + "' has the wrong type");
  }
}

template <typename Enum, typename Parser>
Enum get_enum(const Json& node, const char* key, Parser parse) {
  const auto text = get<std::string>(node, key);
  auto value = parse(text);
  if (!value) {
    fail(ErrorCode::MalformedSnapshot, std::string("field '") + key + "' has unknown value '" +
                                           text + "'");
  }
  return *value;
}

Json phase_history_to_json(const std::vector<PhaseEntry>& history) {
  Json out = Json::array();
  for (const PhaseEntry& e : history) {
    Json entry;
    entry["phase"] = e.phase;
    entry["entered_at"] = e.entered_at;
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace

Json profile_to_json(const LearnerProfile& p) {
  Json node = public_profile(p);
  node["password_digest"] = p.password_digest;
  return node;
}

Json public_profile(const LearnerProfile& p) {
  Json node;
  node["learner_id"] = p.learner_id;
  node["username"] = p.username;
  node["account_role"] = to_string(p.account_role);
  node["demographics"] = Json::object();
  for (const auto& [k, v] : p.demographics) node["demographics"][k] = v;
  node["current_phase"] = p.current_phase;
  node["settings"] = Json{{"background_theme", to_string(p.settings.background_theme)}};
  node["created_at"] = p.created_at;
  node["phase_history"] = phase_history_to_json(p.phase_history);
  node["linked"] = Json::array();
  for (const auto& id : p.linked) node["linked"].push_back(id);
  Json unlocked = Json::array();
  for (Activity a : kAllActivities) {
    if (activity_unlocked(a, p.current_phase)) unlocked.push_back(to_string(a));
  }
  node["unlocked_activities"] = std::move(unlocked);
  return node;
}

LearnerProfile profile_from_json(const Json& node) {
  LearnerProfile p;
  p.learner_id = get<std::string>(node, "learner_id");
  p.username = get<std::string>(node, "username");
  p.password_digest = get<std::string>(node, "password_digest");
  p.account_role = get_enum<AccountRole>(node, "account_role", parse_account_role);
  p.demographics = get<std::map<std::string, std::string>>(node, "demographics");
  p.current_phase = get<int>(node, "current_phase");
  if (p.current_phase < kFirstPhase || p.current_phase > kLastPhase) {
    fail(ErrorCode::MalformedSnapshot, "current_phase out of range for " + p.learner_id);
  }
  p.settings.background_theme =
      get_enum<Theme>(field(node, "settings"), "background_theme", parse_theme);
  p.created_at = get<Millis>(node, "created_at");
  const Json& history = field(node, "phase_history");
  if (!history.is_array() || history.empty()) {
    fail(ErrorCode::MalformedSnapshot, "phase_history must be a non-empty array");
  }
  for (const Json& e : history) {
    p.phase_history.push_back({get<int>(e, "phase"), get<Millis>(e, "entered_at")});
  }
  for (const auto& id : get<std::vector<std::string>>(node, "linked")) p.linked.insert(id);
  return p;
}

Json attempt_to_json(const ActivityAttempt& a) {
  Json node;
  node["attempt_id"] = a.attempt_id;
  node["learner_id"] = a.learner_id;
  node["activity"] = to_string(a.activity);
  node["prompt_descriptor"] = a.prompt_descriptor;
  node["response"] = a.response;
  node["correct"] = a.correct;
  node["stars_awarded"] = a.stars_awarded;
  node["timestamp"] = a.timestamp;
  node["phase"] = a.phase;
  node["category"] = a.category ? Json(to_string(*a.category)) : Json();
  node["retry"] = a.retry;
  return node;
}

ActivityAttempt attempt_from_json(const Json& node) {
  ActivityAttempt a;
  a.attempt_id = get<std::string>(node, "attempt_id");
  a.learner_id = get<std::string>(node, "learner_id");
  a.activity = get_enum<Activity>(node, "activity", parse_activity);
  a.prompt_descriptor = get<std::string>(node, "prompt_descriptor");
  a.response = get<std::string>(node, "response");
  a.correct = get<bool>(node, "correct");
  a.stars_awarded = get<int>(node, "stars_awarded");
  a.timestamp = get<Millis>(node, "timestamp");
  a.phase = get<int>(node, "phase");
  if (!field(node, "category").is_null()) {
    a.category = get_enum<Category>(node, "category", parse_category);
  }
  a.retry = get<bool>(node, "retry");
  return a;
}

Json report_to_json(const ProgressReport& r) {
  Json node;
  node["learner_id"] = r.learner_id;
  node["current_phase"] = r.current_phase;
  node["star_total"] = r.star_total;
  Json per_activity = Json::object();
  for (const auto& [activity, tally] : r.per_activity) {
    per_activity[std::string(to_string(activity))] =
        Json{{"attempts", tally.attempts}, {"correct", tally.correct}, {"accuracy", tally.accuracy}};
  }
  node["per_activity"] = std::move(per_activity);
  Json per_category = Json::object();
  for (const auto& [category, stars] : r.per_category_stars) {
    per_category[std::string(to_string(category))] = stars;
  }
  node["per_category_stars"] = std::move(per_category);
  node["phase_history"] = phase_history_to_json(r.phase_history);
  return node;
}

Json usage_to_json(const UsageModel& model) {
  Json node;
  node["unigram"] = Json::object();
  for (const auto& [id, count] : model.unigram) node["unigram"][id] = count;
  node["bigram"] = Json::array();
  for (const auto& [pair, count] : model.bigram) {
    node["bigram"].push_back(Json::array({pair.first, pair.second, count}));
  }
  return node;
}

UsageModel usage_from_json(const Json& node) {
  UsageModel model;
  model.unigram = get<std::map<std::string, std::uint64_t>>(node, "unigram");
  const Json& bigrams = field(node, "bigram");
  if (!bigrams.is_array()) fail(ErrorCode::MalformedSnapshot, "bigram must be an array");
  for (const Json& row : bigrams) {
    if (!row.is_array() || row.size() != 3 || !row[0].is_string() || !row[1].is_string() ||
        !row[2].is_number_unsigned()) {
      fail(ErrorCode::MalformedSnapshot, "bigram rows are [prev, next, count]");
    }
    model.bigram[{row[0].get<std::string>(), row[1].get<std::string>()}] =
        row[2].get<std::uint64_t>();
  }
  return model;
}

Json message_to_json(const Message& m) {
  Json node;
  node["message_id"] = m.message_id;
  node["from_learner_id"] = m.from_learner_id;
  node["to_learner_id"] = m.to_learner_id;
  node["body"] = m.body;
  node["sent_at"] = m.sent_at;
  return node;
}

Message message_from_json(const Json& node) {
  return {get<std::string>(node, "message_id"), get<std::string>(node, "from_learner_id"),
          get<std::string>(node, "to_learner_id"), get<std::string>(node, "body"),
          get<Millis>(node, "sent_at")};
}

Json task_to_json(const DiscriminationTask& t) {
  Json node;
  node["task_id"] = t.task_id;
  node["target"] = t.target;
  node["target_word"] = t.target_word;
  node["target_category"] = to_string(t.target_category);
  node["options"] = t.options;
  node["n_options"] = t.n_options;
  node["seed"] = t.seed;
  return node;
}

Json question_to_json(const Question& q, bool include_answer) {
  Json node;
  node["question_id"] = q.question_id;
  node["prompt_text"] = q.prompt_text;
  node["prompt_card"] = q.prompt_card;
  node["options"] = q.options;
  if (include_answer) {
    node["correct_index"] = q.correct_index;
    node["answer_word"] = q.answer_word;
  }
  node["phase"] = q.phase;
  node["seed"] = q.seed;
  return node;
}

Json evaluation_to_json(const EvaluationResult& r) {
  Json node;
  node["correct"] = r.correct;
  node["stars_awarded"] = r.stars_awarded;
  node["feedback_text"] = r.feedback_text;
  return node;
}

Json strip_state_to_json(const StripState& s) {
  Json node;
  node["state"] = to_string(s.verdict);
  node["position"] = s.position ? Json(*s.position) : Json();
  node["reason"] = s.reason;
  return node;
}

}  // namespace pecs::codec
