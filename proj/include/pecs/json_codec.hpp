#pragma once

#include <json.hpp>

#include "pecs/activity_engine.hpp"
#include "pecs/learner_model.hpp"
#include "pecs/sentence_engine.hpp"
#include "pecs/store.hpp"

// JSON shapes shared by the snapshot file and the HTTP API. Writers emit keys
// in a fixed order; readers throw MalformedSnapshot on shape errors.
namespace pecs::codec {

using Json = nlohmann::ordered_json;

/// Profile as persisted, including the password digest.
Json profile_to_json(const LearnerProfile& profile);
LearnerProfile profile_from_json(const Json& node);
/// Profile as shown to API clients: no digest.
Json public_profile(const LearnerProfile& profile);

Json attempt_to_json(const ActivityAttempt& attempt);
ActivityAttempt attempt_from_json(const Json& node);

Json report_to_json(const ProgressReport& report);

Json usage_to_json(const UsageModel& model);
UsageModel usage_from_json(const Json& node);

Json message_to_json(const Message& message);
Message message_from_json(const Json& node);

Json task_to_json(const DiscriminationTask& task);
/// Question without its answer, for clients.
Json question_to_json(const Question& question, bool include_answer = false);
Json evaluation_to_json(const EvaluationResult& result);
Json strip_state_to_json(const StripState& state);

}  // namespace pecs::codec
