#include "pecs/learner_model.hpp"

#include <algorithm>
#include <span>

#include <sodium.h>

#include "pecs/error.hpp"

namespace pecs {

std::string_view to_string(AccountRole role) noexcept {
  switch (role) {
    case AccountRole::Child: return "CHILD";
    case AccountRole::Therapist: return "THERAPIST";
    case AccountRole::Parent: return "PARENT";
  }
  return "?";
}

std::string_view to_string(Theme theme) noexcept {
  switch (theme) {
    case Theme::Light: return "LIGHT";
    case Theme::Dark: return "DARK";
    case Theme::HighContrast: return "HIGH_CONTRAST";
  }
  return "?";
}

std::optional<AccountRole> parse_account_role(std::string_view text) noexcept {
  for (AccountRole r : {AccountRole::Child, AccountRole::Therapist, AccountRole::Parent}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

std::optional<Theme> parse_theme(std::string_view text) noexcept {
  for (Theme t : {Theme::Light, Theme::Dark, Theme::HighContrast}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::optional<Activity> gate_activity(int phase) noexcept {
  switch (phase) {
    case 1: return Activity::SingleWord;
    case 2: return Activity::Differentiate;
    case 3: return Activity::PecsBook;
    default: return std::nullopt;
  }
}

int unlock_phase(Activity activity) noexcept {
  switch (activity) {
    case Activity::SingleWord: return 1;
    case Activity::Differentiate: return 2;
    case Activity::PecsBook: return 3;
    case Activity::QA: return 4;
  }
  return kLastPhase;
}

bool activity_unlocked(Activity activity, int phase) noexcept {
  return phase >= unlock_phase(activity);
}

int expected_stars(Activity activity, bool correct, bool retry) noexcept {
  if (activity == Activity::SingleWord || retry) return 0;
  return correct ? 1 : 0;
}

namespace {

void ensure_sodium() {
  static const int status = sodium_init();
  if (status < 0) throw std::runtime_error("libsodium failed to initialise");
}

bool is_adult(const LearnerProfile& p) { return p.account_role != AccountRole::Child; }

}  // namespace

std::string hash_password(const std::string& password, PasswordCost cost) {
  ensure_sodium();
  const auto ops = cost == PasswordCost::Interactive ? crypto_pwhash_OPSLIMIT_INTERACTIVE
                                                     : crypto_pwhash_OPSLIMIT_MIN;
  const auto mem = cost == PasswordCost::Interactive ? crypto_pwhash_MEMLIMIT_INTERACTIVE
                                                     : crypto_pwhash_MEMLIMIT_MIN;
  char out[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str(out, password.data(), password.size(), ops, mem) != 0) {
    throw std::runtime_error("password hashing ran out of memory");
  }
  return std::string(out);
}

bool verify_password(const std::string& digest, const std::string& password) {
  ensure_sodium();
  return crypto_pwhash_str_verify(digest.c_str(), password.data(), password.size()) == 0;
}

ProgressReport build_report(const LearnerProfile& profile,
                            const std::vector<ActivityAttempt>& ledger) {
  ProgressReport report;
  report.learner_id = profile.learner_id;
  report.current_phase = profile.current_phase;
  report.phase_history = profile.phase_history;
  for (Activity a : kAllActivities) report.per_activity[a] = {};
  for (Category c : kAllCategories) report.per_category_stars[c] = 0;

  for (const ActivityAttempt& attempt : ledger) {
    report.star_total += static_cast<std::uint64_t>(attempt.stars_awarded);
    ActivityTally& tally = report.per_activity[attempt.activity];
    ++tally.attempts;
    if (attempt.correct) ++tally.correct;
    if (attempt.category) {
      report.per_category_stars[*attempt.category] +=
          static_cast<std::uint64_t>(attempt.stars_awarded);
    }
  }
  for (auto& [activity, tally] : report.per_activity) {
    tally.accuracy = tally.attempts == 0 ? 0.0
                                         : static_cast<double>(tally.correct) /
                                               static_cast<double>(tally.attempts);
  }
  return report;
}

LearnerRegistry::LearnerRegistry(RegistryOptions options, Clock clock)
    : options_(options), clock_(std::move(clock)) {
  dummy_digest_ = hash_password("not-a-real-password", options_.password_cost);
}

void LearnerRegistry::check_registration(const std::string& username,
                                         const std::string& password) {
  if (username.empty()) fail(ErrorCode::InvalidArgument, "username must be non-empty");
  if (password.size() < kMinPasswordLength) {
    fail(ErrorCode::WeakPassword, "password must have at least " +
                                      std::to_string(kMinPasswordLength) + " characters");
  }
}

LearnerProfile LearnerRegistry::register_learner(
    const std::string& username, const std::string& password, AccountRole role,
    std::map<std::string, std::string> demographics) {
  check_registration(username, password);
  if (by_username_.contains(username)) {
    fail(ErrorCode::UsernameTaken, "username '" + username + "' is taken");
  }
  return add_learner(username, hash_password(password, options_.password_cost), role,
                     std::move(demographics));
}

LearnerProfile LearnerRegistry::add_learner(const std::string& username,
                                            std::string password_digest, AccountRole role,
                                            std::map<std::string, std::string> demographics) {
  if (username.empty()) fail(ErrorCode::InvalidArgument, "username must be non-empty");
  if (by_username_.contains(username)) {
    fail(ErrorCode::UsernameTaken, "username '" + username + "' is taken");
  }
  LearnerProfile profile;
  profile.learner_id = "learner-" + std::to_string(next_learner_number_++);
  profile.username = username;
  profile.password_digest = std::move(password_digest);
  profile.account_role = role;
  profile.demographics = std::move(demographics);
  profile.created_at = clock_();
  profile.phase_history.push_back({kFirstPhase, profile.created_at});

  by_username_[username] = profile.learner_id;
  ledgers_[profile.learner_id];
  auto [it, inserted] = profiles_.emplace(profile.learner_id, std::move(profile));
  return it->second;
}

std::optional<std::pair<std::string, std::string>> LearnerRegistry::credentials(
    const std::string& username) const {
  auto it = by_username_.find(username);
  if (it == by_username_.end()) return std::nullopt;
  return std::make_pair(it->second, profiles_.at(it->second).password_digest);
}

std::string LearnerRegistry::verify_credentials(const std::string& username,
                                                const std::string& password) const {
  auto creds = credentials(username);
  // Unknown users still pay for one verification so timing does not reveal
  // which usernames exist.
  const bool ok = verify_password(creds ? creds->second : dummy_digest_, password);
  if (!creds || !ok) fail(ErrorCode::AuthFailed, "invalid username or password");
  return creds->first;
}

const LearnerProfile& LearnerRegistry::profile(const std::string& learner_id) const {
  auto it = profiles_.find(learner_id);
  if (it == profiles_.end()) fail(ErrorCode::UnknownLearner, "unknown learner '" + learner_id + "'");
  return it->second;
}

LearnerProfile& LearnerRegistry::mutable_profile(const std::string& learner_id) {
  auto it = profiles_.find(learner_id);
  if (it == profiles_.end()) fail(ErrorCode::UnknownLearner, "unknown learner '" + learner_id + "'");
  return it->second;
}

const LearnerProfile* LearnerRegistry::find_by_username(const std::string& username) const {
  auto it = by_username_.find(username);
  return it == by_username_.end() ? nullptr : &profiles_.at(it->second);
}

const std::vector<ActivityAttempt>& LearnerRegistry::ledger(const std::string& learner_id) const {
  profile(learner_id);
  return ledgers_.at(learner_id);
}

Millis LearnerRegistry::last_event(const std::string& learner_id) const {
  const LearnerProfile& p = profiles_.at(learner_id);
  Millis last = p.created_at;
  if (!p.phase_history.empty()) last = std::max(last, p.phase_history.back().entered_at);
  const auto& ledger = ledgers_.at(learner_id);
  if (!ledger.empty()) last = std::max(last, ledger.back().timestamp);
  return last;
}

Millis LearnerRegistry::next_timestamp(const std::string& learner_id) const {
  return std::max(clock_(), last_event(learner_id) + 1);
}

ProgressReport LearnerRegistry::record_attempt(const std::string& learner_id,
                                               ActivityAttempt attempt) {
  LearnerProfile& p = mutable_profile(learner_id);
  if (options_.enforce_phase_gates && !activity_unlocked(attempt.activity, p.current_phase)) {
    fail(ErrorCode::ActivityLocked,
         std::string(to_string(attempt.activity)) + " unlocks at phase " +
             std::to_string(unlock_phase(attempt.activity)));
  }
  if (attempt.stars_awarded != expected_stars(attempt.activity, attempt.correct, attempt.retry)) {
    fail(ErrorCode::InconsistentAttempt, "stars_awarded does not match the outcome");
  }
  attempt.learner_id = learner_id;
  attempt.attempt_id = learner_id + "-a" + std::to_string(ledgers_.at(learner_id).size() + 1);
  attempt.timestamp = next_timestamp(learner_id);
  attempt.phase = p.current_phase;
  apply(p, std::move(attempt));
  return build_report(p, ledgers_.at(learner_id));
}

void LearnerRegistry::replay_attempt(const ActivityAttempt& attempt) {
  LearnerProfile& p = mutable_profile(attempt.learner_id);
  if (attempt.stars_awarded != expected_stars(attempt.activity, attempt.correct, attempt.retry)) {
    fail(ErrorCode::InconsistentAttempt, "replayed attempt has inconsistent stars");
  }
  if (attempt.timestamp <= last_event(attempt.learner_id)) {
    fail(ErrorCode::InconsistentAttempt, "replayed attempt is not newer than the ledger");
  }
  apply(p, attempt);
}

void LearnerRegistry::apply(LearnerProfile& profile, ActivityAttempt attempt) {
  ledgers_.at(profile.learner_id).push_back(std::move(attempt));
  advance_if_ready(profile);
}

PhaseCheck LearnerRegistry::advance_if_ready(LearnerProfile& profile) {
  const int phase = profile.current_phase;
  const auto gate = gate_activity(phase);
  if (!gate || phase >= kLastPhase) return {false, phase};

  const Millis entered = profile.phase_history.back().entered_at;
  std::vector<const ActivityAttempt*> gate_attempts;
  for (const ActivityAttempt& a : ledgers_.at(profile.learner_id)) {
    if (a.activity == *gate && a.phase == phase && a.timestamp >= entered) {
      gate_attempts.push_back(&a);
    }
  }
  const AdvancementRule& rule = options_.rule;
  if (gate_attempts.empty() || gate_attempts.size() < rule.min_attempts) return {false, phase};

  const std::size_t window = std::min(rule.window, gate_attempts.size());
  const auto recent = std::span(gate_attempts).last(window);
  const auto correct = std::count_if(recent.begin(), recent.end(),
                                     [](const ActivityAttempt* a) { return a->correct; });
  const double accuracy = static_cast<double>(correct) / static_cast<double>(window);
  if (accuracy + 1e-12 < rule.min_accuracy) return {false, phase};

  profile.current_phase = phase + 1;
  profile.phase_history.push_back({phase + 1, gate_attempts.back()->timestamp});
  return {true, profile.current_phase};
}

PhaseCheck LearnerRegistry::check_phase_advancement(const std::string& learner_id) {
  return advance_if_ready(mutable_profile(learner_id));
}

ProgressReport LearnerRegistry::progress_chart(const std::string& learner_id) const {
  return build_report(profile(learner_id), ledgers_.at(learner_id));
}

LearnerProfile LearnerRegistry::update_settings(const std::string& learner_id,
                                                Settings settings) {
  LearnerProfile& p = mutable_profile(learner_id);
  p.settings = settings;
  return p;
}

LearnerProfile LearnerRegistry::reset_phase(const std::string& learner_id, int phase) {
  LearnerProfile& p = mutable_profile(learner_id);
  if (phase < kFirstPhase || phase > p.current_phase) {
    fail(ErrorCode::InvalidArgument, "reset phase must be between 1 and the current phase " +
                                         std::to_string(p.current_phase));
  }
  const Millis now = next_timestamp(learner_id);
  std::erase_if(p.phase_history, [&](const PhaseEntry& e) { return e.phase >= phase; });
  p.phase_history.push_back({phase, now});
  p.current_phase = phase;
  return p;
}

void LearnerRegistry::link(const std::string& child_id, const std::string& adult_id) {
  LearnerProfile& child = mutable_profile(child_id);
  LearnerProfile& adult = mutable_profile(adult_id);
  if (child.account_role != AccountRole::Child) {
    fail(ErrorCode::InvalidArgument, "'" + child_id + "' is not a CHILD account");
  }
  if (!is_adult(adult)) {
    fail(ErrorCode::InvalidArgument, "'" + adult_id + "' is not a THERAPIST or PARENT account");
  }
  child.linked.insert(adult_id);
  adult.linked.insert(child_id);
}

bool LearnerRegistry::linked(const std::string& a, const std::string& b) const {
  auto it = profiles_.find(a);
  return it != profiles_.end() && it->second.linked.contains(b);
}

bool LearnerRegistry::may_view(const std::string& viewer_id,
                               const std::string& subject_id) const {
  if (viewer_id == subject_id) return profiles_.contains(viewer_id);
  auto viewer = profiles_.find(viewer_id);
  auto subject = profiles_.find(subject_id);
  if (viewer == profiles_.end() || subject == profiles_.end()) return false;
  return is_adult(viewer->second) && subject->second.account_role == AccountRole::Child &&
         subject->second.linked.contains(viewer_id);
}

bool LearnerRegistry::may_message(const std::string& from_id, const std::string& to_id) const {
  if (from_id == to_id) return false;
  auto from = profiles_.find(from_id);
  auto to = profiles_.find(to_id);
  if (from == profiles_.end() || to == profiles_.end()) return false;
  const bool from_adult = is_adult(from->second);
  const bool to_adult = is_adult(to->second);
  if (from_adult != to_adult) return from->second.linked.contains(to_id);
  if (!from_adult) return false;
  const auto& a = from->second.linked;
  const auto& b = to->second.linked;
  return std::any_of(a.begin(), a.end(), [&](const std::string& c) { return b.contains(c); });
}

void LearnerRegistry::restore(std::map<std::string, LearnerProfile> profiles,
                              std::map<std::string, std::vector<ActivityAttempt>> ledgers,
                              std::uint64_t next_learner_number) {
  by_username_.clear();
  for (const auto& [id, p] : profiles) {
    if (id != p.learner_id) fail(ErrorCode::MalformedSnapshot, "profile key mismatch for " + id);
    if (!by_username_.emplace(p.username, id).second) {
      fail(ErrorCode::MalformedSnapshot, "duplicate username '" + p.username + "'");
    }
    ledgers[id];
  }
  for (const auto& [id, ledger] : ledgers) {
    if (!profiles.contains(id)) fail(ErrorCode::MalformedSnapshot, "ledger for unknown learner " + id);
  }
  profiles_ = std::move(profiles);
  ledgers_ = std::move(ledgers);
  next_learner_number_ = next_learner_number;
}

SessionTable::SessionTable(Millis ttl_ms, std::uint64_t request_cap, Clock clock)
    : ttl_ms_(ttl_ms), request_cap_(request_cap), clock_(std::move(clock)) {
  ensure_sodium();
}

Session SessionTable::open(const std::string& learner_id) {
  unsigned char raw[32];
  randombytes_buf(raw, sizeof raw);
  char hex[sizeof raw * 2 + 1];
  sodium_bin2hex(hex, sizeof hex, raw, sizeof raw);

  Session session{hex, learner_id, clock_() + ttl_ms_, 0};
  std::lock_guard lock(mutex_);
  sessions_[session.token] = session;
  return session;
}

std::string SessionTable::validate(const std::string& token) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) fail(ErrorCode::AuthFailed, "missing or unknown session token");
  if (clock_() >= it->second.expires_at) {
    sessions_.erase(it);
    fail(ErrorCode::AuthFailed, "session expired");
  }
  if (++it->second.requests > request_cap_) {
    fail(ErrorCode::RateLimited, "request cap reached for this session");
  }
  return it->second.learner_id;
}

void SessionTable::close(const std::string& token) {
  std::lock_guard lock(mutex_);
  sessions_.erase(token);
}

}  // namespace pecs
