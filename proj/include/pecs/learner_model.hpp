#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "pecs/activity_engine.hpp"
#include "pecs/card_catalog.hpp"
#include "pecs/clock.hpp"

namespace pecs {

enum class AccountRole { Child, Therapist, Parent };
enum class Theme { Light, Dark, HighContrast };

std::string_view to_string(AccountRole role) noexcept;
std::string_view to_string(Theme theme) noexcept;
std::optional<AccountRole> parse_account_role(std::string_view text) noexcept;
std::optional<Theme> parse_theme(std::string_view text) noexcept;

inline constexpr int kFirstPhase = 1;
inline constexpr int kLastPhase = 4;
inline constexpr std::size_t kMinPasswordLength = 8;

/// Activity whose recent accuracy moves a learner out of `phase`; none for
/// the last phase.
std::optional<Activity> gate_activity(int phase) noexcept;
/// Lowest phase at which `activity` is available.
int unlock_phase(Activity activity) noexcept;
bool activity_unlocked(Activity activity, int phase) noexcept;

/// Stars a ledger entry must carry. Single-word taps are never scored, and a
/// Q&A retry that finally succeeds earns nothing.
int expected_stars(Activity activity, bool correct, bool retry) noexcept;

struct Settings {
  Theme background_theme = Theme::Light;
  bool operator==(const Settings&) const = default;
};

struct PhaseEntry {
  int phase = kFirstPhase;
  Millis entered_at = 0;
  bool operator==(const PhaseEntry&) const = default;
};

struct LearnerProfile {
  std::string learner_id;
  std::string username;
  std::string password_digest;
  AccountRole account_role = AccountRole::Child;
  std::map<std::string, std::string> demographics;
  int current_phase = kFirstPhase;
  Settings settings;
  Millis created_at = 0;
  std::vector<PhaseEntry> phase_history;
  std::set<std::string> linked;

  bool operator==(const LearnerProfile&) const = default;
};

struct ActivityAttempt {
  std::string attempt_id;
  std::string learner_id;
  Activity activity = Activity::SingleWord;
  std::string prompt_descriptor;
  std::string response;
  bool correct = false;
  int stars_awarded = 0;
  Millis timestamp = 0;
  int phase = kFirstPhase;  // learner phase when the attempt was made
  std::optional<Category> category;
  bool retry = false;

  bool operator==(const ActivityAttempt&) const = default;
};

struct ActivityTally {
  std::uint64_t attempts = 0;
  std::uint64_t correct = 0;
  double accuracy = 0.0;
  bool operator==(const ActivityTally&) const = default;
};

struct ProgressReport {
  std::string learner_id;
  int current_phase = kFirstPhase;
  std::uint64_t star_total = 0;
  std::map<Activity, ActivityTally> per_activity;
  std::map<Category, std::uint64_t> per_category_stars;
  std::vector<PhaseEntry> phase_history;

  bool operator==(const ProgressReport&) const = default;
};

/// Phase advancement thresholds. Therapists may tune these.
struct AdvancementRule {
  std::size_t min_attempts = 10;
  std::size_t window = 10;
  double min_accuracy = 0.8;
};

struct PhaseCheck {
  bool advanced = false;
  int new_phase = kFirstPhase;
  bool operator==(const PhaseCheck&) const = default;
};

enum class PasswordCost { Interactive, Minimal };

std::string hash_password(const std::string& password, PasswordCost cost);
bool verify_password(const std::string& digest, const std::string& password);

/// Pure function of a ledger and the phase history. Used both by the
/// registry and as a standalone recount.
ProgressReport build_report(const LearnerProfile& profile,
                            const std::vector<ActivityAttempt>& ledger);

struct RegistryOptions {
  AdvancementRule rule;
  PasswordCost password_cost = PasswordCost::Interactive;
  bool enforce_phase_gates = true;
};

/// Profiles, attempt ledgers and links. Not synchronized; the owner
/// serializes writers.
class LearnerRegistry {
 public:
  explicit LearnerRegistry(RegistryOptions options = {}, Clock clock = system_clock_ms);

  /// Throws UsernameTaken, WeakPassword, InvalidArgument.
  LearnerProfile register_learner(const std::string& username, const std::string& password,
                                  AccountRole role,
                                  std::map<std::string, std::string> demographics = {});
  /// Second half of registration for callers that hash outside their lock.
  LearnerProfile add_learner(const std::string& username, std::string password_digest,
                             AccountRole role,
                             std::map<std::string, std::string> demographics);
  static void check_registration(const std::string& username, const std::string& password);

  /// Learner id and digest for a username; empty if unknown.
  std::optional<std::pair<std::string, std::string>> credentials(
      const std::string& username) const;
  /// Verifies a password and returns the learner id. Unknown user and wrong
  /// password both throw AuthFailed.
  std::string verify_credentials(const std::string& username,
                                 const std::string& password) const;

  /// Throws UnknownLearner, InconsistentAttempt, ActivityLocked.
  ProgressReport record_attempt(const std::string& learner_id, ActivityAttempt attempt);
  /// Re-applies a previously recorded attempt, keeping its id and timestamp.
  void replay_attempt(const ActivityAttempt& attempt);

  PhaseCheck check_phase_advancement(const std::string& learner_id);
  ProgressReport progress_chart(const std::string& learner_id) const;
  LearnerProfile update_settings(const std::string& learner_id, Settings settings);
  /// Explicit therapist reset to `phase` <= current phase. Gate attempts made
  /// before the reset no longer count toward advancement.
  LearnerProfile reset_phase(const std::string& learner_id, int phase);

  /// Links a CHILD to a THERAPIST or PARENT account.
  void link(const std::string& child_id, const std::string& adult_id);
  bool linked(const std::string& a, const std::string& b) const;
  /// Self, or an adult linked to the child.
  bool may_view(const std::string& viewer_id, const std::string& subject_id) const;
  /// Child with linked adult, or two adults sharing a linked child.
  bool may_message(const std::string& from_id, const std::string& to_id) const;

  const LearnerProfile& profile(const std::string& learner_id) const;
  const LearnerProfile* find_by_username(const std::string& username) const;
  const std::vector<ActivityAttempt>& ledger(const std::string& learner_id) const;
  const std::map<std::string, LearnerProfile>& profiles() const noexcept { return profiles_; }
  bool contains(const std::string& learner_id) const { return profiles_.contains(learner_id); }

  /// Rebuilds a registry from persisted state; ledgers are trusted as-is.
  void restore(std::map<std::string, LearnerProfile> profiles,
               std::map<std::string, std::vector<ActivityAttempt>> ledgers,
               std::uint64_t next_learner_number);
  std::uint64_t next_learner_number() const noexcept { return next_learner_number_; }

  const RegistryOptions& options() const noexcept { return options_; }

 private:
  LearnerProfile& mutable_profile(const std::string& learner_id);
  void apply(LearnerProfile& profile, ActivityAttempt attempt);
  PhaseCheck advance_if_ready(LearnerProfile& profile);
  Millis next_timestamp(const std::string& learner_id) const;
  Millis last_event(const std::string& learner_id) const;

  RegistryOptions options_;
  Clock clock_;
  std::map<std::string, LearnerProfile> profiles_;
  std::map<std::string, std::vector<ActivityAttempt>> ledgers_;
  std::unordered_map<std::string, std::string> by_username_;
  std::uint64_t next_learner_number_ = 1;
  std::string dummy_digest_;
};

struct Session {
  std::string token;
  std::string learner_id;
  Millis expires_at = 0;
  std::uint64_t requests = 0;
};

/// Bearer tokens. Thread-safe.
class SessionTable {
 public:
  explicit SessionTable(Millis ttl_ms = 12LL * 60 * 60 * 1000,
                        std::uint64_t request_cap = 100000,
                        Clock clock = system_clock_ms);

  Session open(const std::string& learner_id);
  /// Learner id for a live token; counts the request against the cap.
  /// Throws AuthFailed for unknown or expired tokens, RateLimited past the cap.
  std::string validate(const std::string& token);
  void close(const std::string& token);

 private:
  Millis ttl_ms_;
  std::uint64_t request_cap_;
  Clock clock_;
  std::mutex mutex_;
  std::unordered_map<std::string, Session> sessions_;
};

}  // namespace pecs
