#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "pecs/card_catalog.hpp"
#include "pecs/clock.hpp"
#include "pecs/learner_model.hpp"
#include "pecs/sentence_engine.hpp"

namespace pecs {

inline constexpr std::size_t kMaxMessageLength = 2000;
inline constexpr int kSnapshotFormatVersion = 1;
inline constexpr const char* kDefaultDeckId = "default";

struct Message {
  std::string message_id;
  std::string from_learner_id;
  std::string to_learner_id;
  std::string body;
  Millis sent_at = 0;

  bool operator==(const Message&) const = default;
};

/// Everything the service persists.
struct StoreState {
  explicit StoreState(RegistryOptions options = {}, Clock clock = system_clock_ms)
      : registry(options, clock) {}

  std::map<std::string, Deck> decks;
  LearnerRegistry registry;
  std::map<std::string, UsageModel> usage_models;
  std::vector<Message> messages;
};

/// Canonical snapshot document: fixed key order, maps sorted by key, two-space
/// indentation, trailing newline.
std::string save_store(const StoreState& state);
/// Throws MalformedSnapshot, VersionUnsupported.
StoreState load_store(std::string_view document, RegistryOptions options = {},
                      Clock clock = system_clock_ms);

/// Side effects an attempt has beyond the ledger: a successful PECS book
/// sentence trains the learner's usage model.
void apply_usage(StoreState& state, const ActivityAttempt& attempt);

struct StoreOptions {
  RegistryOptions registry;
  Millis session_ttl_ms = 12LL * 60 * 60 * 1000;
  std::uint64_t session_request_cap = 100000;
  /// Attempts appended to the log before the snapshot is rewritten.
  std::size_t compact_every = 64;
};

/// Thread-safe owner of the service state and its files.
///
/// Layout on disk: `<path>` holds the latest snapshot, replaced atomically by
/// rename; `<path>.log` holds one JSON attempt per line recorded since that
/// snapshot. A missing snapshot means a fresh store seeded with the reference
/// deck. An in-memory store (empty path) never touches the disk.
class Store {
 public:
  /// Takes an exclusive advisory lock on `<path>.lock`; a second process
  /// opening the same store fails instead of interleaving writes.
  explicit Store(std::filesystem::path path = {}, StoreOptions options = {},
                 Clock clock = system_clock_ms);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path log_path() const;

  // Accounts and sessions.
  LearnerProfile register_learner(const std::string& username, const std::string& password,
                                  AccountRole role,
                                  std::map<std::string, std::string> demographics);
  std::pair<Session, LearnerProfile> login(const std::string& username,
                                           const std::string& password);
  void logout(const std::string& token);
  /// Learner id behind a bearer token. Throws AuthFailed, RateLimited.
  std::string authenticate(const std::string& token);
  /// Links the child named by `child_username` to `adult_id` after checking
  /// the child's credentials. Returns the child id.
  std::string link_child(const std::string& adult_id, const std::string& child_username,
                         const std::string& child_password);
  void link(const std::string& child_id, const std::string& adult_id);

  // Decks.
  std::vector<std::string> deck_ids() const;
  Deck deck(const std::string& deck_id) const;
  void put_deck(const std::string& deck_id, const Deck& deck);
  Deck add_card(const std::string& deck_id, Card card);

  // Learning state.
  ProgressReport record_attempt(const std::string& learner_id, ActivityAttempt attempt);
  ProgressReport progress(const std::string& learner_id) const;
  PhaseCheck check_phase_advancement(const std::string& learner_id);
  LearnerProfile profile(const std::string& learner_id) const;
  std::vector<ActivityAttempt> ledger(const std::string& learner_id) const;
  LearnerProfile update_settings(const std::string& learner_id, Settings settings);
  LearnerProfile reset_phase(const std::string& learner_id, int phase);
  UsageModel usage_model(const std::string& learner_id) const;
  bool may_view(const std::string& viewer_id, const std::string& subject_id) const;

  // Messaging.
  Message send_message(const std::string& from_id, const std::string& to_id,
                       const std::string& body);
  std::vector<Message> list_messages(const std::string& viewer_id, const std::string& peer_id,
                                     std::optional<Millis> since) const;

  /// Canonical snapshot of the current state.
  std::string snapshot() const;
  /// Rewrites the snapshot and clears the attempt log.
  void flush();

 private:
  void persist_locked();
  void append_log_locked(const ActivityAttempt& attempt);
  void load_from_disk();

  std::filesystem::path path_;
  StoreOptions options_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  StoreState state_;
  SessionTable sessions_;
  std::string dummy_digest_;
  std::size_t log_entries_ = 0;
  int lock_fd_ = -1;
};

}  // namespace pecs
