#include "pecs/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "pecs/error.hpp"
#include "pecs/json_codec.hpp"

namespace pecs {

using codec::Json;

namespace {

std::system_error io_error(const std::string& what, const std::filesystem::path& path) {
  return std::system_error(errno, std::generic_category(), what + " " + path.string());
}

void write_all(int fd, std::string_view data, const std::filesystem::path& path) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw io_error("write failed for", path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

// Write to a sibling temp file, fsync, rename over the target, fsync the
// directory. Readers see either the old or the new file, never a mix.
void atomic_replace(const std::filesystem::path& target, std::string_view contents) {
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
  if (fd < 0) throw io_error("cannot create", tmp);
  try {
    write_all(fd, contents, tmp);
    if (::fsync(fd) != 0) throw io_error("fsync failed for", tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), target.c_str()) != 0) throw io_error("cannot rename onto", target);

  std::filesystem::path dir = target.parent_path();
  if (dir.empty()) dir = ".";
  const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

bool blank(std::string_view text) {
  return text.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

StoreState fresh_state(const RegistryOptions& options, const Clock& clock) {
  StoreState state(options, clock);
  state.decks.emplace(kDefaultDeckId, reference_deck());
  return state;
}

}  // namespace

std::string save_store(const StoreState& state) {
  Json root;
  root["format_version"] = kSnapshotFormatVersion;
  root["next_learner_number"] = state.registry.next_learner_number();

  Json decks = Json::object();
  for (const auto& [id, deck] : state.decks) decks[id] = Json::parse(export_deck(deck));
  root["decks"] = std::move(decks);

  Json profiles = Json::object();
  Json ledgers = Json::object();
  for (const auto& [id, profile] : state.registry.profiles()) {
    profiles[id] = codec::profile_to_json(profile);
    Json ledger = Json::array();
    for (const ActivityAttempt& a : state.registry.ledger(id)) {
      ledger.push_back(codec::attempt_to_json(a));
    }
    ledgers[id] = std::move(ledger);
  }
  root["profiles"] = std::move(profiles);
  root["ledgers"] = std::move(ledgers);

  Json usage = Json::object();
  for (const auto& [id, model] : state.usage_models) usage[id] = codec::usage_to_json(model);
  root["usage_models"] = std::move(usage);

  Json messages = Json::array();
  for (const Message& m : state.messages) messages.push_back(codec::message_to_json(m));
  root["messages"] = std::move(messages);
  return root.dump(2) + "\n";
}

StoreState load_store(std::string_view document, RegistryOptions options, Clock clock) {
  Json root;
  try {
    root = Json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::MalformedSnapshot, std::string("snapshot is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) fail(ErrorCode::MalformedSnapshot, "snapshot must be a JSON object");
  auto version = root.find("format_version");
  if (version == root.end() || !version->is_number_integer() || version->get<long long>() < 1) {
    fail(ErrorCode::MalformedSnapshot, "format_version must be a positive integer");
  }
  if (version->get<long long>() > kSnapshotFormatVersion) {
    fail(ErrorCode::VersionUnsupported,
         "snapshot format_version " + std::to_string(version->get<long long>()) +
             " is newer than supported version " + std::to_string(kSnapshotFormatVersion));
  }

  StoreState state(options, std::move(clock));
  try {
    const auto section = [&](const char* key, bool array) -> const Json& {
      auto it = root.find(key);
      if (it == root.end() || (array ? !it->is_array() : !it->is_object())) {
        fail(ErrorCode::MalformedSnapshot, std::string("section '") + key + "' is missing");
      }
      return *it;
    };
    auto next = root.find("next_learner_number");
    if (next == root.end() || !next->is_number_unsigned()) {
      fail(ErrorCode::MalformedSnapshot, "next_learner_number must be a non-negative integer");
    }

    for (const auto& [id, deck] : section("decks", false).items()) {
      state.decks.emplace(id, load_deck(deck.dump()));
    }

    std::map<std::string, LearnerProfile> profiles;
    for (const auto& [id, node] : section("profiles", false).items()) {
      profiles.emplace(id, codec::profile_from_json(node));
    }
    std::map<std::string, std::vector<ActivityAttempt>> ledgers;
    for (const auto& [id, node] : section("ledgers", false).items()) {
      if (!node.is_array()) fail(ErrorCode::MalformedSnapshot, "ledger must be an array");
      auto& ledger = ledgers[id];
      for (const Json& a : node) {
        ActivityAttempt attempt = codec::attempt_from_json(a);
        if (attempt.stars_awarded != expected_stars(attempt.activity, attempt.correct, attempt.retry)) {
          fail(ErrorCode::MalformedSnapshot, "attempt " + attempt.attempt_id + " has inconsistent stars");
        }
        if (!ledger.empty() && attempt.timestamp <= ledger.back().timestamp) {
          fail(ErrorCode::MalformedSnapshot, "ledger for " + id + " is not time-ordered");
        }
        ledger.push_back(std::move(attempt));
      }
    }
    state.registry.restore(std::move(profiles), std::move(ledgers), next->get<std::uint64_t>());

    for (const auto& [id, node] : section("usage_models", false).items()) {
      if (!state.registry.contains(id)) {
        fail(ErrorCode::MalformedSnapshot, "usage model for unknown learner " + id);
      }
      state.usage_models.emplace(id, codec::usage_from_json(node));
    }
    for (const Json& node : section("messages", true)) {
      state.messages.push_back(codec::message_from_json(node));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedSnapshot) throw;
    fail(ErrorCode::MalformedSnapshot, std::string(to_string(e.code())) + ": " + e.what());
  }
  return state;
}

void apply_usage(StoreState& state, const ActivityAttempt& attempt) {
  if (attempt.activity != Activity::PecsBook || !attempt.correct) return;
  try {
    const Json descriptor = Json::parse(attempt.prompt_descriptor);
    const Json response = Json::parse(attempt.response);
    auto deck = state.decks.find(descriptor.at("deck").get<std::string>());
    if (deck == state.decks.end()) return;
    SentenceStrip strip(deck->second, response.get<std::vector<std::string>>());
    if (strip.state().verdict != StripVerdict::Valid) return;
    UsageModel& model = state.usage_models[attempt.learner_id];
    model = update_usage_model(model, strip);
  } catch (const std::exception&) {
    // A ledger entry that no longer resolves against its deck does not train.
  }
}

Store::Store(std::filesystem::path path, StoreOptions options, Clock clock)
    : path_(std::move(path)),
      options_(options),
      clock_(clock),
      state_(fresh_state(options.registry, clock)),
      sessions_(options.session_ttl_ms, options.session_request_cap, clock),
      dummy_digest_(hash_password("not-a-real-password", options.registry.password_cost)) {
  if (path_.empty()) return;
  std::filesystem::path lock_path = path_;
  lock_path += ".lock";
  lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
  if (lock_fd_ < 0) throw io_error("cannot open", lock_path);
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    throw std::runtime_error("store " + path_.string() + " is in use by another process");
  }
  try {
    load_from_disk();
  } catch (...) {
    ::close(lock_fd_);
    throw;
  }
}

Store::~Store() {
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

std::filesystem::path Store::log_path() const {
  std::filesystem::path p = path_;
  p += ".log";
  return p;
}

void Store::load_from_disk() {
  if (std::filesystem::exists(path_)) {
    state_ = load_store(read_file(path_), options_.registry, clock_);
  }

  std::size_t replayed = 0;
  if (std::filesystem::exists(log_path())) {
    const std::string log = read_file(log_path());
    std::size_t start = 0;
    while (start < log.size()) {
      std::size_t end = log.find('\n', start);
      const bool last = end == std::string::npos;
      const std::string line = log.substr(start, last ? std::string::npos : end - start);
      start = last ? log.size() : end + 1;
      if (blank(line)) continue;

      ActivityAttempt attempt;
      try {
        attempt = codec::attempt_from_json(Json::parse(line));
      } catch (const std::exception&) {
        // Only the final line can be torn by a crash mid-append.
        if (last) break;
        fail(ErrorCode::MalformedSnapshot, "attempt log has a corrupt entry");
      }
      try {
        const auto& ledger = state_.registry.ledger(attempt.learner_id);
        const bool known =
            std::any_of(ledger.begin(), ledger.end(),
                        [&](const ActivityAttempt& a) { return a.attempt_id == attempt.attempt_id; });
        if (known) continue;
        state_.registry.replay_attempt(attempt);
      } catch (const Error& e) {
        fail(ErrorCode::MalformedSnapshot,
             "attempt log entry " + attempt.attempt_id + " does not apply: " + e.what());
      }
      apply_usage(state_, attempt);
      ++replayed;
    }
  }

  if (replayed > 0 || !std::filesystem::exists(path_)) persist_locked();
}

void Store::persist_locked() {
  log_entries_ = 0;
  if (path_.empty()) return;
  atomic_replace(path_, save_store(state_));
  const int fd = ::open(log_path().c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
  if (fd < 0) throw io_error("cannot truncate", log_path());
  ::close(fd);
}

void Store::append_log_locked(const ActivityAttempt& attempt) {
  if (path_.empty()) return;
  const std::string line = codec::attempt_to_json(attempt).dump() + "\n";
  const int fd = ::open(log_path().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
  if (fd < 0) throw io_error("cannot open", log_path());
  try {
    write_all(fd, line, log_path());
    if (::fsync(fd) != 0) throw io_error("fsync failed for", log_path());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  if (++log_entries_ >= options_.compact_every) persist_locked();
}

LearnerProfile Store::register_learner(const std::string& username, const std::string& password,
                                       AccountRole role,
                                       std::map<std::string, std::string> demographics) {
  LearnerRegistry::check_registration(username, password);
  {
    std::shared_lock lock(mutex_);
    if (state_.registry.find_by_username(username)) {
      fail(ErrorCode::UsernameTaken, "username '" + username + "' is taken");
    }
  }
  std::string digest = hash_password(password, options_.registry.password_cost);
  std::unique_lock lock(mutex_);
  LearnerProfile profile =
      state_.registry.add_learner(username, std::move(digest), role, std::move(demographics));
  persist_locked();
  return profile;
}

std::pair<Session, LearnerProfile> Store::login(const std::string& username,
                                                const std::string& password) {
  std::optional<std::pair<std::string, std::string>> creds;
  {
    std::shared_lock lock(mutex_);
    creds = state_.registry.credentials(username);
  }
  // Unknown users cost one verification too, so timing does not reveal them.
  const bool ok = verify_password(creds ? creds->second : dummy_digest_, password);
  if (!creds || !ok) fail(ErrorCode::AuthFailed, "invalid username or password");
  Session session = sessions_.open(creds->first);
  return {session, profile(creds->first)};
}

void Store::logout(const std::string& token) { sessions_.close(token); }

std::string Store::authenticate(const std::string& token) { return sessions_.validate(token); }

std::string Store::link_child(const std::string& adult_id, const std::string& child_username,
                              const std::string& child_password) {
  std::optional<std::pair<std::string, std::string>> creds;
  {
    std::shared_lock lock(mutex_);
    creds = state_.registry.credentials(child_username);
  }
  if (!creds || !verify_password(creds->second, child_password)) {
    fail(ErrorCode::AuthFailed, "invalid child username or password");
  }
  link(creds->first, adult_id);
  return creds->first;
}

void Store::link(const std::string& child_id, const std::string& adult_id) {
  std::unique_lock lock(mutex_);
  state_.registry.link(child_id, adult_id);
  persist_locked();
}

std::vector<std::string> Store::deck_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, deck] : state_.decks) ids.push_back(id);
  return ids;
}

Deck Store::deck(const std::string& deck_id) const {
  std::shared_lock lock(mutex_);
  auto it = state_.decks.find(deck_id);
  if (it == state_.decks.end()) fail(ErrorCode::UnknownDeck, "unknown deck '" + deck_id + "'");
  return it->second;
}

void Store::put_deck(const std::string& deck_id, const Deck& deck) {
  if (deck_id.empty()) fail(ErrorCode::InvalidArgument, "deck id must be non-empty");
  std::unique_lock lock(mutex_);
  state_.decks.insert_or_assign(deck_id, deck);
  persist_locked();
}

Deck Store::add_card(const std::string& deck_id, Card card) {
  std::unique_lock lock(mutex_);
  auto it = state_.decks.find(deck_id);
  if (it == state_.decks.end()) fail(ErrorCode::UnknownDeck, "unknown deck '" + deck_id + "'");
  it->second = add_custom_card(it->second, std::move(card));
  persist_locked();
  return it->second;
}

ProgressReport Store::record_attempt(const std::string& learner_id, ActivityAttempt attempt) {
  std::unique_lock lock(mutex_);
  ProgressReport report = state_.registry.record_attempt(learner_id, std::move(attempt));
  const ActivityAttempt& recorded = state_.registry.ledger(learner_id).back();
  apply_usage(state_, recorded);
  append_log_locked(recorded);
  return report;
}

ProgressReport Store::progress(const std::string& learner_id) const {
  std::shared_lock lock(mutex_);
  return state_.registry.progress_chart(learner_id);
}

PhaseCheck Store::check_phase_advancement(const std::string& learner_id) {
  std::unique_lock lock(mutex_);
  PhaseCheck check = state_.registry.check_phase_advancement(learner_id);
  if (check.advanced) persist_locked();
  return check;
}

LearnerProfile Store::profile(const std::string& learner_id) const {
  std::shared_lock lock(mutex_);
  return state_.registry.profile(learner_id);
}

std::vector<ActivityAttempt> Store::ledger(const std::string& learner_id) const {
  std::shared_lock lock(mutex_);
  return state_.registry.ledger(learner_id);
}

LearnerProfile Store::update_settings(const std::string& learner_id, Settings settings) {
  std::unique_lock lock(mutex_);
  LearnerProfile p = state_.registry.update_settings(learner_id, settings);
  persist_locked();
  return p;
}

LearnerProfile Store::reset_phase(const std::string& learner_id, int phase) {
  std::unique_lock lock(mutex_);
  LearnerProfile p = state_.registry.reset_phase(learner_id, phase);
  persist_locked();
  return p;
}

UsageModel Store::usage_model(const std::string& learner_id) const {
  std::shared_lock lock(mutex_);
  state_.registry.profile(learner_id);
  auto it = state_.usage_models.find(learner_id);
  return it == state_.usage_models.end() ? UsageModel{} : it->second;
}

bool Store::may_view(const std::string& viewer_id, const std::string& subject_id) const {
  std::shared_lock lock(mutex_);
  return state_.registry.may_view(viewer_id, subject_id);
}

Message Store::send_message(const std::string& from_id, const std::string& to_id,
                            const std::string& body) {
  if (blank(body)) fail(ErrorCode::EmptyBody, "message body is empty");
  if (utf8_length(body) > kMaxMessageLength) {
    fail(ErrorCode::BodyTooLong, "message body exceeds " + std::to_string(kMaxMessageLength) +
                                     " characters");
  }
  std::unique_lock lock(mutex_);
  state_.registry.profile(to_id);
  if (!state_.registry.may_message(from_id, to_id)) {
    fail(ErrorCode::NotLinked, "accounts are not linked");
  }
  Millis sent_at = clock_();
  if (!state_.messages.empty()) sent_at = std::max(sent_at, state_.messages.back().sent_at + 1);
  Message message{"m" + std::to_string(state_.messages.size() + 1), from_id, to_id, body, sent_at};
  state_.messages.push_back(message);
  persist_locked();
  return message;
}

std::vector<Message> Store::list_messages(const std::string& viewer_id,
                                          const std::string& peer_id,
                                          std::optional<Millis> since) const {
  std::shared_lock lock(mutex_);
  state_.registry.profile(peer_id);
  if (!state_.registry.may_message(viewer_id, peer_id)) {
    fail(ErrorCode::NotLinked, "accounts are not linked");
  }
  std::vector<Message> out;
  for (const Message& m : state_.messages) {
    const bool between = (m.from_learner_id == viewer_id && m.to_learner_id == peer_id) ||
                         (m.from_learner_id == peer_id && m.to_learner_id == viewer_id);
    if (between && (!since || m.sent_at > *since)) out.push_back(m);
  }
  return out;
}

std::string Store::snapshot() const {
  std::shared_lock lock(mutex_);
  return save_store(state_);
}

void Store::flush() {
  std::unique_lock lock(mutex_);
  persist_locked();
}

}  // namespace pecs
