#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "supertask/logstore.hpp"

namespace supertask {

enum class WireKind : std::uint8_t { kHello, kSessionNew, kPrompt, kAct, kFeedback, kEnd, kError };

template <>
struct EnumNames<WireKind> {
  static constexpr std::array<std::string_view, 7> names{"HELLO",    "SESSION_NEW", "PROMPT", "ACT",
                                                         "FEEDBACK", "END",         "ERROR"};
};

enum class ErrorCode : std::uint8_t { kNotFound, kIllegalAction, kBadMessage, kStaleSeq, kSessionLimit };

template <>
struct EnumNames<ErrorCode> {
  static constexpr std::array<std::string_view, 5> names{"NOT_FOUND", "ILLEGAL_ACTION", "BAD_MESSAGE", "STALE_SEQ",
                                                         "SESSION_LIMIT"};
};

inline constexpr int kProtocolVersion = 1;

/// One line of the session protocol:
/// {"kind":...,"session_id":...,"seq":...,"body":{...}}
/// session_id is "" and seq is -1 where they do not apply.
struct WireMessage {
  WireKind kind = WireKind::kHello;
  std::string session_id;
  std::int64_t seq = -1;
  Json body = Json::object();
  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

std::string encode(const WireMessage& msg);
/// Throws CodecError for anything that is not a well-formed message.
WireMessage decode(std::string_view line);

WireMessage error_message(ErrorCode code, const std::string& message, const std::string& session_id = {},
                          std::int64_t seq = -1, const std::vector<ActionKind>& legal = {});

struct ServiceOptions {
  std::size_t max_sessions = 64;  // concurrently unfinished sessions
  std::filesystem::path log_dir;  // empty: keep logs in memory only
  std::uint64_t default_seed = 0; // base for sessions created without a seed
};

/// Session table behind the wire protocol. Safe to call from several threads;
/// messages for one session are applied one at a time in arrival order, and
/// a rejected message never changes a session.
class SessionService {
 public:
  explicit SessionService(ServiceOptions options = {});
  ~SessionService();
  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  std::vector<WireMessage> handle(const WireMessage& msg);
  /// Decodes, handles and encodes. Undecodable input yields BAD_MESSAGE.
  std::vector<std::string> handle_line(std::string_view line);

  /// Fingerprint of a session's engine state and log length.
  std::optional<std::uint64_t> state_hash(const std::string& session_id) const;
  /// Serialized log lines of a session.
  std::optional<std::vector<std::string>> log_lines(const std::string& session_id) const;
  std::size_t active_sessions() const;
  /// nullopt for unknown sessions.
  std::optional<bool> is_finished(const std::string& session_id) const;
  /// Flushes and closes every log file. Further messages still work but are
  /// no longer written to disk.
  void close_logs();

 private:
  struct Entry;

  std::vector<WireMessage> hello(const WireMessage& msg);
  std::vector<WireMessage> session_new(const WireMessage& msg);
  std::vector<WireMessage> act(const WireMessage& msg);
  std::shared_ptr<Entry> find(const std::string& session_id) const;
  static WireMessage current_prompt(const Entry& e);

  ServiceOptions options_;
  mutable std::mutex mutex_;  // guards sessions_ and created_
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t created_ = 0;
};

}  // namespace supertask
