#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "supertask/codec.hpp"
#include "supertask/engine.hpp"

namespace supertask {

enum class EventType : std::uint8_t {
  kSessionStart,
  kPrompt,
  kAction,
  kFeedback,
  kBlockEnd,
  kMissionEnd,
  kSessionEnd
};

template <>
struct EnumNames<EventType> {
  static constexpr std::array<std::string_view, 7> names{"SESSION_START", "PROMPT",      "ACTION",     "FEEDBACK",
                                                         "BLOCK_END",     "MISSION_END", "SESSION_END"};
};

/// One line of a `.jsonl` session log. Addresses are -1 where not applicable.
struct EventRecord {
  std::string session_id;
  std::int64_t seq = 0;
  std::uint64_t seed = 0;
  int mission_id = -1;
  int block_index = -1;
  int trial_index = -1;
  EventType event_type = EventType::kSessionStart;
  std::int64_t t_ms = 0;
  Json payload = Json::object();

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Single-line JSON with keys in the fixed order session_id, seq, seed,
/// mission_id, block_index, trial_index, event_type, t_ms, payload.
std::string serialize_event(const EventRecord& event);

/// A log that fails validation. line() is 1-based.
class LogError : public std::runtime_error {
 public:
  LogError(std::size_t line, const std::string& what)
      : std::runtime_error(what + " at line " + std::to_string(line)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

EventRecord parse_event(std::string_view line, std::size_t line_no = 1);

struct ParseOptions {
  /// When false, a log that stops before SESSION_END (an interrupted
  /// session) is accepted.
  bool require_complete = true;
};

/// Validates schema, gapless seq, a single session, and the
/// PROMPT/ACTION/FEEDBACK alternation. Throws LogError at the first violation.
std::vector<EventRecord> parse_log(std::span<const std::string> lines, ParseOptions options = {});

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::vector<EventRecord> read_log(const std::filesystem::path& path, ParseOptions options = {});
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

/// UUID-formatted id derived from a seed and an ordinal, so seeded runs get
/// reproducible ids.
std::string make_session_id(std::uint64_t seed, std::uint64_t ordinal);

/// A Session that records every prompt, action, feedback and boundary as an
/// EventRecord. t_ms is the running sum of reported response times, so the log
/// is a pure function of (config, seed, action trace).
class LoggedSession {
 public:
  using Sink = std::function<void(const EventRecord&, const std::string& line)>;

  LoggedSession(std::string session_id, SessionConfig config, Sink sink = {});

  const Session& session() const { return session_; }
  const std::string& session_id() const { return session_id_; }
  const std::vector<EventRecord>& events() const { return events_; }
  std::vector<std::string> lines() const;

  /// seq of the PROMPT event the next action answers (-1 once finished).
  std::int64_t prompt_seq() const { return prompt_seq_; }
  std::int64_t clock_ms() const { return clock_ms_; }

  /// Throws ProtocolError without logging anything when the action is illegal.
  std::optional<Feedback> submit(const PlayerAction& action);

 private:
  void emit(EventType type, const std::optional<TrialAddress>& address, Json payload);
  void emit_prompt_or_end();

  std::string session_id_;
  Session session_;
  Sink sink_;
  std::vector<EventRecord> events_;
  std::int64_t prompt_seq_ = -1;
  std::int64_t clock_ms_ = 0;
};

/// The first point where a replay disagrees with its log.
class ReplayDivergence : public std::runtime_error {
 public:
  ReplayDivergence(std::int64_t seq, const std::string& what)
      : std::runtime_error("replay diverges at seq " + std::to_string(seq) + ": " + what), seq_(seq) {}
  std::int64_t seq() const { return seq_; }

 private:
  std::int64_t seq_;
};

struct ReplayResult {
  std::string session_id;
  SessionConfig config;
  std::vector<TrialRecord> records;
  int final_score = 0;
  bool complete = false;
  std::vector<EventRecord> events;  // regenerated
};

/// Re-drives the engine with the logged seed, config and actions and checks
/// every regenerated event against the log.
ReplayResult replay(std::span<const EventRecord> log);

}  // namespace supertask
