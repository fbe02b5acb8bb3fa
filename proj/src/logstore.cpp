#include "supertask/logstore.hpp"

#include <cstdio>
#include <fstream>
#include <regex>

namespace supertask {

namespace {

constexpr std::array<const char*, 9> kKeys{"session_id",  "seq",        "seed", "mission_id", "block_index",
                                           "trial_index", "event_type", "t_ms", "payload"};

bool is_uuid(const std::string& s) {
  static const std::regex re("^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$");
  return std::regex_match(s, re);
}

bool may_follow(EventType prev, EventType next) {
  switch (prev) {
    case EventType::kSessionStart:
      return next == EventType::kPrompt;
    case EventType::kPrompt:
      return next == EventType::kAction;
    case EventType::kAction:
      return next == EventType::kPrompt || next == EventType::kFeedback;
    case EventType::kFeedback:
      return next == EventType::kPrompt || next == EventType::kBlockEnd;
    case EventType::kBlockEnd:
      return next == EventType::kPrompt || next == EventType::kMissionEnd;
    case EventType::kMissionEnd:
      return next == EventType::kPrompt || next == EventType::kSessionEnd;
    case EventType::kSessionEnd:
      return false;
  }
  return false;
}

}  // namespace

std::string serialize_event(const EventRecord& e) {
  Json j;
  j["session_id"] = e.session_id;
  j["seq"] = e.seq;
  j["seed"] = e.seed;
  j["mission_id"] = e.mission_id;
  j["block_index"] = e.block_index;
  j["trial_index"] = e.trial_index;
  j["event_type"] = std::string(to_string(e.event_type));
  j["t_ms"] = e.t_ms;
  j["payload"] = e.payload;
  return j.dump();
}

EventRecord parse_event(std::string_view line, std::size_t line_no) {
  Json j = Json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) throw LogError(line_no, "malformed JSON");
  if (!j.is_object()) throw LogError(line_no, "event is not a JSON object");
  if (j.size() != kKeys.size()) throw LogError(line_no, "event must have exactly the nine schema keys");
  std::size_t k = 0;
  for (auto it = j.begin(); it != j.end(); ++it, ++k) {
    if (it.key() != kKeys[k]) throw LogError(line_no, std::string("expected key '") + kKeys[k] + "'");
  }

  EventRecord e;
  try {
    e.session_id = get_field<std::string>(j, "session_id");
    e.seq = get_field<std::int64_t>(j, "seq");
    e.seed = get_field<std::uint64_t>(j, "seed");
    e.mission_id = get_field<int>(j, "mission_id");
    e.block_index = get_field<int>(j, "block_index");
    e.trial_index = get_field<int>(j, "trial_index");
    e.t_ms = get_field<std::int64_t>(j, "t_ms");
    const auto type = get_field<std::string>(j, "event_type");
    const auto parsed = parse_enum<EventType>(type);
    if (!parsed) throw LogError(line_no, "unknown event_type '" + type + "'");
    e.event_type = *parsed;
  } catch (const CodecError& err) {
    throw LogError(line_no, err.what());
  }
  if (!is_uuid(e.session_id)) throw LogError(line_no, "session_id is not a UUID");
  if (!j.at("payload").is_object()) throw LogError(line_no, "payload must be an object");
  e.payload = j.at("payload");
  return e;
}

std::vector<EventRecord> parse_log(std::span<const std::string> lines, ParseOptions options) {
  std::vector<EventRecord> events;
  std::size_t n = lines.size();
  if (n > 0 && lines[n - 1].empty()) --n;  // trailing newline
  events.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t line_no = i + 1;
    EventRecord e = parse_event(lines[i], line_no);
    if (e.seq != static_cast<std::int64_t>(i)) throw LogError(line_no, "seq gap");
    if (i == 0) {
      if (e.event_type != EventType::kSessionStart) throw LogError(line_no, "log must start with SESSION_START");
      if (!e.payload.contains("config")) throw LogError(line_no, "SESSION_START without config");
    } else {
      const EventRecord& prev = events.back();
      if (e.session_id != prev.session_id) throw LogError(line_no, "session_id changes");
      if (e.seed != prev.seed) throw LogError(line_no, "seed changes");
      if (e.t_ms < prev.t_ms) throw LogError(line_no, "t_ms decreases");
      if (!may_follow(prev.event_type, e.event_type)) {
        throw LogError(line_no, std::string("alternation violation: ") + std::string(to_string(e.event_type)) +
                                    " after " + std::string(to_string(prev.event_type)));
      }
    }
    events.push_back(std::move(e));
  }
  if (events.empty()) throw LogError(1, "empty log");
  if (options.require_complete && events.back().event_type != EventType::kSessionEnd)
    throw LogError(n, "log does not end with SESSION_END");
  return events;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return lines;
}

std::vector<EventRecord> read_log(const std::filesystem::path& path, ParseOptions options) {
  const auto lines = read_lines(path);
  return parse_log(lines, options);
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string make_session_id(std::uint64_t seed, std::uint64_t ordinal) {
  const std::uint64_t hi = derive_seed(seed, {0x5E55, ordinal, 0});
  std::uint64_t lo = derive_seed(seed, {0x5E55, ordinal, 1});
  const std::uint64_t hi_v4 = (hi & 0xFFFFFFFFFFFF0FFFULL) | 0x0000000000004000ULL;
  lo = (lo & 0x3FFFFFFFFFFFFFFFULL) | 0x8000000000000000ULL;
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08llx-%04llx-%04llx-%04llx-%012llx",
                static_cast<unsigned long long>(hi_v4 >> 32), static_cast<unsigned long long>((hi_v4 >> 16) & 0xFFFF),
                static_cast<unsigned long long>(hi_v4 & 0xFFFF), static_cast<unsigned long long>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFULL));
  return buf;
}

LoggedSession::LoggedSession(std::string session_id, SessionConfig config, Sink sink)
    : session_id_(std::move(session_id)), session_(std::move(config)), sink_(std::move(sink)) {
  Json payload;
  payload["config"] = to_json(session_.config());
  emit(EventType::kSessionStart, std::nullopt, std::move(payload));
  emit_prompt_or_end();
}

std::vector<std::string> LoggedSession::lines() const {
  std::vector<std::string> out;
  out.reserve(events_.size());
  for (const auto& e : events_) out.push_back(serialize_event(e));
  return out;
}

void LoggedSession::emit(EventType type, const std::optional<TrialAddress>& address, Json payload) {
  EventRecord e;
  e.session_id = session_id_;
  e.seq = static_cast<std::int64_t>(events_.size());
  e.seed = session_.config().seed;
  if (address) {
    e.mission_id = address->mission_id;
    e.block_index = address->block_index;
    e.trial_index = address->trial_index;
  }
  e.event_type = type;
  e.t_ms = clock_ms_;
  e.payload = std::move(payload);
  if (sink_) sink_(e, serialize_event(e));
  events_.push_back(std::move(e));
}

void LoggedSession::emit_prompt_or_end() {
  if (session_.finished()) {
    Json payload;
    payload["score"] = session_.score();
    payload["n_trials"] = session_.history().size();
    emit(EventType::kSessionEnd, std::nullopt, std::move(payload));
    prompt_seq_ = -1;
    return;
  }
  const Prompt& p = session_.prompt();
  prompt_seq_ = static_cast<std::int64_t>(events_.size());
  emit(EventType::kPrompt, p.trial->address, to_json(p));
}

std::optional<Feedback> LoggedSession::submit(const PlayerAction& action) {
  const TrialAddress address = session_.finished() ? TrialAddress{} : session_.prompt().trial->address;
  auto feedback = session_.submit(action);  // throws before anything is logged

  clock_ms_ += action.rt_ms;
  emit(EventType::kAction, address, to_json(action));
  if (feedback) {
    emit(EventType::kFeedback, address, to_json(*feedback));
    for (const auto& b : feedback->boundaries) {
      Json payload;
      payload["points"] = b.points;
      if (b.kind == BoundaryEvent::Kind::kBlockEnd) {
        emit(EventType::kBlockEnd, TrialAddress{b.mission_id, b.block_index, -1}, std::move(payload));
      } else {
        emit(EventType::kMissionEnd, TrialAddress{b.mission_id, -1, -1}, std::move(payload));
      }
    }
  }
  emit_prompt_or_end();
  return feedback;
}

ReplayResult replay(std::span<const EventRecord> log) {
  if (log.empty() || log.front().event_type != EventType::kSessionStart)
    throw ReplayDivergence(0, "log does not start with SESSION_START");
  const EventRecord& start = log.front();

  SessionConfig config;
  try {
    config = config_from_json(start.payload.at("config"), start.seed);
  } catch (const std::exception& e) {
    throw ReplayDivergence(0, std::string("bad config: ") + e.what());
  }

  std::optional<LoggedSession> session;
  try {
    session.emplace(start.session_id, config);
  } catch (const ConfigError& e) {
    throw ReplayDivergence(0, e.what());
  }

  // The engine always stops at a prompt, so after verifying everything it
  // produced the next logged event has to be the ACTION answering it.
  std::size_t verified = 0;
  auto verify = [&] {
    const auto& regen = session->events();
    for (; verified < regen.size() && verified < log.size(); ++verified) {
      if (!(regen[verified] == log[verified])) {
        throw ReplayDivergence(log[verified].seq, std::string(to_string(log[verified].event_type)) +
                                                      " differs from the regenerated event");
      }
    }
    verified = regen.size();
  };

  verify();
  while (verified < log.size()) {
    const EventRecord& e = log[verified];
    if (e.event_type != EventType::kAction)
      throw ReplayDivergence(e.seq, "expected ACTION, log has " + std::string(to_string(e.event_type)));
    PlayerAction action;
    try {
      action = action_from_json(e.payload);
      session->submit(action);
    } catch (const CodecError& err) {
      throw ReplayDivergence(e.seq, err.what());
    } catch (const ProtocolError& err) {
      throw ReplayDivergence(e.seq, err.what());
    }
    verify();
  }

  ReplayResult r;
  r.session_id = start.session_id;
  r.config = session->session().config();
  r.records = session->session().history();
  r.final_score = session->session().score();
  r.complete = session->session().finished() && session->events().size() == log.size();
  r.events = session->events();
  return r;
}

}  // namespace supertask
