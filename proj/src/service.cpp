#include "supertask/service.hpp"

#include <fstream>

namespace supertask {

namespace {

Json legal_json(const std::vector<ActionKind>& legal) {
  Json arr = Json::array();
  for (auto a : legal) arr.push_back(std::string(to_string(a)));
  return arr;
}

WireMessage make(WireKind kind, const std::string& session_id, std::int64_t seq, Json body) {
  return WireMessage{kind, session_id, seq, std::move(body)};
}

}  // namespace

std::string encode(const WireMessage& msg) {
  Json j;
  j["kind"] = std::string(to_string(msg.kind));
  j["session_id"] = msg.session_id;
  j["seq"] = msg.seq;
  j["body"] = msg.body;
  return j.dump();
}

WireMessage decode(std::string_view line) {
  const Json j = Json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) throw CodecError("malformed JSON");
  if (!j.is_object()) throw CodecError("message must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k != "kind" && k != "session_id" && k != "seq" && k != "body") throw CodecError("unknown field '" + k + "'");
  }
  WireMessage msg;
  msg.kind = get_enum<WireKind>(j, "kind");
  if (j.contains("session_id")) msg.session_id = get_field<std::string>(j, "session_id");
  if (j.contains("seq")) msg.seq = get_field<std::int64_t>(j, "seq");
  if (j.contains("body")) {
    if (!j.at("body").is_object()) throw CodecError("body must be an object");
    msg.body = j.at("body");
  }
  return msg;
}

WireMessage error_message(ErrorCode code, const std::string& message, const std::string& session_id,
                          std::int64_t seq, const std::vector<ActionKind>& legal) {
  Json body;
  body["code"] = std::string(to_string(code));
  body["message"] = message;
  if (code == ErrorCode::kIllegalAction) body["legal"] = legal_json(legal);
  return make(WireKind::kError, session_id, seq, std::move(body));
}

struct SessionService::Entry {
  std::mutex mutex;
  std::ofstream file;
  std::optional<LoggedSession> session;
};

SessionService::SessionService(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.log_dir.empty()) std::filesystem::create_directories(options_.log_dir);
}

SessionService::~SessionService() { close_logs(); }

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second;
}

WireMessage SessionService::current_prompt(const Entry& e) {
  const auto& ls = *e.session;
  const auto& s = ls.session();
  if (s.finished()) {
    Json body;
    body["score"] = s.score();
    body["n_trials"] = s.history().size();
    return make(WireKind::kEnd, ls.session_id(), ls.events().back().seq, std::move(body));
  }
  return make(WireKind::kPrompt, ls.session_id(), ls.prompt_seq(), to_json(observe(s)));
}

std::vector<WireMessage> SessionService::handle(const WireMessage& msg) {
  switch (msg.kind) {
    case WireKind::kHello:
      return hello(msg);
    case WireKind::kSessionNew:
      return session_new(msg);
    case WireKind::kAct:
      return act(msg);
    case WireKind::kPrompt:
    case WireKind::kFeedback:
    case WireKind::kEnd:
    case WireKind::kError:
      break;
  }
  return {error_message(ErrorCode::kBadMessage, std::string(to_string(msg.kind)) + " is sent by the server only",
                        msg.session_id, msg.seq)};
}

std::vector<std::string> SessionService::handle_line(std::string_view line) {
  std::vector<WireMessage> replies;
  try {
    replies = handle(decode(line));
  } catch (const CodecError& e) {
    replies = {error_message(ErrorCode::kBadMessage, e.what())};
  } catch (const std::exception& e) {
    replies = {error_message(ErrorCode::kBadMessage, std::string("server error: ") + e.what())};
  }
  std::vector<std::string> out;
  out.reserve(replies.size());
  for (const auto& r : replies) out.push_back(encode(r));
  return out;
}

std::vector<WireMessage> SessionService::hello(const WireMessage& msg) {
  Json body;
  body["protocol_version"] = kProtocolVersion;
  body["server"] = "supertask";
  if (msg.session_id.empty()) return {make(WireKind::kHello, "", -1, std::move(body))};

  auto entry = find(msg.session_id);
  if (!entry) return {error_message(ErrorCode::kNotFound, "unknown session", msg.session_id, msg.seq)};
  std::lock_guard lock(entry->mutex);
  body["resumed"] = true;
  return {make(WireKind::kHello, msg.session_id, -1, std::move(body)), current_prompt(*entry)};
}

std::vector<WireMessage> SessionService::session_new(const WireMessage& msg) {
  const Json& b = msg.body;
  SessionConfig config;
  try {
    for (auto it = b.begin(); it != b.end(); ++it) {
      if (it.key() != "seed" && it.key() != "config" && it.key() != "missions")
        throw CodecError("unknown field '" + it.key() + "'");
    }
    std::optional<std::uint64_t> seed;
    if (b.contains("seed")) seed = get_field<std::uint64_t>(b, "seed");
    if (b.contains("config") && b.contains("missions")) throw CodecError("give either config or missions, not both");
    if (!seed) {
      std::lock_guard lock(mutex_);
      seed = derive_seed(options_.default_seed, {created_});
    }
    if (b.contains("config")) {
      config = config_from_json(b.at("config"), *seed);
    } else {
      const auto missions = b.contains("missions") ? get_field<std::vector<int>>(b, "missions")
                                                   : std::vector<int>{1, 2, 3};
      for (int m : missions) {
        if (m < 1 || m > 3) throw CodecError("missions must be 1, 2 or 3");
      }
      config = default_session_config(*seed, missions);
    }
    const auto violations = validate_config(config);
    if (!violations.empty()) throw ConfigError(violations);
  } catch (const std::invalid_argument& e) {  // CodecError and ConfigError
    return {error_message(ErrorCode::kBadMessage, e.what(), msg.session_id, msg.seq)};
  }

  auto entry = std::make_shared<Entry>();
  std::unique_lock elock(entry->mutex);  // nobody else can see the entry yet
  std::string id;
  {
    std::lock_guard lock(mutex_);
    std::size_t active = 0;
    for (const auto& [_, e] : sessions_) {
      std::lock_guard other(e->mutex);
      if (!e->session->session().finished()) ++active;
    }
    if (active >= options_.max_sessions)
      return {error_message(ErrorCode::kSessionLimit, "too many active sessions", msg.session_id, msg.seq)};
    id = make_session_id(config.seed, created_);
    LoggedSession::Sink sink;
    if (!options_.log_dir.empty()) {
      entry->file.open(options_.log_dir / (id + ".jsonl"), std::ios::binary | std::ios::trunc);
      if (!entry->file) throw std::runtime_error("cannot open log for session " + id);
      sink = [e = entry.get()](const EventRecord&, const std::string& line) {
        if (e->file.is_open()) {
          e->file << line << '\n';
          e->file.flush();
        }
      };
    }
    entry->session.emplace(id, std::move(config), std::move(sink));
    ++created_;
    sessions_.emplace(id, entry);
  }

  Json body;
  body["session_id"] = id;
  body["seed"] = entry->session->session().config().seed;
  return {make(WireKind::kSessionNew, id, -1, std::move(body)), current_prompt(*entry)};
}

std::vector<WireMessage> SessionService::act(const WireMessage& msg) {
  auto entry = find(msg.session_id);
  if (!entry) return {error_message(ErrorCode::kNotFound, "unknown session", msg.session_id, msg.seq)};
  std::lock_guard lock(entry->mutex);
  LoggedSession& ls = *entry->session;

  if (ls.session().finished())
    return {error_message(ErrorCode::kStaleSeq, "session has ended", msg.session_id, msg.seq)};
  if (msg.seq != ls.prompt_seq()) {
    return {error_message(ErrorCode::kStaleSeq,
                          "ACT answers seq " + std::to_string(msg.seq) + ", pending PROMPT is seq " +
                              std::to_string(ls.prompt_seq()),
                          msg.session_id, msg.seq)};
  }
  PlayerAction action;
  try {
    action = action_from_json(msg.body);
  } catch (const CodecError& e) {
    return {error_message(ErrorCode::kBadMessage, e.what(), msg.session_id, msg.seq)};
  }

  const std::size_t before = ls.events().size();
  std::optional<Feedback> feedback;
  try {
    feedback = ls.submit(action);
  } catch (const ProtocolError& e) {
    return {error_message(ErrorCode::kIllegalAction, e.what(), msg.session_id, msg.seq, e.legal())};
  }

  std::vector<WireMessage> out;
  if (feedback) {
    std::int64_t fb_seq = -1;
    for (std::size_t i = before; i < ls.events().size(); ++i) {
      if (ls.events()[i].event_type == EventType::kFeedback) fb_seq = ls.events()[i].seq;
    }
    out.push_back(make(WireKind::kFeedback, ls.session_id(), fb_seq, to_json(public_view(*feedback))));
  }
  out.push_back(current_prompt(*entry));
  return out;
}

std::optional<std::uint64_t> SessionService::state_hash(const std::string& session_id) const {
  auto entry = find(session_id);
  if (!entry) return std::nullopt;
  std::lock_guard lock(entry->mutex);
  return derive_seed(entry->session->session().state_hash(), {entry->session->events().size()});
}

std::optional<std::vector<std::string>> SessionService::log_lines(const std::string& session_id) const {
  auto entry = find(session_id);
  if (!entry) return std::nullopt;
  std::lock_guard lock(entry->mutex);
  return entry->session->lines();
}

std::size_t SessionService::active_sessions() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [_, e] : sessions_) {
    std::lock_guard elock(e->mutex);
    if (!e->session->session().finished()) ++n;
  }
  return n;
}

std::optional<bool> SessionService::is_finished(const std::string& session_id) const {
  auto entry = find(session_id);
  if (!entry) return std::nullopt;
  std::lock_guard lock(entry->mutex);
  return entry->session->session().finished();
}

void SessionService::close_logs() {
  std::lock_guard lock(mutex_);
  for (const auto& [_, e] : sessions_) {
    std::lock_guard elock(e->mutex);
    if (e->file.is_open()) {
      e->file.flush();
      e->file.close();
    }
  }
}

}  // namespace supertask
