#include "supertask/codec.hpp"

#include <limits>

namespace supertask {

namespace {

Json trial_address_fields(const TrialAddress& a) {
  Json j;
  j["mission_id"] = a.mission_id;
  j["block_index"] = a.block_index;
  j["trial_index"] = a.trial_index;
  return j;
}

TrialAddress address_from(const Json& j) {
  return {get_field<int>(j, "mission_id"), get_field<int>(j, "block_index"), get_field<int>(j, "trial_index")};
}

std::string char_string(char c) { return std::string(1, c); }

char letter_from(const Json& j) {
  const auto s = get_field<std::string>(j, "letter");
  if (s.size() != 1) throw CodecError("field 'letter' must be a single character");
  return s[0];
}

Probability probability_from(const Json& j, const char* key) {
  const auto ppm = get_field<std::uint32_t>(j, key);
  if (ppm > Probability::kScale) throw CodecError(std::string("field '") + key + "' above 1000000");
  return Probability::from_ppm(ppm);
}

template <class E>
Json enum_list(const std::vector<E>& values) {
  Json arr = Json::array();
  for (E v : values) arr.push_back(std::string(to_string(v)));
  return arr;
}

}  // namespace

Json to_json(const SessionConfig& config) {
  Json j;
  j["max_degradation_permille"] = config.max_degradation_permille;
  Json partners = Json::array();
  for (const auto& p : config.partners) {
    Json pj;
    pj["type"] = std::string(to_string(p.type));
    pj["p_correct_ppm"] = p.p_correct.ppm();
    pj["avatar_id"] = p.avatar_id;
    partners.push_back(std::move(pj));
  }
  j["partners"] = std::move(partners);
  Json missions = Json::array();
  for (const auto& m : config.missions) {
    Json mj;
    mj["mission_id"] = m.mission_id;
    mj["reward_correct"] = m.reward_correct;
    mj["penalty_error"] = m.penalty_error;
    mj["avoid_cost"] = m.avoid_cost;
    mj["check_cost"] = m.check_cost;
    Json blocks = Json::array();
    for (const auto& b : m.blocks) {
      Json bj;
      bj["index"] = b.index;
      bj["n_trials"] = b.n_trials;
      bj["mission_kind"] = std::string(to_string(b.mission_kind));
      if (b.mission_kind != MissionKind::kCuedSwitch) bj["cue_set_size"] = b.cue_set_size;
      if (b.controllability) bj["controllability"] = std::string(to_string(*b.controllability));
      if (b.controllability == Controllability::kPartial) bj["squeeze_ppm"] = b.squeeze_prob.ppm();
      blocks.push_back(std::move(bj));
    }
    mj["blocks"] = std::move(blocks);
    missions.push_back(std::move(mj));
  }
  j["missions"] = std::move(missions);
  return j;
}

SessionConfig config_from_json(const Json& j, std::uint64_t seed) {
  if (!j.is_object()) throw CodecError("config must be an object");
  SessionConfig c;
  c.seed = seed;
  if (j.contains("max_degradation_permille")) {
    const auto d = get_field<std::uint32_t>(j, "max_degradation_permille");
    if (d > 1000) throw CodecError("max_degradation_permille above 1000");
    c.max_degradation_permille = static_cast<std::uint16_t>(d);
  }
  if (j.contains("partners")) {
    const Json& arr = j.at("partners");
    if (!arr.is_array() || arr.size() != 3) throw CodecError("partners must list exactly three partner types");
    for (const auto& pj : arr) {
      PartnerSpec p;
      p.type = get_enum<PartnerType>(pj, "type");
      p.p_correct = probability_from(pj, "p_correct_ppm");
      p.avatar_id = get_field<int>(pj, "avatar_id");
      c.partners[static_cast<std::size_t>(p.type)] = p;
    }
  }
  if (!j.contains("missions") || !j.at("missions").is_array()) throw CodecError("config needs a missions array");
  for (const auto& mj : j.at("missions")) {
    MissionSpec m;
    m.mission_id = get_field<int>(mj, "mission_id");
    if (mj.contains("reward_correct")) m.reward_correct = get_field<int>(mj, "reward_correct");
    if (mj.contains("penalty_error")) m.penalty_error = get_field<int>(mj, "penalty_error");
    if (mj.contains("avoid_cost")) m.avoid_cost = get_field<int>(mj, "avoid_cost");
    if (mj.contains("check_cost")) m.check_cost = get_field<int>(mj, "check_cost");
    if (!mj.contains("blocks") || !mj.at("blocks").is_array()) throw CodecError("mission needs a blocks array");
    int position = 0;
    for (const auto& bj : mj.at("blocks")) {
      BlockSpec b;
      b.index = bj.contains("index") ? get_field<int>(bj, "index") : position;
      b.n_trials = get_field<int>(bj, "n_trials");
      if (bj.contains("mission_kind")) {
        b.mission_kind = get_enum<MissionKind>(bj, "mission_kind");
      } else if (auto k = mission_kind_for(m.mission_id)) {
        b.mission_kind = *k;
      } else {
        throw CodecError("block needs a mission_kind");
      }
      if (bj.contains("cue_set_size")) b.cue_set_size = get_field<int>(bj, "cue_set_size");
      if (bj.contains("controllability")) b.controllability = get_enum<Controllability>(bj, "controllability");
      if (bj.contains("squeeze_ppm")) b.squeeze_prob = probability_from(bj, "squeeze_ppm");
      m.blocks.push_back(b);
      ++position;
    }
    c.missions.push_back(std::move(m));
  }
  return c;
}

Json to_json(const TrialSpec& t) {
  Json j;
  j["mission_kind"] = std::string(to_string(t.mission_kind));
  j["cue_id"] = t.cue.id;
  if (t.cue.signaled_rule) j["signaled_rule"] = std::string(to_string(*t.cue.signaled_rule));
  j["true_rule"] = std::string(to_string(t.cue.true_rule));
  j["letter"] = char_string(t.stimulus.letter);
  j["digit"] = t.stimulus.digit;
  j["degradation_permille"] = t.stimulus.degradation_permille;
  j["congruency"] = std::string(to_string(t.congruency));
  if (t.is_switch) j["is_switch"] = *t.is_switch;
  if (t.partner) {
    Json p;
    p["type"] = std::string(to_string(t.partner->type));
    p["avatar_id"] = t.partner->avatar_id;
    p["p_correct_ppm"] = t.partner->p_correct.ppm();
    j["partner"] = std::move(p);
  }
  if (t.controllability) j["controllability"] = std::string(to_string(*t.controllability));
  if (t.controllability == Controllability::kPartial) j["squeeze_ppm"] = t.squeeze_prob.ppm();
  return j;
}

Json to_json(const Prompt& p) {
  Json j;
  j["prompt"] = std::string(to_string(p.kind));
  if (p.trial) j["trial"] = to_json(*p.trial);
  if (p.kind == PromptKind::kProposalReview) {
    j["proposed"] = std::string(to_string(*p.proposed));
    j["forced"] = p.forced;
  }
  if (p.reason) j["reason"] = std::string(to_string(*p.reason));
  return j;
}

Json to_json(const Feedback& f) {
  Json j;
  j["correct"] = f.correct;
  j["payoff"] = f.payoff;
  j["score"] = f.score;
  j["error_class"] = std::string(to_string(f.error_class));
  j["delegated"] = f.delegated;
  j["control_lost"] = f.control_lost;
  if (f.proposal_correct) j["proposal_correct"] = *f.proposal_correct;
  return j;
}

Json to_json(const PlayerAction& a) {
  Json j;
  j["action"] = std::string(to_string(a.kind));
  if (a.side) j["side"] = std::string(to_string(*a.side));
  j["rt_ms"] = a.rt_ms;
  return j;
}

PlayerAction action_from_json(const Json& j) {
  PlayerAction a;
  a.kind = get_enum<ActionKind>(j, "action");
  if (j.contains("side")) a.side = get_enum<ResponseSide>(j, "side");
  a.rt_ms = get_field<std::int64_t>(j, "rt_ms");
  return a;
}

Json to_json(const Observation& o) {
  Json j;
  j["prompt"] = std::string(to_string(o.kind));
  if (o.kind != PromptKind::kSessionEnd) {
    j.update(trial_address_fields(o.address));
    j["mission_kind"] = std::string(to_string(o.mission_kind));
    j["cue_id"] = o.cue_id;
    if (o.signaled_rule) j["signaled_rule"] = std::string(to_string(*o.signaled_rule));
    j["letter"] = char_string(o.stimulus.letter);
    j["digit"] = o.stimulus.digit;
    j["degradation_permille"] = o.stimulus.degradation_permille;
    if (o.partner_type) j["partner_type"] = std::string(to_string(*o.partner_type));
    if (o.avatar_id) j["avatar_id"] = *o.avatar_id;
    if (o.controllability) j["controllability"] = std::string(to_string(*o.controllability));
    if (o.controllability == Controllability::kPartial) j["squeeze_ppm"] = o.squeeze_prob.ppm();
    if (o.proposed) j["proposed"] = std::string(to_string(*o.proposed));
    if (o.kind == PromptKind::kProposalReview) j["forced"] = o.forced;
    if (o.reason) j["reason"] = std::string(to_string(*o.reason));
  }
  j["legal"] = enum_list(o.legal);
  j["score"] = o.score;
  return j;
}

Observation observation_from_json(const Json& j) {
  Observation o;
  o.kind = get_enum<PromptKind>(j, "prompt");
  o.score = get_field<int>(j, "score");
  if (!j.contains("legal") || !j.at("legal").is_array()) throw CodecError("missing field 'legal'");
  for (const auto& item : j.at("legal")) {
    if (!item.is_string()) throw CodecError("field 'legal' must list action names");
    auto k = parse_enum<ActionKind>(item.get<std::string>());
    if (!k) throw CodecError("unknown action in 'legal'");
    o.legal.push_back(*k);
  }
  if (o.kind == PromptKind::kSessionEnd) return o;
  o.address = address_from(j);
  o.mission_kind = get_enum<MissionKind>(j, "mission_kind");
  o.cue_id = get_field<int>(j, "cue_id");
  if (j.contains("signaled_rule")) o.signaled_rule = get_enum<Rule>(j, "signaled_rule");
  o.stimulus.letter = letter_from(j);
  o.stimulus.digit = get_field<int>(j, "digit");
  const auto degradation = get_field<std::uint32_t>(j, "degradation_permille");
  if (degradation > 1000) throw CodecError("degradation_permille above 1000");
  o.stimulus.degradation_permille = static_cast<std::uint16_t>(degradation);
  if (j.contains("partner_type")) o.partner_type = get_enum<PartnerType>(j, "partner_type");
  if (j.contains("avatar_id")) o.avatar_id = get_field<int>(j, "avatar_id");
  if (j.contains("controllability")) o.controllability = get_enum<Controllability>(j, "controllability");
  if (j.contains("squeeze_ppm")) o.squeeze_prob = probability_from(j, "squeeze_ppm");
  if (j.contains("proposed")) o.proposed = get_enum<ResponseSide>(j, "proposed");
  if (j.contains("forced")) o.forced = get_field<bool>(j, "forced");
  if (j.contains("reason")) o.reason = get_enum<SelfSolveReason>(j, "reason");
  return o;
}

Json to_json(const FeedbackView& f) {
  Json j = trial_address_fields(f.address);
  j["correct"] = f.correct;
  j["payoff"] = f.payoff;
  j["score"] = f.score;
  j["delegated"] = f.delegated;
  j["control_lost"] = f.control_lost;
  if (f.proposal_correct) j["proposal_correct"] = *f.proposal_correct;
  Json b = Json::array();
  for (const auto& e : f.boundaries) {
    Json ej;
    ej["kind"] = e.kind == BoundaryEvent::Kind::kBlockEnd ? "BLOCK_END" : "MISSION_END";
    ej["mission_id"] = e.mission_id;
    ej["block_index"] = e.block_index;
    ej["points"] = e.points;
    b.push_back(std::move(ej));
  }
  j["boundaries"] = std::move(b);
  return j;
}

FeedbackView feedback_from_json(const Json& j) {
  FeedbackView f;
  f.address = address_from(j);
  f.correct = get_field<bool>(j, "correct");
  f.payoff = get_field<int>(j, "payoff");
  f.score = get_field<int>(j, "score");
  f.delegated = get_field<bool>(j, "delegated");
  f.control_lost = get_field<bool>(j, "control_lost");
  if (j.contains("proposal_correct")) f.proposal_correct = get_field<bool>(j, "proposal_correct");
  if (j.contains("boundaries")) {
    for (const auto& ej : j.at("boundaries")) {
      BoundaryEvent e;
      const auto kind = get_field<std::string>(ej, "kind");
      if (kind == "BLOCK_END") {
        e.kind = BoundaryEvent::Kind::kBlockEnd;
      } else if (kind == "MISSION_END") {
        e.kind = BoundaryEvent::Kind::kMissionEnd;
      } else {
        throw CodecError("unknown boundary kind '" + kind + "'");
      }
      e.mission_id = get_field<int>(ej, "mission_id");
      e.block_index = get_field<int>(ej, "block_index");
      e.points = get_field<int>(ej, "points");
      f.boundaries.push_back(e);
    }
  }
  return f;
}

}  // namespace supertask
