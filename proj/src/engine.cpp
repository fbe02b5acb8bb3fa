#include "supertask/engine.hpp"

#include <algorithm>

namespace supertask {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kBlockStream = 0;
constexpr std::uint64_t kOutcomeStream = 1;

std::string join_violations(const std::vector<std::string>& v) {
  std::string out = "invalid session config";
  for (const auto& s : v) out += "; " + s;
  return out;
}

CodeStimulus draw_stimulus(Congruency congruency, std::uint16_t max_degradation, Rng& rng) {
  CodeStimulus s;
  const bool vowel = rng.below(2) == 0;
  s.letter = vowel ? kVowels[rng.below(4)] : kConsonants[rng.below(4)];
  // vowel and odd both map to LEFT, so congruent pairs vowel with odd.
  const bool odd = (congruency == Congruency::kCongruent) == vowel;
  s.digit = odd ? kOddDigits[rng.below(4)] : kEvenDigits[rng.below(4)];
  s.degradation_permille = static_cast<std::uint16_t>(rng.below(std::uint64_t{max_degradation} + 1));
  return s;
}

// Fixed cue -> rule map with both rules present.
std::vector<Rule> draw_cue_map(int cue_set_size, Rng& rng) {
  std::vector<Rule> map;
  map.reserve(cue_set_size);
  for (int i = 0; i < cue_set_size / 2; ++i) map.push_back(Rule::kLetter);
  for (int i = 0; i < cue_set_size / 2; ++i) map.push_back(Rule::kNumber);
  if (cue_set_size % 2 == 1) map.push_back(rng.below(2) == 0 ? Rule::kLetter : Rule::kNumber);
  rng.shuffle(map);
  return map;
}

// Each cue floor(n/K) times, the remainder spread over distinct random cues.
std::vector<int> draw_cue_sequence(int n_trials, int cue_set_size, Rng& rng) {
  std::vector<int> seq;
  seq.reserve(n_trials);
  for (int c = 0; c < cue_set_size; ++c) {
    for (int k = 0; k < n_trials / cue_set_size; ++k) seq.push_back(c);
  }
  std::vector<int> extra(cue_set_size);
  for (int c = 0; c < cue_set_size; ++c) extra[c] = c;
  rng.shuffle(extra);
  for (int k = 0; k < n_trials % cue_set_size; ++k) seq.push_back(extra[k]);
  rng.shuffle(seq);
  return seq;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::invalid_argument(join_violations(violations)), violations_(std::move(violations)) {}

SessionConfig default_session_config(std::uint64_t seed, const std::vector<int>& mission_ids) {
  SessionConfig c;
  c.seed = seed;
  for (int id : mission_ids) c.missions.push_back(default_mission(id));
  return c;
}

std::vector<std::string> validate_config(const SessionConfig& config) {
  std::vector<std::string> out;
  if (config.missions.empty()) out.push_back("session has no missions");
  for (std::size_t i = 0; i < config.missions.size(); ++i) {
    for (const auto& v : validate_mission(config.missions[i]))
      out.push_back("mission " + std::to_string(config.missions[i].mission_id) + ": " + v);
  }
  for (std::size_t t = 0; t < config.partners.size(); ++t) {
    if (config.partners[t].type != static_cast<PartnerType>(t)) out.push_back("partner roster out of order");
  }
  if (config.max_degradation_permille > 1000) out.push_back("max_degradation_permille above 1000");
  return out;
}

std::vector<ActionKind> legal_actions(const Prompt& prompt) {
  switch (prompt.kind) {
    case PromptKind::kTrialPresent:
    case PromptKind::kSelfSolve:
      return {ActionKind::kRespond};
    case PromptKind::kPartnerOffer:
      return {ActionKind::kAvoid, ActionKind::kEngage};
    case PromptKind::kProposalReview:
      if (prompt.forced) return {ActionKind::kAccept};
      return {ActionKind::kAccept, ActionKind::kCheck};
    case PromptKind::kSessionEnd:
      return {};
  }
  return {};
}

std::vector<TrialSpec> generate_block_trials(int mission_id, const BlockSpec& block, Rng& rng,
                                             const TrialGenOptions& options) {
  const int n = block.n_trials;
  std::vector<TrialSpec> trials(n);

  std::vector<Rule> rules(n);
  std::vector<int> cue_ids(n);
  if (block.mission_kind == MissionKind::kCuedSwitch) {
    for (int i = 0; i < n; ++i) {
      rules[i] = rng.below(2) == 0 ? Rule::kLetter : Rule::kNumber;
      cue_ids[i] = static_cast<int>(rules[i]);
    }
  } else {
    const auto map = draw_cue_map(block.cue_set_size, rng);
    cue_ids = draw_cue_sequence(n, block.cue_set_size, rng);
    for (int i = 0; i < n; ++i) rules[i] = map[cue_ids[i]];
  }

  std::vector<Congruency> congruency(n, Congruency::kIncongruent);
  std::fill_n(congruency.begin(), n / 2, Congruency::kCongruent);
  rng.shuffle(congruency);

  for (int i = 0; i < n; ++i) {
    TrialSpec& t = trials[i];
    t.address = {mission_id, block.index, i};
    t.mission_kind = block.mission_kind;
    t.cue.id = cue_ids[i];
    t.cue.true_rule = rules[i];
    if (block.mission_kind == MissionKind::kCuedSwitch) t.cue.signaled_rule = rules[i];
    t.stimulus = draw_stimulus(congruency[i], options.max_degradation_permille, rng);
    t.congruency = congruency[i];
    if (i > 0) t.is_switch = rules[i] != rules[i - 1];
  }

  if (block.mission_kind == MissionKind::kSocial) {
    for (auto& t : trials) {
      t.partner = options.partners[rng.below(3)];
      t.controllability = block.controllability;
      if (block.controllability == Controllability::kPartial) t.squeeze_prob = block.squeeze_prob;
    }
  }
  return trials;
}

ResponseSide partner_propose(const PartnerSpec& partner, const TrialSpec& trial, Rng& rng) {
  const ResponseSide correct = classify(trial.stimulus, trial.cue.true_rule);
  return rng.bernoulli(partner.p_correct) ? correct : opposite(correct);
}

Session::Session(SessionConfig config) : config_(std::move(config)) {
  if (auto v = validate_config(config_); !v.empty()) throw ConfigError(std::move(v));
  enter_block();
  present_current_trial();
}

void Session::enter_block() {
  const MissionSpec& m = config_.missions[mission_pos_];
  const BlockSpec& b = m.blocks[block_pos_];
  Rng rng(derive_seed(config_.seed, {kBlockStream, static_cast<std::uint64_t>(m.mission_id),
                                     static_cast<std::uint64_t>(b.index)}));
  trials_ = generate_block_trials(m.mission_id, b, rng,
                                  {.partners = config_.partners,
                                   .max_degradation_permille = config_.max_degradation_permille});
  trial_pos_ = 0;
}

void Session::present_current_trial() {
  const TrialSpec& t = trials_[trial_pos_];
  prompt_ = Prompt{};
  prompt_.kind = t.mission_kind == MissionKind::kSocial ? PromptKind::kPartnerOffer : PromptKind::kTrialPresent;
  prompt_.trial = t;
  trace_.clear();
  proposal_.reset();
  control_lost_ = false;
}

std::optional<Feedback> Session::submit(const PlayerAction& action) {
  const auto legal = legal_actions(prompt_);
  if (finished()) throw ProtocolError("session has ended", legal);
  if (std::find(legal.begin(), legal.end(), action.kind) == legal.end()) {
    throw ProtocolError(std::string(to_string(action.kind)) + " is not legal at " +
                            std::string(to_string(prompt_.kind)),
                        legal);
  }
  if (action.rt_ms < 0) throw ProtocolError("rt_ms must be non-negative", legal);
  if (action.kind == ActionKind::kRespond && !action.side) throw ProtocolError("RESPOND requires a side", legal);
  if (action.kind != ActionKind::kRespond && action.side)
    throw ProtocolError(std::string(to_string(action.kind)) + " does not take a side", legal);

  // Validation is complete; nothing below throws for a well-formed session.
  const MissionSpec& mission = config_.missions[mission_pos_];
  trace_.push_back(action);

  switch (prompt_.kind) {
    case PromptKind::kTrialPresent:
      return resolve(*action.side, 0, false);

    case PromptKind::kPartnerOffer: {
      const TrialSpec& t = *prompt_.trial;
      if (action.kind == ActionKind::kAvoid) {
        prompt_.kind = PromptKind::kSelfSolve;
        prompt_.reason = SelfSolveReason::kAvoid;
        return std::nullopt;
      }
      Rng rng(derive_seed(config_.seed,
                          {kOutcomeStream, static_cast<std::uint64_t>(t.address.mission_id),
                           static_cast<std::uint64_t>(t.address.block_index),
                           static_cast<std::uint64_t>(t.address.trial_index)}));
      proposal_ = partner_propose(*t.partner, t, rng);
      const bool squeezed = t.controllability == Controllability::kPartial && rng.bernoulli(t.squeeze_prob);
      prompt_.kind = PromptKind::kProposalReview;
      prompt_.proposed = proposal_;
      prompt_.forced = squeezed;
      control_lost_ = squeezed;
      return std::nullopt;
    }

    case PromptKind::kProposalReview:
      if (action.kind == ActionKind::kAccept) return resolve(*proposal_, 0, true);
      prompt_.kind = PromptKind::kSelfSolve;
      prompt_.reason = SelfSolveReason::kCheck;
      prompt_.proposed.reset();
      prompt_.forced = false;
      return std::nullopt;

    case PromptKind::kSelfSolve: {
      const int cost = prompt_.reason == SelfSolveReason::kAvoid ? mission.avoid_cost : mission.check_cost;
      return resolve(*action.side, cost, false);
    }

    case PromptKind::kSessionEnd:
      break;
  }
  throw ProtocolError("unreachable prompt state", legal);
}

Feedback Session::resolve(ResponseSide response, int cost, bool delegated) {
  const MissionSpec& mission = config_.missions[mission_pos_];
  const TrialSpec& t = trials_[trial_pos_];
  const ResponseSide truth = classify(t.stimulus, t.cue.true_rule);
  const std::optional<Rule> prev = trial_pos_ > 0 ? std::optional(trials_[trial_pos_ - 1].cue.true_rule) : std::nullopt;

  TrialRecord r;
  r.address = t.address;
  r.mission_kind = t.mission_kind;
  r.cue_id = t.cue.id;
  r.signaled_rule = t.cue.signaled_rule;
  r.true_rule = t.cue.true_rule;
  r.stimulus = t.stimulus;
  r.congruency = t.congruency;
  r.is_switch = t.is_switch;
  r.actions = trace_;
  r.final_response = response;
  r.correct = response == truth;
  r.error_class = error_taxonomy(t, response, prev);
  r.payoff = (r.correct ? mission.reward_correct : -mission.penalty_error) - cost;
  if (t.partner) r.partner_type = t.partner->type;
  r.controllability = t.controllability;
  r.proposal = proposal_;
  r.delegated = delegated;
  r.control_lost = control_lost_;
  // A squeezed trial was decided by the ENGAGE that let the partner in.
  r.rt_ms = control_lost_ ? trace_[trace_.size() - 2].rt_ms : trace_.back().rt_ms;

  score_ += r.payoff;
  block_points_ += r.payoff;
  mission_points_ += r.payoff;

  Feedback fb;
  fb.address = t.address;
  fb.correct = r.correct;
  fb.payoff = r.payoff;
  fb.score = score_;
  fb.error_class = r.error_class;
  fb.delegated = delegated;
  fb.control_lost = control_lost_;
  if (proposal_) fb.proposal_correct = *proposal_ == truth;

  history_.push_back(std::move(r));

  ++trial_pos_;
  if (trial_pos_ < trials_.size()) {
    present_current_trial();
    return fb;
  }

  fb.boundaries.push_back({BoundaryEvent::Kind::kBlockEnd, mission.mission_id,
                           mission.blocks[block_pos_].index, block_points_});
  block_points_ = 0;
  ++block_pos_;
  if (block_pos_ == mission.blocks.size()) {
    fb.boundaries.push_back({BoundaryEvent::Kind::kMissionEnd, mission.mission_id, -1, mission_points_});
    mission_points_ = 0;
    block_pos_ = 0;
    ++mission_pos_;
  }
  if (mission_pos_ == config_.missions.size()) {
    mission_pos_ = config_.missions.size() - 1;  // keep current_mission() valid
    prompt_ = Prompt{};
    trace_.clear();
    proposal_.reset();
    control_lost_ = false;
    return fb;
  }
  enter_block();
  present_current_trial();
  return fb;
}

std::uint64_t Session::state_hash() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ v); };
  mix(mission_pos_);
  mix(block_pos_);
  mix(trial_pos_);
  mix(static_cast<std::uint64_t>(score_));
  mix(static_cast<std::uint64_t>(block_points_));
  mix(static_cast<std::uint64_t>(mission_points_));
  mix(history_.size());
  mix(static_cast<std::uint64_t>(prompt_.kind));
  mix(prompt_.forced);
  mix(prompt_.proposed ? 1 + static_cast<std::uint64_t>(*prompt_.proposed) : 0);
  mix(prompt_.reason ? 1 + static_cast<std::uint64_t>(*prompt_.reason) : 0);
  mix(trace_.size());
  for (const auto& a : trace_) {
    mix(static_cast<std::uint64_t>(a.kind));
    mix(static_cast<std::uint64_t>(a.rt_ms));
  }
  mix(proposal_ ? 1 + static_cast<std::uint64_t>(*proposal_) : 0);
  mix(control_lost_);
  return h;
}

Observation observe(const Prompt& prompt, int score) {
  Observation o;
  o.kind = prompt.kind;
  o.legal = legal_actions(prompt);
  o.score = score;
  if (!prompt.trial) return o;
  const TrialSpec& t = *prompt.trial;
  o.address = t.address;
  o.mission_kind = t.mission_kind;
  o.cue_id = t.cue.id;
  o.signaled_rule = t.cue.signaled_rule;
  o.stimulus = t.stimulus;
  if (t.partner) {
    o.partner_type = t.partner->type;
    o.avatar_id = t.partner->avatar_id;
  }
  o.controllability = t.controllability;
  o.squeeze_prob = t.squeeze_prob;
  o.proposed = prompt.proposed;
  o.forced = prompt.forced;
  o.reason = prompt.reason;
  return o;
}

FeedbackView public_view(const Feedback& f) {
  return {f.address, f.correct, f.payoff, f.score, f.delegated, f.control_lost, f.proposal_correct, f.boundaries};
}

}  // namespace supertask
