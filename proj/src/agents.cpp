#include "supertask/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace supertask {

std::vector<double> softmax(std::span<const double> values, double beta) {
  std::vector<double> p(values.size());
  if (values.empty()) return p;
  const double m = beta * *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    p[i] = std::exp(beta * values[i] - m);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

double q_update(double q, double reward, double alpha) { return q + alpha * (reward - q); }

std::array<double, 2> HierQState::values(const CueKey& key) const {
  auto it = q.find(key);
  return it == q.end() ? std::array<double, 2>{0.0, 0.0} : it->second;
}

PlayerAction hier_q_act(const HierQState& state, const Observation& obs, Rng& rng, const DdmParams& rt_model) {
  Rule rule;
  if (obs.signaled_rule) {
    rule = *obs.signaled_rule;
  } else {
    const auto q = state.values({obs.address.mission_id, obs.address.block_index, obs.cue_id});
    const auto p = softmax(q, state.beta);
    rule = rng.uniform() < p[0] ? Rule::kLetter : Rule::kNumber;
  }
  ResponseSide side = classify(obs.stimulus, rule);
  if (rng.bernoulli(state.lapse)) side = rng.below(2) == 0 ? ResponseSide::kLeft : ResponseSide::kRight;
  return PlayerAction::respond(side, simulate_ddm(rt_model, rng).rt_ms);
}

void hier_q_learn(HierQState& state, const CueKey& key, const CodeStimulus& stimulus, ResponseSide response,
                  bool correct) {
  auto [it, inserted] = state.q.try_emplace(key, std::array<double, 2>{0.0, 0.0});
  const double reward = correct ? 1.0 : -1.0;
  for (Rule r : {Rule::kLetter, Rule::kNumber}) {
    if (classify(stimulus, r) == response) {
      auto& q = it->second[static_cast<std::size_t>(r)];
      q = q_update(q, reward, state.alpha);
    }
  }
}

PartnerBeliefState belief_update(PartnerBeliefState state, PartnerType partner, bool proposal_was_correct) {
  auto& b = state.beliefs[static_cast<std::size_t>(partner)];
  if (proposal_was_correct) {
    b.a += 1.0;
  } else {
    b.b += 1.0;
  }
  return state;
}

double engage_advantage(const PartnerBeliefState& st, PartnerType partner, Controllability control,
                        Probability squeeze_prob) {
  const double p_hat = st.beliefs[static_cast<std::size_t>(partner)].mean();
  const double expected_loss = control == Controllability::kPartial ? squeeze_prob.value() : 0.0;
  const double ev_engage = p_hat * st.reward - (1.0 - p_hat) * st.penalty - st.kappa * expected_loss;
  const double ev_avoid = st.p_self * st.reward - (1.0 - st.p_self) * st.penalty - st.avoid_cost;
  return ev_engage - ev_avoid;
}

ActionKind delegation_decision(const PartnerBeliefState& state, PartnerType partner, Controllability control,
                               Probability squeeze_prob) {
  return engage_advantage(state, partner, control, squeeze_prob) > 0.0 ? ActionKind::kEngage : ActionKind::kAvoid;
}

PlayerAction random_act(const Observation& obs, Rng& rng) {
  if (obs.legal.empty()) throw std::logic_error("random_act: no legal action at " + std::string(to_string(obs.kind)));
  PlayerAction a;
  a.kind = obs.legal[rng.below(obs.legal.size())];
  if (a.kind == ActionKind::kRespond) a.side = rng.below(2) == 0 ? ResponseSide::kLeft : ResponseSide::kRight;
  a.rt_ms = rng.between(300, 1500);
  return a;
}

namespace {

double param(const std::map<std::string, double>& p, const std::string& name) { return p.at(name); }

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

DdmParams rt_model_from(const std::map<std::string, double>& p) {
  DdmParams d;
  d.v = param(p, "v");
  d.a = param(p, "a");
  d.ter_ms = param(p, "ter_ms");
  validate(d);
  return d;
}

// Shared fallback for rule application when no learning is involved.
Rule signaled_or_guess(const Observation& obs, Rng& rng) {
  if (obs.signaled_rule) return *obs.signaled_rule;
  return rng.below(2) == 0 ? Rule::kLetter : Rule::kNumber;
}

std::int64_t meta_decision_rt(Rng& rng) { return rng.between(300, 900); }

class RandomAgent final : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
  AgentKind kind() const override { return AgentKind::kRandom; }
  PlayerAction act(const Observation& obs) override { return random_act(obs, rng_); }

 private:
  Rng rng_;
};

/// Applies the cued rule through a diffusion process whose drift is slowed on
/// switches and incongruent codes. Never delegates.
class InstructedDdmAgent final : public Agent {
 public:
  InstructedDdmAgent(const std::map<std::string, double>& p, std::uint64_t seed)
      : base_(rt_model_from(p)), rng_(seed) {}
  AgentKind kind() const override { return AgentKind::kInstructedDdm; }

  PlayerAction act(const Observation& obs) override {
    switch (obs.kind) {
      case PromptKind::kPartnerOffer:
        return PlayerAction::of(ActionKind::kAvoid, meta_decision_rt(rng_));
      case PromptKind::kProposalReview:
        return PlayerAction::of(ActionKind::kAccept, obs.forced ? 0 : meta_decision_rt(rng_));
      case PromptKind::kTrialPresent:
      case PromptKind::kSelfSolve:
        break;
      case PromptKind::kSessionEnd:
        throw std::logic_error("act() called on a finished session");
    }
    const Rule rule = signaled_or_guess(obs, rng_);
    const bool same_block = last_block_ && *last_block_ == std::pair(obs.address.mission_id, obs.address.block_index);
    const bool is_switch = same_block && last_rule_ && *last_rule_ != rule;
    last_block_ = std::pair(obs.address.mission_id, obs.address.block_index);
    last_rule_ = rule;

    const auto result = simulate_ddm(switch_drift(base_, is_switch, congruency_of(obs.stimulus)), rng_);
    const ResponseSide side = classify(obs.stimulus, rule);
    return PlayerAction::respond(result.correct ? side : opposite(side), result.rt_ms);
  }

 private:
  DdmParams base_;
  Rng rng_;
  std::optional<std::pair<int, int>> last_block_;
  std::optional<Rule> last_rule_;
};

/// Learns cue -> rule values from binary feedback. Solves social trials alone.
class HierQAgent final : public Agent {
 public:
  HierQAgent(const std::map<std::string, double>& p, std::uint64_t seed) : rt_model_(rt_model_from(p)), rng_(seed) {
    state_.alpha = param(p, "alpha");
    state_.beta = param(p, "beta");
    state_.lapse = param(p, "lapse");
  }
  AgentKind kind() const override { return AgentKind::kHierQ; }
  const HierQState& state() const { return state_; }

  PlayerAction act(const Observation& obs) override {
    switch (obs.kind) {
      case PromptKind::kPartnerOffer:
        return PlayerAction::of(ActionKind::kAvoid, meta_decision_rt(rng_));
      case PromptKind::kProposalReview:
        pending_.reset();
        return PlayerAction::of(ActionKind::kAccept, obs.forced ? 0 : meta_decision_rt(rng_));
      case PromptKind::kTrialPresent:
      case PromptKind::kSelfSolve:
        break;
      case PromptKind::kSessionEnd:
        throw std::logic_error("act() called on a finished session");
    }
    PlayerAction a = hier_q_act(state_, obs, rng_, rt_model_);
    pending_ = Pending{{obs.address.mission_id, obs.address.block_index, obs.cue_id}, obs.stimulus, *a.side};
    return a;
  }

  void learn(const FeedbackView& fb) override {
    if (pending_ && !fb.delegated) hier_q_learn(state_, pending_->key, pending_->stimulus, pending_->response, fb.correct);
    pending_.reset();
  }

 private:
  struct Pending {
    CueKey key;
    CodeStimulus stimulus;
    ResponseSide response;
  };
  HierQState state_;
  DdmParams rt_model_;
  Rng rng_;
  std::optional<Pending> pending_;
};

/// Bayesian partner model with an expected-value delegation policy. The
/// choice is a logistic function of the EV advantage with slope
/// decision_beta; an infinite slope gives the deterministic rule.
class PartnerBeliefAgent final : public Agent {
 public:
  PartnerBeliefAgent(const std::map<std::string, double>& p, std::uint64_t seed)
      : rt_model_(rt_model_from(p)), decision_beta_(param(p, "decision_beta")), rng_(seed) {
    state_.kappa = param(p, "kappa");
    state_.p_self = param(p, "p_self");
  }
  AgentKind kind() const override { return AgentKind::kPartnerBelief; }
  const PartnerBeliefState& state() const { return state_; }

  PlayerAction act(const Observation& obs) override {
    switch (obs.kind) {
      case PromptKind::kPartnerOffer: {
        partner_ = obs.partner_type;
        const auto control = obs.controllability.value_or(Controllability::kFull);
        ActionKind choice;
        if (std::isinf(decision_beta_)) {
          choice = delegation_decision(state_, *obs.partner_type, control, obs.squeeze_prob);
        } else {
          const double adv = engage_advantage(state_, *obs.partner_type, control, obs.squeeze_prob);
          const double p_engage = 1.0 / (1.0 + std::exp(-decision_beta_ * adv));
          choice = rng_.uniform() < p_engage ? ActionKind::kEngage : ActionKind::kAvoid;
        }
        return PlayerAction::of(choice, meta_decision_rt(rng_));
      }
      case PromptKind::kProposalReview: {
        if (obs.forced) return PlayerAction::of(ActionKind::kAccept, 0);
        const double p_hat = state_.beliefs[static_cast<std::size_t>(*partner_)].mean();
        const double ev_accept = p_hat * state_.reward - (1.0 - p_hat) * state_.penalty;
        const double ev_check =
            state_.p_self * state_.reward - (1.0 - state_.p_self) * state_.penalty - state_.check_cost;
        return PlayerAction::of(ev_accept > ev_check ? ActionKind::kAccept : ActionKind::kCheck,
                                meta_decision_rt(rng_));
      }
      case PromptKind::kTrialPresent:
      case PromptKind::kSelfSolve: {
        const Rule rule = signaled_or_guess(obs, rng_);
        return PlayerAction::respond(classify(obs.stimulus, rule), simulate_ddm(rt_model_, rng_).rt_ms);
      }
      case PromptKind::kSessionEnd:
        break;
    }
    throw std::logic_error("act() called on a finished session");
  }

  void learn(const FeedbackView& fb) override {
    if (partner_ && fb.proposal_correct) state_ = belief_update(state_, *partner_, *fb.proposal_correct);
    partner_.reset();
  }

 private:
  PartnerBeliefState state_;
  DdmParams rt_model_;
  double decision_beta_;
  Rng rng_;
  std::optional<PartnerType> partner_;
};

}  // namespace

std::map<std::string, double> default_agent_params(AgentKind kind) {
  const std::map<std::string, double> rt{{"v", 0.25}, {"a", 0.12}, {"ter_ms", 300.0}};
  std::map<std::string, double> out;
  switch (kind) {
    case AgentKind::kRandom:
      return out;
    case AgentKind::kInstructedDdm:
      return rt;
    case AgentKind::kHierQ:
      out = rt;
      out.insert({{"alpha", 0.3}, {"beta", 6.0}, {"lapse", 0.02}});
      return out;
    case AgentKind::kPartnerBelief:
      out = rt;
      out.insert({{"kappa", 0.0}, {"p_self", 0.8}, {"decision_beta", 0.2}});
      return out;
  }
  return out;
}

std::unique_ptr<Agent> make_agent(const AgentConfig& config) {
  auto params = default_agent_params(config.kind);
  for (const auto& [name, value] : config.params) {
    auto it = params.find(name);
    require(it != params.end(),
            "unknown parameter '" + name + "' for agent " + std::string(to_string(config.kind)));
    it->second = value;
  }
  auto has = [&](const char* n) { return params.count(n) > 0; };
  if (has("alpha")) require(params["alpha"] > 0.0 && params["alpha"] <= 1.0, "alpha must be in (0, 1]");
  if (has("beta")) require(params["beta"] >= 0.0 && std::isfinite(params["beta"]), "beta must be >= 0");
  if (has("lapse")) require(params["lapse"] >= 0.0 && params["lapse"] <= 0.5, "lapse must be in [0, 0.5]");
  if (has("kappa")) require(params["kappa"] >= 0.0 && std::isfinite(params["kappa"]), "kappa must be >= 0");
  if (has("p_self")) require(params["p_self"] >= 0.0 && params["p_self"] <= 1.0, "p_self must be in [0, 1]");
  if (has("decision_beta")) require(params["decision_beta"] >= 0.0, "decision_beta must be >= 0");

  switch (config.kind) {
    case AgentKind::kRandom:
      return std::make_unique<RandomAgent>(config.seed);
    case AgentKind::kInstructedDdm:
      return std::make_unique<InstructedDdmAgent>(params, config.seed);
    case AgentKind::kHierQ:
      return std::make_unique<HierQAgent>(params, config.seed);
    case AgentKind::kPartnerBelief:
      return std::make_unique<PartnerBeliefAgent>(params, config.seed);
  }
  throw std::invalid_argument("unknown agent kind");
}

}  // namespace supertask
