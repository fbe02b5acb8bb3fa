#pragma once

#include <array>
#include <compare>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "supertask/ddm.hpp"
#include "supertask/engine.hpp"

namespace supertask {

enum class AgentKind : std::uint8_t { kRandom, kInstructedDdm, kHierQ, kPartnerBelief };

template <>
struct EnumNames<AgentKind> {
  static constexpr std::array<std::string_view, 4> names{"random", "instructed_ddm", "hier_q", "partner_belief"};
};

/// Overflow-safe softmax: exp(beta v_i - beta max v) normalised.
std::vector<double> softmax(std::span<const double> values, double beta);

/// Delta rule q + alpha (reward - q).
double q_update(double q, double reward, double alpha);

/// Q-table key. Cue ids are only dense within a block, so the block is part of
/// the identity of a cue.
struct CueKey {
  int mission_id = 0;
  int block_index = 0;
  int cue_id = 0;

  friend auto operator<=>(const CueKey&, const CueKey&) = default;
};

struct HierQState {
  std::map<CueKey, std::array<double, 2>> q;  // indexed by Rule
  double alpha = 0.3;
  double beta = 6.0;
  double lapse = 0.02;

  std::array<double, 2> values(const CueKey& key) const;
};

/// Picks a rule (the signalled one if present, otherwise softmax over Q), then
/// responds with that rule's side; with probability lapse the side is a coin flip.
PlayerAction hier_q_act(const HierQState& state, const Observation& obs, Rng& rng, const DdmParams& rt_model);

/// Credits every rule whose mapping produces the emitted response, using the
/// reward normalised to +/-1. The update depends only on observables, so a
/// likelihood can replay it exactly.
void hier_q_learn(HierQState& state, const CueKey& key, const CodeStimulus& stimulus, ResponseSide response,
                  bool correct);

struct BetaBelief {
  double a = 1.0;
  double b = 1.0;
  double mean() const { return a / (a + b); }

  friend bool operator==(const BetaBelief&, const BetaBelief&) = default;
};

struct PartnerBeliefState {
  std::array<BetaBelief, 3> beliefs;  // indexed by PartnerType
  double kappa = 0.0;                 // control-loss penalty, points
  double p_self = 0.8;                // own solve accuracy estimate
  int reward = 10;
  int penalty = 10;
  int avoid_cost = 2;
  int check_cost = 2;
};

PartnerBeliefState belief_update(PartnerBeliefState state, PartnerType partner, bool proposal_was_correct);

/// EV(engage) - EV(avoid) for the partner, with the control-loss penalty
/// kappa * squeeze_prob applied under partial control.
double engage_advantage(const PartnerBeliefState& state, PartnerType partner, Controllability control,
                        Probability squeeze_prob);

/// ENGAGE when EV(engage) > EV(avoid); ties go to AVOID.
ActionKind delegation_decision(const PartnerBeliefState& state, PartnerType partner, Controllability control,
                               Probability squeeze_prob);

/// Uniform over the legal actions, uniform side, rt uniform on [300, 1500] ms.
PlayerAction random_act(const Observation& obs, Rng& rng);

/// A player driven by observations. The same interface is used in process and
/// by remote clients of the session service.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual AgentKind kind() const = 0;
  virtual PlayerAction act(const Observation& obs) = 0;
  /// Called with the feedback of every resolved trial.
  virtual void learn(const FeedbackView& feedback) { (void)feedback; }
};

struct AgentConfig {
  AgentKind kind = AgentKind::kRandom;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
};

/// Parameter names accepted by each agent kind, with defaults.
std::map<std::string, double> default_agent_params(AgentKind kind);

/// Throws std::invalid_argument for unknown parameter names or values outside
/// the documented ranges.
std::unique_ptr<Agent> make_agent(const AgentConfig& config);

}  // namespace supertask
