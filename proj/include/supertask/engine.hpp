#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "supertask/domain.hpp"
#include "supertask/rng.hpp"

namespace supertask {

struct SessionConfig {
  std::vector<MissionSpec> missions;
  std::uint64_t seed = 0;
  std::array<PartnerSpec, 3> partners = default_partner_roster();  // indexed by PartnerType
  std::uint16_t max_degradation_permille = 400;

  friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

/// Default layouts for the requested missions, in the given order.
SessionConfig default_session_config(std::uint64_t seed, const std::vector<int>& mission_ids = {1, 2, 3});

std::vector<std::string> validate_config(const SessionConfig& config);

enum class PromptKind : std::uint8_t { kTrialPresent, kPartnerOffer, kProposalReview, kSelfSolve, kSessionEnd };
enum class SelfSolveReason : std::uint8_t { kAvoid, kCheck };
enum class ActionKind : std::uint8_t { kRespond, kAvoid, kEngage, kAccept, kSelfSolve, kCheck };

template <>
struct EnumNames<PromptKind> {
  static constexpr std::array<std::string_view, 5> names{"TRIAL_PRESENT", "PARTNER_OFFER", "PROPOSAL_REVIEW",
                                                         "SELF_SOLVE", "SESSION_END"};
};
template <>
struct EnumNames<SelfSolveReason> {
  static constexpr std::array<std::string_view, 2> names{"AVOID", "CHECK"};
};
template <>
struct EnumNames<ActionKind> {
  static constexpr std::array<std::string_view, 6> names{"RESPOND", "AVOID",      "ENGAGE",
                                                         "ACCEPT",  "SELF_SOLVE", "CHECK"};
};

struct Prompt {
  PromptKind kind = PromptKind::kSessionEnd;
  std::optional<TrialSpec> trial;
  std::optional<ResponseSide> proposed;       // PROPOSAL_REVIEW
  bool forced = false;                        // PROPOSAL_REVIEW under a squeeze
  std::optional<SelfSolveReason> reason;      // SELF_SOLVE

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

struct PlayerAction {
  ActionKind kind = ActionKind::kRespond;
  std::optional<ResponseSide> side;  // RESPOND only
  std::int64_t rt_ms = 0;

  static PlayerAction respond(ResponseSide side, std::int64_t rt_ms) { return {ActionKind::kRespond, side, rt_ms}; }
  static PlayerAction of(ActionKind kind, std::int64_t rt_ms) { return {kind, std::nullopt, rt_ms}; }

  friend bool operator==(const PlayerAction&, const PlayerAction&) = default;
};

/// Normative legality table. Terminal prompts accept nothing.
std::vector<ActionKind> legal_actions(const Prompt& prompt);

struct BoundaryEvent {
  enum class Kind : std::uint8_t { kBlockEnd, kMissionEnd };
  Kind kind = Kind::kBlockEnd;
  int mission_id = 0;
  int block_index = -1;  // -1 for mission ends
  int points = 0;        // points earned inside the finished block or mission

  friend bool operator==(const BoundaryEvent&, const BoundaryEvent&) = default;
};

/// One resolved trial: the unit of all analytics and fitting.
struct TrialRecord {
  TrialAddress address;
  MissionKind mission_kind = MissionKind::kCuedSwitch;
  int cue_id = 0;
  std::optional<Rule> signaled_rule;
  Rule true_rule = Rule::kLetter;
  CodeStimulus stimulus;
  Congruency congruency = Congruency::kCongruent;
  std::optional<bool> is_switch;
  std::vector<PlayerAction> actions;
  ResponseSide final_response = ResponseSide::kLeft;
  bool correct = false;
  ErrorClass error_class = ErrorClass::kNone;
  int payoff = 0;
  std::optional<PartnerType> partner_type;
  std::optional<Controllability> controllability;
  std::optional<ResponseSide> proposal;
  bool delegated = false;
  bool control_lost = false;
  std::int64_t rt_ms = 0;  // decisive action

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct Feedback {
  TrialAddress address;
  bool correct = false;
  int payoff = 0;
  int score = 0;
  ErrorClass error_class = ErrorClass::kNone;
  bool delegated = false;
  bool control_lost = false;
  std::optional<bool> proposal_correct;
  std::vector<BoundaryEvent> boundaries;

  friend bool operator==(const Feedback&, const Feedback&) = default;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Raised for actions that the pending prompt does not accept. The session is
/// left untouched.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& what, std::vector<ActionKind> legal)
      : std::runtime_error(what), legal_(std::move(legal)) {}
  const std::vector<ActionKind>& legal() const { return legal_; }

 private:
  std::vector<ActionKind> legal_;
};

struct TrialGenOptions {
  std::array<PartnerSpec, 3> partners = default_partner_roster();
  std::uint16_t max_degradation_permille = 400;
};

/// Builds one block. Congruency is counterbalanced (floor(n/2) congruent) for
/// every mission kind. CUED_SWITCH draws rules i.i.d.; LEARNED_RULE and SOCIAL
/// draw a fixed cue->rule map and a balanced cue sequence; SOCIAL also draws a
/// partner type uniformly per trial.
std::vector<TrialSpec> generate_block_trials(int mission_id, const BlockSpec& block, Rng& rng,
                                             const TrialGenOptions& options = {});

/// Correct side with probability p_correct, otherwise the opposite side.
ResponseSide partner_propose(const PartnerSpec& partner, const TrialSpec& trial, Rng& rng);

/// A running Supertask session. Actions must be applied serially; copies are
/// independent.
class Session {
 public:
  /// Throws ConfigError when any mission fails validation.
  explicit Session(SessionConfig config);

  const SessionConfig& config() const { return config_; }
  const Prompt& prompt() const { return prompt_; }
  std::vector<ActionKind> legal() const { return legal_actions(prompt_); }
  bool finished() const { return prompt_.kind == PromptKind::kSessionEnd; }
  int score() const { return score_; }
  const std::vector<TrialRecord>& history() const { return history_; }
  const MissionSpec& current_mission() const { return config_.missions[mission_pos_]; }

  /// Applies one action. Returns feedback when the action resolved a trial.
  /// Throws ProtocolError (with no state change) for illegal actions.
  std::optional<Feedback> submit(const PlayerAction& action);

  /// Fingerprint of the mutable state, used to check that rejected input
  /// leaves a session untouched.
  std::uint64_t state_hash() const;

 private:
  void enter_block();
  void present_current_trial();
  Feedback resolve(ResponseSide response, int cost, bool delegated);

  SessionConfig config_;
  std::size_t mission_pos_ = 0;
  std::size_t block_pos_ = 0;
  std::size_t trial_pos_ = 0;
  std::vector<TrialSpec> trials_;
  Prompt prompt_;
  int score_ = 0;
  int block_points_ = 0;
  int mission_points_ = 0;
  std::vector<TrialRecord> history_;

  // In-flight trial.
  std::vector<PlayerAction> trace_;
  std::optional<ResponseSide> proposal_;
  bool control_lost_ = false;
};

inline Session start_session(SessionConfig config) { return Session(std::move(config)); }

/// What a player is allowed to see of a prompt: no true rule, no switch flag,
/// no partner reliability.
struct Observation {
  PromptKind kind = PromptKind::kSessionEnd;
  TrialAddress address;
  MissionKind mission_kind = MissionKind::kCuedSwitch;
  int cue_id = 0;
  std::optional<Rule> signaled_rule;
  CodeStimulus stimulus;
  std::optional<PartnerType> partner_type;
  std::optional<int> avatar_id;
  std::optional<Controllability> controllability;
  Probability squeeze_prob;
  std::optional<ResponseSide> proposed;
  bool forced = false;
  std::optional<SelfSolveReason> reason;
  std::vector<ActionKind> legal;
  int score = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

Observation observe(const Prompt& prompt, int score);
inline Observation observe(const Session& s) { return observe(s.prompt(), s.score()); }

/// Trial feedback minus the error class (which would reveal the rule).
struct FeedbackView {
  TrialAddress address;
  bool correct = false;
  int payoff = 0;
  int score = 0;
  bool delegated = false;
  bool control_lost = false;
  std::optional<bool> proposal_correct;
  std::vector<BoundaryEvent> boundaries;

  friend bool operator==(const FeedbackView&, const FeedbackView&) = default;
};

FeedbackView public_view(const Feedback& feedback);

}  // namespace supertask
