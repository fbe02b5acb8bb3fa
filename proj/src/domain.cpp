#include "supertask/domain.hpp"

#include <algorithm>
#include <stdexcept>

namespace supertask {

bool is_vowel(char letter) {
  return std::find(kVowels.begin(), kVowels.end(), letter) != kVowels.end();
}

bool is_consonant(char letter) {
  return std::find(kConsonants.begin(), kConsonants.end(), letter) != kConsonants.end();
}

namespace {

bool is_odd_digit(int d) { return std::find(kOddDigits.begin(), kOddDigits.end(), d) != kOddDigits.end(); }
bool is_even_digit(int d) {
  return std::find(kEvenDigits.begin(), kEvenDigits.end(), d) != kEvenDigits.end();
}

}  // namespace

bool is_valid(const CodeStimulus& s) {
  return (is_vowel(s.letter) || is_consonant(s.letter)) && (is_odd_digit(s.digit) || is_even_digit(s.digit)) &&
         s.degradation_permille <= 1000;
}

PartnerSpec default_partner(PartnerType type) {
  switch (type) {
    case PartnerType::kKind:
      return {type, Probability::from_ppm(850'000), 0};
    case PartnerType::kClumsy:
      return {type, Probability::from_ppm(550'000), 1};
    case PartnerType::kJerk:
      return {type, Probability::from_ppm(200'000), 2};
  }
  throw std::logic_error("unknown partner type");
}

std::array<PartnerSpec, 3> default_partner_roster() {
  return {default_partner(PartnerType::kKind), default_partner(PartnerType::kClumsy),
          default_partner(PartnerType::kJerk)};
}

std::optional<MissionKind> mission_kind_for(int mission_id) {
  switch (mission_id) {
    case 1:
      return MissionKind::kCuedSwitch;
    case 2:
      return MissionKind::kLearnedRule;
    case 3:
      return MissionKind::kSocial;
    default:
      return std::nullopt;
  }
}

ResponseSide classify(const CodeStimulus& stimulus, Rule rule) {
  if (rule == Rule::kLetter) return is_vowel(stimulus.letter) ? ResponseSide::kLeft : ResponseSide::kRight;
  return (stimulus.digit % 2 == 1) ? ResponseSide::kLeft : ResponseSide::kRight;
}

Congruency congruency_of(const CodeStimulus& stimulus) {
  return classify(stimulus, Rule::kLetter) == classify(stimulus, Rule::kNumber) ? Congruency::kCongruent
                                                                                  : Congruency::kIncongruent;
}

ErrorClass error_taxonomy(const TrialSpec& trial, ResponseSide response, std::optional<Rule> prev_rule) {
  const bool is_switch = trial.is_switch.value_or(false);
  if (is_switch && !prev_rule) throw std::invalid_argument("switch trial without a previous rule");

  if (response == classify(trial.stimulus, trial.cue.true_rule)) return ErrorClass::kNone;
  if (congruency_of(trial.stimulus) == Congruency::kCongruent) return ErrorClass::kLowerOrder;

  // Incongruent and wrong: the response is what the other rule prescribes.
  const Rule applied = other_rule(trial.cue.true_rule);
  if (is_switch && applied == *prev_rule) return ErrorClass::kOutContext;
  return ErrorClass::kHigherOrder;
}

std::vector<std::string> validate_mission(const MissionSpec& spec) {
  std::vector<std::string> out;
  const auto kind = mission_kind_for(spec.mission_id);
  if (!kind) out.push_back("mission_id must be 1, 2 or 3 (got " + std::to_string(spec.mission_id) + ")");
  if (spec.blocks.empty()) out.push_back("mission has no blocks");
  if (spec.reward_correct < 0) out.push_back("reward_correct must be non-negative");
  if (spec.penalty_error < 0) out.push_back("penalty_error must be non-negative");
  if (spec.avoid_cost < 0) out.push_back("avoid_cost must be non-negative");
  if (spec.check_cost < 0) out.push_back("check_cost must be non-negative");

  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const BlockSpec& b = spec.blocks[i];
    const std::string where = "block " + std::to_string(i) + ": ";
    if (b.index != static_cast<int>(i)) out.push_back(where + "index must equal its position");
    if (b.n_trials < 2) out.push_back(where + "n_trials must be at least 2");
    if (kind && b.mission_kind != *kind) {
      out.push_back(where + "mission_kind " + std::string(to_string(b.mission_kind)) +
                    " inconsistent with mission " + std::to_string(spec.mission_id));
    }
    if (b.mission_kind != MissionKind::kCuedSwitch && b.cue_set_size < 2)
      out.push_back(where + "cue_set_size must be at least 2");
    if (b.mission_kind == MissionKind::kSocial && !b.controllability)
      out.push_back(where + "SOCIAL block requires controllability");
  }
  return out;
}

MissionSpec default_mission(int mission_id) {
  MissionSpec m;
  m.mission_id = mission_id;
  switch (mission_id) {
    case 1:
      for (int i = 0; i < 3; ++i) m.blocks.push_back({.index = i, .n_trials = 48, .mission_kind = MissionKind::kCuedSwitch});
      break;
    case 2:
      for (int i = 0; i < 3; ++i) {
        m.blocks.push_back({.index = i, .n_trials = 60, .mission_kind = MissionKind::kLearnedRule, .cue_set_size = i + 2});
      }
      break;
    case 3:
      m.blocks.push_back({.index = 0,
                          .n_trials = 60,
                          .mission_kind = MissionKind::kSocial,
                          .cue_set_size = 2,
                          .controllability = Controllability::kFull});
      m.blocks.push_back({.index = 1,
                          .n_trials = 60,
                          .mission_kind = MissionKind::kSocial,
                          .cue_set_size = 2,
                          .controllability = Controllability::kPartial,
                          .squeeze_prob = Probability::from_ppm(800'000)});
      break;
    default:
      throw std::invalid_argument("no default layout for mission " + std::to_string(mission_id));
  }
  return m;
}

}  // namespace supertask
