#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "supertask/rng.hpp"

namespace supertask {

enum class Rule : std::uint8_t { kLetter, kNumber };
enum class ResponseSide : std::uint8_t { kLeft, kRight };
enum class Congruency : std::uint8_t { kCongruent, kIncongruent };
enum class ErrorClass : std::uint8_t { kNone, kLowerOrder, kHigherOrder, kOutContext };
enum class PartnerType : std::uint8_t { kKind, kClumsy, kJerk };
enum class MissionKind : std::uint8_t { kCuedSwitch, kLearnedRule, kSocial };
enum class Controllability : std::uint8_t { kFull, kPartial };

// Wire/log names for each enum. Order matches the enumerator values.
template <class E>
struct EnumNames;

template <>
struct EnumNames<Rule> {
  static constexpr std::array<std::string_view, 2> names{"LETTER", "NUMBER"};
};
template <>
struct EnumNames<ResponseSide> {
  static constexpr std::array<std::string_view, 2> names{"LEFT", "RIGHT"};
};
template <>
struct EnumNames<Congruency> {
  static constexpr std::array<std::string_view, 2> names{"CONGRUENT", "INCONGRUENT"};
};
template <>
struct EnumNames<ErrorClass> {
  static constexpr std::array<std::string_view, 4> names{"NONE", "LOWER_ORDER", "HIGHER_ORDER",
                                                         "OUT_CONTEXT"};
};
template <>
struct EnumNames<PartnerType> {
  static constexpr std::array<std::string_view, 3> names{"KIND", "CLUMSY", "JERK"};
};
template <>
struct EnumNames<MissionKind> {
  static constexpr std::array<std::string_view, 3> names{"CUED_SWITCH", "LEARNED_RULE", "SOCIAL"};
};
template <>
struct EnumNames<Controllability> {
  static constexpr std::array<std::string_view, 2> names{"FULL", "PARTIAL"};
};

template <class E>
constexpr std::string_view to_string(E value) {
  return EnumNames<E>::names[static_cast<std::size_t>(value)];
}

template <class E>
constexpr std::optional<E> parse_enum(std::string_view text) {
  const auto& names = EnumNames<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  return std::nullopt;
}

template <class E>
constexpr std::size_t enum_count() {
  return EnumNames<E>::names.size();
}

constexpr Rule other_rule(Rule r) { return r == Rule::kLetter ? Rule::kNumber : Rule::kLetter; }
constexpr ResponseSide opposite(ResponseSide s) {
  return s == ResponseSide::kLeft ? ResponseSide::kRight : ResponseSide::kLeft;
}

// Code alphabet: two balanced classes per feature.
inline constexpr std::array<char, 4> kVowels{'A', 'E', 'I', 'U'};
inline constexpr std::array<char, 4> kConsonants{'G', 'K', 'M', 'R'};
inline constexpr std::array<int, 4> kOddDigits{1, 3, 5, 7};
inline constexpr std::array<int, 4> kEvenDigits{2, 4, 6, 8};

/// The letter+digit code a player decodes on each trial.
struct CodeStimulus {
  char letter = 'A';
  int digit = 1;
  std::uint16_t degradation_permille = 0;  ///< perceptual difficulty, 0..1000

  double degradation() const { return degradation_permille / 1000.0; }

  friend bool operator==(const CodeStimulus&, const CodeStimulus&) = default;
};

bool is_vowel(char letter);
bool is_consonant(char letter);
bool is_valid(const CodeStimulus& stimulus);

struct Cue {
  int id = 0;
  std::optional<Rule> signaled_rule;
  Rule true_rule = Rule::kLetter;

  friend bool operator==(const Cue&, const Cue&) = default;
};

struct PartnerSpec {
  PartnerType type = PartnerType::kKind;
  Probability p_correct;
  int avatar_id = 0;

  friend bool operator==(const PartnerSpec&, const PartnerSpec&) = default;
};

/// Default reliabilities: kind 0.85, clumsy 0.55, jerk 0.20.
PartnerSpec default_partner(PartnerType type);
std::array<PartnerSpec, 3> default_partner_roster();

struct BlockSpec {
  int index = 0;
  int n_trials = 0;
  MissionKind mission_kind = MissionKind::kCuedSwitch;
  int cue_set_size = 2;                            // LEARNED_RULE and SOCIAL
  std::optional<Controllability> controllability;  // SOCIAL only
  Probability squeeze_prob;                        // PARTIAL only

  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

struct MissionSpec {
  int mission_id = 1;
  std::vector<BlockSpec> blocks;
  int reward_correct = 10;
  int penalty_error = 10;
  int avoid_cost = 2;
  int check_cost = 2;

  friend bool operator==(const MissionSpec&, const MissionSpec&) = default;
};

std::optional<MissionKind> mission_kind_for(int mission_id);

struct TrialAddress {
  int mission_id = 0;
  int block_index = 0;
  int trial_index = 0;

  friend auto operator<=>(const TrialAddress&, const TrialAddress&) = default;
};

struct TrialSpec {
  TrialAddress address;
  MissionKind mission_kind = MissionKind::kCuedSwitch;
  Cue cue;
  CodeStimulus stimulus;
  std::optional<bool> is_switch;  // undefined on the first trial of a block
  Congruency congruency = Congruency::kCongruent;
  std::optional<PartnerSpec> partner;
  std::optional<Controllability> controllability;
  Probability squeeze_prob;

  friend bool operator==(const TrialSpec&, const TrialSpec&) = default;
};

/// LETTER: vowel -> LEFT, consonant -> RIGHT. NUMBER: odd -> LEFT, even -> RIGHT.
ResponseSide classify(const CodeStimulus& stimulus, Rule rule);

Congruency congruency_of(const CodeStimulus& stimulus);

/// Attributes a response to an error class. Throws std::invalid_argument when
/// the trial is a switch trial but no previous rule is supplied.
ErrorClass error_taxonomy(const TrialSpec& trial, ResponseSide response,
                          std::optional<Rule> prev_rule);

/// Returns every invariant violation of the mission (empty means valid).
std::vector<std::string> validate_mission(const MissionSpec& spec);

/// Default mission layouts: M1 3x48 cued switching, M2 3x60 with cue sets of
/// 2, 3, 4, M3 2x60 with full then partial control (squeeze 0.8).
MissionSpec default_mission(int mission_id);

}  // namespace supertask
