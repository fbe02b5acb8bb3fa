#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "supertask/engine.hpp"

namespace supertask {

struct SwitchCostResult {
  double d_rt_ms = 0.0;  ///< mean correct RT(switch) - mean correct RT(repeat)
  double d_acc = 0.0;    ///< acc(switch) - acc(repeat)
  double sem_rt_ms = 0.0;
  double sem_acc = 0.0;
  int n_switch = 0;
  int n_repeat = 0;
  double rt_switch_ms = 0.0;
  double rt_repeat_ms = 0.0;
  double acc_switch = 0.0;
  double acc_repeat = 0.0;
};

/// Switch cost of one session over CUED_SWITCH trials. Trials without a
/// defined switch flag (first trials of blocks) are skipped; RT means use correct trials only. Within a
/// single session the SEMs are the standard errors of the two-condition
/// difference. Undefined (nullopt) unless both conditions have at least one
/// correct trial.
std::optional<SwitchCostResult> switch_cost(std::span<const TrialRecord> records);

/// Across-session summary: means of the per-session differences, the SEM of
/// those differences, and Cousineau-Morey within-subject SEMs per condition
/// (index 0 = switch, 1 = repeat).
struct SwitchCostAggregate {
  int n_sessions = 0;
  double d_rt_ms = 0.0;
  double d_acc = 0.0;
  double sem_d_rt_ms = 0.0;
  double sem_d_acc = 0.0;
  std::array<double, 2> rt_ms{};
  std::array<double, 2> rt_sem_within{};
  std::array<double, 2> acc{};
  std::array<double, 2> acc_sem_within{};
};

std::optional<SwitchCostAggregate> aggregate_switch_costs(std::span<const SwitchCostResult> sessions);

struct ErrorBreakdown {
  std::array<int, 4> counts{};  // indexed by ErrorClass
  std::array<double, 4> rates{};
  int total = 0;
};

ErrorBreakdown error_breakdown(std::span<const TrialRecord> records);

struct CurvePoint {
  int exposure_index = 0;
  std::optional<double> higher_order_acc;  // incongruent trials only
  std::optional<double> lower_order_acc;   // congruent trials only
  int n = 0;
  int n_higher = 0;
  int n_lower = 0;
  int higher_correct = 0;
  int lower_correct = 0;
  bool low_confidence = false;  // n < 5
};

struct LearningCurve {
  std::vector<CurvePoint> points;
};

/// Accuracy by the number of times the cue has been shown in its block. On
/// congruent codes a binary response cannot reveal which feature was used, so
/// those trials only feed the lower-order accuracy.
LearningCurve learning_curve(std::span<const TrialRecord> records);

/// Sums counts point-wise across curves (pooled over sessions).
LearningCurve pool_curves(std::span<const LearningCurve> curves);

/// Pooled higher-order accuracy over exposures in [first, last].
std::optional<double> higher_order_accuracy(const LearningCurve& curve, int first, int last);

/// Least-squares slope of higher-order accuracy against exposure index.
std::optional<double> curve_slope(const LearningCurve& curve);

struct TrustCell {
  PartnerType partner = PartnerType::kKind;
  Controllability phase = Controllability::kFull;
  int offers = 0;
  int engaged = 0;
  std::optional<double> p_engage;
};

struct TrustMatrix {
  std::array<TrustCell, 6> cells;  // partner-major: kind/full, kind/partial, clumsy/full, ...

  const TrustCell& at(PartnerType p, Controllability c) const {
    return cells[static_cast<std::size_t>(p) * 2 + static_cast<std::size_t>(c)];
  }
  /// P(ENGAGE | partner) pooled over phases.
  std::optional<double> engage_rate(PartnerType p) const;
};

/// P(ENGAGE | partner type, phase) over SOCIAL trials. from_fraction keeps only
/// the chronologically last (1 - from_fraction) share of SOCIAL trials, e.g.
/// 2.0/3.0 for the final third.
TrustMatrix trust_matrix(std::span<const TrialRecord> records, double from_fraction = 0.0);

/// KIND > CLUMSY > JERK on pooled engage rates; nullopt when a partner was
/// never offered.
std::optional<bool> trust_ordered(const TrustMatrix& matrix);

/// Time-binned P(ENGAGE | partner) over SOCIAL trials, for curve plots.
std::vector<std::array<std::optional<double>, 3>> trust_series(std::span<const TrialRecord> records, int n_bins);

struct AvoidanceRates {
  std::optional<double> full;
  std::optional<double> partial;
  int n_full = 0;
  int n_partial = 0;

  std::optional<double> delta() const {
    if (!full || !partial) return std::nullopt;
    return *partial - *full;
  }
};

/// Share of partner offers answered with AVOID, per controllability phase.
AvoidanceRates avoidance_rate(std::span<const TrialRecord> records);

struct AssociationResult {
  double r = 0.0;
  double p = 1.0;  ///< two-sided, Student t with n - 2 degrees of freedom
  int n = 0;
};

/// Throws std::invalid_argument for unequal lengths or n < 3. Returns nullopt
/// when either variable has zero variance.
std::optional<AssociationResult> pearson_r(std::span<const double> x, std::span<const double> y);

/// Cousineau normalisation with the Morey correction sqrt(C/(C-1)). Rows are
/// subjects, columns conditions. Throws std::invalid_argument for fewer than
/// two subjects or conditions, ragged rows, or missing (NaN) cells.
std::vector<double> within_subject_sem(const std::vector<std::vector<double>>& table);

}  // namespace supertask
