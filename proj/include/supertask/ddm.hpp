#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "supertask/domain.hpp"
#include "supertask/rng.hpp"

namespace supertask {

/// Two-boundary drift diffusion. Evidence starts at z and is absorbed at 0
/// (error) or a (correct). Drift is signed toward the correct boundary.
struct DdmParams {
  double v = 0.25;              ///< drift, evidence units per second
  double a = 0.12;              ///< boundary separation
  std::optional<double> z;      ///< start point; a/2 when unset
  double ter_ms = 300.0;        ///< non-decision time
  double s = 0.1;               ///< diffusion scale
  double dt_ms = 1.0;           ///< Euler-Maruyama step

  double start() const { return z.value_or(a / 2.0); }
};

/// Throws std::invalid_argument on a > 0, 0 < z < a, ter >= 0, s > 0, dt > 0 violations.
void validate(const DdmParams& params);

inline constexpr double kDdmTimeoutMs = 10'000.0;

struct DdmTrialResult {
  bool correct = false;
  std::int64_t rt_ms = 0;  ///< first passage plus non-decision time, rounded up
  bool timed_out = false;  ///< walk hit the 10 s cap; counted as an error
};

DdmTrialResult simulate_ddm(const DdmParams& params, Rng& rng);

/// Unbiased-start accuracy 1 / (1 + exp(-v a / s^2)).
double ddm_accuracy_closed_form(double v, double a, double s);

/// Drift slowed by 0.5 on switch trials and by 0.8 on incongruent trials.
DdmParams switch_drift(const DdmParams& base, bool is_switch, Congruency congruency);

/// Accuracies of exactly 0, 0.5 or 1 move 1/(2n) into the open interval.
double edge_correct(double pc, int n);

struct EzEstimate {
  double v = 0.0;
  double a = 0.0;
  double ter_s = 0.0;
};

/// Closed-form EZ-diffusion inversion from accuracy, variance and mean of
/// correct RTs (seconds). Throws std::invalid_argument for n < 10,
/// vrt_s2 <= 0, or degenerate moments.
EzEstimate ez_fit(double pc, double vrt_s2, double mrt_s, double s, int n);

/// Accuracy plus mean and variance of correct RTs in seconds.
struct EzStats {
  double pc = 0.0;
  double mrt_s = 0.0;
  double vrt_s2 = 0.0;
  int n = 0;
  int n_correct = 0;
};

EzStats ez_stats(std::span<const DdmTrialResult> trials);

}  // namespace supertask
