#include "supertask/ddm.hpp"

#include <cmath>
#include <stdexcept>

namespace supertask {

void validate(const DdmParams& p) {
  if (!(p.a > 0.0)) throw std::invalid_argument("ddm: a must be positive");
  const double z = p.start();
  if (!(z > 0.0 && z < p.a)) throw std::invalid_argument("ddm: z must lie strictly inside (0, a)");
  if (!(p.ter_ms >= 0.0)) throw std::invalid_argument("ddm: ter_ms must be non-negative");
  if (!(p.s > 0.0)) throw std::invalid_argument("ddm: s must be positive");
  if (!(p.dt_ms > 0.0)) throw std::invalid_argument("ddm: dt_ms must be positive");
  if (!std::isfinite(p.v)) throw std::invalid_argument("ddm: v must be finite");
}

DdmTrialResult simulate_ddm(const DdmParams& p, Rng& rng) {
  validate(p);
  const double dt = p.dt_ms / 1000.0;
  const double drift_step = p.v * dt;
  const double noise_step = p.s * std::sqrt(dt);
  const auto max_steps = static_cast<std::int64_t>(std::ceil(kDdmTimeoutMs / p.dt_ms));

  double x = p.start();
  std::int64_t steps = 0;
  while (steps < max_steps) {
    x += drift_step + noise_step * rng.normal();
    ++steps;
    if (x >= p.a) return {true, static_cast<std::int64_t>(std::ceil(steps * p.dt_ms + p.ter_ms)), false};
    if (x <= 0.0) return {false, static_cast<std::int64_t>(std::ceil(steps * p.dt_ms + p.ter_ms)), false};
  }
  return {false, static_cast<std::int64_t>(std::ceil(kDdmTimeoutMs + p.ter_ms)), true};
}

double ddm_accuracy_closed_form(double v, double a, double s) { return 1.0 / (1.0 + std::exp(-v * a / (s * s))); }

DdmParams switch_drift(const DdmParams& base, bool is_switch, Congruency congruency) {
  DdmParams out = base;
  out.v = base.v * (is_switch ? 0.5 : 1.0) * (congruency == Congruency::kIncongruent ? 0.8 : 1.0);
  return out;
}

double edge_correct(double pc, int n) {
  const double shift = 1.0 / (2.0 * n);
  if (pc == 0.0) return shift;
  if (pc == 1.0) return 1.0 - shift;
  if (pc == 0.5) return 0.5 + shift;
  return pc;
}

EzEstimate ez_fit(double pc, double vrt_s2, double mrt_s, double s, int n) {
  if (n < 10) throw std::invalid_argument("ez_fit: need at least 10 trials");
  if (!(vrt_s2 > 0.0)) throw std::invalid_argument("ez_fit: RT variance must be positive");
  if (!(pc >= 0.0 && pc <= 1.0)) throw std::invalid_argument("ez_fit: accuracy outside [0, 1]");

  pc = edge_correct(pc, n);
  const double s2 = s * s;
  const double logit = std::log(pc / (1.0 - pc));
  const double x = logit * (logit * pc * pc - logit * pc + pc - 0.5) / vrt_s2;
  if (!(x >= 0.0) || x == 0.0) throw std::invalid_argument("ez_fit: degenerate moments");

  const double v = (pc > 0.5 ? 1.0 : -1.0) * s * std::pow(x, 0.25);
  const double a = s2 * logit / v;
  const double y = -v * a / s2;
  const double mdt = (a / (2.0 * v)) * (1.0 - std::exp(y)) / (1.0 + std::exp(y));
  return {v, a, mrt_s - mdt};
}

EzStats ez_stats(std::span<const DdmTrialResult> trials) {
  EzStats st;
  st.n = static_cast<int>(trials.size());
  double sum = 0.0;
  for (const auto& t : trials) {
    if (!t.correct) continue;
    ++st.n_correct;
    sum += t.rt_ms / 1000.0;
  }
  if (st.n > 0) st.pc = static_cast<double>(st.n_correct) / st.n;
  if (st.n_correct == 0) return st;
  st.mrt_s = sum / st.n_correct;
  double ss = 0.0;
  for (const auto& t : trials) {
    if (!t.correct) continue;
    const double d = t.rt_ms / 1000.0 - st.mrt_s;
    ss += d * d;
  }
  st.vrt_s2 = st.n_correct > 1 ? ss / (st.n_correct - 1) : 0.0;
  return st;
}

}  // namespace supertask
