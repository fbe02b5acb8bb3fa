#include "supertask/fitting.hpp"

#include <cmath>
#include <limits>
#include <tuple>

#include "supertask/agents.hpp"
#include "supertask/nelder_mead.hpp"
#include "supertask/simulate.hpp"

namespace supertask {

QlearnData prepare_qlearn(std::span<const TrialRecord> records) {
  QlearnData data;
  std::map<std::tuple<int, int, int>, std::uint32_t> index;
  for (const auto& r : records) {
    if (r.mission_kind != MissionKind::kLearnedRule) continue;
    const auto key = std::make_tuple(r.address.mission_id, r.address.block_index, r.cue_id);
    auto [it, inserted] = index.emplace(key, static_cast<std::uint32_t>(index.size()));
    QlearnData::Trial t;
    t.cue = it->second;
    t.letter_consistent = classify(r.stimulus, Rule::kLetter) == r.final_response;
    t.number_consistent = classify(r.stimulus, Rule::kNumber) == r.final_response;
    t.reward = r.correct ? 1.0 : -1.0;
    data.trials.push_back(t);
  }
  data.n_cues = index.size();
  return data;
}

double qlearn_loglik(const QlearnData& data, double alpha, double beta, double lapse) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("qlearn_loglik: alpha must be in (0, 1]");
  if (!(beta >= 0.0 && beta <= 32.0)) throw std::invalid_argument("qlearn_loglik: beta must be in [0, 32]");
  std::vector<std::array<double, 2>> q(data.n_cues, {0.0, 0.0});
  double ll = 0.0;
  for (std::size_t i = 0; i < data.trials.size(); ++i) {
    const auto& t = data.trials[i];
    auto& qc = q[t.cue];
    // Two-way softmax written as a logistic in the value difference.
    const double p_letter = 1.0 / (1.0 + std::exp(-beta * (qc[0] - qc[1])));
    const double p_rule_consistent =
        (t.letter_consistent ? p_letter : 0.0) + (t.number_consistent ? 1.0 - p_letter : 0.0);
    const double p = (1.0 - lapse) * p_rule_consistent + lapse * 0.5;
    const double term = std::log(p);
    if (!std::isfinite(term)) throw FitError(i, "non-finite log-likelihood term");
    ll += term;
    if (t.letter_consistent) qc[0] += alpha * (t.reward - qc[0]);
    if (t.number_consistent) qc[1] += alpha * (t.reward - qc[1]);
  }
  return ll;
}

double qlearn_loglik(std::span<const TrialRecord> records, double alpha, double beta, double lapse) {
  return qlearn_loglik(prepare_qlearn(records), alpha, beta, lapse);
}

FitResult fit_mle(std::span<const TrialRecord> records, const FitOptions& options) {
  const QlearnData data = prepare_qlearn(records);
  const auto& b = options.bounds;

  FitResult out;
  out.model = "qlearn";
  out.n_trials = static_cast<int>(data.trials.size());
  if (out.n_trials == 0) {
    out.failed = true;
    out.flags.push_back("no_learned_rule_trials");
    return out;
  }
  if (out.n_trials < options.warn_below_trials) out.flags.push_back("few_trials");

  auto negll = [&](const std::array<double, 2>& x) {
    try {
      return -qlearn_loglik(data, x[0], x[1]);
    } catch (const FitError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const std::array<double, 2> lower{b.alpha_lo, b.beta_lo};
  const std::array<double, 2> upper{b.alpha_hi, b.beta_hi};
  NelderMeadOptions nm;
  nm.f_tolerance = options.f_tolerance;
  nm.max_iterations = options.max_iterations;

  NelderMeadResult<2> best;
  for (int i = 0; i < options.grid_alpha; ++i) {
    const double alpha = options.grid_alpha == 1 ? 0.5 : 0.05 + 0.9 * i / (options.grid_alpha - 1);
    for (int j = 0; j < options.grid_beta; ++j) {
      const double beta =
          options.grid_beta == 1 ? 4.0 : 0.5 * std::pow(32.0, static_cast<double>(j) / (options.grid_beta - 1));
      const std::array<double, 2> start{alpha, beta};
      const std::array<double, 2> step{0.1, 0.25 * beta};
      const auto r = nelder_mead(negll, start, step, lower, upper, nm);
      if (!std::isfinite(r.f)) continue;
      ++out.n_restarts_used;
      if (r.f < best.f) best = r;
    }
  }

  if (out.n_restarts_used == 0) {
    out.failed = true;
    out.loglik = -std::numeric_limits<double>::infinity();
    out.flags.push_back("all_starts_failed");
    return out;
  }
  out.estimates = {{"alpha", best.x[0]}, {"beta", best.x[1]}};
  out.loglik = -best.f;
  out.converged = best.converged;
  if (!out.converged) out.flags.push_back("not_converged");
  auto on_bound = [](double x, double lo, double hi) {
    const double eps = 1e-6 * (hi - lo);
    return x <= lo + eps || x >= hi - eps;
  };
  out.at_bound = on_bound(best.x[0], b.alpha_lo, b.alpha_hi) || on_bound(best.x[1], b.beta_lo, b.beta_hi);
  if (out.at_bound) out.flags.push_back(out.converged ? "converged_at_bound" : "at_bound");
  return out;
}

std::optional<DdmParams> ez_fit_session(std::span<const TrialRecord> records, SwitchCondition condition, double s) {
  const bool want_switch = condition == SwitchCondition::kSwitch;
  int n = 0;
  int n_correct = 0;
  double sum = 0.0;
  std::vector<double> rts;
  for (const auto& r : records) {
    if (r.mission_kind != MissionKind::kCuedSwitch || !r.is_switch || *r.is_switch != want_switch) continue;
    ++n;
    if (r.correct) {
      ++n_correct;
      rts.push_back(static_cast<double>(r.rt_ms) / 1000.0);
      sum += rts.back();
    }
  }
  if (n_correct < 10) return std::nullopt;
  const double mrt = sum / n_correct;
  double ss = 0.0;
  for (double x : rts) ss += (x - mrt) * (x - mrt);
  const double vrt = ss / (n_correct - 1);
  try {
    const auto est = ez_fit(static_cast<double>(n_correct) / n, vrt, mrt, s, n);
    DdmParams p;
    p.v = est.v;
    p.a = est.a;
    p.ter_ms = est.ter_s * 1000.0;
    p.s = s;
    return p;
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

FitResult ez_fit_result(std::span<const TrialRecord> records) {
  FitResult out;
  out.model = "ez";
  out.loglik = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : records) {
    if (r.mission_kind == MissionKind::kCuedSwitch && r.is_switch) ++out.n_trials;
  }
  if (out.n_trials == 0) {
    out.failed = true;
    out.flags.push_back("no_cued_switch_trials");
    return out;
  }
  for (auto [cond, name] : {std::pair{SwitchCondition::kSwitch, "switch"}, std::pair{SwitchCondition::kRepeat, "repeat"}}) {
    const auto p = ez_fit_session(records, cond);
    if (!p) {
      out.flags.push_back(std::string("insufficient_") + name + "_trials");
      continue;
    }
    out.estimates[std::string("v_") + name] = p->v;
    out.estimates[std::string("a_") + name] = p->a;
    out.estimates[std::string("ter_ms_") + name] = p->ter_ms;
  }
  out.failed = out.estimates.empty();
  out.converged = out.estimates.size() == 6;
  return out;
}

SessionConfig recovery_session_config(int n_trials, std::uint64_t seed) {
  if (n_trials < 2) throw std::invalid_argument("recovery needs at least 2 trials");
  SessionConfig config;
  config.seed = seed;
  MissionSpec m;
  m.mission_id = 2;
  m.blocks.push_back({.index = 0, .n_trials = n_trials, .mission_kind = MissionKind::kLearnedRule, .cue_set_size = 4});
  config.missions.push_back(std::move(m));
  return config;
}

RecoveryReport parameter_recovery(FitModel model, const std::vector<std::map<std::string, double>>& grid,
                                  int trials_per_run, int n_replicates, std::uint64_t seed,
                                  const FitOptions& options) {
  if (model != FitModel::kQlearn) throw std::invalid_argument("parameter recovery is implemented for qlearn only");
  if (grid.empty()) throw std::invalid_argument("recovery grid is empty");
  if (n_replicates < 1) throw std::invalid_argument("n_replicates must be at least 1");

  RecoveryReport report;
  report.model = std::string(to_string(model));
  report.n_replicates = n_replicates;
  report.trials_per_run = trials_per_run;
  report.seed = seed;

  for (std::size_t c = 0; c < grid.size(); ++c) {
    RecoveryCell cell;
    cell.truth = grid[c];
    for (const auto& [name, value] : grid[c]) {
      if (name != "alpha" && name != "beta") throw std::invalid_argument("unknown qlearn parameter '" + name + "'");
    }
    std::map<std::string, std::vector<double>> estimates;
    for (int r = 0; r < n_replicates; ++r) {
      AgentConfig ac;
      ac.kind = AgentKind::kHierQ;
      ac.params = grid[c];
      ac.params["lapse"] = kFixedLapse;
      ac.seed = derive_seed(seed, {c, static_cast<std::uint64_t>(r), 1});
      auto agent = make_agent(ac);
      const auto records =
          play_session(recovery_session_config(trials_per_run, derive_seed(seed, {c, static_cast<std::uint64_t>(r), 0})),
                       *agent);
      const auto fit = fit_mle(records, options);
      if (fit.failed) {
        ++cell.n_failed;
        continue;
      }
      ++cell.n_fitted;
      for (const auto& [name, value] : fit.estimates) estimates[name].push_back(value);
    }
    if (cell.n_failed > 0) cell.flags.push_back("fit_failures");
    if (cell.n_fitted < 2) cell.flags.push_back("sd_undefined");
    const auto defaults = default_agent_params(AgentKind::kHierQ);
    for (const char* name : {"alpha", "beta"}) {
      ParamRecovery pr;
      pr.truth = cell.truth.count(name) ? cell.truth.at(name) : defaults.at(name);
      const auto& xs = estimates[name];
      if (!xs.empty()) {
        double sum = 0.0, sq = 0.0;
        for (double x : xs) {
          sum += x;
          sq += (x - pr.truth) * (x - pr.truth);
        }
        pr.mean = sum / static_cast<double>(xs.size());
        pr.bias = pr.mean - pr.truth;
        pr.rmse = std::sqrt(sq / static_cast<double>(xs.size()));
        if (xs.size() >= 2) {
          double ss = 0.0;
          for (double x : xs) ss += (x - pr.mean) * (x - pr.mean);
          pr.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        }
      }
      cell.params[name] = pr;
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

}  // namespace supertask
