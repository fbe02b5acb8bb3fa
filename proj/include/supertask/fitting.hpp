#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "supertask/ddm.hpp"
#include "supertask/engine.hpp"

namespace supertask {

inline constexpr double kFixedLapse = 0.02;

enum class FitModel : std::uint8_t { kQlearn, kEz };

template <>
struct EnumNames<FitModel> {
  static constexpr std::array<std::string_view, 2> names{"qlearn", "ez"};
};

/// A non-finite likelihood term. trial_index counts the trials fed to the
/// likelihood, from 0.
class FitError : public std::runtime_error {
 public:
  FitError(std::size_t trial_index, const std::string& what)
      : std::runtime_error(what + " at trial " + std::to_string(trial_index)), trial_index_(trial_index) {}
  std::size_t trial_index() const { return trial_index_; }

 private:
  std::size_t trial_index_;
};

/// LEARNED_RULE trials reduced to what the likelihood needs.
struct QlearnData {
  struct Trial {
    std::uint32_t cue = 0;  // dense index over (mission, block, cue)
    bool letter_consistent = false;
    bool number_consistent = false;
    double reward = 0.0;  // +1 correct, -1 error
  };
  std::vector<Trial> trials;
  std::size_t n_cues = 0;
};

/// Keeps LEARNED_RULE records in order; other mission kinds are dropped.
QlearnData prepare_qlearn(std::span<const TrialRecord> records);

/// Log-likelihood of the observed responses under the HierQ generative model.
/// Summation runs trial by trial in record order, so equal inputs give
/// bit-identical results. Throws FitError on a non-finite term and
/// std::invalid_argument for parameters outside alpha in (0, 1], beta in [0, 32].
double qlearn_loglik(const QlearnData& data, double alpha, double beta, double lapse = kFixedLapse);
double qlearn_loglik(std::span<const TrialRecord> records, double alpha, double beta, double lapse = kFixedLapse);

struct QlearnBounds {
  double alpha_lo = 1e-3;
  double alpha_hi = 1.0;
  double beta_lo = 0.0;
  double beta_hi = 32.0;
};

struct FitOptions {
  QlearnBounds bounds;
  int grid_alpha = 5;
  int grid_beta = 5;
  double f_tolerance = 1e-6;
  int max_iterations = 500;
  int warn_below_trials = 50;
};

struct FitResult {
  std::string model;
  std::map<std::string, double> estimates;
  double loglik = 0.0;
  int n_trials = 0;
  bool converged = false;
  bool at_bound = false;
  bool failed = false;
  int n_restarts_used = 0;  // starts that reached a finite optimum
  std::vector<std::string> flags;
};

/// Multi-start Nelder-Mead MLE of (alpha, beta) with the lapse fixed.
FitResult fit_mle(std::span<const TrialRecord> records, const FitOptions& options = {});

enum class SwitchCondition : std::uint8_t { kSwitch, kRepeat };

/// EZ-diffusion fit of one condition of CUED_SWITCH trials. nullopt when the
/// condition has fewer than 10 correct trials or degenerate moments.
std::optional<DdmParams> ez_fit_session(std::span<const TrialRecord> records, SwitchCondition condition,
                                        double s = 0.1);

/// Both EZ conditions packed as one fit row set: v_<cond>, a_<cond>,
/// ter_ms_<cond>. loglik is NaN (EZ is a moment fit). A condition without
/// enough correct trials is flagged and left out; failed when neither fits.
FitResult ez_fit_result(std::span<const TrialRecord> records);

struct ParamRecovery {
  double truth = 0.0;
  double mean = 0.0;
  std::optional<double> sd;  // undefined for a single replicate
  double bias = 0.0;
  double rmse = 0.0;
};

struct RecoveryCell {
  std::map<std::string, double> truth;
  std::map<std::string, ParamRecovery> params;
  int n_fitted = 0;
  int n_failed = 0;
  std::vector<std::string> flags;
};

struct RecoveryReport {
  std::string model;
  int n_replicates = 0;
  int trials_per_run = 0;
  std::uint64_t seed = 0;
  std::vector<RecoveryCell> cells;
};

/// LEARNED_RULE session used by recovery: one block of n_trials over 4 cues.
/// Long runs per cue keep alpha identifiable at low learning rates.
SessionConfig recovery_session_config(int n_trials, std::uint64_t seed);

/// Simulates HierQ at every grid point, fits each replicate and summarises.
/// Replicate r of cell c uses engine and agent seeds derived from (seed, c, r).
RecoveryReport parameter_recovery(FitModel model, const std::vector<std::map<std::string, double>>& grid,
                                  int trials_per_run, int n_replicates, std::uint64_t seed,
                                  const FitOptions& options = {});

}  // namespace supertask
