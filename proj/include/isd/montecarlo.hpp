#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "isd/signal_core.hpp"
#include "isd/stopping.hpp"

namespace isd {

/// ISD runs the filter with the data-generating chain; SBD runs the same
/// machinery with the filter's a forced to 1 (Shiryaev's absorbing model).
enum class RuleVariant { isd, sbd };

std::string to_string(RuleVariant v);
std::string to_string(ResetPolicy p);

struct ExperimentSpec {
  TransitionModel2 model{};
  double mu1 = 1.0;
  double mu2 = 2.0;
  std::vector<double> sigma2_list{5.0};
  std::vector<double> thresholds{0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
  std::size_t horizon = 2000;
  std::size_t trials = 1000;
  std::uint64_t seed_base = 1;
  ResetPolicy reset_policy = ResetPolicy::reset_to_initial;
  RuleVariant variant = RuleVariant::isd;
  /// Law of X_0 for simulation and the detector's starting belief; the
  /// stationary law of `model` when empty.
  std::optional<Belief> initial;
  unsigned threads = 1;

  void validate() const;
  Belief initial_belief() const;
  /// Transition model the detector's filter runs with.
  TransitionModel2 filter_model() const;
};

/// Everything one trial contributes to a sweep row.
struct TrialOutcome {
  std::size_t alarms = 0;
  std::size_t false_alarms = 0;
  std::size_t true_alarms = 0;
  double sum_delay = 0.0;             ///< realised e2 occupation, true alarms
  double sum_occupation_estimate = 0.0;  ///< O^2 at alarm, true alarms
  double sum_episode_delay = 0.0;     ///< true alarms
};

/// Simulates trial `trial_index` (seed = seed_base + trial_index) and runs
/// the resetting detector over it.
TrialOutcome run_single_trial(const ExperimentSpec& spec, double sigma2, double threshold, std::size_t trial_index);

struct SweepRow {
  RuleVariant variant = RuleVariant::isd;
  double threshold = 0.0;
  double sigma2 = 0.0;
  std::size_t trials = 0;
  /// Trials with at least one true alarm; the delay columns average over them.
  std::size_t delay_trials = 0;
  double mean_delay = 0.0;
  double stderr_delay = 0.0;
  double mean_occupation_estimate = 0.0;
  double stderr_occupation_estimate = 0.0;
  /// Per-trial mean of (realised delay - occupation estimate).
  double mean_gap = 0.0;
  double stderr_gap = 0.0;
  double mean_episode_delay = 0.0;
  double mean_false_alarms = 0.0;
  double stderr_false_alarms = 0.0;
  double false_alarms_per_1000_steps = 0.0;
  std::size_t total_alarms = 0;
  std::size_t total_false_alarms = 0;
  /// Fraction of alarms raised in e1 and its binomial standard error.
  double pfa = 0.0;
  double pfa_stderr = 0.0;
  /// Trials without any alarm before the horizon.
  std::size_t censored_count = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// Aggregates per-trial outcomes in trial order, so the row does not depend
/// on how the trials were scheduled.
SweepRow aggregate(const std::vector<TrialOutcome>& outcomes, RuleVariant variant, double threshold, double sigma2,
                   std::size_t horizon);

/// One row per (sigma2, threshold) pair, sigma2 outermost.
SweepResult run_trials(const ExperimentSpec& spec);

/// run_trials for a noise sweep at a single threshold.
SweepResult occupation_study(const ExperimentSpec& spec);

/// run_trials for a threshold sweep (at least two thresholds) at a single
/// noise level.
SweepResult soc_sweep(const ExperimentSpec& spec);

/// CSV, one row per sweep point.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

}  // namespace isd
