#include "isd/montecarlo.hpp"

#include <cmath>
#include <ostream>

#include "isd/csv.hpp"
#include "isd/errors.hpp"
#include "isd/parallel.hpp"

namespace isd {

namespace {

struct MeanStd {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStd mean_and_stderr(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double n = static_cast<double>(xs.size());
  out.mean = sum / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

}  // namespace

std::string to_string(RuleVariant v) { return v == RuleVariant::isd ? "isd" : "sbd"; }

std::string to_string(ResetPolicy p) {
  return p == ResetPolicy::reset_to_initial ? "reset_to_initial" : "reset_to_stationary";
}

void ExperimentSpec::validate() const {
  model.validate();
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
  if (thresholds.empty()) throw InvalidArgument("at least one threshold is required");
  for (double h : thresholds) StoppingRule{h}.validate();
  if (sigma2_list.empty()) throw InvalidArgument("at least one sigma2 is required");
  for (double s2 : sigma2_list) GaussianPairObservation(mu1, mu2, s2);
  if (initial && initial->size() != 2) throw InvalidArgument("initial belief must have two entries");
  (void)initial_belief();
}

Belief ExperimentSpec::initial_belief() const { return initial ? *initial : stationary_distribution(model); }

TransitionModel2 ExperimentSpec::filter_model() const {
  return variant == RuleVariant::sbd ? TransitionModel2{model.rho, 1.0} : model;
}

TrialOutcome run_single_trial(const ExperimentSpec& spec, double sigma2, double threshold, std::size_t trial_index) {
  const GaussianPairObservation obs(spec.mu1, spec.mu2, sigma2);
  const Belief initial = spec.initial_belief();
  const Trajectory traj = simulate_trajectory(spec.model, obs, initial, spec.horizon, spec.seed_base + trial_index);
  const auto alarms =
      run_with_resets(traj, spec.filter_model(), obs, initial, StoppingRule{threshold}, spec.reset_policy);
  TrialOutcome out;
  out.alarms = alarms.size();
  for (const auto& a : alarms) {
    if (a.is_false_alarm) {
      ++out.false_alarms;
      continue;
    }
    ++out.true_alarms;
    out.sum_delay += a.realized_occupation;
    out.sum_occupation_estimate += a.occupation_estimate_at_alarm;
    out.sum_episode_delay += static_cast<double>(a.episode_delay.value_or(0));
  }
  return out;
}

SweepRow aggregate(const std::vector<TrialOutcome>& outcomes, RuleVariant variant, double threshold, double sigma2,
                   std::size_t horizon) {
  SweepRow row;
  row.variant = variant;
  row.threshold = threshold;
  row.sigma2 = sigma2;
  row.trials = outcomes.size();

  std::vector<double> delay, estimate, gap, episode, false_alarms;
  false_alarms.reserve(outcomes.size());
  for (const auto& t : outcomes) {
    false_alarms.push_back(static_cast<double>(t.false_alarms));
    row.total_alarms += t.alarms;
    row.total_false_alarms += t.false_alarms;
    if (t.alarms == 0) ++row.censored_count;
    if (t.true_alarms == 0) continue;
    const double n = static_cast<double>(t.true_alarms);
    delay.push_back(t.sum_delay / n);
    estimate.push_back(t.sum_occupation_estimate / n);
    gap.push_back((t.sum_delay - t.sum_occupation_estimate) / n);
    episode.push_back(t.sum_episode_delay / n);
  }
  row.delay_trials = delay.size();
  const auto d = mean_and_stderr(delay);
  const auto e = mean_and_stderr(estimate);
  const auto g = mean_and_stderr(gap);
  const auto f = mean_and_stderr(false_alarms);
  row.mean_delay = d.mean;
  row.stderr_delay = d.stderr_;
  row.mean_occupation_estimate = e.mean;
  row.stderr_occupation_estimate = e.stderr_;
  row.mean_gap = g.mean;
  row.stderr_gap = g.stderr_;
  row.mean_episode_delay = mean_and_stderr(episode).mean;
  row.mean_false_alarms = f.mean;
  row.stderr_false_alarms = f.stderr_;
  row.false_alarms_per_1000_steps = 1000.0 * f.mean / static_cast<double>(horizon);
  if (row.total_alarms > 0) {
    const double n = static_cast<double>(row.total_alarms);
    row.pfa = static_cast<double>(row.total_false_alarms) / n;
    row.pfa_stderr = std::sqrt(row.pfa * (1.0 - row.pfa) / n);
  }
  return row;
}

SweepResult run_trials(const ExperimentSpec& spec) {
  spec.validate();
  SweepResult result;
  for (double sigma2 : spec.sigma2_list) {
    for (double h : spec.thresholds) {
      std::vector<TrialOutcome> outcomes(spec.trials);
      parallel_for(spec.trials, spec.threads, [&](std::size_t t) {
        try {
          outcomes[t] = run_single_trial(spec, sigma2, h, t);
        } catch (const Error& e) {
          throw Error("trial " + std::to_string(t) + ": " + e.what());
        }
      });
      result.rows.push_back(aggregate(outcomes, spec.variant, h, sigma2, spec.horizon));
    }
  }
  return result;
}

SweepResult occupation_study(const ExperimentSpec& spec) {
  if (spec.thresholds.size() != 1) throw InvalidArgument("occupation study uses a single threshold");
  return run_trials(spec);
}

SweepResult soc_sweep(const ExperimentSpec& spec) {
  if (spec.thresholds.size() < 2) throw InvalidArgument("SOC sweep needs at least two thresholds");
  if (spec.sigma2_list.size() != 1) throw InvalidArgument("SOC sweep uses a single sigma2");
  return run_trials(spec);
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  csv::header(out, {"variant", "threshold", "sigma2", "trials", "delay_trials", "mean_delay", "stderr_delay",
                    "mean_occupation_estimate", "stderr_occupation_estimate", "mean_gap", "stderr_gap",
                    "mean_episode_delay", "mean_false_alarms", "stderr_false_alarms",
                    "false_alarms_per_1000_steps", "total_alarms", "total_false_alarms", "pfa", "pfa_stderr",
                    "censored_count"});
  for (const auto& r : result.rows) {
    out << to_string(r.variant) << ',' << csv::number(r.threshold) << ',' << csv::number(r.sigma2) << ','
        << r.trials << ',' << r.delay_trials << ',' << csv::number(r.mean_delay) << ','
        << csv::number(r.stderr_delay) << ',' << csv::number(r.mean_occupation_estimate) << ','
        << csv::number(r.stderr_occupation_estimate) << ',' << csv::number(r.mean_gap) << ','
        << csv::number(r.stderr_gap) << ',' << csv::number(r.mean_episode_delay) << ','
        << csv::number(r.mean_false_alarms) << ',' << csv::number(r.stderr_false_alarms) << ','
        << csv::number(r.false_alarms_per_1000_steps) << ',' << r.total_alarms << ',' << r.total_false_alarms
        << ',' << csv::number(r.pfa) << ',' << csv::number(r.pfa_stderr) << ',' << r.censored_count << '\n';
  }
}

}  // namespace isd
