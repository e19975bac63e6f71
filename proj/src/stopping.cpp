#include "isd/stopping.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "isd/csv.hpp"
#include "isd/errors.hpp"

namespace isd {

namespace {

std::optional<std::size_t> episode_delay(std::span<const State> states, std::size_t tau) {
  if (states[tau] != State::anomalous) return std::nullopt;
  std::size_t entry = tau;
  while (entry > 0 && states[entry - 1] == State::anomalous) --entry;
  return tau - entry;
}

AlarmRecord make_record(const Trajectory& traj, std::size_t segment_start, std::size_t tau,
                        double occupation_estimate) {
  if (tau >= traj.states.size()) throw InvalidArgument("alarm time beyond the trajectory");
  AlarmRecord r;
  r.alarm_time = tau;
  r.segment_start = segment_start;
  r.true_state_at_alarm = traj.states[tau];
  r.is_false_alarm = r.true_state_at_alarm == State::normal;
  r.occupation_estimate_at_alarm = occupation_estimate;
  std::size_t count = 0;
  for (std::size_t l = segment_start; l < tau; ++l) count += traj.states[l] == State::anomalous;
  r.realized_occupation = static_cast<double>(count);
  r.episode_delay = episode_delay(traj.states, tau);
  return r;
}

double stddev_of_mean(double sum, double sum_sq, std::size_t n) {
  if (n < 2) return 0.0;
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1));
  return std::sqrt(var / static_cast<double>(n));
}

}  // namespace

void StoppingRule::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0, 1]");
}

double statistic_value(const StoppingRule& rule, const Belief& belief) {
  switch (rule.statistic) {
    case Statistic::anomalous_mass:
      if (belief.size() != 2) throw InvalidArgument("anomalous-mass statistic needs a two-state belief");
      return belief[1];
    case Statistic::non_nva_mass:
      return 1.0 - belief[belief.size() - 1];
  }
  return 0.0;
}

bool should_stop(const StoppingRule& rule, const Belief& belief) {
  return statistic_value(rule, belief) >= rule.threshold;
}

double pfa_bound(const StoppingRule& rule) {
  rule.validate();
  return 1.0 - rule.threshold;
}

std::optional<AlarmRecord> first_alarm(const Belief& initial, std::span<const FilterStep> trace,
                                       const StoppingRule& rule, const Trajectory& trajectory,
                                       std::span<const OccupationEstimate> occupation) {
  rule.validate();
  if (trace.size() > trajectory.length()) throw InvalidArgument("trace longer than the trajectory");
  if (!occupation.empty() && occupation.size() != trace.size()) {
    throw InvalidArgument("occupation trace not aligned with filter trace");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (should_stop(rule, initial)) return make_record(trajectory, 0, 0, occupation.empty() ? nan : 0.0);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (should_stop(rule, trace[i].belief)) {
      return make_record(trajectory, 0, i + 1, occupation.empty() ? nan : occupation[i].scalar);
    }
  }
  return std::nullopt;
}

Belief reset_belief(ResetPolicy policy, const Belief& initial, const TransitionModel2& model) {
  switch (policy) {
    case ResetPolicy::reset_to_initial:
      return initial;
    case ResetPolicy::reset_to_stationary:
      return stationary_distribution(model);
  }
  return initial;
}

std::vector<AlarmRecord> run_with_resets(const Trajectory& trajectory, const TransitionModel2& model,
                                         const ObservationModel& obs, const Belief& initial,
                                         const StoppingRule& rule, ResetPolicy policy,
                                         std::vector<DetectorStep>* trace) {
  rule.validate();
  if (rule.statistic != Statistic::anomalous_mass) {
    throw InvalidArgument("run_with_resets drives the two-state model");
  }
  const Belief restart = reset_belief(policy, initial, model);
  const std::size_t n = trajectory.length();
  if (trajectory.states.size() != n + 1) throw InvalidArgument("trajectory states and observations misaligned");

  OccupationFilter filter(model, obs, initial);
  std::vector<AlarmRecord> alarms;
  std::size_t segment_start = 0;
  for (std::size_t t = 0; t <= n; ++t) {
    if (t > segment_start) filter.step(trajectory.observations[t - 1]);
    const bool alarm = filter.belief()[1] >= rule.threshold;
    if (trace) {
      trace->push_back({t, segment_start, filter.belief(), filter.log_normalizer(),
                        {filter.occupation(State::normal), filter.occupation(State::anomalous)},
                        {filter.joint(State::normal), filter.joint(State::anomalous)}, alarm});
    }
    if (alarm) {
      alarms.push_back(make_record(trajectory, segment_start, t, filter.occupation(State::anomalous)));
      segment_start = t + 1;
      filter.reset(restart);
    }
  }
  return alarms;
}

TrialCost trial_cost(std::span<const State> states, const Belief& initial,
                     std::span<const FilterStep> trace, std::size_t tau, double c) {
  if (tau >= states.size() || tau > trace.size()) throw InvalidArgument("stopping time beyond the data");
  auto cme = [&](std::size_t l) -> const Belief& { return l == 0 ? initial : trace[l - 1].belief; };
  std::size_t in_e2 = 0;
  double cme_sum = 0.0;
  for (std::size_t l = 0; l < tau; ++l) {
    in_e2 += states[l] == State::anomalous;
    cme_sum += cme(l)[1];
  }
  TrialCost out;
  out.state_form = c * static_cast<double>(in_e2) + (states[tau] == State::normal ? 1.0 : 0.0);
  out.cme_form = c * cme_sum + cme(tau)[0];
  return out;
}

double classic_bayes_cost(std::span<const State> states, std::size_t tau, double c) {
  std::size_t nu = states.size();
  for (std::size_t l = 0; l < states.size(); ++l) {
    if (states[l] == State::anomalous) {
      nu = l;
      break;
    }
  }
  const std::size_t late = tau > nu ? tau - nu : 0;
  return c * static_cast<double>(late) + (tau < nu ? 1.0 : 0.0);
}

double CostReport::combined_stderr() const { return std::hypot(stderr_state, stderr_cme); }

void CostAccumulator::add(const TrialCost& t) {
  ++n_;
  sum_s_ += t.state_form;
  sum_ss_ += t.state_form * t.state_form;
  sum_m_ += t.cme_form;
  sum_mm_ += t.cme_form * t.cme_form;
  const double d = t.state_form - t.cme_form;
  sum_d_ += d;
  sum_dd_ += d * d;
}

CostReport CostAccumulator::report() const {
  if (n_ == 0) throw EmptyTrialSet();
  const double n = static_cast<double>(n_);
  CostReport r;
  r.cost_state_form = sum_s_ / n;
  r.cost_cme_form = sum_m_ / n;
  r.stderr_state = stddev_of_mean(sum_s_, sum_ss_, n_);
  r.stderr_cme = stddev_of_mean(sum_m_, sum_mm_, n_);
  r.stderr_difference = stddev_of_mean(sum_d_, sum_dd_, n_);
  r.penalty_c = c_;
  r.trials = n_;
  r.censored = censored_;
  return r;
}

CostReport evaluate_cost(std::span<const CostTrial> trials, double c) {
  CostAccumulator acc(c);
  for (const auto& t : trials) {
    if (!t.stopping_time) {
      acc.add_censored();
      continue;
    }
    acc.add(trial_cost(t.states, t.initial, t.trace, *t.stopping_time, c));
  }
  return acc.report();
}

void write_alarm_csv_header(std::ostream& out) {
  csv::header(out, {"trial_id", "alarm_time", "is_false_alarm", "realized_occupation", "occupation_estimate",
                    "episode_delay"});
}

void write_alarm_csv_rows(std::ostream& out, std::size_t trial_id, std::span<const AlarmRecord> alarms) {
  for (const auto& a : alarms) {
    out << trial_id << ',' << a.alarm_time << ',' << (a.is_false_alarm ? 1 : 0) << ','
        << csv::number(a.realized_occupation) << ',' << csv::number(a.occupation_estimate_at_alarm) << ',';
    if (a.episode_delay) out << *a.episode_delay;
    out << '\n';
  }
}

}  // namespace isd
