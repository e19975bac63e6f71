#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "isd/hmm_filter.hpp"
#include "isd/occupation_filter.hpp"
#include "isd/signal_core.hpp"

namespace isd {

/// Which belief component a stopping rule thresholds.
enum class Statistic {
  anomalous_mass,  ///< X^2_k, the posterior mass of e2 in the two-state model
  non_nva_mass,    ///< 1 - (last component); zeta_k in the grid model
};

/// tau = inf{k >= 0 : statistic(X_k) >= threshold}.
struct StoppingRule {
  double threshold = 0.7;
  Statistic statistic = Statistic::anomalous_mass;

  void validate() const;
};

double statistic_value(const StoppingRule& rule, const Belief& belief);
bool should_stop(const StoppingRule& rule, const Belief& belief);

/// Upper bound 1 - h on P(X_tau = e1) for the threshold rule.
double pfa_bound(const StoppingRule& rule);

struct AlarmRecord {
  std::size_t alarm_time = 0;
  /// First time step of the detection segment that produced this alarm.
  std::size_t segment_start = 0;
  State true_state_at_alarm = State::normal;
  bool is_false_alarm = true;
  /// O^2 estimate at the alarm; NaN when no occupation trace was supplied.
  double occupation_estimate_at_alarm = 0.0;
  /// Steps in e2 on [segment_start, alarm_time).
  double realized_occupation = 0.0;
  /// alarm_time minus the entry time of the e2 episode in progress; empty for
  /// false alarms.
  std::optional<std::size_t> episode_delay;
};

/// Earliest k >= 0 with should_stop, k = 0 testing `initial` and k >= 1
/// testing trace[k - 1]. `occupation`, when non-empty, is the target-e2 trace
/// aligned with `trace`.
std::optional<AlarmRecord> first_alarm(const Belief& initial, std::span<const FilterStep> trace,
                                       const StoppingRule& rule, const Trajectory& trajectory,
                                       std::span<const OccupationEstimate> occupation = {});

enum class ResetPolicy { reset_to_initial, reset_to_stationary };

/// Belief the detector restarts from after an alarm. Stationary resets use the
/// stationary law of the detector's own transition model.
Belief reset_belief(ResetPolicy policy, const Belief& initial, const TransitionModel2& model);

/// Per-step state of the resetting detector, for trace export.
struct DetectorStep {
  std::size_t k = 0;
  std::size_t segment_start = 0;
  Vec2 belief{};
  double log_normalizer = 0.0;
  Vec2 occupation{};
  std::array<Vec2, 2> joint{};
  bool alarm = false;
};

/// Multi-alarm scan over one trajectory. The detector starts from `initial` at
/// k = 0. After an alarm at tau the next segment starts at tau + 1 with the
/// reset belief standing in for X_{tau+1} and zeroed occupation estimates;
/// y_{tau+1} plays the role of the unobserved y_0 of a fresh run. Every
/// alarm is classified against the true state.
std::vector<AlarmRecord> run_with_resets(const Trajectory& trajectory, const TransitionModel2& model,
                                         const ObservationModel& obs, const Belief& initial,
                                         const StoppingRule& rule, ResetPolicy policy,
                                         std::vector<DetectorStep>* trace = nullptr);

struct TrialCost {
  double state_form = 0.0;
  double cme_form = 0.0;
};

/// c * sum_{l<tau} <X_l, e2> + <X_tau, e1>  and  c * sum_{l<tau} X^2_l + X^1_tau.
TrialCost trial_cost(std::span<const State> states, const Belief& initial,
                     std::span<const FilterStep> trace, std::size_t tau, double c);

/// c (tau - nu)^+ + 1{tau < nu}, nu the first time in e2 (infinite if none).
double classic_bayes_cost(std::span<const State> states, std::size_t tau, double c);

struct CostTrial {
  std::span<const State> states;
  Belief initial{1.0, 0.0};
  std::span<const FilterStep> trace;
  std::optional<std::size_t> stopping_time;
};

struct CostReport {
  double cost_state_form = 0.0;
  double cost_cme_form = 0.0;
  double stderr_state = 0.0;
  double stderr_cme = 0.0;
  /// Standard error of the per-trial difference of the two forms.
  double stderr_difference = 0.0;
  double penalty_c = 0.0;
  std::size_t trials = 0;
  std::size_t censored = 0;

  /// sqrt(stderr_state^2 + stderr_cme^2)
  double combined_stderr() const;
};

/// Streaming form of evaluate_cost.
class CostAccumulator {
 public:
  explicit CostAccumulator(double c) : c_(c) {}
  void add(const TrialCost& t);
  void add_censored() { ++censored_; }
  double penalty() const noexcept { return c_; }
  /// Throws EmptyTrialSet when no trial was added.
  CostReport report() const;

 private:
  double c_;
  std::size_t n_ = 0;
  std::size_t censored_ = 0;
  double sum_s_ = 0.0, sum_ss_ = 0.0;
  double sum_m_ = 0.0, sum_mm_ = 0.0;
  double sum_d_ = 0.0, sum_dd_ = 0.0;
};

/// Monte-Carlo estimates of the cost in state form and CME form. Trials
/// without a stopping time are excluded and counted as censored.
CostReport evaluate_cost(std::span<const CostTrial> trials, double c);

/// CSV: trial_id,alarm_time,is_false_alarm,realized_occupation,occupation_estimate,episode_delay
void write_alarm_csv_header(std::ostream& out);
void write_alarm_csv_rows(std::ostream& out, std::size_t trial_id, std::span<const AlarmRecord> alarms);

}  // namespace isd
