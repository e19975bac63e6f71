#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "isd/hmm_filter.hpp"
#include "isd/signal_core.hpp"

namespace isd {

/// E[O^i_k X_k | y_1..y_k] (joint) and E[O^i_k | y_1..y_k] (scalar), where
/// O^i_k counts the steps n < k with X_n = e_i.
struct OccupationEstimate {
  Vec2 joint{};
  double scalar = 0.0;
  State target = State::anomalous;
  std::size_t k = 0;
};

/// One step of the occupation recursion
///   joint_k = N_k B(y_k) A (joint_{k-1} + X^i_{k-1} e_i),
/// using the normaliser N_k of the filter step from prev_belief on y.
Vec2 occupation_step(const Vec2& prev_joint, const Belief& prev_belief, double y,
                     const TransitionModel2& model, const ObservationModel& obs, State target,
                     std::size_t k = 1);

/// HMM filter and occupation filters for both targets advanced in lockstep
/// so that all three recursions share one normaliser per step.
class OccupationFilter {
 public:
  OccupationFilter(const TransitionModel2& model, const ObservationModel& obs, const Belief& initial);

  /// Assimilates the next measurement. Throws DegenerateLikelihood.
  void step(double y);

  /// Restarts at time zero of a new segment: belief := initial, joints := 0.
  void reset(const Belief& initial);

  std::size_t k() const noexcept { return k_; }
  const Vec2& belief() const noexcept { return belief_; }
  double log_normalizer() const noexcept { return log_normalizer_; }
  const Vec2& joint(State target) const noexcept { return joint_[slot(target)]; }
  double occupation(State target) const noexcept;
  OccupationEstimate estimate(State target) const;

 private:
  Matrix2 A_;
  const ObservationModel* obs_;
  Vec2 belief_;
  std::array<Vec2, 2> joint_{};
  double log_normalizer_ = 0.0;
  std::size_t k_ = 0;
};

/// Runs the synchronised filters over y_1..y_n; element k - 1 is the
/// estimate at time k.
std::vector<OccupationEstimate> run_occupation(std::span<const double> observations,
                                               const TransitionModel2& model,
                                               const ObservationModel& obs, const Belief& initial,
                                               State target);

struct OccupationOracle {
  Vec2 joint{};
  double scalar = 0.0;
};

/// Exact E[O^i_n X_n | y] and E[O^i_n | y] by path enumeration.
OccupationOracle enumerate_occupation(std::span<const double> observations, const TransitionModel2& model,
                                      const ObservationModel& obs, const Belief& initial, State target,
                                      std::size_t cap = kEnumerationCap);

/// Smoothed marginals P(X_l | y_1..y_n) for l = 0..n by path enumeration.
std::vector<Vec2> enumerate_smoothed_marginals(std::span<const double> observations,
                                               const TransitionModel2& model, const ObservationModel& obs,
                                               const Belief& initial, std::size_t cap = kEnumerationCap);

struct ErrorRateDiagnostic {
  std::size_t k = 0;
  double rate = 0.0;
};

enum class ErrorNorm { max, l1 };

/// Average error rate |joint_k(init_a) - joint_k(init_b)| / k between two
/// initialisations of the occupation filter, one entry per k >= 1.
std::vector<ErrorRateDiagnostic> stability_probe(std::span<const double> observations,
                                                 const TransitionModel2& model, const ObservationModel& obs,
                                                 const Belief& init_a, const Belief& init_b, State target,
                                                 ErrorNorm norm = ErrorNorm::max);

/// CSV: k,occ_e1,occ_e2,joint1_e1,joint1_e2,joint2_e1,joint2_e2 where
/// jointI_eJ is component J of the joint estimate for target state I.
void write_occupation_csv(std::ostream& out, std::span<const OccupationEstimate> target1,
                          std::span<const OccupationEstimate> target2);

/// CSV: k,rate
void write_stability_csv(std::ostream& out, std::span<const ErrorRateDiagnostic> trace);

}  // namespace isd
