#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "isd/random.hpp"

namespace isd {

/// Hidden regime of the intermittent signal. Values match the indicator
/// vector convention e1 / e2; beliefs store them at slot(state).
enum class State : std::uint8_t { normal = 1, anomalous = 2 };

constexpr std::size_t slot(State s) noexcept { return static_cast<std::size_t>(s) - 1; }
constexpr State state_from_slot(std::size_t i) noexcept {
  return i == 0 ? State::normal : State::anomalous;
}

/// Column-stochastic 2x2 matrix, m[row][col] = P(X_{k+1} = row | X_k = col).
using Matrix2 = std::array<std::array<double, 2>, 2>;
using Vec2 = std::array<double, 2>;

/// Probability vector over hidden states. Entries are nonnegative and sum to
/// one within 1e-12; construction throws InvalidArgument otherwise.
class Belief {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit Belief(std::vector<double> p);
  Belief(std::initializer_list<double> p) : Belief(std::vector<double>(p)) {}

  static Belief point_mass(std::size_t size, std::size_t index);
  static Belief from_pair(const Vec2& p) { return Belief({p[0], p[1]}); }

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }
  Vec2 pair() const;

  friend bool operator==(const Belief&, const Belief&) = default;

 private:
  std::vector<double> p_;
};

/// Two-state intermittent chain: rho = P(e1 -> e2), a = P(e2 -> e2).
struct TransitionModel2 {
  double rho = 0.01;
  double a = 0.99;

  /// Throws InvalidArgument when rho or a lies outside [0, 1].
  void validate() const;
};

Matrix2 build_transition_matrix(const TransitionModel2& model);

/// A * p for a 2-vector.
Vec2 propagate(const Matrix2& m, const Vec2& p) noexcept;

/// Stationary law (1 - a, rho) / (1 - a + rho). Throws InvalidArgument when the
/// chain has no unique stationary law (rho = 0 and a = 1).
Belief stationary_distribution(const TransitionModel2& model);

/// Measurement densities f^1, f^2. Implementations may be unnormalised by a
/// factor common to both states; filters only use ratios.
class ObservationModel {
 public:
  virtual ~ObservationModel() = default;

  /// log f^state(y); -infinity outside the support.
  virtual double log_density(State state, double y) const = 0;

  /// Draw y given the state.
  virtual double sample(State state, Rng& rng) const = 0;
};

/// f^i(y) = psi(y - mu_i), psi a zero-mean Gaussian density with variance sigma2.
class GaussianPairObservation final : public ObservationModel {
 public:
  GaussianPairObservation(double mu1, double mu2, double sigma2);

  double mu1() const noexcept { return mu1_; }
  double mu2() const noexcept { return mu2_; }
  double sigma2() const noexcept { return sigma2_; }
  double mean(State s) const noexcept { return s == State::normal ? mu1_ : mu2_; }

  double log_density(State state, double y) const override;
  double sample(State state, Rng& rng) const override;

  /// mean(state) + sqrt(sigma2) * z for a standard normal draw z.
  double from_standard_normal(State state, double z) const noexcept;

 private:
  double mu1_;
  double mu2_;
  double sigma2_;
  double log_norm_;
  double sigma_;
};

double density(const ObservationModel& obs, State state, double y);

/// Hidden path X_0..X_n and measurements y_1..y_n (observations[k - 1] = y_k).
struct Trajectory {
  std::vector<State> states;
  std::vector<double> observations;
  std::uint64_t seed = 0;

  std::size_t length() const noexcept { return observations.size(); }
};

/// Samples X_0 from `initial`, then X_{k+1} from column X_k of A and y_k from
/// f^{X_k}. Deterministic in `seed`: the state path uses one RNG stream and
/// the measurement noise another, so the path does not depend on `obs`.
Trajectory simulate_trajectory(const TransitionModel2& model, const GaussianPairObservation& obs,
                               const Belief& initial, std::size_t length, std::uint64_t seed);

/// Same, for an arbitrary observation model (noise drawn through obs.sample).
Trajectory simulate_trajectory(const TransitionModel2& model, const ObservationModel& obs,
                               const Belief& initial, std::size_t length, std::uint64_t seed);

/// Measurements for a hand-specified state path X_0..X_n.
Trajectory simulate_scripted(std::vector<State> states, const GaussianPairObservation& obs,
                             std::uint64_t seed);

/// CSV with header `k,state,observation` and one row per measurement.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace isd
