#include "isd/signal_core.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "isd/csv.hpp"
#include "isd/errors.hpp"

namespace isd {

namespace {

bool is_probability(double x) { return x >= 0.0 && x <= 1.0; }

State draw_state(const Vec2& dist, Rng& rng) {
  boost::random::uniform_01<double> u;
  return u(rng) < dist[0] ? State::normal : State::anomalous;
}

Vec2 column(const Matrix2& m, State from) {
  const auto j = slot(from);
  return {m[0][j], m[1][j]};
}

}  // namespace

Belief::Belief(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw InvalidArgument("belief must have at least one state");
  double sum = 0.0;
  for (double x : p_) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InvalidArgument("belief entries must be finite and nonnegative");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InvalidArgument("belief entries sum to " + csv::number(sum) + ", not 1");
  }
}

Belief Belief::point_mass(std::size_t size, std::size_t index) {
  if (index >= size) throw InvalidArgument("point mass index out of range");
  std::vector<double> p(size, 0.0);
  p[index] = 1.0;
  return Belief(std::move(p));
}

Vec2 Belief::pair() const {
  if (p_.size() != 2) throw InvalidArgument("expected a two-state belief");
  return {p_[0], p_[1]};
}

void TransitionModel2::validate() const {
  if (!is_probability(rho)) throw InvalidArgument("rho must lie in [0, 1]");
  if (!is_probability(a)) throw InvalidArgument("a must lie in [0, 1]");
}

Matrix2 build_transition_matrix(const TransitionModel2& model) {
  model.validate();
  return {{{1.0 - model.rho, 1.0 - model.a}, {model.rho, model.a}}};
}

Vec2 propagate(const Matrix2& m, const Vec2& p) noexcept {
  return {m[0][0] * p[0] + m[0][1] * p[1], m[1][0] * p[0] + m[1][1] * p[1]};
}

Belief stationary_distribution(const TransitionModel2& model) {
  model.validate();
  const double leave_anomalous = 1.0 - model.a;
  const double total = leave_anomalous + model.rho;
  if (total <= 0.0) throw InvalidArgument("chain with rho = 0 and a = 1 has no unique stationary law");
  const double p2 = model.rho / total;
  return Belief({1.0 - p2, p2});
}

GaussianPairObservation::GaussianPairObservation(double mu1, double mu2, double sigma2)
    : mu1_(mu1), mu2_(mu2), sigma2_(sigma2) {
  if (!std::isfinite(mu1) || !std::isfinite(mu2)) throw InvalidArgument("means must be finite");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("sigma2 must be > 0");
  log_norm_ = -0.5 * std::log(2.0 * std::numbers::pi * sigma2);
  sigma_ = std::sqrt(sigma2);
}

double GaussianPairObservation::log_density(State state, double y) const {
  const double d = y - mean(state);
  return log_norm_ - 0.5 * d * d / sigma2_;
}

double GaussianPairObservation::sample(State state, Rng& rng) const {
  boost::random::normal_distribution<double> z;
  return from_standard_normal(state, z(rng));
}

double GaussianPairObservation::from_standard_normal(State state, double z) const noexcept {
  return mean(state) + sigma_ * z;
}

double density(const ObservationModel& obs, State state, double y) {
  return std::exp(obs.log_density(state, y));
}

namespace {

std::vector<State> simulate_states(const TransitionModel2& model, const Belief& initial,
                                   std::size_t length, Rng& rng) {
  if (length < 1) throw InvalidArgument("trajectory length must be >= 1");
  const Matrix2 A = build_transition_matrix(model);
  std::vector<State> states;
  states.reserve(length + 1);
  states.push_back(draw_state(initial.pair(), rng));
  for (std::size_t k = 1; k <= length; ++k) states.push_back(draw_state(column(A, states.back()), rng));
  return states;
}

}  // namespace

Trajectory simulate_trajectory(const TransitionModel2& model, const GaussianPairObservation& obs,
                               const Belief& initial, std::size_t length, std::uint64_t seed) {
  Rng state_rng = make_rng(seed, 0);
  Rng noise_rng = make_rng(seed, 1);
  Trajectory traj;
  traj.seed = seed;
  traj.states = simulate_states(model, initial, length, state_rng);
  traj.observations.reserve(length);
  boost::random::normal_distribution<double> z;
  for (std::size_t k = 1; k <= length; ++k) {
    traj.observations.push_back(obs.from_standard_normal(traj.states[k], z(noise_rng)));
  }
  return traj;
}

Trajectory simulate_trajectory(const TransitionModel2& model, const ObservationModel& obs,
                               const Belief& initial, std::size_t length, std::uint64_t seed) {
  if (const auto* gauss = dynamic_cast<const GaussianPairObservation*>(&obs)) {
    return simulate_trajectory(model, *gauss, initial, length, seed);
  }
  Rng state_rng = make_rng(seed, 0);
  Rng noise_rng = make_rng(seed, 1);
  Trajectory traj;
  traj.seed = seed;
  traj.states = simulate_states(model, initial, length, state_rng);
  traj.observations.reserve(length);
  for (std::size_t k = 1; k <= length; ++k) traj.observations.push_back(obs.sample(traj.states[k], noise_rng));
  return traj;
}

Trajectory simulate_scripted(std::vector<State> states, const GaussianPairObservation& obs,
                             std::uint64_t seed) {
  if (states.size() < 2) throw InvalidArgument("scripted path needs X_0 and at least one step");
  Rng noise_rng = make_rng(seed, 1);
  boost::random::normal_distribution<double> z;
  Trajectory traj;
  traj.seed = seed;
  traj.states = std::move(states);
  traj.observations.reserve(traj.states.size() - 1);
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    traj.observations.push_back(obs.from_standard_normal(traj.states[k], z(noise_rng)));
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  csv::header(out, {"k", "state", "observation"});
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    out << k << ',' << static_cast<int>(traj.states[k]) << ',' << csv::number(traj.observations[k - 1])
        << '\n';
  }
}

}  // namespace isd
