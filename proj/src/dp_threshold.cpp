#include "isd/dp_threshold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "isd/csv.hpp"
#include "isd/errors.hpp"
#include "isd/hmm_filter.hpp"
#include "isd/parallel.hpp"
#include "isd/quadrature.hpp"

namespace isd {

BeliefGrid::BeliefGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 3) throw InvalidArgument("belief grid needs at least 3 points");
  if (points_.front() != 0.0 || points_.back() != 1.0) throw InvalidArgument("belief grid must span [0, 1]");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i] > points_[i - 1])) throw InvalidArgument("belief grid must increase strictly");
  }
}

BeliefGrid BeliefGrid::uniform(std::size_t resolution) {
  if (resolution < 3) throw InvalidArgument("belief grid needs at least 3 points");
  std::vector<double> p(resolution);
  const double last = static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) p[i] = static_cast<double>(i) / last;
  BeliefGrid g(std::move(p));
  g.uniform_ = true;
  return g;
}

std::pair<std::size_t, double> BeliefGrid::locate(double p) const {
  const std::size_t last = points_.size() - 1;
  p = std::clamp(p, 0.0, 1.0);
  std::size_t i;
  if (uniform_) {
    i = std::min(static_cast<std::size_t>(p * static_cast<double>(last)), last - 1);
    // guard the floor against rounding at cell edges
    if (points_[i] > p && i > 0) --i;
    if (points_[i + 1] < p && i + 1 < last) ++i;
  } else {
    const auto it = std::upper_bound(points_.begin(), points_.end(), p);
    i = std::min(static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - points_.begin() - 1, 0)), last - 1);
  }
  const double t = (p - points_[i]) / (points_[i + 1] - points_[i]);
  return {i, std::clamp(t, 0.0, 1.0)};
}

BellmanOperator::BellmanOperator(const BeliefGrid& grid, const TransitionModel2& model,
                                 const GaussianPairObservation& obs, double c, const QuadratureSpec& quadrature)
    : grid_(grid), c_(c) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("penalty c must be finite and >= 0");
  const GaussHermiteRule gh = gauss_hermite(quadrature.nodes_per_component);
  const double scale = std::sqrt(2.0 * obs.sigma2());

  // Nodes of both components with weights for the equal mixture r.
  std::vector<double> ys;
  std::vector<double> base_w;
  for (State s : {State::normal, State::anomalous}) {
    for (std::size_t n = 0; n < gh.nodes.size(); ++n) {
      ys.push_back(obs.mean(s) + scale * gh.nodes[n]);
      base_w.push_back(0.5 * gh.weights[n] / std::sqrt(std::numbers::pi));
    }
  }
  std::vector<LikelihoodDiag> diag;
  diag.reserve(ys.size());
  for (std::size_t n = 0; n < ys.size(); ++n) diag.push_back(likelihood_diag(obs, ys[n], n));

  nodes_ = ys.size();
  successors_.resize(grid_.size() * nodes_);
  const Matrix2 A = build_transition_matrix(model);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const double p = grid_[i];
    const Vec2 pred = propagate(A, {1.0 - p, p});
    double mass = 0.0;
    for (std::size_t n = 0; n < nodes_; ++n) {
      const Vec2& b = diag[n].scaled;
      const Vec2 w{b[0] * pred[0], b[1] * pred[1]};
      const double s = w[0] + w[1];
      const double weight = base_w[n] * s / (0.5 * (b[0] + b[1]));
      const double next = s > 0.0 ? w[1] / s : p;
      const auto [lower, frac] = grid_.locate(next);
      successors_[i * nodes_ + n] = {static_cast<std::uint32_t>(lower), frac, weight};
      mass += weight;
    }
    if (std::abs(mass - 1.0) > quadrature.normalisation_tolerance) {
      throw QuadratureFailure("predictive density integrates to " + csv::number(mass) + " at p = " +
                              csv::number(p));
    }
  }
}

double BellmanOperator::continuation(std::span<const double> values, std::size_t i) const {
  double expected = 0.0;
  const Successor* s = successors_.data() + i * nodes_;
  for (std::size_t n = 0; n < nodes_; ++n) {
    const double v0 = values[s[n].lower];
    const double v1 = values[s[n].lower + 1];
    expected += s[n].weight * (v0 + s[n].frac * (v1 - v0));
  }
  return c_ * grid_[i] + expected;
}

ValueFunction BellmanOperator::apply(const ValueFunction& current, unsigned threads) const {
  if (current.values.size() != grid_.size()) throw InvalidArgument("value function not aligned with grid");
  ValueFunction next;
  next.values.resize(grid_.size());
  parallel_for(grid_.size(), threads, [&](std::size_t i) {
    next.values[i] = std::min(continuation(current.values, i), 1.0 - grid_[i]);
  });
  double residual = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    residual = std::max(residual, std::abs(next.values[i] - current.values[i]));
  }
  next.iterations = current.iterations + 1;
  next.sup_norm_residual = residual;
  return next;
}

ValueFunction bellman_backup(const ValueFunction& current, const BeliefGrid& grid, const TransitionModel2& model,
                             const GaussianPairObservation& obs, double c, const QuadratureSpec& quadrature) {
  return BellmanOperator(grid, model, obs, c, quadrature).apply(current);
}

ValueFunction solve(const BeliefGrid& grid, const TransitionModel2& model, const GaussianPairObservation& obs,
                    double c, const SolverSettings& settings) {
  if (!(settings.tol > 0.0)) throw InvalidArgument("solver tolerance must be > 0");
  const BellmanOperator T(grid, model, obs, c, settings.quadrature);
  ValueFunction v;
  v.values.assign(grid.size(), 0.0);
  while (v.iterations < settings.max_iter) {
    v = T.apply(v, settings.threads);
    if (v.sup_norm_residual < settings.tol) {
      v.converged = true;
      return v;
    }
  }
  throw NotConverged(v.iterations, v.sup_norm_residual);
}

StoppingInterval extract_stopping_set(const ValueFunction& vf, const BeliefGrid& grid, double tolerance) {
  if (vf.values.size() != grid.size()) throw InvalidArgument("value function not aligned with grid");
  auto stops = [&](std::size_t i) { return std::abs(vf.values[i] - (1.0 - grid[i])) <= tolerance; };
  std::size_t first = grid.size();
  while (first > 0 && stops(first - 1)) --first;
  if (first == grid.size()) throw NotAnInterval("stopping set does not contain belief 1");
  for (std::size_t i = 0; i < first; ++i) {
    if (stops(i)) {
      throw NotAnInterval("grid point p = " + csv::number(grid[i]) + " stops but p = " +
                          csv::number(grid[first - 1]) + " continues");
    }
  }
  return {grid[first], first};
}

double max_second_difference(const ValueFunction& vf, const BeliefGrid& grid) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double hl = grid[i] - grid[i - 1];
    const double hr = grid[i + 1] - grid[i];
    const double d = (hr * vf.values[i - 1] + hl * vf.values[i + 1] - (hl + hr) * vf.values[i]) / (0.5 * (hl + hr));
    worst = std::max(worst, d);
  }
  return worst;
}

void write_value_function_csv(std::ostream& out, const ValueFunction& vf, const BeliefGrid& grid,
                              double tolerance) {
  csv::header(out, {"p", "value", "stop_flag"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool stop = std::abs(vf.values[i] - (1.0 - grid[i])) <= tolerance;
    out << csv::number(grid[i]) << ',' << csv::number(vf.values[i]) << ',' << (stop ? 1 : 0) << '\n';
  }
}

}  // namespace isd
