#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "isd/signal_core.hpp"

namespace isd {

/// Sorted e2-probabilities covering [0, 1], endpoints included.
class BeliefGrid {
 public:
  /// Throws InvalidArgument unless points start at 0, end at 1, increase
  /// strictly and number at least 3.
  explicit BeliefGrid(std::vector<double> points);
  static BeliefGrid uniform(std::size_t resolution);

  std::span<const double> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }

  /// (i, t) with p = (1 - t) points[i] + t points[i + 1], t in [0, 1].
  std::pair<std::size_t, double> locate(double p) const;

 private:
  std::vector<double> points_;
  bool uniform_ = false;
};

struct ValueFunction {
  std::vector<double> values;
  bool converged = false;
  std::size_t iterations = 0;
  double sup_norm_residual = std::numeric_limits<double>::infinity();
};

struct QuadratureSpec {
  /// Gauss-Hermite nodes placed on each Gaussian component.
  std::size_t nodes_per_component = 64;
  /// Largest accepted |integral of the predictive density - 1|.
  double normalisation_tolerance = 1e-6;
};

/// The operator
///   (T V)(p) = min{ c p + E[V(X^+(p, y)) | p], 1 - p }
/// on a belief grid, with V interpolated linearly between grid points.
///
/// The expectation uses nodes from both Gaussian components: with r the
/// equal-weight mixture of f^1 and f^2, the integral of g(y) m(y|p) is taken
/// as the r-integral of g(y) m(y|p) / r(y), and the r-integral by
/// Gauss-Hermite on each component. Each node term is then the perspective
/// m(y|p) V(X^+(p, y)) of V, so T maps concave grid functions to concave
/// grid functions. Successor locations and weights are precomputed.
class BellmanOperator {
 public:
  /// Throws QuadratureFailure when the weights at some grid point do not
  /// integrate the predictive density to one within the spec tolerance.
  BellmanOperator(const BeliefGrid& grid, const TransitionModel2& model, const GaussianPairObservation& obs,
                  double c, const QuadratureSpec& quadrature = {});

  ValueFunction apply(const ValueFunction& current, unsigned threads = 1) const;

  /// c p_i + E[V(X^+(p_i, y))].
  double continuation(std::span<const double> values, std::size_t i) const;

  const BeliefGrid& grid() const noexcept { return grid_; }
  double penalty() const noexcept { return c_; }

 private:
  struct Successor {
    std::uint32_t lower;
    double frac;
    double weight;
  };

  BeliefGrid grid_;
  double c_;
  std::size_t nodes_ = 0;
  std::vector<Successor> successors_;
};

/// One application of the operator, built from scratch.
ValueFunction bellman_backup(const ValueFunction& current, const BeliefGrid& grid, const TransitionModel2& model,
                             const GaussianPairObservation& obs, double c, const QuadratureSpec& quadrature = {});

struct SolverSettings {
  double tol = 1e-8;
  std::size_t max_iter = 100000;
  QuadratureSpec quadrature{};
  unsigned threads = 1;
};

/// Value iteration from V = 0 until the sup-norm change drops below tol.
/// Throws NotConverged after max_iter iterations.
ValueFunction solve(const BeliefGrid& grid, const TransitionModel2& model, const GaussianPairObservation& obs,
                    double c, const SolverSettings& settings = {});

/// The stopping set {p : V(p) = 1 - p} as an interval [threshold, 1].
struct StoppingInterval {
  double threshold = 1.0;
  std::size_t first_index = 0;
};

/// Smallest grid point from which |V - (1 - p)| <= tolerance holds for every
/// larger grid point. Throws NotAnInterval when a stop point sits below a
/// continue point.
StoppingInterval extract_stopping_set(const ValueFunction& vf, const BeliefGrid& grid, double tolerance = 1e-6);

/// Largest discrete second difference (scaled for non-uniform spacing to
/// coincide with V[i-1] - 2 V[i] + V[i+1] on uniform grids).
double max_second_difference(const ValueFunction& vf, const BeliefGrid& grid);

/// CSV: p,value,stop_flag
void write_value_function_csv(std::ostream& out, const ValueFunction& vf, const BeliefGrid& grid,
                              double tolerance = 1e-6);

}  // namespace isd
