#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "isd/signal_core.hpp"

namespace isd {

/// Posterior after assimilating y_k, plus log <1, B(y_k) A X_{k-1}>.
struct FilterStep {
  Belief belief;
  double log_normalizer = 0.0;
  std::size_t k = 0;
};

/// B(y) = diag(f^1(y), f^2(y)) stored as exp(offset) * scaled. The shared
/// offset keeps the scaled entries in [0, 1] so that products never underflow
/// for measurements far from both means.
struct LikelihoodDiag {
  Vec2 scaled{};
  double log_offset = 0.0;
};

/// Throws DegenerateLikelihood(k) when both densities vanish at y.
LikelihoodDiag likelihood_diag(const ObservationModel& obs, double y, std::size_t k);

/// One step of X_k = N_k B(y) A X_{k-1}.
FilterStep filter_step(const Belief& prev, double y, const TransitionModel2& model,
                       const ObservationModel& obs, std::size_t k = 1);

/// Folds filter_step over y_1..y_n; element k - 1 holds X_k.
std::vector<FilterStep> run_filter(std::span<const double> observations, const TransitionModel2& model,
                                   const ObservationModel& obs, const Belief& initial);

/// Default cap on the sequence length accepted by the path-enumeration oracles.
inline constexpr std::size_t kEnumerationCap = 12;

/// Exact P(X_n | y_1..y_n) by summing the joint density over all 2^(n+1)
/// state paths. Throws CapExceeded when n > cap.
Belief enumerate_posterior(std::span<const double> observations, const TransitionModel2& model,
                           const ObservationModel& obs, const Belief& initial,
                           std::size_t cap = kEnumerationCap);

/// log p(y_1..y_n) by path enumeration.
double enumerate_log_likelihood(std::span<const double> observations, const TransitionModel2& model,
                                const ObservationModel& obs, const Belief& initial,
                                std::size_t cap = kEnumerationCap);

/// CSV: k,belief_e1,belief_e2,log_normalizer
void write_filter_csv(std::ostream& out, std::span<const FilterStep> trace);

namespace detail {

/// Visits every state path X_0..X_n with its log joint density
/// log p(X_0..X_n, y_1..y_n). The path is passed as a bit mask, bit l set
/// when X_l = e2.
template <class Visitor>
void for_each_path(std::span<const double> observations, const TransitionModel2& model,
                   const ObservationModel& obs, const Belief& initial, std::size_t cap,
                   Visitor&& visit);

double log_sum_exp(std::span<const double> values);

}  // namespace detail

}  // namespace isd

#include "isd/hmm_filter_enumeration.ipp"
