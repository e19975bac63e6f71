#include "isd/hmm_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "isd/csv.hpp"
#include "isd/errors.hpp"

namespace isd {

namespace detail {

double log_sum_exp(std::span<const double> values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace detail

LikelihoodDiag likelihood_diag(const ObservationModel& obs, double y, std::size_t k) {
  const double l1 = obs.log_density(State::normal, y);
  const double l2 = obs.log_density(State::anomalous, y);
  const double m = std::max(l1, l2);
  if (std::isnan(l1) || std::isnan(l2) || !std::isfinite(m)) throw DegenerateLikelihood(k);
  return {{std::exp(l1 - m), std::exp(l2 - m)}, m};
}

FilterStep filter_step(const Belief& prev, double y, const TransitionModel2& model,
                       const ObservationModel& obs, std::size_t k) {
  const Vec2 pred = propagate(build_transition_matrix(model), prev.pair());
  const LikelihoodDiag B = likelihood_diag(obs, y, k);
  const Vec2 w{B.scaled[0] * pred[0], B.scaled[1] * pred[1]};
  const double s = w[0] + w[1];
  if (!(s > 0.0) || !std::isfinite(s)) throw DegenerateLikelihood(k);
  return {Belief({w[0] / s, w[1] / s}), std::log(s) + B.log_offset, k};
}

std::vector<FilterStep> run_filter(std::span<const double> observations, const TransitionModel2& model,
                                   const ObservationModel& obs, const Belief& initial) {
  if (observations.empty()) throw InvalidArgument("run_filter needs at least one observation");
  std::vector<FilterStep> trace;
  trace.reserve(observations.size());
  const Belief* prev = &initial;
  for (std::size_t k = 1; k <= observations.size(); ++k) {
    trace.push_back(filter_step(*prev, observations[k - 1], model, obs, k));
    prev = &trace.back().belief;
  }
  return trace;
}

Belief enumerate_posterior(std::span<const double> observations, const TransitionModel2& model,
                           const ObservationModel& obs, const Belief& initial, std::size_t cap) {
  const std::size_t n = observations.size();
  std::vector<double> by_final[2];
  detail::for_each_path(observations, model, obs, initial, cap, [&](std::uint64_t mask, double lw) {
    by_final[(mask >> n) & 1u].push_back(lw);
  });
  const double l1 = detail::log_sum_exp(by_final[0]);
  const double l2 = detail::log_sum_exp(by_final[1]);
  const double total = detail::log_sum_exp(std::vector<double>{l1, l2});
  if (!std::isfinite(total)) throw DegenerateLikelihood(n);
  const double p2 = std::exp(l2 - total);
  return Belief({1.0 - p2, p2});
}

double enumerate_log_likelihood(std::span<const double> observations, const TransitionModel2& model,
                                const ObservationModel& obs, const Belief& initial, std::size_t cap) {
  std::vector<double> lws;
  detail::for_each_path(observations, model, obs, initial, cap,
                        [&](std::uint64_t, double lw) { lws.push_back(lw); });
  return detail::log_sum_exp(lws);
}

void write_filter_csv(std::ostream& out, std::span<const FilterStep> trace) {
  csv::header(out, {"k", "belief_e1", "belief_e2", "log_normalizer"});
  for (const auto& s : trace) {
    out << s.k << ',' << csv::number(s.belief[0]) << ',' << csv::number(s.belief[1]) << ','
        << csv::number(s.log_normalizer) << '\n';
  }
}

}  // namespace isd
