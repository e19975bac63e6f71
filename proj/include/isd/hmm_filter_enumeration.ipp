// Path enumeration shared by the filter and occupation oracles.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "isd/errors.hpp"

namespace isd::detail {

template <class Visitor>
void for_each_path(std::span<const double> observations, const TransitionModel2& model,
                   const ObservationModel& obs, const Belief& initial, std::size_t cap,
                   Visitor&& visit) {
  const std::size_t n = observations.size();
  if (n > cap) throw CapExceeded(n, cap);
  const Matrix2 A = build_transition_matrix(model);
  const Vec2 x0 = initial.pair();

  std::vector<Vec2> log_f(n);
  for (std::size_t l = 0; l < n; ++l) {
    log_f[l] = {obs.log_density(State::normal, observations[l]),
                obs.log_density(State::anomalous, observations[l])};
  }
  auto log_of = [](double p) { return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity(); };
  const std::array<Vec2, 2> log_A{{{log_of(A[0][0]), log_of(A[0][1])}, {log_of(A[1][0]), log_of(A[1][1])}}};

  const std::uint64_t paths = std::uint64_t{1} << (n + 1);
  for (std::uint64_t mask = 0; mask < paths; ++mask) {
    std::size_t prev = mask & 1u;
    double lw = log_of(x0[prev]);
    for (std::size_t l = 1; l <= n && lw > -std::numeric_limits<double>::infinity(); ++l) {
      const std::size_t cur = (mask >> l) & 1u;
      lw += log_A[cur][prev] + log_f[l - 1][cur];
      prev = cur;
    }
    visit(mask, lw);
  }
}

}  // namespace isd::detail
