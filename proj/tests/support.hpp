#pragma once

// Reference computations written directly from the model definitions, with no
// code shared with the library. Used as oracles by the unit and acceptance
// tests.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

struct Params {
  double rho = 0.01;
  double a = 0.99;
  double mu1 = 1.0;
  double mu2 = 2.0;
  double sigma2 = 5.0;
  std::array<double, 2> initial{1.0, 0.0};
};

inline long double gauss(long double y, long double mu, long double sigma2) {
  const long double d = y - mu;
  return std::exp(-d * d / (2.0L * sigma2)) / std::sqrt(2.0L * std::numbers::pi_v<long double> * sigma2);
}

// P(X_{k+1} = to | X_k = from), states 0 (normal) and 1 (anomalous).
inline long double trans(const Params& p, int from, int to) {
  if (from == 0) return to == 0 ? 1.0L - p.rho : p.rho;
  return to == 1 ? p.a : 1.0L - p.a;
}

struct PathSums {
  long double likelihood = 0.0L;             // p(y_1..y_n)
  std::array<long double, 2> posterior{};    // P(X_n | y)
  std::array<std::array<long double, 2>, 2> joint{};  // joint[i][j] = E[O^i_n 1{X_n = j} | y]
  std::vector<std::array<long double, 2>> smoothed;   // P(X_l | y), l = 0..n
};

// Sums over all 2^(n+1) state paths X_0..X_n.
inline PathSums enumerate(const std::vector<double>& y, const Params& p) {
  const std::size_t n = y.size();
  PathSums out;
  out.smoothed.assign(n + 1, {0.0L, 0.0L});
  std::vector<int> x(n + 1);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n + 1)); ++mask) {
    for (std::size_t l = 0; l <= n; ++l) x[l] = static_cast<int>((mask >> l) & 1U);
    long double w = p.initial[x[0]];
    for (std::size_t l = 1; l <= n && w > 0.0L; ++l) {
      w *= trans(p, x[l - 1], x[l]) * gauss(y[l - 1], x[l] == 0 ? p.mu1 : p.mu2, p.sigma2);
    }
    if (w == 0.0L) continue;
    out.likelihood += w;
    out.posterior[x[n]] += w;
    std::array<int, 2> count{0, 0};
    for (std::size_t l = 0; l < n; ++l) ++count[x[l]];
    for (int i = 0; i < 2; ++i) out.joint[i][x[n]] += w * count[i];
    for (std::size_t l = 0; l <= n; ++l) out.smoothed[l][x[l]] += w;
  }
  for (auto& v : out.posterior) v /= out.likelihood;
  for (auto& row : out.joint) {
    for (auto& v : row) v /= out.likelihood;
  }
  for (auto& s : out.smoothed) {
    for (auto& v : s) v /= out.likelihood;
  }
  return out;
}

// Shiryaev's recursion for the posterior change probability when the
// anomalous state is absorbing.
inline std::vector<double> shiryaev(const std::vector<double>& y, const Params& p, double p0) {
  // Odds form in long double; the q-form loses 1 - q to cancellation near 1.
  std::vector<double> out;
  const long double rho = p.rho;
  long double odds = p0 / (1.0L - p0);
  for (double v : y) {
    odds = (odds + rho) / (1.0L - rho) * gauss(v, p.mu2, p.sigma2) / gauss(v, p.mu1, p.sigma2);
    out.push_back(static_cast<double>(odds / (1.0L + odds)));
  }
  return out;
}

// Random 2-state instance with rho, a in (0, 1) and random Gaussian pair.
struct Instance {
  Params params;
  std::vector<double> y;
};

inline Instance random_instance(std::mt19937_64& gen, std::size_t max_length) {
  std::uniform_real_distribution<double> unit(0.001, 0.999);
  std::uniform_real_distribution<double> mean(-3.0, 3.0);
  std::uniform_real_distribution<double> logvar(std::log(0.05), std::log(20.0));
  std::uniform_int_distribution<std::size_t> len(1, max_length);
  Instance inst;
  auto& p = inst.params;
  p.rho = unit(gen);
  p.a = unit(gen);
  p.mu1 = mean(gen);
  p.mu2 = mean(gen);
  p.sigma2 = std::exp(logvar(gen));
  const double w = unit(gen);
  p.initial = {w, 1.0 - w};
  const std::size_t n = len(gen);
  std::normal_distribution<double> noise(0.0, 1.0);
  // Measurements drawn around either mean so both states stay plausible.
  for (std::size_t k = 0; k < n; ++k) {
    const double m = unit(gen) < 0.5 ? p.mu1 : p.mu2;
    inst.y.push_back(m + std::sqrt(p.sigma2) * noise(gen));
  }
  return inst;
}

}  // namespace oracle
