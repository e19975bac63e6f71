#pragma once

#include <cstddef>
#include <vector>

namespace isd {

/// n-point Gauss-Hermite rule for the weight exp(-x^2): the integral of
/// exp(-x^2) g(x) over the real line is approximated by sum_i w_i g(x_i),
/// exactly for polynomials g of degree <= 2n - 1. Nodes are descending.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermiteRule gauss_hermite(std::size_t n);

}  // namespace isd
