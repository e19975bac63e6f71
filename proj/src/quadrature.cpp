#include "isd/quadrature.hpp"

#include <algorithm>
#include <memory>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "isd/errors.hpp"

namespace isd {

GaussHermiteRule gauss_hermite(std::size_t n) {
  if (n == 0) throw InvalidArgument("Gauss-Hermite rule needs at least one node");
  // GSL aborts on error by default; failures surface as a null workspace instead.
  static const gsl_error_handler_t* previous = gsl_set_error_handler_off();
  (void)previous;
  // Weight exp(-b (x - a)^2) with a = 0, b = 1.
  const std::unique_ptr<gsl_integration_fixed_workspace, decltype(&gsl_integration_fixed_free)> ws(
      gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, n, 0.0, 1.0, 0.0, 0.0), &gsl_integration_fixed_free);
  if (!ws) throw Error("Gauss-Hermite rule construction failed");
  const double* x = gsl_integration_fixed_nodes(ws.get());
  const double* w = gsl_integration_fixed_weights(ws.get());
  GaussHermiteRule rule{std::vector<double>(x, x + n), std::vector<double>(w, w + n)};
  if (rule.nodes.front() < rule.nodes.back()) {
    std::reverse(rule.nodes.begin(), rule.nodes.end());
    std::reverse(rule.weights.begin(), rule.weights.end());
  }
  return rule;
}

}  // namespace isd
