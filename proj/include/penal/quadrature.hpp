#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace penal {

/// Nodes and weights of an n-point Gauss rule.
struct GaussRule {
  Eigen::ArrayXd nodes;
  Eigen::ArrayXd weights;
};

/// Gauss-Legendre on [-1, 1] by Golub-Welsch.
GaussRule gauss_legendre(int n);

/// Gauss-Laguerre for weight exp(-x) on [0, inf) by Golub-Welsch.
GaussRule gauss_laguerre(int n);

/// Cached rules shared across threads (built once, immutable).
const GaussRule& legendre_cached(int n);

/// Sum of w_i f(mid + half x_i) * half over the rule mapped to [a, b].
template <class F>
double apply_rule(const GaussRule& rule, double a, double b, F&& f) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    s += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return s * half;
}

struct QuadOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_intervals = 4000;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

/// Globally adaptive Gauss-Kronrod (7/15) quadrature. Infinite upper limits
/// are mapped to [0, 1) by u = a + s / (1 - s). Optional breakpoints split
/// the range first so jumps in the integrand sit on interval ends.
QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                        const QuadOptions& opt = {}, const std::vector<double>& breaks = {});

/// As integrate_gk but throws NumericalError when the tolerance is missed.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadOptions& opt = {}, const std::vector<double>& breaks = {});

}  // namespace penal
