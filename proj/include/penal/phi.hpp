#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "penal/functions.hpp"
#include "penal/paths.hpp"
#include "penal/weights.hpp"

namespace penal {

/// rho = P(Z_1 > 0) = 1/2 + arctan(beta tan(pi alpha / 2)) / (pi alpha).
double positivity_parameter(const StableParams& p);

/// Occupation-density constant of the stable position term,
/// -Gamma(1-alpha) sin(pi alpha/2) / (pi c (1 + beta^2 tan^2(pi alpha/2))).
/// Reported next to the calibrated value; never used as ground truth.
double stable_lt_constant_reference(const StableParams& p);

/// (1/f(a)) int_a^b f(u) du for a <= b; exact for the built-in profiles.
double profile_tail_ratio(const ScalarFn& f, double a, double b);

double phi_sup_brownian(const ScalarFn& f, double y0, const ModelState& s);
double phi_lt_brownian(const ScalarFn& f, double l0, const ModelState& s);
double phi_hev(double lambda, const ModelState& s);
double phi_stable_sup(const StableParams& p, const ScalarFn& f, double y0, const ModelState& s);
double phi_stable_lt(const StableParams& p, double c, const ScalarFn& f, double l0,
                     const ModelState& s);
double phi_langevin_a(const ModelState& s);
double phi_langevin_sup(const ScalarFn& f, double y0, const ModelState& s);

/// Tabulated solution of (1/2) phi'' = v phi with phi'(+-M) = +-1.
class KacSolution {
 public:
  double operator()(double x) const;
  /// int_R dy / phi(y)^2 (grid Simpson plus the exact linear tails).
  double c_v() const { return c_v_; }
  /// (1/C_v) int_x^inf dy / phi(y)^2, the weight of the -inf direction.
  double left_probability(double x) const;
  /// max_i |(1/2) phi'' - v phi| and max_i |v phi| over interior nodes
  /// whose stencil does not straddle a jump of v.
  std::pair<double, double> ode_residual() const;

  double truncation() const { return m_; }
  int intervals() const { return n_; }
  const Eigen::ArrayXd& nodes() const { return x_; }
  const Eigen::ArrayXd& values() const { return phi_; }

 private:
  friend KacSolution phi_kac_solve(const ScalarFn& v, double m, int n, bool richardson);
  double m_ = 0.0;
  int n_ = 0;
  double h_ = 0.0;
  Eigen::ArrayXd x_;
  Eigen::ArrayXd phi_;
  Eigen::ArrayXd slope_;
  Eigen::ArrayXd v_;
  Eigen::ArrayXd cum_;  // int_{x_i}^{M} dy / phi^2
  double c_v_ = 0.0;
};

/// Second-order finite differences on n intervals of [-M, M] with ghost-node
/// Neumann rows, solved by sparse LU. With richardson the solve is repeated
/// on 2n intervals and combined as (4 phi_{2n} - phi_n) / 3.
KacSolution phi_kac_solve(const ScalarFn& v, double m = 10.0, int n = 10000,
                          bool richardson = true);

/// Invariant-function settings that are not part of the weight itself.
struct PhiOptions {
  StableParams stable;
  double stable_lt_c = 0.0;  ///< calibrated constant; <= 0 selects the reference value
  double kac_truncation = 10.0;
  int kac_intervals = 10000;
  bool kac_richardson = true;
};

enum class PhiKind {
  kSupBrownian,
  kLtBrownian,
  kKac,
  kHev,
  kAvoidZero,
  kStayNegativeB,
  kStableSup,
  kStableLt,
  kLangevinA,
  kLangevinSup,
};

std::string_view to_string(PhiKind k);

/// phi^Gamma for one weight. Immutable after construction, cheap to copy.
class PhiFn {
 public:
  /// Throws DomainError for states outside S^Gamma.
  double operator()(const ModelState& s) const;

  PhiKind kind() const { return kind_; }
  const WeightSpec& weight() const { return weight_; }
  const std::shared_ptr<const KacSolution>& kac() const { return kac_; }
  const StableParams& stable() const { return stable_; }
  double stable_lt_c() const { return stable_lt_c_; }
  /// Which constants are exact and which were calibrated.
  const std::string& normalisation() const { return normalisation_; }

 private:
  friend PhiFn make_phi(const WeightSpec& w, const PhiOptions& opt);
  PhiKind kind_ = PhiKind::kHev;
  WeightSpec weight_;
  StableParams stable_;
  double stable_lt_c_ = 0.0;
  std::shared_ptr<const KacSolution> kac_;
  std::string normalisation_;
};

/// Selects the invariant function matching the weight and model.
PhiFn make_phi(const WeightSpec& w, const PhiOptions& opt = {});

}  // namespace penal
