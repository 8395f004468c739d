#include "penal/phi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "penal/errors.hpp"
#include "penal/quadrature.hpp"
#include "penal/special.hpp"

namespace penal {

double positivity_parameter(const StableParams& p) {
  validate_stable(p);
  const double t = std::tan(std::numbers::pi * p.alpha / 2.0);
  const double rho = 0.5 + std::atan(p.beta * t) / (std::numbers::pi * p.alpha);
  const double lo = 1.0 - 1.0 / p.alpha;
  const double hi = 1.0 / p.alpha;
  constexpr double kSlack = 1e-12;
  if (rho < lo - kSlack || rho > hi + kSlack) {
    throw NumericalError("positivity parameter left [1 - 1/alpha, 1/alpha]");
  }
  return std::clamp(rho, lo, hi);
}

double stable_lt_constant_reference(const StableParams& p) {
  validate_stable(p);
  const double t = std::tan(std::numbers::pi * p.alpha / 2.0);
  return -std::tgamma(1.0 - p.alpha) * std::sin(std::numbers::pi * p.alpha / 2.0) /
         (std::numbers::pi * p.c_theta * (1.0 + p.beta * p.beta * t * t));
}

double profile_tail_ratio(const ScalarFn& f, double a, double b) {
  if (b < a) throw UsageError("profile_tail_ratio needs a <= b");
  if (a == b) return 0.0;
  switch (f.kind()) {
    case ScalarFn::Kind::kExpDecay: {
      const double r = f.p0();
      if (r == 0.0) return b - a;
      if (std::isinf(b)) {
        if (r < 0.0) return kInf;
        return 1.0 / r;
      }
      return -std::expm1(-r * (b - a)) / r;
    }
    case ScalarFn::Kind::kConstant:
      return b - a;
    case ScalarFn::Kind::kIndicator:
      if (a > f.p1()) throw DomainError("profile vanishes at the lower limit");
      return std::min(b, f.p1()) - a;
    default: {
      const double fa = f(a);
      if (!(fa > 0.0)) throw DomainError("profile vanishes at the lower limit");
      return f.integral(a, b) / fa;
    }
  }
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

void require_model(const ModelState& s, Model m) {
  if (s.model != m) throw UsageError("state model does not match the invariant function");
}

}  // namespace

double phi_sup_brownian(const ScalarFn& f, double y0, const ModelState& s) {
  require_model(s, Model::kBrownian);
  require(s.supremum >= s.position, "state violates y >= x");
  require(s.supremum <= y0 && f(s.supremum) > 0.0, "state outside S^{sup,f}: need y <= y0, f(y) > 0");
  return (s.supremum - s.position) + profile_tail_ratio(f, s.supremum, y0);
}

double phi_lt_brownian(const ScalarFn& f, double l0, const ModelState& s) {
  require_model(s, Model::kBrownian);
  require(s.local_time >= 0.0, "state has negative local time");
  require(s.local_time <= l0 && f(s.local_time) > 0.0,
          "state outside S^{lt,f}: need l <= l0, f(l) > 0");
  return std::abs(s.position) + profile_tail_ratio(f, s.local_time, l0);
}

double phi_hev(double lambda, const ModelState& s) {
  if (!(lambda > 0.0)) throw ConfigError("Heaviside rate lambda must be positive");
  const double k = std::sqrt(2.0 * lambda);
  if (s.position >= 0.0) return std::exp(-k * s.position) / k;
  return 1.0 / k - s.position;
}

double phi_stable_sup(const StableParams& p, const ScalarFn& f, double y0, const ModelState& s) {
  require_model(s, Model::kStable);
  require(s.supremum >= s.position, "state violates y >= x");
  require(s.supremum <= y0 && f(s.supremum) > 0.0, "state outside S^{sup,f}: need y <= y0, f(y) > 0");
  const double ar = p.alpha * positivity_parameter(p);
  const double x = s.position;
  const double y = s.supremum;
  const double fy = f(y);
  const double head = std::pow(y - x, ar);
  const bool flat = f.kind() == ScalarFn::Kind::kConstant || f.kind() == ScalarFn::Kind::kIndicator;
  if (flat) {
    // f is constant on [y, top], so the integral telescopes.
    const double top = f.kind() == ScalarFn::Kind::kIndicator ? std::min(y0, f.p1()) : y0;
    if (std::isinf(top)) throw DomainError("stable sup integral diverges for a flat profile");
    return std::pow(top - x, ar);
  }
  auto g = [&](double u) { return f(u) * std::pow(u - x, ar - 1.0); };
  std::vector<double> breaks = f.breakpoints();
  const double integral = integrate(g, y, y0, {}, breaks);
  return head + ar * integral / fy;
}

double phi_stable_lt(const StableParams& p, double c, const ScalarFn& f, double l0,
                     const ModelState& s) {
  require_model(s, Model::kStable);
  if (!(c > 0.0)) throw ConfigError("stable local-time constant must be positive");
  require(s.local_time >= 0.0, "state has negative local time");
  require(s.local_time <= l0 && f(s.local_time) > 0.0,
          "state outside S^{lt,f}: need l <= l0, f(l) > 0");
  const double x = s.position;
  const double sgn = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  const double position_term =
      x == 0.0 ? 0.0 : c * (1.0 - p.beta * sgn) * std::pow(std::abs(x), p.alpha - 1.0);
  return position_term + profile_tail_ratio(f, s.local_time, l0);
}

double phi_langevin_a(const ModelState& s) {
  require_model(s, Model::kLangevin);
  require(s.supremum < 0.0 && s.position <= s.supremum, "state outside S^A: need y < 0");
  return langevin_h(-s.position, -s.velocity);
}

namespace {

// h(x, y) extended to x = 0 by its limit sqrt(max(y, 0)).
double h_closed(double x, double y) {
  if (x > 0.0) return langevin_h(x, y);
  return std::sqrt(std::max(y, 0.0));
}

}  // namespace

double phi_langevin_sup(const ScalarFn& f, double y0, const ModelState& s) {
  require_model(s, Model::kLangevin);
  if (y0 > 0.0) throw ConfigError("domain: y0 must be <= 0");
  require(s.supremum >= s.position, "state violates y >= a");
  require(s.supremum <= y0 && f(s.supremum) > 0.0, "state outside S^{sup,f}: need y <= y0, f(y) > 0");
  const double a = s.position;
  const double yb = -s.velocity;
  const double y = s.supremum;
  const double fy = f(y);
  const double head = h_closed(y - a, yb);
  const bool flat = f.kind() == ScalarFn::Kind::kConstant || f.kind() == ScalarFn::Kind::kIndicator;
  if (flat) {
    const double top = f.kind() == ScalarFn::Kind::kIndicator ? std::min(y0, f.p1()) : y0;
    return h_closed(top - a, yb);
  }
  auto g = [&](double w) {
    const double fw = f(w);
    return fw == 0.0 ? 0.0 : fw * langevin_dh_dx(w - a, yb);
  };
  const double integral = integrate(g, y, y0, {}, f.breakpoints());
  return head + integral / fy;
}

// ---------------------------------------------------------------------------

namespace {

double node_potential(const ScalarFn& v, double x, double h) {
  for (double p : v.breakpoints()) {
    if (std::abs(x - p) < 1e-9 * h) {
      const double d = 1e-12 * std::max(1.0, std::abs(p));
      return 0.5 * (v(p - d) + v(p + d));
    }
  }
  return v(x);
}

Eigen::VectorXd solve_fd(const ScalarFn& v, double m, int n, Eigen::ArrayXd& vnodes) {
  const double h = 2.0 * m / n;
  vnodes.resize(n + 1);
  for (int i = 0; i <= n; ++i) vnodes[i] = node_potential(v, -m + i * h, h);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * (n + 1));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  for (int i = 0; i <= n; ++i) {
    trip.emplace_back(i, i, -(2.0 + 2.0 * h * h * vnodes[i]));
    if (i == 0) {
      trip.emplace_back(0, 1, 2.0);
      rhs[0] = -2.0 * h;
    } else if (i == n) {
      trip.emplace_back(n, n - 1, 2.0);
      rhs[n] = -2.0 * h;
    } else {
      trip.emplace_back(i, i - 1, 1.0);
      trip.emplace_back(i, i + 1, 1.0);
    }
  }
  Eigen::SparseMatrix<double> a(n + 1, n + 1);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) {
    throw NumericalError("Kac BVP: sparse LU factorisation failed (" + lu.lastErrorMessage() +
                         "); is v identically zero?");
  }
  Eigen::VectorXd phi = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !phi.allFinite()) {
    throw NumericalError("Kac BVP: linear solve failed");
  }
  // Iterative refinement with an extended-precision residual.
  for (int sweep = 0; sweep < 2; ++sweep) {
    Eigen::VectorXd r(n + 1);
    for (int i = 0; i <= n; ++i) {
      long double ax = -(2.0L + 2.0L * h * h * vnodes[i]) * phi[i];
      if (i == 0) {
        ax += 2.0L * phi[1];
      } else if (i == n) {
        ax += 2.0L * phi[n - 1];
      } else {
        ax += static_cast<long double>(phi[i - 1]) + phi[i + 1];
      }
      r[i] = static_cast<double>(rhs[i] - ax);
    }
    phi += lu.solve(r);
  }
  return phi;
}

}  // namespace

KacSolution phi_kac_solve(const ScalarFn& v, double m, int n, bool richardson) {
  if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("Kac truncation M must be positive");
  if (n < 4 || n % 2 != 0) throw ConfigError("Kac grid needs an even number of intervals >= 4");
  // Integrability and truncation checks.
  std::vector<double> breaks;
  for (double p : v.breakpoints()) breaks.push_back(std::abs(p));
  auto g = [&](double x) { return (1.0 + x) * (v(x) + v(-x)); };
  QuadOptions qo;
  qo.abs_tol = 1e-12;
  const QuadResult total = integrate_gk(g, 0.0, kInf, qo, breaks);
  if (!total.converged || !std::isfinite(total.value)) {
    throw ConfigError("Kac potential: int (1+|x|) v(x) dx diverges");
  }
  if (!(total.value > 0.0)) throw ConfigError("Kac potential must not vanish identically");
  const QuadResult tail = integrate_gk(g, m, kInf, qo, breaks);
  if (tail.value > 1e-8) {
    std::ostringstream os;
    os << "Kac truncation M = " << m << " leaves tail mass " << tail.value << " > 1e-8";
    throw ConfigError(os.str());
  }

  KacSolution sol;
  sol.m_ = m;
  sol.n_ = n;
  sol.h_ = 2.0 * m / n;
  Eigen::VectorXd phi = solve_fd(v, m, n, sol.v_);
  if (richardson) {
    Eigen::ArrayXd vfine;
    const Eigen::VectorXd fine = solve_fd(v, m, 2 * n, vfine);
    for (int i = 0; i <= n; ++i) phi[i] = (4.0 * fine[2 * i] - phi[i]) / 3.0;
  }
  sol.phi_ = phi.array();
  if ((sol.phi_ <= 0.0).any()) throw NumericalError("Kac BVP produced a non-positive solution");
  sol.x_.resize(n + 1);
  for (int i = 0; i <= n; ++i) sol.x_[i] = -m + i * sol.h_;

  sol.slope_.resize(n + 1);
  sol.slope_[0] = -1.0;
  sol.slope_[n] = 1.0;
  for (int i = 1; i < n; ++i) sol.slope_[i] = (sol.phi_[i + 1] - sol.phi_[i - 1]) / (2.0 * sol.h_);

  // Cumulative Simpson from the right, one cell at a time, with the
  // midpoint taken from the Hermite interpolant.
  sol.cum_.resize(n + 1);
  sol.cum_[n] = 0.0;
  for (int i = n - 1; i >= 0; --i) {
    const double mid = sol(sol.x_[i] + 0.5 * sol.h_);
    sol.cum_[i] = sol.cum_[i + 1] + sol.h_ / 6.0 *
                  (1.0 / (sol.phi_[i] * sol.phi_[i]) + 4.0 / (mid * mid) +
                   1.0 / (sol.phi_[i + 1] * sol.phi_[i + 1]));
  }
  sol.c_v_ = sol.cum_[0] + 1.0 / sol.phi_[0] + 1.0 / sol.phi_[n];
  return sol;
}

double KacSolution::operator()(double x) const {
  if (std::isnan(x)) throw DomainError("Kac phi at NaN");
  if (x <= -m_) return phi_[0] + (-m_ - x);
  if (x >= m_) return phi_[n_] + (x - m_);
  const double r = (x + m_) / h_;
  int i = std::min(static_cast<int>(r), n_ - 1);
  const double t = r - i;
  // Cubic Hermite between nodes i and i + 1.
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * phi_[i] + (t3 - 2 * t2 + t) * h_ * slope_[i] +
         (-2 * t3 + 3 * t2) * phi_[i + 1] + (t3 - t2) * h_ * slope_[i + 1];
}

double KacSolution::left_probability(double x) const {
  double right;
  if (x >= m_) {
    right = 1.0 / (phi_[n_] + x - m_);
  } else if (x <= -m_) {
    const double p0 = phi_[0];
    const double q = p0 + (-m_ - x);
    right = cum_[0] + 1.0 / phi_[n_] + (1.0 / p0 - 1.0 / q);
  } else {
    const double r = (x + m_) / h_;
    const int i = std::min(static_cast<int>(r), n_ - 1);
    // Simpson over the partial cell [x, x_{i+1}].
    auto inv2 = [this](double u) {
      const double p = (*this)(u);
      return 1.0 / (p * p);
    };
    const double w = x_[i + 1] - x;
    right = cum_[i + 1] + w / 6.0 * (inv2(x) + 4.0 * inv2(x + 0.5 * w) + inv2(x_[i + 1])) +
            1.0 / phi_[n_];
  }
  return right / c_v_;
}

std::pair<double, double> KacSolution::ode_residual() const {
  double res = 0.0;
  double scale = 0.0;
  for (int i = 1; i < n_; ++i) {
    // The three-point stencil is only first order across a jump of v.
    if (v_[i - 1] != v_[i] || v_[i + 1] != v_[i]) continue;
    const double d2 = (phi_[i - 1] - 2.0 * phi_[i] + phi_[i + 1]) / (h_ * h_);
    res = std::max(res, std::abs(0.5 * d2 - v_[i] * phi_[i]));
    scale = std::max(scale, std::abs(v_[i] * phi_[i]));
  }
  return {res, scale};
}

// ---------------------------------------------------------------------------

std::string_view to_string(PhiKind k) {
  switch (k) {
    case PhiKind::kSupBrownian:
      return "sup_brownian";
    case PhiKind::kLtBrownian:
      return "lt_brownian";
    case PhiKind::kKac:
      return "kac";
    case PhiKind::kHev:
      return "hev";
    case PhiKind::kAvoidZero:
      return "avoid_zero";
    case PhiKind::kStayNegativeB:
      return "stay_negative_B";
    case PhiKind::kStableSup:
      return "stable_sup";
    case PhiKind::kStableLt:
      return "stable_lt";
    case PhiKind::kLangevinA:
      return "langevin_A";
    case PhiKind::kLangevinSup:
      return "langevin_sup";
  }
  return "unknown";
}

PhiFn make_phi(const WeightSpec& w, const PhiOptions& opt) {
  PhiFn phi;
  phi.weight_ = w;
  phi.stable_ = opt.stable;
  validate_weight(w, &opt.stable);
  switch (w.kind) {
    case WeightKind::kSupF:
      if (w.model == Model::kBrownian) {
        phi.kind_ = PhiKind::kSupBrownian;
        phi.normalisation_ = "exact";
      } else if (w.model == Model::kStable) {
        phi.kind_ = PhiKind::kStableSup;
        phi.normalisation_ = "exact";
      } else {
        phi.kind_ = PhiKind::kLangevinSup;
        phi.normalisation_ = "exact (h without the constant c1)";
      }
      break;
    case WeightKind::kLtF:
      if (w.model == Model::kBrownian) {
        phi.kind_ = PhiKind::kLtBrownian;
        phi.normalisation_ = "exact";
      } else {
        phi.kind_ = PhiKind::kStableLt;
        if (opt.stable_lt_c > 0.0) {
          phi.stable_lt_c_ = opt.stable_lt_c;
          phi.normalisation_ = "calibrated C_{alpha,beta}";
        } else {
          phi.stable_lt_c_ = stable_lt_constant_reference(opt.stable);
          phi.normalisation_ = "reference C_{alpha,beta} (occupation-density normalisation)";
        }
      }
      break;
    case WeightKind::kKac:
      phi.kind_ = PhiKind::kKac;
      phi.kac_ = std::make_shared<const KacSolution>(
          phi_kac_solve(w.v, opt.kac_truncation, opt.kac_intervals, opt.kac_richardson));
      phi.normalisation_ = "exact (finite-difference BVP)";
      break;
    case WeightKind::kHev:
      phi.kind_ = PhiKind::kHev;
      phi.normalisation_ = "exact";
      break;
    case WeightKind::kAvoidZero:
      phi.kind_ = PhiKind::kAvoidZero;
      phi.normalisation_ = "exact";
      break;
    case WeightKind::kStayNegativeB:
      phi.kind_ = PhiKind::kStayNegativeB;
      phi.normalisation_ = "exact";
      break;
    case WeightKind::kStayNegativeA:
      phi.kind_ = PhiKind::kLangevinA;
      phi.normalisation_ = "exact (h without the constant c1)";
      break;
  }
  return phi;
}

double PhiFn::operator()(const ModelState& s) const {
  const WeightSpec& w = weight_;
  switch (kind_) {
    case PhiKind::kSupBrownian:
      return phi_sup_brownian(w.f, w.threshold, s);
    case PhiKind::kLtBrownian:
      return phi_lt_brownian(w.f, w.threshold, s);
    case PhiKind::kKac:
      require_model(s, Model::kBrownian);
      return (*kac_)(s.position);
    case PhiKind::kHev:
      require_model(s, Model::kBrownian);
      return phi_hev(w.lambda, s);
    case PhiKind::kAvoidZero:
      require_model(s, Model::kBrownian);
      require(s.position != 0.0, "state outside S^D: x = 0");
      return std::abs(s.position);
    case PhiKind::kStayNegativeB: {
      require_model(s, w.model);
      const double b = w.model == Model::kLangevin ? s.velocity : s.position;
      require(b < 0.0, "state outside S^B: need negative Brownian coordinate");
      return -b;
    }
    case PhiKind::kStableSup:
      return phi_stable_sup(stable_, w.f, w.threshold, s);
    case PhiKind::kStableLt:
      return phi_stable_lt(stable_, stable_lt_c_, w.f, w.threshold, s);
    case PhiKind::kLangevinA:
      return phi_langevin_a(s);
    case PhiKind::kLangevinSup:
      return phi_langevin_sup(w.f, w.threshold, s);
  }
  return 0.0;
}

}  // namespace penal
