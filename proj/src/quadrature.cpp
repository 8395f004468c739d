#include "penal/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "penal/errors.hpp"

namespace penal {

namespace {

GaussRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, double mu0) {
  const Eigen::Index n = diag.size();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  j.diagonal() = diag;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    j(i, i + 1) = off[i];
    j(i + 1, i) = off[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  if (es.info() != Eigen::Success) throw NumericalError("Golub-Welsch eigen-solve failed");
  GaussRule r;
  r.nodes = es.eigenvalues().array();
  r.weights = mu0 * es.eigenvectors().row(0).transpose().array().square();
  return r;
}

// Kronrod 15-point abscissae and weights; Gauss 7-point weights on the odd nodes.
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kWgk[7];
  double g = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double s = f(c - x) + f(c + x);
    k += kWgk[j] * s;
    if (j % 2 == 1) g += kWg[j / 2] * s;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace

GaussRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("Gauss rule needs n >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(diag, off, 2.0);
}

GaussRule gauss_laguerre(int n) {
  if (n < 1) throw ConfigError("Gauss rule needs n >= 1");
  Eigen::VectorXd diag(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) diag[k] = 2.0 * k + 1.0;
  for (int k = 1; k < n; ++k) off[k - 1] = k;
  return golub_welsch(diag, off, 1.0);
}

const GaussRule& legendre_cached(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                        const QuadOptions& opt, const std::vector<double>& breaks) {
  if (std::isnan(a) || std::isnan(b)) throw UsageError("integration limits are NaN");
  if (std::isinf(a)) throw UsageError("integrate_gk needs a finite lower limit");
  QuadResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  if (b < a) {
    out = integrate_gk(f, b, a, opt, breaks);
    out.value = -out.value;
    return out;
  }

  const bool infinite = std::isinf(b);
  auto g = [&](double s) {
    if (!infinite) return f(s);
    const double d = 1.0 - s;
    return f(a + s / d) / (d * d);
  };
  auto to_s = [&](double u) { return infinite ? (u - a) / (1.0 + u - a) : u; };

  std::vector<double> cuts = {infinite ? 0.0 : a};
  std::vector<double> sorted = breaks;
  std::sort(sorted.begin(), sorted.end());
  for (double p : sorted) {
    if (p > a && p < b) cuts.push_back(to_s(p));
  }
  cuts.push_back(infinite ? 1.0 : b);

  std::priority_queue<Segment> heap;
  double total = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (!(cuts[i + 1] > cuts[i])) continue;
    Segment s = gk15(g, cuts[i], cuts[i + 1]);
    total += s.value;
    err += s.error;
    heap.push(s);
  }
  int count = static_cast<int>(heap.size());
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) && count < opt.max_intervals) {
    const Segment top = heap.top();
    const double mid = 0.5 * (top.a + top.b);
    if (!(mid > top.a && mid < top.b)) break;
    heap.pop();
    const Segment l = gk15(g, top.a, mid);
    const Segment r = gk15(g, mid, top.b);
    total += l.value + r.value - top.value;
    err += l.error + r.error - top.error;
    heap.push(l);
    heap.push(r);
    ++count;
  }
  // Re-sum to shed accumulated cancellation from the running updates.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = err;
  out.intervals = count;
  out.converged = std::isfinite(total) && err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
  return out;
}

double integrate(const std::function<double(double)>& f, double a, double b, const QuadOptions& opt,
                 const std::vector<double>& breaks) {
  const QuadResult r = integrate_gk(f, a, b, opt, breaks);
  if (!r.converged) {
    std::ostringstream os;
    os << "quadrature did not converge on [" << a << ", " << b << "]: value " << r.value
       << ", error estimate " << r.error << " after " << r.intervals << " intervals";
    throw NumericalError(os.str());
  }
  return r.value;
}

}  // namespace penal
