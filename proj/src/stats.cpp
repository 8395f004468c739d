#include "penal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "penal/errors.hpp"

namespace penal {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile needs 0 < p < 1");
  // Bisection to bracket, then Newton polish.
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf <= 0.0) break;
    x -= (normal_cdf(x) - p) / pdf;
  }
  return x;
}

MCEstimate make_estimate(double mean, double se, double n, double n_eff, double level) {
  MCEstimate e;
  e.mean = mean;
  e.se = se;
  e.n = n;
  e.n_eff = n_eff;
  e.level = level;
  const double z = normal_quantile(0.5 + 0.5 * level);
  e.lo = mean - z * se;
  e.hi = mean + z * se;
  return e;
}

MCEstimate estimate_mean(const Eigen::Ref<const Eigen::ArrayXd>& v) {
  const double n = static_cast<double>(v.size());
  if (n < 2) throw UsageError("estimate_mean needs at least two samples");
  // Exact for constant samples (e.g. every path at t = 0).
  if ((v == v[0]).all()) return make_estimate(v[0], 0.0, n, n);
  const double m = v.mean();
  const double var = (v - m).square().sum() / (n - 1.0);
  return make_estimate(m, std::sqrt(var / n), n, n);
}

MCEstimate estimate_ratio(const Eigen::Ref<const Eigen::ArrayXd>& a,
                          const Eigen::Ref<const Eigen::ArrayXd>& b) {
  if (a.size() != b.size() || a.size() < 2) throw UsageError("estimate_ratio needs paired samples");
  const double n = static_cast<double>(a.size());
  const double ma = a.mean();
  const double mb = b.mean();
  if (mb == 0.0) {
    return make_estimate(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), n, 0.0);
  }
  const double r = ma / mb;
  const Eigen::ArrayXd resid = a - r * b;
  const double var = resid.square().sum() / (n - 1.0);
  return make_estimate(r, std::sqrt(var / n) / std::abs(mb), n, effective_sample_size(b));
}

double effective_sample_size(const Eigen::Ref<const Eigen::ArrayXd>& w) {
  const double s = w.sum();
  const double s2 = w.square().sum();
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

double combined_z(const MCEstimate& a, const MCEstimate& b) {
  const double d = std::abs(a.mean - b.mean);
  const double s = std::sqrt(a.se * a.se + b.se * b.se);
  if (s == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return d / s;
}

double weighted_quantile(const Eigen::Ref<const Eigen::ArrayXd>& x,
                         const Eigen::Ref<const Eigen::ArrayXd>& w, double q) {
  if (x.size() != w.size() || x.size() == 0) throw UsageError("weighted_quantile size mismatch");
  std::vector<Eigen::Index> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index i, Eigen::Index j) { return x[i] < x[j]; });
  const double total = w.sum();
  if (!(total > 0.0)) throw UsageError("weighted_quantile needs positive total weight");
  double acc = 0.0;
  for (Eigen::Index i : idx) {
    acc += w[i];
    if (acc >= q * total) return x[i];
  }
  return x[idx.back()];
}

double ks_weighted_two_sample(const Eigen::Ref<const Eigen::ArrayXd>& x,
                              const Eigen::Ref<const Eigen::ArrayXd>& w,
                              const Eigen::Ref<const Eigen::ArrayXd>& y) {
  std::vector<std::pair<double, double>> a;
  a.reserve(x.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (w[i] > 0.0) {
      a.emplace_back(x[i], w[i]);
      total += w[i];
    }
  }
  if (!(total > 0.0) || y.size() == 0) throw UsageError("KS needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::vector<double> b(y.begin(), y.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double fa = 0.0;
  double d = 0.0;
  const double nb = static_cast<double>(b.size());
  while (i < a.size() || j < b.size()) {
    const double xa = i < a.size() ? a[i].first : std::numeric_limits<double>::infinity();
    const double xb = j < b.size() ? b[j] : std::numeric_limits<double>::infinity();
    const double t = std::min(xa, xb);
    while (i < a.size() && a[i].first == t) fa += a[i++].second;
    while (j < b.size() && b[j] == t) ++j;
    d = std::max(d, std::abs(fa / total - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_vs_cdf(const Eigen::Ref<const Eigen::ArrayXd>& x, const std::function<double(double)>& cdf) {
  std::vector<double> v(x.begin(), x.end());
  if (v.empty()) throw UsageError("KS needs a nonempty sample");
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return d;
}

LineFit fit_line(const Eigen::Ref<const Eigen::ArrayXd>& x, const Eigen::Ref<const Eigen::ArrayXd>& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("fit_line needs two or more points");
  const double mx = x.mean();
  const double my = y.mean();
  const double sxx = (x - mx).square().sum();
  if (sxx == 0.0) throw UsageError("fit_line needs distinct x values");
  LineFit f;
  f.slope = ((x - mx) * (y - my)).sum() / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace penal
