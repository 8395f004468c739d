#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace penal {

/// Monte Carlo estimate with a normal-approximation confidence interval.
struct MCEstimate {
  double mean = 0.0;
  double se = 0.0;
  double n = 0.0;
  double n_eff = 0.0;
  double level = 0.95;
  double lo = 0.0;
  double hi = 0.0;
};

double normal_cdf(double x);
/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

MCEstimate make_estimate(double mean, double se, double n, double n_eff, double level = 0.95);

/// Plain sample mean with standard error sd / sqrt(n).
MCEstimate estimate_mean(const Eigen::Ref<const Eigen::ArrayXd>& values);

/// Ratio of means E[a] / E[b] from paired samples, delta-method SE.
MCEstimate estimate_ratio(const Eigen::Ref<const Eigen::ArrayXd>& a,
                          const Eigen::Ref<const Eigen::ArrayXd>& b);

/// (sum w)^2 / sum w^2.
double effective_sample_size(const Eigen::Ref<const Eigen::ArrayXd>& w);

/// |a - b| / sqrt(se_a^2 + se_b^2); infinite when both SEs vanish and a != b.
double combined_z(const MCEstimate& a, const MCEstimate& b);

/// Quantile of a weighted sample (weights >= 0, not all zero).
double weighted_quantile(const Eigen::Ref<const Eigen::ArrayXd>& x,
                         const Eigen::Ref<const Eigen::ArrayXd>& w, double q);

/// sup |F_w - G| between the weighted ECDF of (x, w) and the plain ECDF of y.
double ks_weighted_two_sample(const Eigen::Ref<const Eigen::ArrayXd>& x,
                              const Eigen::Ref<const Eigen::ArrayXd>& w,
                              const Eigen::Ref<const Eigen::ArrayXd>& y);

/// sup |F_n - F| against a continuous reference CDF.
double ks_vs_cdf(const Eigen::Ref<const Eigen::ArrayXd>& x, const std::function<double(double)>& cdf);

/// Least-squares line y = a + b x.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};
LineFit fit_line(const Eigen::Ref<const Eigen::ArrayXd>& x, const Eigen::Ref<const Eigen::ArrayXd>& y);

/// Formats a double with 17 significant digits (round-trip exact).
std::string fmt17(double x);

}  // namespace penal
