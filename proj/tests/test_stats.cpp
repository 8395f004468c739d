#include <doctest.h>

#include <cmath>

#include "penal/stats.hpp"

using namespace penal;
using doctest::Approx;

TEST_SUITE("stats") {
  TEST_CASE("normal cdf and quantile") {
    CHECK(normal_cdf(0.0) == Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.0) == Approx(0.8413447460685429).epsilon(1e-13));
    CHECK(normal_quantile(0.975) == Approx(1.959963984540054).epsilon(1e-9));
    for (double p : {1e-8, 0.01, 0.3, 0.5, 0.9, 1 - 1e-8}) CHECK(normal_cdf(normal_quantile(p)) == Approx(p).epsilon(1e-9));
  }

  TEST_CASE("sample mean and its standard error") {
    Eigen::ArrayXd x(4);
    x << 1, 2, 3, 4;
    const MCEstimate e = estimate_mean(x);
    CHECK(e.mean == Approx(2.5));
    CHECK(e.se == Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(e.n == 4);
    CHECK(e.lo < e.mean);
    CHECK(e.hi > e.mean);
  }

  TEST_CASE("ratio estimator") {
    Eigen::ArrayXd a(3), b(3);
    a << 1, 2, 3;
    b << 2, 4, 6;
    const MCEstimate r = estimate_ratio(a, b);
    CHECK(r.mean == Approx(0.5));
    CHECK(r.se == Approx(0.0).scale(1.0));
  }

  TEST_CASE("effective sample size") {
    CHECK(effective_sample_size(Eigen::ArrayXd::Ones(10)) == Approx(10.0));
    Eigen::ArrayXd w = Eigen::ArrayXd::Zero(10);
    w[3] = 5.0;
    CHECK(effective_sample_size(w) == Approx(1.0));
  }

  TEST_CASE("combined z") {
    CHECK(combined_z(make_estimate(1.0, 0.3, 10, 10), make_estimate(2.0, 0.4, 10, 10)) == Approx(2.0));
    CHECK(combined_z(make_estimate(1.0, 0.0, 1, 1), make_estimate(1.0, 0.0, 1, 1)) == 0.0);
    CHECK(std::isinf(combined_z(make_estimate(1.0, 0.0, 1, 1), make_estimate(2.0, 0.0, 1, 1))));
  }

  TEST_CASE("weighted quantile") {
    Eigen::ArrayXd x(4), w(4);
    x << 4, 1, 3, 2;
    w << 1, 1, 1, 1;
    CHECK(weighted_quantile(x, w, 0.5) == Approx(2.0));
    w << 0, 0, 0, 1;
    CHECK(weighted_quantile(x, w, 0.5) == Approx(2.0));
  }

  TEST_CASE("KS distances") {
    Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(1000, 0.0005, 0.9995);
    CHECK(ks_vs_cdf(x, [](double u) { return u; }) < 1e-3 + 1e-12);
    CHECK(ks_weighted_two_sample(x, Eigen::ArrayXd::Ones(1000), x) == Approx(0.0).scale(1.0));
    CHECK(ks_weighted_two_sample(x, Eigen::ArrayXd::Ones(1000), x + 0.5) == Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("line fit") {
    Eigen::ArrayXd x(3), y(3);
    x << 0, 1, 2;
    y << 1, 3, 5;
    const LineFit f = fit_line(x, y);
    CHECK(f.slope == Approx(2.0));
    CHECK(f.intercept == Approx(1.0));
  }

  TEST_CASE("17-digit formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(std::stod(fmt17(v)) == v);
    CHECK(fmt17(1.0) == "1");
  }
}
