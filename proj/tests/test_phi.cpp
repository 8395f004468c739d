#include <doctest.h>

#include <cmath>
#include <numbers>

#include "penal/errors.hpp"
#include "penal/phi.hpp"
#include "penal/special.hpp"

using namespace penal;
using doctest::Approx;

namespace {

// Piecewise closed form for v = lambda 1{|x| <= 1}: A cosh(kx) inside,
// |x| + B outside, C^1 matching at +-1.
double kac_box_exact(double lambda, double x) {
  const double k = std::sqrt(2.0 * lambda);
  const double a = 1.0 / (k * std::sinh(k));
  const double b = std::cosh(k) / (k * std::sinh(k)) - 1.0;
  return std::abs(x) <= 1.0 ? a * std::cosh(k * x) : std::abs(x) + b;
}

}  // namespace

TEST_SUITE("phi") {
  TEST_CASE("Brownian supremum closed form") {
    const ScalarFn one = ScalarFn::indicator(0.0);
    for (double x : {-3.0, -1.0, -0.25}) {
      const ModelState s = ModelState::brownian(x, std::max(x, -0.1), 0);
      CHECK(phi_sup_brownian(one, 0.0, s) == Approx(-x).epsilon(1e-14));
    }
    const ScalarFn e = ScalarFn::exp_decay();
    CHECK(phi_sup_brownian(e, kInf, ModelState::brownian(-0.7, 0.4, 0)) == Approx(0.4 + 0.7 + 1.0));
    CHECK(phi_sup_brownian(e, kInf, ModelState::brownian(0, 0, 0)) == Approx(1.0));
    // fresh maximum: only the tail ratio is left
    CHECK(phi_sup_brownian(e, 2.0, ModelState::brownian(1, 1, 0)) ==
          Approx(1.0 - std::exp(-1.0)).epsilon(1e-13));
  }

  TEST_CASE("Brownian local time closed form") {
    const ScalarFn e = ScalarFn::exp_decay();
    CHECK(phi_lt_brownian(e, kInf, ModelState::brownian(0, 0, 0)) == Approx(1.0));
    CHECK(phi_lt_brownian(e, kInf, ModelState::brownian(-2.5, 1, 3)) == Approx(3.5));
    // f = 1{l = 0}: phi = |x|
    const ScalarFn avoid = ScalarFn::indicator(0.0);
    CHECK(phi_lt_brownian(avoid, 0.0, ModelState::brownian(1.7, 2, 0)) == Approx(1.7));
    CHECK(phi_lt_brownian(avoid, 0.0, ModelState::brownian(-0.3, 2, 0)) == Approx(0.3));
  }

  TEST_CASE("Heaviside closed form") {
    CHECK(phi_hev(0.5, ModelState::brownian(0, 0, 0)) == Approx(1.0));
    CHECK(phi_hev(2.0, ModelState::brownian(0, 0, 0)) == Approx(0.5));
    CHECK(phi_hev(0.5, ModelState::brownian(-1, 0, 0)) == Approx(2.0));
    CHECK(phi_hev(0.5, ModelState::brownian(1e-12, 1e-12, 0)) ==
          Approx(phi_hev(0.5, ModelState::brownian(-1e-12, 0, 0))).epsilon(1e-10));
    CHECK(phi_hev(0.5, ModelState::brownian(2, 2, 0)) == Approx(std::exp(-2.0)));
    CHECK_THROWS(phi_hev(0.0, ModelState::brownian(0, 0, 0)));
  }

  TEST_CASE("Kac box potential matches the piecewise solution") {
    for (double lambda : {0.5, 2.0}) {
      const KacSolution k = phi_kac_solve(ScalarFn::box(lambda, 1.0, 0.0), 10.0, 10000);
      double worst = 0.0, asym = 0.0;
      for (int i = -1000; i <= 1000; ++i) {
        const double x = 0.01 * i;
        worst = std::max(worst, std::abs(k(x) / kac_box_exact(lambda, x) - 1.0));
        asym = std::max(asym, std::abs(k(x) - k(-x)));
      }
      CHECK(worst < 1e-6);
      CHECK(asym < 1e-10);
      const double m = k.truncation(), d = 1e-3;
      CHECK(std::abs((k(m) - k(m - d)) / d - 1.0) < 1e-4);
      const auto [res, scale] = k.ode_residual();
      CHECK(res < 1e-4 * scale);
      // linear extension outside the table
      CHECK(k(15.0) - k(12.0) == Approx(3.0).epsilon(1e-9));
      // C_v = int dy / phi^2, checked against the closed form
      const double kk = std::sqrt(2.0 * lambda);
      const double a = 1.0 / (kk * std::sinh(kk));
      const double b = std::cosh(kk) / (kk * std::sinh(kk)) - 1.0;
      const double inner = 2.0 * std::tanh(kk) / (kk * a * a);
      const double outer = 2.0 / (1.0 + b);
      CHECK(k.c_v() == Approx(inner + outer).epsilon(1e-6));
      CHECK(k.left_probability(0.0) == Approx(0.5).epsilon(1e-9));
    }
  }

  TEST_CASE("Kac solver rejects a vanishing potential") {
    CHECK_THROWS_AS(phi_kac_solve(ScalarFn::constant(0.0)), ConfigError);
  }

  TEST_CASE("positivity parameter") {
    CHECK(positivity_parameter({1.5, 0.0, 1.0}) == Approx(0.5));
    CHECK(positivity_parameter({1.5, 1.0, 1.0}) == Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(positivity_parameter({1.5, -1.0, 1.0}) == Approx(2.0 / 3.0).epsilon(1e-14));
    for (double a : {1.1, 1.5, 1.9}) {
      for (double b : {-1.0, -0.3, 0.0, 0.6, 1.0}) {
        const double r = positivity_parameter({a, b, 1.0});
        CHECK(r >= 1.0 - 1.0 / a - 1e-12);
        CHECK(r <= 1.0 / a + 1e-12);
      }
    }
  }

  TEST_CASE("stable supremum telescopes for an indicator profile") {
    for (double beta : {-1.0, 0.0, 0.5}) {
      const StableParams p{1.5, beta, 1.0};
      const double ar = p.alpha * positivity_parameter(p);
      for (double x : {-2.0, -0.5}) {
        const ModelState s = ModelState::stable(x, x / 2, 0);
        CHECK(phi_stable_sup(p, ScalarFn::indicator(0.0), 0.0, s) ==
              Approx(std::pow(-x, ar)).epsilon(1e-8));
      }
      // x = y: only the integral remains, which is (y0 - y)^(alpha rho) here
      CHECK(phi_stable_sup(p, ScalarFn::indicator(0.0), 0.0, ModelState::stable(-1, -1, 0)) ==
            Approx(1.0).epsilon(1e-8));
    }
  }

  TEST_CASE("stable local time") {
    const ScalarFn e = ScalarFn::exp_decay();
    const StableParams sym{1.5, 0.0, 1.0};
    CHECK(phi_stable_lt(sym, 0.8, e, kInf, ModelState::stable(0, 0, 0.4)) == Approx(1.0));
    CHECK(phi_stable_lt(sym, 0.8, e, kInf, ModelState::stable(1.3, 2, 0)) ==
          Approx(phi_stable_lt(sym, 0.8, e, kInf, ModelState::stable(-1.3, 0, 0))));
    CHECK(phi_stable_lt(sym, 0.8, e, kInf, ModelState::stable(4, 4, 0)) == Approx(0.8 * 2.0 + 1.0));
    const StableParams up{1.5, 1.0, 1.0};
    CHECK(phi_stable_lt(up, 0.8, e, kInf, ModelState::stable(3, 3, 0)) == Approx(1.0));
    CHECK(stable_lt_constant_reference(sym) > 0.0);
  }

  TEST_CASE("Langevin functions") {
    // phi^A(b, a, y) = h(-a, -b)
    CHECK(phi_langevin_a(ModelState::langevin(-3, -1, -0.5)) == Approx(1.7395271280557042402).epsilon(1e-8));
    CHECK(phi_langevin_a(ModelState::langevin(0, -1, -0.5)) == Approx(0.6183916885668086143).epsilon(1e-8));
    CHECK(phi_langevin_a(ModelState::langevin(1, -2, -0.5)) == Approx(0.30261385974585084993).epsilon(1e-8));
    // indicator profile telescopes to h(y0 - a, -b)
    for (double b : {-1.0, 0.0, 2.0}) {
      const ModelState s = ModelState::langevin(b, -1.5, -0.5);
      CHECK(phi_langevin_sup(ScalarFn::indicator(0.0), 0.0, s) == Approx(langevin_h(1.5, -b)).epsilon(1e-7));
      // dh/dw >= 0 keeps phi above the first term for any profile
      CHECK(phi_langevin_sup(ScalarFn::exp_decay(), 0.0, s) >= langevin_h(1.0, -b) * (1 - 1e-12));
    }
  }

  TEST_CASE("PhiFn dispatch and domain") {
    const PhiFn hev = make_phi(WeightSpec::hev(0.5));
    CHECK(hev.kind() == PhiKind::kHev);
    CHECK(hev(ModelState::brownian(-1, 0, 0)) == Approx(2.0));
    const PhiFn avoid = make_phi(WeightSpec::avoid_zero());
    CHECK(avoid(ModelState::brownian(-2, 0, 0)) == Approx(2.0));
    CHECK_THROWS_AS(avoid(ModelState::brownian(0, 0, 0)), DomainError);
    const PhiFn sup = make_phi(WeightSpec::sup_f(Model::kBrownian, ScalarFn::constant(), 0.0));
    CHECK(sup(ModelState::brownian(-2, -1, 0)) == Approx(2.0));
    CHECK_THROWS_AS(sup(ModelState::brownian(0.5, 0.5, 0)), DomainError);
  }

  TEST_CASE("phi is positive on sampled domain states") {
    std::vector<PhiFn> fns = {
        make_phi(WeightSpec::sup_f(Model::kBrownian, ScalarFn::exp_decay())),
        make_phi(WeightSpec::lt_f(Model::kBrownian, ScalarFn::exp_decay())),
        make_phi(WeightSpec::kac(ScalarFn::box(1.0))),
        make_phi(WeightSpec::hev(0.5)),
    };
    for (const auto& phi : fns) {
      for (double x = -5; x <= 5; x += 0.37) {
        for (double l : {0.0, 0.5, 3.0}) {
          const ModelState s = ModelState::brownian(x, std::max(x, 0.2), l);
          CHECK(phi(s) > 0.0);
        }
      }
    }
  }
}
