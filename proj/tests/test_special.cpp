#include <doctest.h>

#include <cmath>

#include "penal/errors.hpp"
#include "penal/special.hpp"

using namespace penal;
using doctest::Approx;

// Reference values from an independent 30-digit evaluation of the integral
// representation.
TEST_SUITE("special") {
  TEST_CASE("U(1/6, 4/3, z)") {
    const double a = 1.0 / 6.0, b = 4.0 / 3.0;
    CHECK(hypergeometric_u(a, b, 1e-6) == Approx(48.727475201094863994).epsilon(1e-8));
    CHECK(hypergeometric_u(a, b, 0.01) == Approx(2.8288528469572423818).epsilon(1e-8));
    CHECK(hypergeometric_u(a, b, 1.0) == Approx(1.0208671373347342397).epsilon(1e-8));
    CHECK(hypergeometric_u(a, b, 6.0) == Approx(0.74503847940194389239).epsilon(1e-8));
    CHECK(hypergeometric_u(a, b, 100.0) == Approx(0.4642871977449847735).epsilon(1e-8));
    CHECK(hypergeometric_u(a, b, 1e4) == Approx(0.21544406742818126985).epsilon(1e-8));
  }

  TEST_CASE("U(7/6, 4/3, z)") {
    const double a = 7.0 / 6.0, b = 4.0 / 3.0;
    CHECK(hypergeometric_u(a, b, 1e-6) == Approx(285.16754777346544951).epsilon(1e-8));
    CHECK(hypergeometric_u(a, b, 0.01) == Approx(9.9412962042929996555).epsilon(1e-8));
    CHECK(hypergeometric_u(a, b, 1.0) == Approx(0.60527382164512914483).epsilon(1e-8));
    CHECK(hypergeometric_u(a, b, 6.0) == Approx(0.1081786909518042018).epsilon(1e-8));
    CHECK(hypergeometric_u(a, b, 100.0) == Approx(0.0045973327540478732851).epsilon(1e-8));
    CHECK(hypergeometric_u(a, b, 1e4) == Approx(2.1542252726921198627e-5).epsilon(1e-8));
  }

  TEST_CASE("closed forms at a = 1") {
    // U(1, 1, z) = e^z E1(z); U(1, 2, z) = 1/z
    CHECK(hypergeometric_u(1.0, 2.0, 0.7) == Approx(1.0 / 0.7).epsilon(1e-10));
    CHECK(hypergeometric_u(1.0, 1.0, 1.0) == Approx(0.59634736232319407434).epsilon(1e-9));
  }

  TEST_CASE("large-z asymptotics") {
    const double a = 1.0 / 6.0, z = 1e4;
    const double r = std::pow(z, a) * hypergeometric_u(a, 4.0 / 3.0, z);
    CHECK(std::abs(r - 1.0) < 1e-3);
    CHECK(r - 1.0 == Approx(2.777642765e-6).epsilon(1e-4));
  }

  TEST_CASE("small-z leading term converges slowly") {
    // z^(b-1) U -> Gamma(b-1)/Gamma(a); the correction is O(z^(b-1)), so at
    // z = 1e-6 the relative gap is still about 1.2e-2.
    const double a = 1.0 / 6.0, b = 4.0 / 3.0, z = 1e-6;
    const double lead = std::tgamma(b - 1.0) / std::tgamma(a);
    const double rel = std::pow(z, b - 1.0) * hypergeometric_u(a, b, z) / lead - 1.0;
    CHECK(rel == Approx(0.01246266543).epsilon(1e-6));
    const double rel_tiny = std::pow(1e-15, b - 1.0) * hypergeometric_u(a, b, 1e-15) / lead - 1.0;
    CHECK(std::abs(rel_tiny) < 1e-3);
  }

  TEST_CASE("derivative identity") {
    const double a = 1.0 / 6.0, b = 4.0 / 3.0, z = 1.0, h = 1e-4;
    auto g = [&](double zz) { return std::pow(zz, a) * hypergeometric_u(a, b, zz); };
    const double fd = (g(z + h) - g(z - h)) / (2 * h);
    const double rhs = -a * (b - a - 1.0) * std::pow(z, a - 1.0) * hypergeometric_u(a + 1.0, b, z);
    CHECK(std::abs(fd / rhs - 1.0) < 1e-5);
  }

  TEST_CASE("U domain errors") {
    CHECK_THROWS_AS(hypergeometric_u(0.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(hypergeometric_u(0.5, 1.0, 0.0), DomainError);
  }

  TEST_CASE("h values") {
    CHECK(langevin_h(1, 0) == Approx(0.6183916885668086143).epsilon(1e-10));
    CHECK(langevin_h(1, 3) == Approx(1.7395271280557042402).epsilon(1e-8));
    CHECK(langevin_h(1, 1e-4) == Approx(0.61843837016679120924).epsilon(1e-8));
    CHECK(langevin_h(1, -1e-4) == Approx(0.61834500696682602196).epsilon(1e-8));
    CHECK(langevin_h(2, -1) == Approx(0.30261385974585084993).epsilon(1e-8));
    CHECK(langevin_h(0.5, 2) == Approx(1.4241155669374933928).epsilon(1e-8));
    CHECK(std::abs(langevin_h(1, 1e-4) - langevin_h(1, -1e-4)) / langevin_h(1, 1e-4) < 1e-2);
    CHECK_THROWS_AS(langevin_h(0.0, 1.0), DomainError);
  }

  TEST_CASE("dh/dx") {
    CHECK(langevin_dh_dx(1, 3) == Approx(0.0070160346221786545326).epsilon(1e-7));
    CHECK(langevin_dh_dx(1, 1e-4) == Approx(0.10305750116116057199).epsilon(1e-7));
    CHECK(langevin_dh_dx(1, -1e-4) == Approx(0.10307306169444229641).epsilon(1e-7));
    CHECK(langevin_dh_dx(2, -1) == Approx(0.081737374344230476403).epsilon(1e-7));
    CHECK(langevin_dh_dx(0.5, 2) == Approx(0.018004454295049850437).epsilon(1e-7));
    for (double x : {0.3, 1.0, 4.0}) {
      for (double y : {-2.0, -0.4, 0.0, 0.7, 2.5}) {
        const double h = 1e-5 * x;
        const double fd = (langevin_h(x + h, y) - langevin_h(x - h, y)) / (2 * h);
        CHECK(langevin_dh_dx(x, y) == Approx(fd).epsilon(1e-5));
        CHECK(langevin_dh_dx(x, y) >= 0.0);
      }
    }
  }

  TEST_CASE("h grows like sqrt|y|") {
    double worst = 0.0;
    for (double x : {0.1, 1.0, 10.0}) {
      for (double y : {-20.0, -3.0, -0.5, 0.5, 3.0, 20.0}) {
        worst = std::max(worst, langevin_h(x, y) / std::sqrt(std::abs(y)));
      }
    }
    CHECK(std::isfinite(worst));
    CHECK(worst < 10.0);
  }
}
