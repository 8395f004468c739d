#include <doctest.h>

#include <cmath>

#include "penal/measure.hpp"

using namespace penal;
using doctest::Approx;

namespace {

SimOptions small(std::int64_t n, double dt, std::uint64_t seed) {
  SimOptions o;
  o.sampler.dt = dt;
  o.n = n;
  o.seed = seed;
  o.threads = 1;
  return o;
}

}  // namespace

TEST_SUITE("measure") {
  TEST_CASE("martingale weights have mean one at every recorded time") {
    const WeightSpec w = WeightSpec::lt_f(Model::kBrownian, ScalarFn::exp_decay());
    const PhiFn phi = make_phi(w);
    const auto e = build_penalised_ensemble(w, phi, ModelState::brownian(0, 0, 0), 1.0, {0.25, 0.5, 1.0},
                                            small(20000, 0.01, 11));
    REQUIRE(e.weight.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      const MCEstimate m = e.mean_weight(k);
      CHECK(std::abs(m.mean - 1.0) < 3.5 * m.se);
      CHECK(e.n_eff[k] > 0.0);
    }
  }

  TEST_CASE("resampling keeps the mean weight and the state law") {
    const WeightSpec w = WeightSpec::avoid_zero();
    const PhiFn phi = make_phi(w);
    SimOptions o = small(20000, 0.01, 12);
    o.resample = true;
    const auto e = build_penalised_ensemble(w, phi, ModelState::brownian(1, 1, 0), 2.0, {2.0}, o);
    const MCEstimate m = e.mean_weight(0);
    CHECK(std::abs(m.mean - 1.0) < 3.5 * m.se + 1e-12);
    // Bessel(3) from 1 at time 2: E[1/R_2] = (1/x0) P(|N(1, 2)| ... ) = erf(1/2) here
    StateFunctional inv;
    inv.fn = [](const ModelState& s) { return 1.0 / std::abs(s.position); };
    inv.is_one = false;
    const MCEstimate r = e.expect(0, inv);
    CHECK(std::abs(r.mean - std::erf(0.5)) < 4.0 * r.se + 0.01);
  }

  TEST_CASE("ensembles do not depend on the thread count") {
    const WeightSpec w = WeightSpec::hev(0.5);
    const PhiFn phi = make_phi(w);
    SimOptions a = small(3000, 0.01, 13);
    SimOptions b = a;
    b.threads = 3;
    const auto ea = build_penalised_ensemble(w, phi, ModelState::brownian(0, 0, 0), 1.0, {0.5, 1.0}, a);
    const auto eb = build_penalised_ensemble(w, phi, ModelState::brownian(0, 0, 0), 1.0, {0.5, 1.0}, b);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK((ea.weight[k] == eb.weight[k]).all());
      CHECK((ea.state[k] == eb.state[k]).all());
    }
  }

  TEST_CASE("marks are recorded at their time and carried") {
    const WeightSpec w = WeightSpec::lt_f(Model::kBrownian, ScalarFn::exp_decay());
    const PhiFn phi = make_phi(w);
    const auto e = build_penalised_ensemble(w, phi, ModelState::brownian(0, 0, 0), 1.0, {0.5, 1.0},
                                            small(2000, 0.01, 14), {},
                                            {{0.5, StateFunctional::position_above(0.0)}});
    REQUIRE(e.marks.size() == 2);
    for (Eigen::Index i = 0; i < e.n; ++i) {
      CHECK(e.marks[0](i, 0) == (e.state[0](i, 0) > 0.0 ? 1.0 : 0.0));
      CHECK(e.marks[1](i, 0) == e.marks[0](i, 0));
    }
  }

  TEST_CASE("longtime statistics") {
    const WeightSpec w = WeightSpec::lt_f(Model::kBrownian, ScalarFn::exp_decay());
    const PhiFn phi = make_phi(w);
    SimOptions o = small(4000, 0.02, 15);
    o.resample = true;
    const auto r = penalised_longtime_stats(w, phi, ModelState::brownian(0, 0, 0), {1.0, 4.0, 16.0}, 5.0, o);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) CHECK(row.survival.mean == Approx(1.0).epsilon(1e-12));
    CHECK(r.median_increasing);
  }

  TEST_CASE("subsequent Markov identity with F = g = 1") {
    const WeightSpec w = WeightSpec::hev(0.5);
    const PhiFn phi = make_phi(w);
    const auto r = subsequent_markov_check(w, phi, ModelState::brownian(0, 0, 0), 0.5, 2.0,
                                           StateFunctional::one(), StateFunctional::one(), 8,
                                           small(4000, 0.01, 16));
    CHECK(r.z < 3.5);
    CHECK(std::abs(r.lhs.mean - 1.0) < 3.5 * r.lhs.se + 1e-12);
    CHECK(std::abs(r.rhs.mean - 1.0) < 3.5 * r.rhs.se);
  }

  TEST_CASE("Brownian universality ratio") {
    const WeightSpec g = WeightSpec::sup_f(Model::kBrownian, ScalarFn::exp_decay());
    const WeightSpec e = WeightSpec::lt_f(Model::kBrownian, ScalarFn::exp_decay());
    SimOptions o = small(4000, 0.02, 17);
    o.resample = true;
    const auto r = universality_ratio_test(g, make_phi(g), e, make_phi(e), ModelState::brownian(0, 0, 0),
                                           {4.0, 16.0}, o, 1.0, StateFunctional::position_above(0.0));
    REQUIRE(r.rows.size() == 2);
    CHECK(r.identity_evaluated);
    CHECK(r.identity_z < 3.5);
    CHECK(std::abs(r.rows.back().tilted_under_gamma.mean - 1.0) < 0.25);
    CHECK_THROWS(universality_ratio_test(g, make_phi(g), e, make_phi(e), ModelState::brownian(0, 0, 0),
                                         {4.0, 16.0}, o, 1.0, StateFunctional::one(), 5.0));
  }
}
