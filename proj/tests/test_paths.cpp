#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "penal/ensemble.hpp"
#include "penal/errors.hpp"
#include "penal/paths.hpp"
#include "penal/phi.hpp"
#include "penal/stats.hpp"

using namespace penal;
using doctest::Approx;

namespace {

// Collects f(path) over n single-step or short paths.
template <class F>
Eigen::ArrayXd collect(std::int64_t n, F&& f) {
  Eigen::ArrayXd v(n);
  for (std::int64_t i = 0; i < n; ++i) v[i] = f(path_stream(11, i));
  return v;
}

bool within(const MCEstimate& e, double target, double k = 3.0) { return std::abs(e.mean - target) <= k * e.se; }

}  // namespace

TEST_SUITE("paths") {
  TEST_CASE("initial state and grid invariants") {
    const PathSample p = sample_brownian_triple(ModelState::brownian(0, 0, 0), 1.0, 0.01, 0.1, 3, 4);
    CHECK(p.state(0) == ModelState::brownian(0, 0, 0));
    CHECK(p.size() == 101);
    CHECK(p.eps == Approx(0.1));
    for (std::int64_t k = 1; k < p.size(); ++k) {
      CHECK(p.supremum[k] >= p.position[k]);
      CHECK(p.supremum[k] >= p.supremum[k - 1]);
      CHECK(p.local_time[k] >= p.local_time[k - 1]);
    }
    CHECK_THROWS_AS(Grid::make(1.0, 0.3), ConfigError);
    CHECK_THROWS_AS(validate_state(ModelState::brownian(1, 0, 0)), ConfigError);
  }

  TEST_CASE("E|B_1| = sqrt(2/pi)") {
    const auto v = collect(1000000, [](std::uint64_t s) {
      return std::abs(sample_brownian_triple(ModelState::brownian(0, 0, 0), 1.0, 1.0, 1.0, 5, s).position[1]);
    });
    CHECK(within(estimate_mean(v), std::sqrt(2.0 / std::numbers::pi)));
  }

  TEST_CASE("occupation local time has mean close to E|B_1|") {
    // Reduced from 1e6 paths: 1e4 paths already resolve the 5% band.
    const auto v = collect(10000, [](std::uint64_t s) {
      return sample_brownian_triple(ModelState::brownian(0, 0, 0), 1.0, 1e-3, std::sqrt(1e-3), 6, s).local_time.tail(1)(0);
    });
    CHECK(std::abs(v.mean() / std::sqrt(2.0 / std::numbers::pi) - 1.0) < 0.05);
  }

  TEST_CASE("stable positivity frequencies") {
    for (double beta : {0.0, 1.0}) {
      const StableParams p{1.5, beta, 1.0};
      const auto v = collect(100000, [&](std::uint64_t s) {
        return sample_stable_triple(p, ModelState::stable(0, 0, 0), 1.0, 1.0, 1.0, 7, s).position[1] > 0.0 ? 1.0 : 0.0;
      });
      CHECK(within(estimate_mean(v), positivity_parameter(p)));
    }
    CHECK(positivity_parameter({1.5, 1.0, 1.0}) == Approx(1.0 / 3.0).epsilon(1e-14));
  }

  TEST_CASE("stable increments match the characteristic function") {
    const StableParams p{1.5, 0.5, 0.7};
    const double dt = 0.5;
    const std::int64_t n = 1000000;
    const auto x = collect(n, [&](std::uint64_t s) {
      return sample_stable_triple(p, ModelState::stable(0, 0, 0), dt, dt, std::sqrt(dt), 8, s).position[1];
    });
    for (double lam : {0.5, 1.0, 2.0}) {
      const double tanpa = std::tan(std::numbers::pi * p.alpha / 2.0);
      const std::complex<double> expo(-p.c_theta * dt * std::pow(lam, p.alpha),
                                      p.c_theta * dt * std::pow(lam, p.alpha) * p.beta * tanpa);
      const std::complex<double> cf = std::exp(expo);
      const MCEstimate re = estimate_mean((lam * x).cos());
      const MCEstimate im = estimate_mean((lam * x).sin());
      CHECK(within(re, cf.real()));
      CHECK(within(im, cf.imag()));
    }
  }

  TEST_CASE("Langevin moments") {
    const auto a1 = collect(100000, [](std::uint64_t s) {
      return sample_path({Model::kLangevin, {}, 0.01, 0.0}, ModelState::langevin(1, 0, 0), 1.0, 9, s).position.tail(1)(0);
    });
    CHECK(within(estimate_mean(a1), 1.0));

    const double dt = 0.1;
    const std::int64_t n = 1000000;
    Eigen::ArrayXd da(n), db(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const PathSample p = sample_langevin(ModelState::langevin(0, 0, 0), dt, dt, 10, path_stream(12, i));
      da[i] = p.position[1];
      db[i] = p.velocity[1];
    }
    CHECK(within(estimate_mean(da * da), dt * dt * dt / 3.0));
    CHECK(within(estimate_mean(da * db), dt * dt / 2.0));
    CHECK(within(estimate_mean(db * db), dt));

    const PathSample q = sample_langevin(ModelState::langevin(0, -1, -1), 2.0, 0.01, 1, 1);
    CHECK(q.supremum.minCoeff() >= -1.0);
  }

  TEST_CASE("Bessel(3) sampler") {
    const auto inv = collect(100000, [](std::uint64_t s) { return 1.0 / sample_bessel3(1.0, 1.0, 1.0, 13, s)[1]; });
    CHECK(inv.minCoeff() > 0.0);
    CHECK(within(estimate_mean(inv), 2.0 * normal_cdf(1.0) - 1.0));
    const auto far = collect(100000, [](std::uint64_t s) { return sample_bessel3(50.0, 1.0, 1.0, 14, s)[1] - 50.0; });
    CHECK(ks_vs_cdf(far, [](double u) { return normal_cdf(u); }) < 0.01);
    const Eigen::ArrayXd path = sample_bessel3(0.5, 1.0, 0.001, 1, 2);
    CHECK(path.minCoeff() > 0.0);
  }

  TEST_CASE("exponential clock") {
    const auto c1 = collect(100000, [](std::uint64_t s) { return exponential_clock(1.0, 15, s); });
    CHECK(within(estimate_mean(c1), 1.0));
    const auto c2 = collect(100000, [](std::uint64_t s) { return exponential_clock(0.01, 16, s); });
    CHECK(within(estimate_mean(c2), 100.0));
    std::vector<double> tail;
    for (Eigen::Index i = 0; i < c1.size(); ++i) {
      if (c1[i] > 1.0) tail.push_back(c1[i] - 1.0);
    }
    const Eigen::Map<const Eigen::ArrayXd> t(tail.data(), static_cast<Eigen::Index>(tail.size()));
    CHECK(ks_vs_cdf(t, [](double u) { return 1.0 - std::exp(-u); }) < 0.01);
  }

  TEST_CASE("path dump round-trips bit for bit") {
    std::vector<PathSample> paths{
        sample_brownian_triple(ModelState::brownian(0.5, 1, 0), 0.5, 0.01, 0.1, 1, 2),
        sample_stable_triple({1.5, -0.3, 1.0}, ModelState::stable(0, 0, 0), 0.3, 0.01, 0.05, 3, 4),
        sample_langevin(ModelState::langevin(0, -1, -1), 0.2, 0.01, 5, 6)};
    std::stringstream buf;
    write_path_dump(buf, paths);
    const std::string bytes = buf.str();
    const auto back = read_path_dump(buf);
    REQUIRE(back.size() == paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
      CHECK(back[i].model == paths[i].model);
      CHECK(back[i].dt == paths[i].dt);
      CHECK(back[i].eps == paths[i].eps);
      CHECK(back[i].seed == paths[i].seed);
      CHECK(back[i].stream == paths[i].stream);
      CHECK((back[i].position == paths[i].position).all());
      CHECK((back[i].supremum == paths[i].supremum).all());
      CHECK((back[i].local_time == paths[i].local_time).all());
    }
    std::stringstream again;
    write_path_dump(again, back);
    CHECK(again.str() == bytes);
  }

  TEST_CASE("thread count does not change an ensemble") {
    EnsembleConfig c;
    c.sampler.dt = 0.01;
    c.x0 = ModelState::brownian(0, 0, 0);
    c.checkpoints = {0.5, 1.0};
    c.n = 3000;
    c.seed = 4;
    const std::vector<WeightSpec> w{WeightSpec::hev(0.5)};
    auto run = [&](unsigned threads) {
      c.threads = threads;
      return run_ensemble(c, w, std::nullopt, 2, 0, [](const ParticleView& v, std::size_t, double* out) {
               out[0] = v.state->position;
               out[1] = v.gamma[0];
             }).records;
    };
    const Eigen::ArrayXXd a = run(1), b = run(3);
    CHECK((a == b).all());
  }
}
