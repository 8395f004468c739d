#include "penal/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "penal/errors.hpp"

namespace penal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MCEstimate scaled(const MCEstimate& e, double c) {
  MCEstimate out = make_estimate(c * e.mean, std::abs(c) * e.se, e.n, e.n_eff, e.level);
  return out;
}

// OLS slope of y on x with SE from independent per-point variances of y.
MCEstimate propagated_slope(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& var_y) {
  const Eigen::Map<const Eigen::ArrayXd> xs(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::ArrayXd> ys(y.data(), static_cast<Eigen::Index>(y.size()));
  const LineFit fit = fit_line(xs, ys);
  const double mx = xs.mean();
  const double sxx = (xs - mx).square().sum();
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = (x[i] - mx) / sxx;
    var += w * w * var_y[i];
  }
  return make_estimate(fit.slope, std::sqrt(var), static_cast<double>(x.size()), 0.0);
}

void check_grid(const std::vector<double>& g, bool increasing, const char* what) {
  if (g.empty()) throw ConfigError(std::string(what) + " grid is empty");
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (increasing ? !(g[i] > g[i - 1]) : !(g[i] < g[i - 1])) {
      throw ConfigError(std::string(what) + (increasing ? " grid must be strictly increasing"
                                                        : " grid must be strictly decreasing"));
    }
  }
}

EnsembleConfig base_config(const SimOptions& opt, const ModelState& x0, double horizon,
                           std::vector<double> checkpoints, std::uint64_t stream_base) {
  EnsembleConfig c;
  c.sampler = opt.sampler;
  c.x0 = x0;
  c.horizon = horizon;
  c.checkpoints = std::move(checkpoints);
  c.n = opt.n;
  c.seed = opt.seed;
  c.stream_base = stream_base;
  c.halving = opt.halving;
  c.threads = opt.threads;
  return c;
}

}  // namespace

double ClockSpec::operator()(double v) const {
  if (form == Form::kSqrtPiTOver2) return std::sqrt(M_PI * v / 2.0);
  return coef * std::pow(v, exponent);
}

void ClockSpec::validate() const {
  if (form == Form::kSqrtPiTOver2) {
    if (kind != Kind::kConstant) throw ConfigError("sqrt(pi t/2) is a constant-clock normaliser");
    return;
  }
  if (kind == Kind::kConstant) {
    if (!(coef > 0.0)) throw ConfigError("clock coefficient must be positive");
    if (!(exponent > 0.0)) throw ConfigError("constant-clock exponent must be positive so rho(t) -> inf");
  } else if (!(exponent < 0.0)) {
    throw ConfigError("exponential-clock exponent must be negative so r(q) -> inf as q -> 0");
  }
}

std::string ClockSpec::describe() const {
  if (form == Form::kSqrtPiTOver2) return "sqrt(pi*t/2)";
  std::ostringstream os;
  os << fmt17(coef) << (kind == Kind::kConstant ? "*t^" : "*q^") << fmt17(exponent);
  return os.str();
}

ClockSpec ClockSpec::brownian() { return {}; }

ClockSpec ClockSpec::power(double c, double p) {
  ClockSpec k;
  k.form = Form::kPower;
  k.coef = c;
  k.exponent = p;
  return k;
}

ClockSpec ClockSpec::exponential(double c, double p) {
  ClockSpec k = power(c, p);
  k.kind = Kind::kExponential;
  return k;
}

MartingaleReport martingale_identity_suite(const WeightSpec& spec, const PhiFn& phi,
                                           const std::vector<ModelState>& x0s,
                                           const std::vector<double>& times, const SimOptions& opt) {
  check_grid(times, true, "time");
  if (times.front() < 0.0) throw ConfigError("times must be nonnegative");
  MartingaleReport rep;
  rep.pass = true;
  const std::vector<WeightSpec> ws{spec};
  for (std::size_t ix = 0; ix < x0s.size(); ++ix) {
    const ModelState& x0 = x0s[ix];
    if (!membership(spec, x0)) throw DomainError("start state lies outside the domain of the weight");
    const double target = phi(x0);
    EnsembleConfig cfg = base_config(opt, x0, times.back(), times, derive_stream(opt.stream_base, 0xa1, ix));
    const EnsembleResult r = run_ensemble(cfg, ws, std::nullopt, 2, 0,
                                          [&](const ParticleView& v, std::size_t, double* out) {
                                            out[0] = v.gamma[0] > 0.0 ? v.gamma[0] * phi(*v.state) : 0.0;
                                            out[1] = 0.0;
                                            if (v.coarse && v.coarse_gamma[0] > 0.0) {
                                              out[1] = v.coarse_gamma[0] * phi(*v.coarse);
                                            }
                                          });
    rep.seconds += r.seconds;
    for (std::size_t c = 0; c < times.size(); ++c) {
      MartingaleRow row;
      row.x0 = x0;
      row.t = times[c];
      row.target = target;
      const Eigen::ArrayXd fine = r.column(c, 0);
      row.estimate = estimate_mean(fine);
      row.z = row.estimate.se > 0.0 ? std::abs(row.estimate.mean - target) / row.estimate.se
                                    : (row.estimate.mean == target ? 0.0 : std::numeric_limits<double>::infinity());
      row.halved = opt.halving;
      if (opt.halving) {
        const Eigen::ArrayXd coarse = r.column(c, 1);
        row.coarse = estimate_mean(coarse);
        row.drift = estimate_mean(fine - coarse);
        // When even the upper drift bound is below the MC resolution the
        // step effect is unobservable and the comparison is pure noise.
        const bool unresolved = std::abs(row.drift.mean) + 3.0 * row.drift.se <= row.estimate.se;
        row.shrinks = unresolved || std::abs(row.estimate.mean - target) <=
                                        std::abs(row.coarse.mean - target) + 3.0 * row.drift.se;
      }
      row.pass = row.z <= 3.0 && row.shrinks;
      rep.pass = rep.pass && row.pass;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

ConvergenceReport constant_clock_limit(const WeightSpec& spec, const PhiFn& phi,
                                       const ClockSpec& clock, const ModelState& x0,
                                       const StateFunctional& f, double s,
                                       const std::vector<double>& t_grid, const SimOptions& opt,
                                       double rel_tol, std::int64_t n_cap) {
  clock.validate();
  if (clock.kind != ClockSpec::Kind::kConstant) throw ConfigError("constant_clock_limit needs a constant clock");
  check_grid(t_grid, true, "time");
  if (!(s >= 0.0 && s < t_grid.front())) throw ConfigError("need 0 <= s < min(t_grid)");
  if (!membership(spec, x0)) throw DomainError("start state lies outside the domain of the weight");

  ConvergenceReport rep;
  rep.quantity = "rho(t)*E[Gamma_t], rho = " + clock.describe();
  rep.grid_name = "t";
  rep.reference = phi(x0);
  rep.pass = true;
  const std::vector<WeightSpec> ws{spec};
  const double rho0 = clock(t_grid.front());
  std::vector<double> lx, ly, lv;
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    const double t = t_grid[j];
    SimOptions o = opt;
    if (n_cap > 0) {
      const double scale = std::pow(clock(t) / rho0, 2);
      o.n = std::min<std::int64_t>(n_cap, static_cast<std::int64_t>(std::llround(static_cast<double>(opt.n) * scale)));
    }
    EnsembleConfig cfg = base_config(o, x0, t, {s, t}, derive_stream(opt.stream_base, 0xc1, j));
    const double phi0 = rep.reference;
    const EnsembleResult r = run_ensemble(
        cfg, ws, std::nullopt, 3, 1, [&](const ParticleView& v, std::size_t c, double* out) {
          if (c == 0) {
            v.payload[0] = f(*v.state);
            out[0] = v.gamma[0] > 0.0 ? v.gamma[0] * phi(*v.state) / phi0 * v.payload[0] : 0.0;
            out[1] = out[2] = 0.0;
            return;
          }
          out[0] = v.gamma[0];
          out[1] = v.payload[0] * v.gamma[0];
          out[2] = v.coarse ? v.coarse_gamma[0] : 0.0;
        });
    ConvergencePoint p;
    p.grid = t;
    p.n = o.n;
    const Eigen::ArrayXd g = r.column(1, 0);
    p.raw = estimate_mean(g);
    const double rho = clock(t);
    p.estimate = scaled(p.raw, rho);
    p.ratio = estimate_ratio(r.column(1, 1), g);
    p.reference = phi0;
    p.ratio_reference = r.column(0, 0).mean();
    if (opt.halving) {
      p.halved = true;
      const Eigen::ArrayXd gc = r.column(1, 2);
      p.coarse = scaled(estimate_mean(gc), rho);
      p.drift = scaled(estimate_mean(g - gc), rho);
    }
    p.rel_error = std::abs(p.estimate.mean - phi0) / phi0;
    p.pass = p.rel_error <= rel_tol;
    rep.pass = rep.pass && p.pass;
    if (p.estimate.mean > 0.0) {
      lx.push_back(std::log(t));
      ly.push_back(std::log(p.estimate.mean));
      lv.push_back(std::pow(p.estimate.se / p.estimate.mean, 2));
    }
    rep.points.push_back(p);
  }
  rep.slope = lx.size() >= 2 ? propagated_slope(lx, ly, lv) : make_estimate(kNaN, kNaN, 0, 0);
  return rep;
}

ConvergenceReport exponential_clock_limit(const WeightSpec& spec, const PhiFn& phi,
                                          const ClockSpec& clock, const ModelState& x0,
                                          const StateFunctional& f, double s,
                                          const std::vector<double>& q_grid, const SimOptions& opt,
                                          double t_cap) {
  if (clock.kind != ClockSpec::Kind::kExponential) throw ConfigError("exponential_clock_limit needs an exponential clock");
  if (clock.form != ClockSpec::Form::kPower || !(clock.exponent < 0.0)) {
    throw ConfigError("exponential-clock exponent must be negative so r(q) -> inf as q -> 0");
  }
  check_grid(q_grid, false, "rate");
  if (!(q_grid.back() > 0.0)) throw ConfigError("rates must be positive");
  if (!(s >= 0.0)) throw ConfigError("s must be nonnegative");
  if (!membership(spec, x0)) throw DomainError("start state lies outside the domain of the weight");
  const double dt = opt.sampler.dt;
  const Grid cap_grid = Grid::make(std::max(t_cap, dt), dt);
  const std::int64_t ks = Grid::make(std::max(s, dt), dt).index_of(s);
  const double phi0 = phi(x0);
  const unsigned threads = opt.threads ? opt.threads : default_threads();

  ConvergenceReport rep;
  rep.grid_name = "q";
  rep.reference = phi0;
  std::vector<Eigen::ArrayXXd> recs;
  for (std::size_t j = 0; j < q_grid.size(); ++j) {
    const double q = q_grid[j];
    const std::uint64_t base = derive_stream(opt.stream_base, 0xec, j);
    Eigen::ArrayXXd rec = Eigen::ArrayXXd::Zero(opt.n, 4);
    parallel_chunks(opt.n, 256, threads, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i = b; i < e; ++i) {
        const std::uint64_t stream = path_stream(base, i);
        const CounterRng rng(opt.seed, stream);
        const double clock_t = exponential_clock(q, opt.seed, stream);
        const std::int64_t ke = std::min<std::int64_t>(cap_grid.steps, static_cast<std::int64_t>(std::floor(clock_t / dt)));
        PathStepper stepper(opt.sampler, rng);
        WeightTracker tr(spec, dt, rng, Lane::kBridge);
        tr.start(x0);
        ModelState st = x0;
        double fs = 0.0;
        double ms = 0.0;
        double ge = 1.0;
        const std::int64_t last = std::max(ke, ks);
        for (std::int64_t k = 0; k <= last; ++k) {
          if (k == ks) {
            fs = f(st);
            ms = tr.value() > 0.0 ? tr.value() * phi(st) / phi0 : 0.0;
          }
          if (k == ke) ge = tr.value();
          if (k == last || (tr.dead() && k >= ks)) {
            if (k < ke) ge = 0.0;
            break;
          }
          const ModelState nx = stepper.step(st, static_cast<std::uint64_t>(k));
          tr.advance(st, nx, static_cast<std::uint64_t>(k));
          st = nx;
        }
        const double after = ke > ks ? 1.0 : 0.0;
        rec(i, 0) = ge;
        rec(i, 1) = after * ge;
        rec(i, 2) = after * ge * fs;
        rec(i, 3) = ms * fs;
      }
    });
    recs.push_back(std::move(rec));
  }

  // Calibrate at the smallest rate when asked.
  ClockSpec r = clock;
  const double raw_min = recs.back().col(0).mean();
  if (!(r.coef > 0.0)) {
    if (!(raw_min > 0.0)) throw NumericalError("cannot calibrate the clock: all weights vanished");
    r.coef = phi0 / (std::pow(q_grid.back(), r.exponent) * raw_min);
  }
  rep.calibrated_coef = r.coef;
  rep.quantity = "r(q)*E[Gamma_e(q)], r = " + r.describe();

  std::vector<double> lx, ly, lv;
  for (std::size_t j = 0; j < q_grid.size(); ++j) {
    const Eigen::ArrayXXd& rec = recs[j];
    ConvergencePoint p;
    p.grid = q_grid[j];
    p.n = opt.n;
    p.raw = estimate_mean(rec.col(0));
    p.estimate = scaled(p.raw, r(q_grid[j]));
    p.ratio = estimate_ratio(rec.col(2), rec.col(1));
    p.reference = phi0;
    p.ratio_reference = rec.col(3).mean();
    p.rel_error = std::abs(p.estimate.mean - phi0) / phi0;
    p.pass = combined_z(p.estimate, make_estimate(phi0, 0.0, 0, 0)) <= 3.0;
    if (p.estimate.mean > 0.0) {
      lx.push_back(std::log(q_grid[j]));
      ly.push_back(std::log(p.estimate.mean));
      lv.push_back(std::pow(p.estimate.se / p.estimate.mean, 2));
    }
    rep.points.push_back(p);
  }
  rep.pass = true;
  if (rep.points.size() >= 2) {
    const auto& a = rep.points[rep.points.size() - 1];
    const auto& b = rep.points[rep.points.size() - 2];
    rep.flatness_z = combined_z(a.estimate, b.estimate);
    rep.pass = rep.flatness_z <= 2.0;
  }
  rep.slope = lx.size() >= 2 ? propagated_slope(lx, ly, lv) : make_estimate(kNaN, kNaN, 0, 0);
  if (lx.size() >= 3) rep.pass = rep.pass && std::abs(rep.slope.mean) <= 3.0 * rep.slope.se;
  return rep;
}

PersistenceReport persistence_exponent_langevin(const ModelState& x0, const std::vector<double>& t_grid,
                                                const SimOptions& opt, int bootstrap) {
  if (x0.model != Model::kLangevin) throw ConfigError("persistence needs a Langevin start state");
  if (!(x0.position < 0.0 && x0.supremum < 0.0)) throw DomainError("persistence needs a < 0 and y < 0");
  check_grid(t_grid, true, "time");
  if (!(t_grid.front() > 0.0) || t_grid.size() < 2) throw ConfigError("need two or more positive times");
  if (bootstrap < 2) throw ConfigError("bootstrap needs at least two replicates");

  // Run at 2 dt with coupled halving: the fine path is the dt scheme.
  SimOptions o = opt;
  o.sampler.model = Model::kLangevin;
  o.sampler.dt = 2.0 * opt.sampler.dt;
  EnsembleConfig cfg = base_config(o, x0, t_grid.back(), t_grid, opt.stream_base);
  cfg.halving = true;
  cfg.stop_when_dead = true;
  const std::vector<WeightSpec> ws{WeightSpec::stay_negative_a()};
  const EnsembleResult r = run_ensemble(cfg, ws, std::nullopt, 2, 0,
                                        [](const ParticleView& v, std::size_t, double* out) {
                                          out[0] = v.gamma[0];
                                          out[1] = v.coarse_gamma[0];
                                        });
  const std::size_t kt = t_grid.size();
  // Survival is monotone per path: keep the number of checkpoints survived.
  Eigen::ArrayXi lf = Eigen::ArrayXi::Zero(opt.n);
  Eigen::ArrayXi lc = Eigen::ArrayXi::Zero(opt.n);
  for (Eigen::Index i = 0; i < opt.n; ++i) {
    for (std::size_t c = 0; c < kt; ++c) {
      if (r.column(c, 0)[i] > 0.0) lf[i] = static_cast<int>(c + 1);
      if (r.column(c, 1)[i] > 0.0) lc[i] = static_cast<int>(c + 1);
    }
  }
  std::vector<double> lt(kt);
  for (std::size_t c = 0; c < kt; ++c) lt[c] = std::log(t_grid[c]);
  const Eigen::Map<const Eigen::ArrayXd> lx(lt.data(), static_cast<Eigen::Index>(kt));

  auto slope_of = [&](const std::vector<std::int64_t>& counts, double n, bool& ok) {
    // counts[c] = paths surviving exactly c checkpoints.
    Eigen::ArrayXd ly(static_cast<Eigen::Index>(kt));
    std::int64_t alive = 0;
    ok = true;
    for (std::size_t c = kt; c-- > 0;) {
      alive += counts[c + 1];
      if (alive == 0) {
        ok = false;
        return kNaN;
      }
      ly[static_cast<Eigen::Index>(c)] = std::log(static_cast<double>(alive) / n);
    }
    return fit_line(lx, ly).slope;
  };
  auto tally = [&](const Eigen::ArrayXi& last) {
    std::vector<std::int64_t> counts(kt + 1, 0);
    for (Eigen::Index i = 0; i < last.size(); ++i) ++counts[static_cast<std::size_t>(last[i])];
    return counts;
  };

  PersistenceReport rep;
  rep.times = t_grid;
  rep.seconds = r.seconds;
  const double n = static_cast<double>(opt.n);
  const auto cf = tally(lf);
  const auto cc = tally(lc);
  for (std::size_t c = 0; c < kt; ++c) {
    rep.survival.push_back(r.column(c, 0).mean());
    rep.survival_coarse.push_back(r.column(c, 1).mean());
  }
  rep.survivors = cf[kt];
  rep.too_few_survivors = rep.survivors < 100;
  bool ok_f = true;
  bool ok_c = true;
  const double sf = slope_of(cf, n, ok_f);
  const double sc = slope_of(cc, n, ok_c);

  // Bootstrap over paths; fine and coarse share the resampled indices.
  Eigen::ArrayXd bf(bootstrap);
  Eigen::ArrayXd bc(bootstrap);
  const unsigned threads = opt.threads ? opt.threads : default_threads();
  const std::uint64_t bbase = derive_stream(opt.stream_base, 0xb007, 0);
  parallel_chunks(bootstrap, 1, threads, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t rep_i = b; rep_i < e; ++rep_i) {
      const CounterRng rng(opt.seed, derive_stream(bbase, 0, static_cast<std::uint64_t>(rep_i)));
      std::vector<std::int64_t> kf(kt + 1, 0);
      std::vector<std::int64_t> kc(kt + 1, 0);
      for (std::int64_t i = 0; i < opt.n; ++i) {
        const double u = rng.uniform(static_cast<std::uint64_t>(i), Lane::kBootstrap);
        const auto j = std::min<std::int64_t>(opt.n - 1, static_cast<std::int64_t>(u * n));
        ++kf[static_cast<std::size_t>(lf[j])];
        ++kc[static_cast<std::size_t>(lc[j])];
      }
      bool a = true;
      bool c = true;
      bf[rep_i] = slope_of(kf, n, a);
      bc[rep_i] = slope_of(kc, n, c);
    }
  });
  auto sd = [](const Eigen::ArrayXd& v) {
    return std::sqrt((v - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
  };
  rep.slope = make_estimate(sf, ok_f ? sd(bf) : kNaN, n, n);
  rep.slope_coarse = make_estimate(sc, ok_c ? sd(bc) : kNaN, n, n);
  rep.slope_shift = make_estimate(sf - sc, (ok_f && ok_c) ? sd(bf - bc) : kNaN, n, n);
  if (!ok_f) rep.too_few_survivors = true;
  return rep;
}

double direction_probability(const PhiFn& phi, const ModelState& s) {
  switch (phi.kind()) {
    case PhiKind::kLtBrownian: {
      const WeightSpec& w = phi.weight();
      const double r = profile_tail_ratio(w.f, s.local_time, w.threshold);
      const double x = s.position;
      if (std::isinf(r)) return 0.5;
      return (std::max(x, 0.0) + 0.5 * r) / (std::abs(x) + r);
    }
    case PhiKind::kKac:
      return 1.0 - phi.kac()->left_probability(s.position);
    case PhiKind::kAvoidZero:
      return s.position > 0.0 ? 1.0 : 0.0;
    case PhiKind::kStableLt:
      if (phi.stable().beta == 1.0) return 0.0;
      if (phi.stable().beta == -1.0) return 1.0;
      return kNaN;
    case PhiKind::kSupBrownian:
    case PhiKind::kHev:
    case PhiKind::kStayNegativeB:
    case PhiKind::kStableSup:
    case PhiKind::kLangevinA:
    case PhiKind::kLangevinSup:
      return 0.0;
  }
  return kNaN;
}

DirectionReport direction_statistics(const WeightSpec& spec, const PhiFn& phi, const ModelState& x0,
                                     double horizon, double level, const SimOptions& opt) {
  if (!(level > 0.0)) throw ConfigError("direction level K must be positive");
  SimOptions o = opt;
  o.halving = false;
  const WeightedEnsemble e = build_penalised_ensemble(spec, phi, x0, horizon, {horizon}, o);
  const std::size_t k = e.times.size() - 1;
  const Eigen::ArrayXd& w = e.weight[k];
  Eigen::ArrayXd up = Eigen::ArrayXd::Zero(e.n);
  Eigen::ArrayXd down = Eigen::ArrayXd::Zero(e.n);
  Eigen::ArrayXd proj = Eigen::ArrayXd::Zero(e.n);
  DirectionReport rep;
  rep.horizon = horizon;
  rep.level = level;
  rep.reference = direction_probability(phi, x0);
  rep.has_reference = !std::isnan(rep.reference);
  for (Eigen::Index i = 0; i < e.n; ++i) {
    if (w[i] == 0.0) continue;
    const ModelState s = e.state_at(k, i, x0.model);
    up[i] = s.position > level ? 1.0 : 0.0;
    down[i] = s.position < -level ? 1.0 : 0.0;
    if (rep.has_reference) proj[i] = w[i] * direction_probability(phi, s);
  }
  rep.above = estimate_ratio(w * up, w);
  rep.below = estimate_ratio(w * down, w);
  rep.split = estimate_ratio(w * up, w * (up + down));
  rep.projected = rep.has_reference ? estimate_mean(proj) : make_estimate(kNaN, kNaN, 0, 0);
  rep.n_eff = e.n_eff[k];
  return rep;
}

Calibration calibrate(const SimOptions& opt, const CalibrationOptions& c) {
  validate_stable(opt.sampler.stable);
  const StableParams& p = opt.sampler.stable;
  Calibration out;
  out.stable = p;
  out.k_level = c.k_level;
  out.c_ab_reference = stable_lt_constant_reference(p);
  out.c_r_q = c.c_r_q;
  out.c1_t = c.c1_t;

  SimOptions so = opt;
  so.sampler.model = Model::kStable;
  so.halving = false;
  const ModelState z0 = ModelState::stable(0.0, 0.0, 0.0);

  {  // tail constant k
    EnsembleConfig cfg = base_config(so, z0, 1.0, {1.0}, derive_stream(opt.stream_base, 0xca1, 1));
    const double y = c.k_level;
    const EnsembleResult r = run_ensemble(cfg, {}, std::nullopt, 1, 0,
                                          [y](const ParticleView& v, std::size_t, double* o) {
                                            o[0] = v.state->supremum > y ? 1.0 : 0.0;
                                          });
    out.k = scaled(estimate_mean(r.column(0, 0)), std::pow(y, p.alpha));
  }
  const WeightSpec lt = WeightSpec::lt_f(Model::kStable, ScalarFn::exp_decay(1.0));
  {  // C_{alpha,beta} from E[e^{-L}(C k(X) + 1)] = 1 at x0 = 0
    EnsembleConfig cfg = base_config(so, z0, c.c_ab_t, {c.c_ab_t}, derive_stream(opt.stream_base, 0xca1, 2));
    const EnsembleResult r = run_ensemble(
        cfg, {lt}, std::nullopt, 2, 0, [&](const ParticleView& v, std::size_t, double* o) {
          const double x = v.state->position;
          const double sg = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
          o[0] = v.gamma[0];
          o[1] = v.gamma[0] * (1.0 - p.beta * sg) * std::pow(std::abs(x), p.alpha - 1.0);
        });
    const Eigen::ArrayXd a = r.column(0, 0);
    const Eigen::ArrayXd b = r.column(0, 1);
    const double ma = a.mean();
    const double mb = b.mean();
    const double cab = (1.0 - ma) / mb;
    const Eigen::ArrayXd lin = -(a - ma) / mb - (1.0 - ma) * (b - mb) / (mb * mb);
    const double n = static_cast<double>(a.size());
    out.c_ab = make_estimate(cab, std::sqrt(lin.square().sum() / (n - 1.0) / n), n, n);
  }
  {  // c_r: r(q) E[Gamma_e(q)] = phi(0) = 1 at the calibration rate
    PhiOptions po;
    po.stable = p;
    po.stable_lt_c = out.c_ab.mean > 0.0 ? out.c_ab.mean : 0.0;
    const PhiFn phi = make_phi(lt, po);
    SimOptions eo = so;
    eo.stream_base = derive_stream(opt.stream_base, 0xca1, 3);
    const ConvergenceReport r = exponential_clock_limit(
        lt, phi, ClockSpec::exponential(0.0, 1.0 / p.alpha - 1.0), z0, StateFunctional::one(), 0.0,
        {c.c_r_q}, eo);
    const ConvergencePoint& pt = r.points.front();
    out.c_r = make_estimate(r.calibrated_coef, r.calibrated_coef * pt.raw.se / pt.raw.mean, pt.raw.n, pt.raw.n);
  }
  {  // c1: rho(t) P(tau^A > t) = phi^A(x0)
    SimOptions lo = opt;
    lo.sampler.model = Model::kLangevin;
    lo.halving = false;
    EnsembleConfig cfg = base_config(lo, c.langevin_x0, c.c1_t, {c.c1_t}, derive_stream(opt.stream_base, 0xca1, 4));
    cfg.stop_when_dead = true;
    const EnsembleResult r = run_ensemble(cfg, {WeightSpec::stay_negative_a()}, std::nullopt, 1, 0,
                                          [](const ParticleView& v, std::size_t, double* o) { o[0] = v.gamma[0]; });
    const MCEstimate surv = estimate_mean(r.column(0, 0));
    const double target = phi_langevin_a(c.langevin_x0);
    const double c1 = target / (std::pow(c.c1_t, 0.25) * surv.mean);
    out.c1 = make_estimate(c1, c1 * surv.se / surv.mean, surv.n, surv.n);
  }
  return out;
}

}  // namespace penal
