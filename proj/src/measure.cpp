#include "penal/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "penal/errors.hpp"

namespace penal {

StateFunctional StateFunctional::one() { return {}; }

StateFunctional StateFunctional::position_above(double c) {
  StateFunctional f;
  f.name = "position_above(" + fmt17(c) + ")";
  f.fn = [c](const ModelState& s) { return s.position > c ? 1.0 : 0.0; };
  f.is_one = false;
  return f;
}

StateFunctional StateFunctional::position_in(double lo, double hi) {
  StateFunctional f;
  f.name = "position_in(" + fmt17(lo) + "," + fmt17(hi) + ")";
  f.fn = [lo, hi](const ModelState& s) { return s.position >= lo && s.position <= hi ? 1.0 : 0.0; };
  f.is_one = false;
  return f;
}

MCEstimate WeightedEnsemble::expect(std::size_t k, const StateFunctional& g) const {
  if (g.is_one) return mean_weight(k);
  Eigen::ArrayXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = weight[k][i] == 0.0 ? 0.0 : weight[k][i] * g(state_at(k, i, model));
  }
  MCEstimate e = estimate_mean(v);
  e.n_eff = n_eff[k];
  return e;
}

MCEstimate WeightedEnsemble::mean_weight(std::size_t k) const {
  MCEstimate e = estimate_mean(weight[k]);
  e.n_eff = n_eff[k];
  return e;
}

ModelState WeightedEnsemble::state_at(std::size_t k, Eigen::Index i, Model m) const {
  return ModelState::from_components(m, state[k].row(i).transpose().matrix());
}

namespace {

EnsembleConfig to_config(const SimOptions& opt, const ModelState& x0, double horizon,
                         std::vector<double> times, std::uint64_t stream_base) {
  EnsembleConfig c;
  c.sampler = opt.sampler;
  c.x0 = x0;
  c.horizon = horizon;
  c.checkpoints = std::move(times);
  c.n = opt.n;
  c.seed = opt.seed;
  c.stream_base = stream_base;
  c.halving = opt.halving && !opt.resample;
  c.threads = opt.threads;
  return c;
}

// phi extended by zero outside its domain.
double phi_or_zero(const PhiFn& phi, const ModelState& s) {
  return membership(phi.weight(), s) ? phi(s) : 0.0;
}

constexpr double kDegenerateEss = 10.0;

}  // namespace

WeightedEnsemble build_penalised_ensemble(const WeightSpec& spec, const PhiFn& phi,
                                          const ModelState& x0, double horizon,
                                          const std::vector<double>& times, const SimOptions& opt,
                                          const std::vector<WeightSpec>& aux,
                                          const std::vector<std::pair<double, StateFunctional>>& marks) {
  if (!membership(spec, x0)) throw DomainError("start state lies outside the domain of the weight");
  std::vector<WeightSpec> weights{spec};
  weights.insert(weights.end(), aux.begin(), aux.end());
  const std::size_t na = aux.size();
  const std::size_t nm = marks.size();

  // Mark times are merged into the checkpoint list; only requested times are reported.
  std::vector<double> ck = times;
  for (const auto& m : marks) ck.push_back(m.first);
  ck.push_back(horizon);
  std::sort(ck.begin(), ck.end());
  ck.erase(std::unique(ck.begin(), ck.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
           ck.end());
  for (double t : ck) {
    if (t < 0.0 || t > horizon * (1.0 + 1e-12)) throw ConfigError("ensemble times must lie in [0, T]");
  }

  Penalisation pen;
  pen.weight = 0;
  pen.phi = phi;
  pen.resample = opt.resample;
  pen.ess_fraction = opt.ess_fraction;
  pen.stage_length = opt.stage_length;

  const std::size_t width = 6 + na + nm;
  EnsembleConfig cfg = to_config(opt, x0, horizon, ck, opt.stream_base);
  // Particles with every weight at zero carry nothing; without resampling
  // nobody can inherit them, so their paths need not be continued.
  cfg.stop_when_dead = !opt.resample;
  const EnsembleResult r = run_ensemble(
      cfg, weights, pen, width, nm, [&](const ParticleView& v, std::size_t, double* out) {
        for (std::size_t j = 0; j < nm; ++j) {
          if (std::abs(v.time - marks[j].first) < 1e-12) v.payload[j] = marks[j].second(*v.state);
        }
        const Eigen::Vector3d c = v.state->components();
        out[0] = v.martingale;
        out[1] = v.gamma[0];
        out[2] = v.gamma[0] > 0.0 ? phi(*v.state) : 0.0;
        out[3] = c[0];
        out[4] = c[1];
        out[5] = c[2];
        for (std::size_t j = 0; j < na; ++j) out[6 + j] = v.gamma[1 + j];
        for (std::size_t j = 0; j < nm; ++j) out[6 + na + j] = v.payload[j];
      });

  WeightedEnsemble e;
  e.n = opt.n;
  e.model = x0.model;
  e.resampled = r.resampled;
  e.seconds = r.seconds;
  std::vector<double> wanted = times;
  if (wanted.empty() || std::abs(wanted.back() - horizon) > 1e-12) wanted.push_back(horizon);
  for (double t : wanted) {
    const auto it = std::find_if(r.times.begin(), r.times.end(),
                                 [t](double u) { return std::abs(u - t) < 1e-12; });
    const auto k = static_cast<std::size_t>(it - r.times.begin());
    const Eigen::Index base = static_cast<Eigen::Index>(k * width);
    e.times.push_back(t);
    e.weight.emplace_back(r.records.col(base));
    e.gamma.emplace_back(r.records.col(base + 1));
    e.phi.emplace_back(r.records.col(base + 2));
    e.state.emplace_back(r.records.middleCols(base + 3, 3));
    e.aux.emplace_back(r.records.middleCols(base + 6, static_cast<Eigen::Index>(na)));
    e.marks.emplace_back(r.records.middleCols(base + 6 + static_cast<Eigen::Index>(na),
                                              static_cast<Eigen::Index>(nm)));
    e.n_eff.push_back(r.n_eff[k]);
    if (r.n_eff[k] < kDegenerateEss) e.degenerate = true;
  }
  return e;
}

LongtimeReport penalised_longtime_stats(const WeightSpec& spec, const PhiFn& phi,
                                        const ModelState& x0, const std::vector<double>& horizons,
                                        double level, const SimOptions& opt) {
  if (horizons.empty()) throw ConfigError("longtime stats need at least one horizon");
  if (!std::is_sorted(horizons.begin(), horizons.end())) throw ConfigError("horizons must increase");
  const WeightedEnsemble e = build_penalised_ensemble(spec, phi, x0, horizons.back(), horizons, opt);
  LongtimeReport rep;
  rep.level = level;
  rep.degenerate = e.degenerate;
  const bool langevin = x0.model == Model::kLangevin;
  for (std::size_t k = 0; k < horizons.size(); ++k) {
    const Eigen::ArrayXd& w = e.weight[k];
    const Eigen::ArrayXd alive = (e.gamma[k] > 0.0).cast<double>();
    // Position column: x for Brownian / stable, a for Langevin.
    const Eigen::ArrayXd pos = e.state[k].col(langevin ? 1 : 0);
    LongtimeRow row;
    row.horizon = horizons[k];
    row.n_eff = e.n_eff[k];
    row.survival = estimate_ratio(w * alive, w);
    row.below = estimate_ratio(w * (pos < -level).cast<double>(), w);
    row.above = estimate_ratio(w * (pos > level).cast<double>(), w);
    row.median_phi = weighted_quantile(e.phi[k], w, 0.5);
    if (langevin) {
      const Eigen::ArrayXd b = e.state[k].col(0);
      Eigen::ArrayXd z(e.n);
      Eigen::ArrayXd wz(e.n);
      for (Eigen::Index i = 0; i < e.n; ++i) {
        const bool ok = pos[i] < 0.0;
        z[i] = ok ? std::pow(-b[i], 3) / (-pos[i]) : 0.0;
        wz[i] = ok ? w[i] : 0.0;
      }
      row.median_z = wz.sum() > 0.0 ? weighted_quantile(z, wz, 0.5)
                                    : std::numeric_limits<double>::quiet_NaN();
    }
    rep.rows.push_back(row);
  }
  rep.median_increasing = true;
  for (std::size_t k = 1; k < rep.rows.size(); ++k) {
    if (!(rep.rows[k].median_phi > rep.rows[k - 1].median_phi)) rep.median_increasing = false;
  }
  return rep;
}

MarkovCheck subsequent_markov_check(const WeightSpec& spec, const PhiFn& phi, const ModelState& x0,
                                    double t, double horizon, const StateFunctional& f,
                                    const StateFunctional& g, std::int64_t inner,
                                    const SimOptions& opt) {
  if (!(t > 0.0 && t < horizon)) throw ConfigError("subsequent Markov check needs 0 < t < H");
  if (inner < 1) throw ConfigError("inner sample size must be positive");
  if (!membership(spec, x0)) throw DomainError("start state lies outside the domain of the weight");
  const double phi0 = phi(x0);

  // LHS: phi(x0) E^Gamma[F_t g(X_H)] from one weighted ensemble to H.
  SimOptions lhs_opt = opt;
  lhs_opt.halving = false;
  lhs_opt.stream_base = derive_stream(opt.stream_base, 0x3a7c, 1);
  const WeightedEnsemble w =
      build_penalised_ensemble(spec, phi, x0, horizon, {horizon}, lhs_opt, {}, {{t, f}});
  const std::size_t last = w.times.size() - 1;
  Eigen::ArrayXd lhs(opt.n);
  for (Eigen::Index i = 0; i < opt.n; ++i) {
    const double m = w.weight[last][i];
    lhs[i] = m == 0.0 ? 0.0
                      : phi0 * m * w.marks[last](i, 0) *
                            (g.is_one ? 1.0 : g(w.state_at(last, i, x0.model)));
  }

  // RHS: outer unweighted ensemble to t, inner sub-ensembles to H - t.
  EnsembleConfig oc = to_config(opt, x0, t, {t}, derive_stream(opt.stream_base, 0x3a7c, 2));
  oc.halving = false;
  const std::vector<WeightSpec> ws{spec};
  const EnsembleResult outer = run_ensemble(
      oc, ws, std::nullopt, 5, 0, [&](const ParticleView& v, std::size_t, double* out) {
        const Eigen::Vector3d c = v.state->components();
        out[0] = v.gamma[0];
        out[1] = v.gamma[0] > 0.0 ? f(*v.state) : 0.0;
        out[2] = c[0];
        out[3] = c[1];
        out[4] = c[2];
      });

  const std::uint64_t inner_base = derive_stream(opt.stream_base, 0x3a7c, 3);
  const double rest = horizon - t;
  Eigen::ArrayXd rhs = Eigen::ArrayXd::Zero(opt.n);
  Eigen::ArrayXi all_zero = Eigen::ArrayXi::Zero(opt.n);
  const unsigned threads = opt.threads ? opt.threads : default_threads();
  parallel_chunks(opt.n, 64, threads, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      const double gt = outer.records(i, 0);
      const double ft = outer.records(i, 1);
      if (gt == 0.0 || ft == 0.0) continue;
      const ModelState xt = ModelState::from_components(
          x0.model, Eigen::Vector3d(outer.records(i, 2), outer.records(i, 3), outer.records(i, 4)));
      double inner_mean = 0.0;
      if (g.is_one) {
        inner_mean = phi(xt);
      } else {
        for (std::int64_t j = 0; j < inner; ++j) {
          const PathEnd pe = simulate_path_end(opt.sampler, xt, rest, ws, opt.seed,
                                               derive_stream(inner_base, static_cast<std::uint64_t>(i),
                                                             static_cast<std::uint64_t>(j)),
                                               true);
          if (pe.gamma[0] > 0.0) inner_mean += pe.gamma[0] * phi(pe.state) * g(pe.state);
        }
        inner_mean /= static_cast<double>(inner);
        if (inner_mean == 0.0) all_zero[i] = 1;
      }
      rhs[i] = ft * gt * inner_mean;
    }
  });

  MarkovCheck out;
  out.lhs = estimate_mean(lhs);
  out.lhs.n_eff = w.n_eff[last];
  out.rhs = estimate_mean(rhs);
  out.z = combined_z(out.lhs, out.rhs);
  const double active = (outer.records.col(0) * outer.records.col(1) != 0.0).cast<double>().sum();
  out.inner_degenerate_fraction = active > 0.0 ? all_zero.cast<double>().sum() / active : 0.0;
  out.degenerate = w.degenerate || out.inner_degenerate_fraction > 0.5;
  return out;
}

UniversalityReport universality_ratio_test(const WeightSpec& gamma, const PhiFn& phi_gamma,
                                           const WeightSpec& e, const PhiFn& phi_e,
                                           const ModelState& x0, const std::vector<double>& horizons,
                                           const SimOptions& opt, double identity_s,
                                           const StateFunctional& f, double identity_t) {
  if (horizons.empty()) throw ConfigError("universality test needs at least one horizon");
  if (!membership(gamma, x0) || !membership(e, x0)) {
    throw DomainError("start state must lie in both weight domains");
  }
  const double horizon = horizons.back();
  const bool identity = identity_s > 0.0;
  if (identity_t <= 0.0) identity_t = horizon;
  if (identity && std::find(horizons.begin(), horizons.end(), identity_t) == horizons.end()) {
    throw ConfigError("identity horizon must be one of the horizons");
  }
  if (identity && !(identity_s < identity_t)) throw ConfigError("identity time s must be below its horizon");
  std::vector<std::pair<double, StateFunctional>> marks;
  if (identity) marks.emplace_back(identity_s, f);

  SimOptions og = opt;
  og.stream_base = derive_stream(opt.stream_base, 0x6a, 1);
  SimOptions oe = opt;
  oe.stream_base = derive_stream(opt.stream_base, 0x6a, 2);
  const WeightedEnsemble pg = build_penalised_ensemble(gamma, phi_gamma, x0, horizon, horizons, og, {e}, marks);
  const WeightedEnsemble pe = build_penalised_ensemble(e, phi_e, x0, horizon, horizons, oe, {gamma}, marks);

  const Model m = x0.model;
  // ratio phi^E / phi^Gamma on paths alive under the ensemble's own weight.
  auto ratios = [&](const WeightedEnsemble& w, std::size_t k) {
    Eigen::ArrayXd r = Eigen::ArrayXd::Zero(w.n);
    for (Eigen::Index i = 0; i < w.n; ++i) {
      if (w.weight[k][i] == 0.0) continue;
      const ModelState s = w.state_at(k, i, m);
      const double pg_s = phi_or_zero(phi_gamma, s);
      r[i] = pg_s > 0.0 ? phi_or_zero(phi_e, s) / pg_s : 0.0;
    }
    return r;
  };

  UniversalityReport rep;
  for (std::size_t k = 0; k < pg.times.size(); ++k) {
    UniversalityRow row;
    row.horizon = pg.times[k];
    const Eigen::ArrayXd rg = ratios(pg, k);
    const Eigen::ArrayXd re = ratios(pe, k);
    const Eigen::ArrayXd& wg = pg.weight[k];
    const Eigen::ArrayXd& we = pe.weight[k];
    row.ratio_under_gamma = estimate_ratio(wg * rg, wg);
    row.ratio_under_e = estimate_ratio(we * re, we);
    const Eigen::ArrayXd tg = wg * pg.aux[k].col(0);
    const Eigen::ArrayXd te = we * pe.aux[k].col(0);
    row.tilted_under_gamma = estimate_ratio(tg * rg, tg);
    row.tilted_under_e = estimate_ratio(te * re, te);
    row.n_eff_gamma = pg.n_eff[k];
    row.n_eff_e = pe.n_eff[k];
    rep.rows.push_back(row);
  }

  if (identity) {
    const std::size_t k = static_cast<std::size_t>(
        std::find(pg.times.begin(), pg.times.end(), identity_t) - pg.times.begin());
    // Under P^E: F_s R_T / (1 + R_T + E_T) with R_T = Gamma_T phi^Gamma / phi^E.
    Eigen::ArrayXd lhs = Eigen::ArrayXd::Zero(opt.n);
    for (Eigen::Index i = 0; i < opt.n; ++i) {
      const double w = pe.weight[k][i];
      const double g_t = pe.aux[k](i, 0);
      if (w == 0.0 || g_t == 0.0) continue;
      const ModelState s = pe.state_at(k, i, m);
      const double r = g_t * phi_or_zero(phi_gamma, s) / pe.phi[k][i];
      lhs[i] = w * pe.marks[k](i, 0) * r / (1.0 + r + pe.gamma[k][i]);
    }
    // Under P^Gamma: F_s E_T / (1 + R_T + E_T).
    Eigen::ArrayXd rhs = Eigen::ArrayXd::Zero(opt.n);
    const double scale = phi_gamma(x0) / phi_e(x0);
    for (Eigen::Index i = 0; i < opt.n; ++i) {
      const double w = pg.weight[k][i];
      const double e_t = pg.aux[k](i, 0);
      if (w == 0.0 || e_t == 0.0) continue;
      const ModelState s = pg.state_at(k, i, m);
      const double pe_s = phi_or_zero(phi_e, s);
      if (pe_s == 0.0) continue;  // R_T infinite
      const double r = pg.gamma[k][i] * pg.phi[k][i] / pe_s;
      rhs[i] = scale * w * pg.marks[k](i, 0) * e_t / (1.0 + r + e_t);
    }
    rep.identity_lhs = estimate_mean(lhs);
    rep.identity_rhs = estimate_mean(rhs);
    rep.identity_z = combined_z(rep.identity_lhs, rep.identity_rhs);
    rep.identity_evaluated = true;
  }
  return rep;
}

}  // namespace penal
