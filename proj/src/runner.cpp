#include "penal/runner.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "penal/ensemble.hpp"
#include "penal/errors.hpp"

namespace penal {

using nlohmann::json;

namespace {

json num(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json state_json(const ModelState& s) {
  const Eigen::Vector3d c = s.components();
  return json::array({c[0], c[1], c[2]});
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void fail_if(RunOutput& out, bool bad, const std::string& why) {
  if (bad) {
    out.pass = false;
    out.failures.push_back(why);
  }
}

json point_json(const ConvergencePoint& p) {
  json j{{"grid", p.grid},
         {"n", p.n},
         {"raw", estimate_json(p.raw)},
         {"estimate", estimate_json(p.estimate)},
         {"ratio", estimate_json(p.ratio)},
         {"reference", num(p.reference)},
         {"ratio_reference", num(p.ratio_reference)},
         {"rel_error", num(p.rel_error)},
         {"pass", p.pass}};
  if (p.halved) {
    j["coarse"] = estimate_json(p.coarse);
    j["drift"] = estimate_json(p.drift);
  }
  return j;
}

void convergence_output(const ConvergenceReport& r, RunOutput& out) {
  CsvTable t({"grid", "estimate", "se", "n", "n_eff", "reference", "pass", "raw", "raw_se", "ratio",
              "ratio_se", "ratio_reference", "coarse", "coarse_se", "drift", "drift_se", "rel_error"});
  json pts = json::array();
  for (const auto& p : r.points) {
    t.cell(p.grid).cell(p.estimate.mean).cell(p.estimate.se).cell(p.n).cell(p.raw.n_eff).cell(p.reference);
    t.cell(p.pass).cell(p.raw.mean).cell(p.raw.se).cell(p.ratio.mean).cell(p.ratio.se).cell(p.ratio_reference);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    t.cell(p.halved ? p.coarse.mean : nan).cell(p.halved ? p.coarse.se : nan);
    t.cell(p.halved ? p.drift.mean : nan).cell(p.halved ? p.drift.se : nan).cell(p.rel_error);
    t.end_row();
    pts.push_back(point_json(p));
  }
  out.csv = t.str();
  out.report["quantity"] = r.quantity;
  out.report["grid_name"] = r.grid_name;
  out.report["reference"] = num(r.reference);
  out.report["points"] = pts;
  out.report["slope"] = estimate_json(r.slope);
  out.report["flatness_z"] = num(r.flatness_z);
  out.report["calibrated_coef"] = num(r.calibrated_coef);
}

}  // namespace

std::string_view version() { return PENAL_VERSION; }

json estimate_json(const MCEstimate& e) {
  return {{"mean", num(e.mean)}, {"se", num(e.se)}, {"n", num(e.n)},   {"n_eff", num(e.n_eff)},
          {"level", e.level},    {"lo", num(e.lo)}, {"hi", num(e.hi)}};
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::cell(double v) {
  row_.push_back(fmt17(v));
  return *this;
}
CsvTable& CsvTable::cell(std::int64_t v) {
  row_.push_back(std::to_string(v));
  return *this;
}
CsvTable& CsvTable::cell(const std::string& v) {
  row_.push_back(quote(v));
  return *this;
}
CsvTable& CsvTable::cell(bool v) {
  row_.push_back(v ? "true" : "false");
  return *this;
}

void CsvTable::end_row() {
  if (row_.size() != header_.size()) throw UsageError("CSV row width does not match the header");
  rows_.push_back(std::move(row_));
  row_.clear();
}

std::string CsvTable::str() const {
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\r\n";
  };
  std::vector<std::string> h;
  for (const auto& s : header_) h.push_back(quote(s));
  line(h);
  for (const auto& r : rows_) line(r);
  return os.str();
}

RunOutput run_experiment(const ExperimentConfig& c) {
  require_experiment_inputs(c);
  const auto t0 = std::chrono::steady_clock::now();
  RunOutput out;
  out.report["experiment"] = std::string(to_string(c.experiment));
  SimOptions sim = c.sim;
  sim.sampler = c.sampler;

  std::optional<PhiFn> phi;
  if (c.weight) {
    phi = make_phi(*c.weight, c.phi);
    out.report["phi"] = {{"kind", std::string(to_string(phi->kind()))}, {"normalisation", phi->normalisation()}};
  }

  switch (c.experiment) {
    case Experiment::kMartingaleSuite: {
      const MartingaleReport r = martingale_identity_suite(*c.weight, *phi, c.x0, c.times, sim);
      CsvTable t({"x0_1", "x0_2", "x0_3", "t", "estimate", "se", "n", "n_eff", "reference", "pass",
                  "coarse", "coarse_se", "drift", "drift_se", "z"});
      json rows = json::array();
      const double nan = std::numeric_limits<double>::quiet_NaN();
      for (const auto& row : r.rows) {
        const Eigen::Vector3d x = row.x0.components();
        t.cell(x[0]).cell(x[1]).cell(x[2]).cell(row.t).cell(row.estimate.mean).cell(row.estimate.se);
        t.cell(static_cast<std::int64_t>(row.estimate.n)).cell(row.estimate.n_eff).cell(row.target).cell(row.pass);
        t.cell(row.halved ? row.coarse.mean : nan).cell(row.halved ? row.coarse.se : nan);
        t.cell(row.halved ? row.drift.mean : nan).cell(row.halved ? row.drift.se : nan).cell(row.z);
        t.end_row();
        json j{{"x0", state_json(row.x0)}, {"t", row.t}, {"reference", row.target},
               {"estimate", estimate_json(row.estimate)}, {"z", num(row.z)}, {"pass", row.pass}};
        if (row.halved) {
          j["coarse"] = estimate_json(row.coarse);
          j["drift"] = estimate_json(row.drift);
          j["shrinks"] = row.shrinks;
        }
        rows.push_back(j);
        fail_if(out, !row.pass, "martingale identity off at t=" + fmt17(row.t));
      }
      out.csv = t.str();
      out.report["rows"] = rows;
      break;
    }
    case Experiment::kConstantClock: {
      const ConvergenceReport r = constant_clock_limit(*c.weight, *phi, c.clock, c.x0.front(), c.f, c.s,
                                                       c.times, sim, c.rel_tol, c.n_cap);
      convergence_output(r, out);
      fail_if(out, !r.pass, "normalised estimate outside the relative tolerance");
      if (c.coarse_rel_tol > 0.0) {
        for (const auto& p : r.points) {
          const double err = std::abs(p.coarse.mean / p.reference - 1.0);
          fail_if(out, !p.halved || !(err <= c.coarse_rel_tol), "coarse-step estimate outside its tolerance");
        }
      }
      break;
    }
    case Experiment::kExponentialClock: {
      const ConvergenceReport r = exponential_clock_limit(*c.weight, *phi, c.clock, c.x0.front(), c.f,
                                                          c.s, c.rates, sim, c.t_cap);
      convergence_output(r, out);
      fail_if(out, !r.pass, "exponential-clock estimates are not flat in q");
      break;
    }
    case Experiment::kPersistence: {
      const PersistenceReport r = persistence_exponent_langevin(c.x0.front(), c.times, sim, c.bootstrap);
      CsvTable t({"t", "survival", "survival_coarse"});
      for (std::size_t k = 0; k < r.times.size(); ++k) {
        t.cell(r.times[k]).cell(r.survival[k]).cell(r.survival_coarse[k]);
        t.end_row();
      }
      out.csv = t.str();
      out.report["times"] = r.times;
      out.report["survival"] = r.survival;
      out.report["survival_coarse"] = r.survival_coarse;
      out.report["slope"] = estimate_json(r.slope);
      out.report["slope_coarse"] = estimate_json(r.slope_coarse);
      out.report["slope_shift"] = estimate_json(r.slope_shift);
      out.report["survivors"] = r.survivors;
      out.report["too_few_survivors"] = r.too_few_survivors;
      fail_if(out, r.too_few_survivors, "too few survivors at the last time");
      fail_if(out, !(std::abs(r.slope.mean - c.expected_slope) <= c.slope_tol), "slope outside tolerance");
      fail_if(out, !(std::abs(r.slope_shift.mean) < c.shift_tol), "slope moves under step doubling");
      break;
    }
    case Experiment::kDirection: {
      const DirectionReport r = direction_statistics(*c.weight, *phi, c.x0.front(), c.horizon, c.level, sim);
      CsvTable t({"T", "K", "above", "above_se", "below", "below_se", "split", "split_se", "projected",
                  "projected_se", "reference", "n_eff"});
      t.cell(r.horizon).cell(r.level).cell(r.above.mean).cell(r.above.se).cell(r.below.mean).cell(r.below.se);
      t.cell(r.split.mean).cell(r.split.se).cell(r.projected.mean).cell(r.projected.se).cell(r.reference).cell(r.n_eff);
      t.end_row();
      out.csv = t.str();
      out.report["horizon"] = r.horizon;
      out.report["level"] = r.level;
      out.report["above"] = estimate_json(r.above);
      out.report["below"] = estimate_json(r.below);
      out.report["split"] = estimate_json(r.split);
      out.report["projected"] = estimate_json(r.projected);
      out.report["reference"] = num(r.reference);
      out.report["n_eff"] = r.n_eff;
      if (r.has_reference) {
        const MCEstimate ref = make_estimate(r.reference, 0.0, 0, 0);
        fail_if(out, combined_z(r.split, ref) > 3.0, "exceedance split differs from the limit probability");
        fail_if(out, combined_z(r.projected, ref) > 3.0, "projected direction probability differs");
      }
      break;
    }
    case Experiment::kEnsemble: {
      std::vector<std::pair<double, StateFunctional>> marks;
      for (const auto& m : c.marks) marks.emplace_back(c.s, m);
      const ModelState& x0 = c.x0.front();
      const WeightedEnsemble e = build_penalised_ensemble(*c.weight, *phi, x0, c.horizon, c.times, sim, {}, marks);
      const bool exact = c.exact_check;
      if (exact && (c.weight->kind != WeightKind::kAvoidZero || x0.model != Model::kBrownian)) {
        throw ConfigError("params.exact_check: only defined for the Brownian avoid_zero weight");
      }
      CsvTable t({"t", "mean_weight", "se", "n", "n_eff", "degenerate", "ks_bessel3"});
      const double nan = std::numeric_limits<double>::quiet_NaN();
      json rows = json::array();
      for (std::size_t k = 0; k < e.times.size(); ++k) {
        const double tk = e.times[k];
        const MCEstimate m = e.mean_weight(k);
        json row{{"t", tk}, {"mean_weight", estimate_json(m)}, {"n_eff", e.n_eff[k]}};
        double ks = nan;
        if (exact && tk > 0.0) {
          // Exact marginal: one step of length t of a 3-d Brownian motion.
          const std::uint64_t base = derive_stream(sim.stream_base, 0xbe3, k);
          Eigen::ArrayXd y(e.n);
          for (Eigen::Index i = 0; i < e.n; ++i) {
            y[i] = sample_bessel3(x0.position, tk, tk, sim.seed, path_stream(base, i))[1];
          }
          ks = ks_weighted_two_sample(e.state[k].col(0), e.weight[k], y);
          row["ks_bessel3"] = ks;
          fail_if(out, !(ks < c.ks_tol), "KS distance to Bessel(3) too large at t=" + fmt17(tk));
        }
        t.cell(tk).cell(m.mean).cell(m.se).cell(e.n).cell(e.n_eff[k]).cell(e.n_eff[k] < 10.0).cell(ks);
        t.end_row();
        fail_if(out, combined_z(m, make_estimate(1.0, 0.0, 0, 0)) > 3.0, "mean weight differs from 1 at t=" + fmt17(tk));
        if (!c.marks.empty() && tk >= c.s) {
          json mk = json::array();
          for (std::size_t j = 0; j < c.marks.size(); ++j) {
            const Eigen::ArrayXd f = e.marks[k].col(static_cast<Eigen::Index>(j));
            json mj{{"F", c.mark_specs[j]}, {"penalised", estimate_json(estimate_mean(e.weight[k] * f))}};
            if (!sim.resample) mj["conditioned"] = estimate_json(estimate_ratio(e.gamma[k] * f, e.gamma[k]));
            mk.push_back(mj);
          }
          row["marks"] = mk;
        }
        rows.push_back(row);
      }
      out.csv = t.str();
      out.report["rows"] = rows;
      out.report["degenerate"] = e.degenerate;
      out.report["resampled"] = e.resampled;
      if (!c.mark_references.empty()) {
        if (sim.resample) throw ConfigError("params.mark_references: conditioned values need resample: false");
        const std::size_t k = e.times.size() - 1;
        json checks = json::array();
        for (std::size_t j = 0; j < c.marks.size(); ++j) {
          const Eigen::ArrayXd f = e.marks[k].col(static_cast<Eigen::Index>(j));
          const MCEstimate est = estimate_ratio(e.gamma[k] * f, e.gamma[k]);
          const double ref = c.mark_references[j];
          const double tol = std::max(3.0 * est.se, c.mark_rel_tol * std::abs(ref));
          const bool ok = std::abs(est.mean - ref) <= tol;
          checks.push_back({{"F", c.mark_specs[j]}, {"estimate", estimate_json(est)}, {"reference", ref},
                            {"tolerance", tol}, {"pass", ok}});
          fail_if(out, !ok, "conditioned window " + std::to_string(j) + " misses its reference");
        }
        out.report["mark_checks"] = checks;
      }
      break;
    }
    case Experiment::kLongtime: {
      const LongtimeReport r = penalised_longtime_stats(*c.weight, *phi, c.x0.front(), c.times, c.level, sim);
      CsvTable t({"T", "survival", "survival_se", "median_phi", "below", "below_se", "above", "above_se",
                  "median_z", "n_eff"});
      json rows = json::array();
      for (const auto& row : r.rows) {
        t.cell(row.horizon).cell(row.survival.mean).cell(row.survival.se).cell(row.median_phi);
        t.cell(row.below.mean).cell(row.below.se).cell(row.above.mean).cell(row.above.se);
        t.cell(row.median_z).cell(row.n_eff);
        t.end_row();
        rows.push_back({{"T", row.horizon},
                        {"survival", estimate_json(row.survival)},
                        {"median_phi", num(row.median_phi)},
                        {"below", estimate_json(row.below)},
                        {"above", estimate_json(row.above)},
                        {"median_z", num(row.median_z)},
                        {"n_eff", row.n_eff}});
        fail_if(out, combined_z(row.survival, make_estimate(1.0, 0.0, 0, 0)) > 3.0, "weighted survival differs from 1");
      }
      out.csv = t.str();
      out.report["rows"] = rows;
      out.report["median_increasing"] = r.median_increasing;
      out.report["degenerate"] = r.degenerate;
      fail_if(out, !r.median_increasing, "weighted median of phi is not increasing");
      break;
    }
    case Experiment::kSubsequentMarkov: {
      const MarkovCheck r = subsequent_markov_check(*c.weight, *phi, c.x0.front(), c.t, c.horizon, c.f, c.g,
                                                    c.inner, sim);
      CsvTable t({"side", "estimate", "se", "n", "n_eff"});
      t.cell(std::string("lhs")).cell(r.lhs.mean).cell(r.lhs.se).cell(static_cast<std::int64_t>(r.lhs.n)).cell(r.lhs.n_eff);
      t.end_row();
      t.cell(std::string("rhs")).cell(r.rhs.mean).cell(r.rhs.se).cell(static_cast<std::int64_t>(r.rhs.n)).cell(r.rhs.n_eff);
      t.end_row();
      out.csv = t.str();
      out.report["lhs"] = estimate_json(r.lhs);
      out.report["rhs"] = estimate_json(r.rhs);
      out.report["z"] = num(r.z);
      out.report["inner_degenerate_fraction"] = r.inner_degenerate_fraction;
      out.report["degenerate"] = r.degenerate;
      fail_if(out, r.z > 3.0, "the two sides differ by more than 3 combined SE");
      if (c.f.is_one && c.g.is_one) {
        // Both sides reduce to phi(x0).
        const MCEstimate ref = make_estimate((*phi)(c.x0.front()), 0.0, 0, 0);
        out.report["phi_x0"] = ref.mean;
        fail_if(out, combined_z(r.lhs, ref) > 3.0, "left side differs from phi(x0)");
        fail_if(out, combined_z(r.rhs, ref) > 3.0, "right side differs from phi(x0)");
      }
      break;
    }
    case Experiment::kUniversality: {
      const PhiFn phi_e = make_phi(*c.second_weight, c.phi);
      const UniversalityReport r = universality_ratio_test(*c.weight, *phi, *c.second_weight, phi_e,
                                                           c.x0.front(), c.times, sim, c.identity_s, c.f,
                                                           c.identity_t);
      CsvTable t({"T", "ratio_gamma", "ratio_gamma_se", "ratio_e", "ratio_e_se", "tilted_gamma",
                  "tilted_gamma_se", "tilted_e", "tilted_e_se", "n_eff_gamma", "n_eff_e"});
      json rows = json::array();
      for (const auto& row : r.rows) {
        t.cell(row.horizon).cell(row.ratio_under_gamma.mean).cell(row.ratio_under_gamma.se);
        t.cell(row.ratio_under_e.mean).cell(row.ratio_under_e.se).cell(row.tilted_under_gamma.mean);
        t.cell(row.tilted_under_gamma.se).cell(row.tilted_under_e.mean).cell(row.tilted_under_e.se);
        t.cell(row.n_eff_gamma).cell(row.n_eff_e);
        t.end_row();
        rows.push_back({{"T", row.horizon},
                        {"ratio_under_gamma", estimate_json(row.ratio_under_gamma)},
                        {"ratio_under_e", estimate_json(row.ratio_under_e)},
                        {"tilted_under_gamma", estimate_json(row.tilted_under_gamma)},
                        {"tilted_under_e", estimate_json(row.tilted_under_e)},
                        {"n_eff_gamma", row.n_eff_gamma},
                        {"n_eff_e", row.n_eff_e}});
      }
      out.csv = t.str();
      out.report["second_phi"] = {{"kind", std::string(to_string(phi_e.kind()))}, {"normalisation", phi_e.normalisation()}};
      out.report["rows"] = rows;
      if (r.identity_evaluated) {
        out.report["identity"] = {{"s", c.identity_s},
                                  {"t", c.identity_t > 0.0 ? c.identity_t : c.times.back()},
                                  {"lhs", estimate_json(r.identity_lhs)},
                                  {"rhs", estimate_json(r.identity_rhs)},
                                  {"z", num(r.identity_z)}};
        fail_if(out, r.identity_z > 3.0, "identity sides differ by more than 3 combined SE");
      }
      if (c.ratio_decreasing) {
        for (std::size_t k = 1; k < r.rows.size(); ++k) {
          fail_if(out, !(r.rows[k].ratio_under_gamma.mean < r.rows[k - 1].ratio_under_gamma.mean),
                  "ratio under the first ensemble not decreasing at T=" + fmt17(r.rows[k].horizon));
        }
      }
      if (c.ratio_last_below > 0.0) {
        fail_if(out, !(r.rows.back().ratio_under_gamma.mean < c.ratio_last_below),
                "ratio under the first ensemble not below the bound at the last horizon");
      }
      if (c.ratio_band > 0.0) {
        const auto& last = r.rows.back();
        for (double v : {last.tilted_under_gamma.mean, last.tilted_under_e.mean}) {
          fail_if(out, !(std::abs(v - 1.0) <= c.ratio_band), "tilted ratio outside the band at the last horizon");
        }
      }
      break;
    }
    case Experiment::kCalibrate: {
      const Calibration k = calibrate(sim, c.calibration);
      CsvTable t({"constant", "estimate", "se", "setting", "reference"});
      const double nan = std::numeric_limits<double>::quiet_NaN();
      t.cell(std::string("k")).cell(k.k.mean).cell(k.k.se).cell(k.k_level).cell(nan);
      t.end_row();
      t.cell(std::string("C_alpha_beta")).cell(k.c_ab.mean).cell(k.c_ab.se).cell(c.calibration.c_ab_t).cell(k.c_ab_reference);
      t.end_row();
      t.cell(std::string("c_r")).cell(k.c_r.mean).cell(k.c_r.se).cell(k.c_r_q).cell(nan);
      t.end_row();
      t.cell(std::string("c1")).cell(k.c1.mean).cell(k.c1.se).cell(k.c1_t).cell(nan);
      t.end_row();
      out.csv = t.str();
      out.report["stable"] = {{"alpha", k.stable.alpha}, {"beta", k.stable.beta}, {"c_theta", k.stable.c_theta}};
      out.report["k"] = estimate_json(k.k);
      out.report["C_alpha_beta"] = estimate_json(k.c_ab);
      out.report["C_alpha_beta_reference"] = k.c_ab_reference;
      out.report["c_r"] = estimate_json(k.c_r);
      out.report["c1"] = estimate_json(k.c1);
      break;
    }
  }
  out.report["pass"] = out.pass;
  out.report["failures"] = out.failures;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace penal
