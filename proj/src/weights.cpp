#include "penal/weights.hpp"

#include <cmath>

#include "penal/errors.hpp"
#include "penal/phi.hpp"
#include "penal/quadrature.hpp"

namespace penal {

std::string_view to_string(WeightKind k) {
  switch (k) {
    case WeightKind::kSupF:
      return "sup_f";
    case WeightKind::kLtF:
      return "lt_f";
    case WeightKind::kKac:
      return "kac_v";
    case WeightKind::kHev:
      return "hev";
    case WeightKind::kStayNegativeA:
      return "stay_negative_A";
    case WeightKind::kStayNegativeB:
      return "stay_negative_B";
    case WeightKind::kAvoidZero:
      return "avoid_zero";
  }
  return "unknown";
}

WeightKind weight_kind_from_string(std::string_view name) {
  for (WeightKind k : {WeightKind::kSupF, WeightKind::kLtF, WeightKind::kKac, WeightKind::kHev,
                       WeightKind::kStayNegativeA, WeightKind::kStayNegativeB,
                       WeightKind::kAvoidZero}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown weight kind '" + std::string(name) + "'");
}

WeightSpec WeightSpec::sup_f(Model m, ScalarFn f, double y0) {
  WeightSpec w;
  w.kind = WeightKind::kSupF;
  w.model = m;
  w.f = std::move(f);
  w.threshold = y0;
  return w;
}

WeightSpec WeightSpec::lt_f(Model m, ScalarFn f, double l0) {
  WeightSpec w;
  w.kind = WeightKind::kLtF;
  w.model = m;
  w.f = std::move(f);
  w.threshold = l0;
  return w;
}

WeightSpec WeightSpec::kac(ScalarFn v) {
  WeightSpec w;
  w.kind = WeightKind::kKac;
  w.v = std::move(v);
  return w;
}

WeightSpec WeightSpec::hev(double lambda) {
  WeightSpec w;
  w.kind = WeightKind::kHev;
  w.lambda = lambda;
  return w;
}

WeightSpec WeightSpec::stay_negative_a() {
  WeightSpec w;
  w.kind = WeightKind::kStayNegativeA;
  w.model = Model::kLangevin;
  return w;
}

WeightSpec WeightSpec::stay_negative_b(Model m) {
  WeightSpec w;
  w.kind = WeightKind::kStayNegativeB;
  w.model = m;
  return w;
}

WeightSpec WeightSpec::avoid_zero() {
  WeightSpec w;
  w.kind = WeightKind::kAvoidZero;
  return w;
}

double WeightSpec::profile(double u) const { return u <= threshold ? f(u) : 0.0; }

bool WeightSpec::is_indicator() const {
  switch (kind) {
    case WeightKind::kStayNegativeA:
    case WeightKind::kStayNegativeB:
    case WeightKind::kAvoidZero:
      return true;
    case WeightKind::kSupF:
    case WeightKind::kLtF:
      return f.kind() == ScalarFn::Kind::kIndicator || f.kind() == ScalarFn::Kind::kConstant;
    default:
      return false;
  }
}

namespace {

void require_model(const WeightSpec& s, std::initializer_list<Model> allowed) {
  for (Model m : allowed) {
    if (s.model == m) return;
  }
  throw ConfigError(std::string("weight ") + std::string(to_string(s.kind)) +
                    " is not defined for model " + std::string(to_string(s.model)));
}

bool finite_integral(const std::function<double(double)>& g, double a, double b,
                     const std::vector<double>& breaks) {
  QuadOptions opt;
  opt.abs_tol = 1e-9;
  opt.rel_tol = 1e-7;
  const QuadResult r = integrate_gk(g, a, b, opt, breaks);
  return r.converged && std::isfinite(r.value);
}

}  // namespace

void validate_weight(const WeightSpec& spec, const StableParams* stable) {
  switch (spec.kind) {
    case WeightKind::kSupF: {
      if (std::isnan(spec.threshold)) throw ConfigError("sup_f threshold y0 is NaN");
      if (spec.model == Model::kLangevin && spec.threshold > 0.0) {
        throw ConfigError("domain: y0 must be <= 0 for the Langevin sup_f weight");
      }
      const double lo = std::min(0.0, spec.threshold);
      if (!std::isfinite(spec.f.integral(lo, spec.threshold))) {
        throw ConfigError("sup_f profile is not integrable up to y0");
      }
      if (spec.model == Model::kStable) {
        if (!stable) throw ConfigError("stable sup_f needs the process parameters");
        if (!spec.f.nonincreasing()) throw ConfigError("stable sup_f needs a nonincreasing f");
        if (std::isinf(spec.threshold)) {
          const double e = stable->alpha * positivity_parameter(*stable) - 1.0;
          const ScalarFn& f = spec.f;
          if (!finite_integral([&](double u) { return f(u) * std::pow(1.0 + u, e); }, 0.0, kInf,
                               f.breakpoints())) {
            throw ConfigError("stable sup_f: int f(u) u^(alpha rho - 1) du diverges");
          }
        }
      }
      return;
    }
    case WeightKind::kLtF:
      require_model(spec, {Model::kBrownian, Model::kStable});
      if (!(spec.threshold >= 0.0)) throw ConfigError("lt_f threshold l0 must be >= 0");
      if (!std::isfinite(spec.f.integral(0.0, spec.threshold))) {
        throw ConfigError("lt_f profile is not integrable up to l0");
      }
      if (!(spec.f(0.0) > 0.0)) throw ConfigError("lt_f profile must be positive at l = 0");
      return;
    case WeightKind::kKac: {
      require_model(spec, {Model::kBrownian});
      const ScalarFn& v = spec.v;
      std::vector<double> breaks;
      for (double p : v.breakpoints()) breaks.push_back(std::abs(p));
      auto g = [&](double x) { return (1.0 + x) * (v(x) + v(-x)); };
      if (!finite_integral(g, 0.0, kInf, breaks)) {
        throw ConfigError("Kac potential: int (1+|x|) v(x) dx diverges");
      }
      const double mass = integrate(g, 0.0, kInf, {}, breaks);
      if (!(mass > 0.0)) throw ConfigError("Kac potential must not vanish identically");
      return;
    }
    case WeightKind::kHev:
      require_model(spec, {Model::kBrownian});
      if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda)) {
        throw ConfigError("Heaviside rate lambda must be positive");
      }
      return;
    case WeightKind::kStayNegativeA:
      require_model(spec, {Model::kLangevin});
      return;
    case WeightKind::kStayNegativeB:
      require_model(spec, {Model::kBrownian, Model::kLangevin});
      return;
    case WeightKind::kAvoidZero:
      require_model(spec, {Model::kBrownian});
      return;
  }
}

namespace {

void check_model(const WeightSpec& spec, Model m) {
  const bool generic = spec.kind == WeightKind::kKac || spec.kind == WeightKind::kHev ||
                       spec.kind == WeightKind::kAvoidZero;
  const Model expected = generic ? Model::kBrownian : spec.model;
  if (expected != m) {
    throw UsageError(std::string("weight ") + std::string(to_string(spec.kind)) + " expects " +
                     std::string(to_string(expected)) + " paths, got " +
                     std::string(to_string(m)));
  }
}

double monitored(const WeightSpec& spec, const ModelState& s) {
  return spec.model == Model::kLangevin ? s.velocity : s.position;
}

}  // namespace

bool membership(const WeightSpec& spec, const ModelState& s) {
  check_model(spec, s.model);
  switch (spec.kind) {
    case WeightKind::kSupF:
      return spec.profile(s.supremum) > 0.0;
    case WeightKind::kLtF:
      return spec.profile(s.local_time) > 0.0;
    case WeightKind::kKac:
    case WeightKind::kHev:
      return true;
    case WeightKind::kStayNegativeA:
      return s.supremum < 0.0;
    case WeightKind::kStayNegativeB:
      return monitored(spec, s) < 0.0;
    case WeightKind::kAvoidZero:
      return s.position != 0.0;
  }
  return false;
}

WeightTracker::WeightTracker(const WeightSpec& spec, double dt, CounterRng rng, Lane bridge_lane)
    : spec_(&spec), dt_(dt), rng_(rng), lane_(bridge_lane) {}

void WeightTracker::start(const ModelState& s0) {
  carry_ = 1.0;
  restart(s0, false);
}

void WeightTracker::restart(const ModelState& s, bool keep_carry) {
  carry_ = keep_carry ? value() : 1.0;
  integral_ = 0.0;
  dead_ = !membership(*spec_, s);
  switch (spec_->kind) {
    case WeightKind::kSupF:
      base_ = current_ = spec_->profile(s.supremum);
      break;
    case WeightKind::kLtF:
      base_ = current_ = spec_->profile(s.local_time);
      break;
    default:
      base_ = current_ = 1.0;
  }
}

void WeightTracker::advance(const ModelState& prev, const ModelState& next, std::uint64_t step) {
  if (dead_) return;
  const WeightSpec& w = *spec_;
  switch (w.kind) {
    case WeightKind::kSupF:
      if (next.supremum != prev.supremum) current_ = w.profile(next.supremum);
      dead_ = current_ <= 0.0;
      return;
    case WeightKind::kLtF:
      if (next.local_time != prev.local_time) current_ = w.profile(next.local_time);
      dead_ = current_ <= 0.0;
      return;
    case WeightKind::kKac:
      integral_ += w.v(prev.position) * dt_;
      return;
    case WeightKind::kHev:
      if (prev.position > 0.0) integral_ += w.lambda * dt_;
      return;
    case WeightKind::kStayNegativeA:
      dead_ = next.position >= 0.0;
      return;
    case WeightKind::kStayNegativeB: {
      const double m0 = monitored(w, prev);
      const double m1 = monitored(w, next);
      if (m1 >= 0.0) {
        dead_ = true;
        return;
      }
      dead_ = rng_.uniform(step, lane_) < std::exp(-2.0 * m0 * m1 / dt_);
      return;
    }
    case WeightKind::kAvoidZero: {
      const double x0 = prev.position;
      const double x1 = next.position;
      if (x0 * x1 <= 0.0) {
        dead_ = true;
        return;
      }
      dead_ = rng_.uniform(step, lane_) < std::exp(-2.0 * x0 * x1 / dt_);
      return;
    }
  }
}

double WeightTracker::value() const {
  if (dead_) return 0.0;
  switch (spec_->kind) {
    case WeightKind::kSupF:
    case WeightKind::kLtF:
      return carry_ * (current_ / base_);
    case WeightKind::kKac:
    case WeightKind::kHev:
      return carry_ * std::exp(-integral_);
    default:
      return carry_;
  }
}

namespace {

WeightTracker tracker_for(const WeightSpec& spec, const PathSample& path) {
  return WeightTracker(spec, path.dt, CounterRng(path.seed, path.stream), path.bridge_lane);
}

double weight_at(const WeightSpec& spec, const PathSample& path, std::int64_t k) {
  WeightTracker tr = tracker_for(spec, path);
  ModelState prev = path.state(0);
  tr.start(prev);
  for (std::int64_t j = 0; j < k && !tr.dead(); ++j) {
    const ModelState next = path.state(j + 1);
    tr.advance(prev, next, static_cast<std::uint64_t>(path.first_step + j));
    prev = next;
  }
  return tr.value();
}

}  // namespace

double evaluate_weight(const WeightSpec& spec, const PathSample& path, double t) {
  check_model(spec, path.model);
  return weight_at(spec, path, path.grid().index_of(t));
}

double multiplicativity_residual(const WeightSpec& spec, const PathSample& path, double s,
                                 double t) {
  check_model(spec, path.model);
  const std::int64_t ks = path.grid().index_of(s);
  const std::int64_t kt = path.grid().index_of(t);
  if (kt < ks) throw UsageError("multiplicativity_residual needs s <= t");
  const double gt = weight_at(spec, path, kt);
  const double gs = weight_at(spec, path, ks);
  if (gs == 0.0) return gt;
  const double shifted = weight_at(spec, path.shifted(ks), kt - ks);
  return gt - gs * shifted;
}

double exit_time(const WeightSpec& spec, const PathSample& path) {
  check_model(spec, path.model);
  WeightTracker tr = tracker_for(spec, path);
  ModelState prev = path.state(0);
  tr.start(prev);
  if (tr.dead()) return 0.0;
  for (std::int64_t j = 0; j < path.steps; ++j) {
    const ModelState next = path.state(j + 1);
    tr.advance(prev, next, static_cast<std::uint64_t>(path.first_step + j));
    if (tr.dead()) return static_cast<double>(j + 1) * path.dt;
    prev = next;
  }
  return kInf;
}

}  // namespace penal
