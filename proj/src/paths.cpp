#include "penal/paths.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "penal/errors.hpp"

namespace penal {

std::string_view to_string(Model m) {
  switch (m) {
    case Model::kBrownian:
      return "brownian";
    case Model::kStable:
      return "stable";
    case Model::kLangevin:
      return "langevin";
  }
  return "unknown";
}

Model model_from_string(std::string_view name) {
  if (name == "brownian") return Model::kBrownian;
  if (name == "stable") return Model::kStable;
  if (name == "langevin") return Model::kLangevin;
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

ModelState ModelState::from_components(Model m, const Eigen::Vector3d& c) {
  switch (m) {
    case Model::kBrownian:
      return brownian(c[0], c[1], c[2]);
    case Model::kStable:
      return stable(c[0], c[1], c[2]);
    case Model::kLangevin:
      return langevin(c[0], c[1], c[2]);
  }
  throw ConfigError("unknown model tag");
}

Eigen::Vector3d ModelState::components() const {
  if (model == Model::kLangevin) return {velocity, position, supremum};
  return {position, supremum, local_time};
}

void validate_state(const ModelState& s) {
  if (!std::isfinite(s.position) || !std::isfinite(s.velocity) || std::isnan(s.supremum) ||
      std::isnan(s.local_time)) {
    throw ConfigError("state has non-finite coordinates");
  }
  if (s.supremum < s.position) throw ConfigError("state violates y >= position");
  if (s.model != Model::kLangevin && s.local_time < 0.0) {
    throw ConfigError("state has negative local time");
  }
}

void validate_stable(const StableParams& p) {
  if (!(p.alpha > 1.0 && p.alpha < 2.0)) throw ConfigError("stable index alpha must lie in (1, 2)");
  if (!(p.beta >= -1.0 && p.beta <= 1.0)) throw ConfigError("stable skewness beta must lie in [-1, 1]");
  if (!(p.c_theta > 0.0)) throw ConfigError("stable scale c_theta must be positive");
}

std::int64_t Grid::index_of(double t) const {
  const double r = t / dt;
  const double k = std::round(r);
  if (k < 0.0 || k > static_cast<double>(steps) || std::abs(r - k) > 1e-9 * std::max(1.0, k)) {
    throw UsageError("time " + std::to_string(t) + " is not on the path grid");
  }
  return static_cast<std::int64_t>(k);
}

Grid Grid::make(double horizon, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive");
  const double r = horizon / dt;
  const double k = std::round(r);
  if (std::abs(r - k) > 1e-9 * k) throw ConfigError("horizon must be an integer multiple of dt");
  return {dt, static_cast<std::int64_t>(k)};
}

double SamplerConfig::bandwidth() const { return eps > 0.0 ? eps : std::sqrt(dt); }

ModelState PathSample::state(std::int64_t k) const {
  if (k < 0 || k > steps) throw UsageError("grid index out of range");
  ModelState s;
  s.model = model;
  s.position = position[k];
  s.supremum = supremum[k];
  s.local_time = local_time.size() ? local_time[k] : 0.0;
  s.velocity = velocity.size() ? velocity[k] : 0.0;
  return s;
}

PathSample PathSample::shifted(std::int64_t k) const {
  if (k < 0 || k > steps) throw UsageError("shift index out of range");
  PathSample out = *this;
  const std::int64_t n = steps - k + 1;
  out.steps = steps - k;
  out.first_step = first_step + k;
  out.position = position.segment(k, n);
  out.supremum = supremum.segment(k, n);
  if (local_time.size()) out.local_time = local_time.segment(k, n);
  if (velocity.size()) out.velocity = velocity.segment(k, n);
  return out;
}

ModelState advance_aggregates(const ModelState& prev, double next_position, double next_velocity,
                              double dt, double eps) {
  ModelState next = prev;
  next.position = next_position;
  next.velocity = next_velocity;
  next.supremum = std::max(prev.supremum, next_position);
  if (prev.model != Model::kLangevin && std::abs(prev.position) <= eps) {
    next.local_time = prev.local_time + dt / (2.0 * eps);
  }
  return next;
}

double chambers_mallows_stuck(const StableParams& p, double v, double w) {
  const double a = p.alpha;
  const double t = std::tan(std::numbers::pi * a / 2.0);
  const double b = std::atan(p.beta * t) / a;
  const double s = std::pow(1.0 + p.beta * p.beta * t * t, 1.0 / (2.0 * a));
  const double va = a * (v + b);
  return s * std::sin(va) / std::pow(std::cos(v), 1.0 / a) *
         std::pow(std::cos(v - va) / w, (1.0 - a) / a);
}

PathStepper::PathStepper(const SamplerConfig& cfg, CounterRng rng)
    : cfg_(cfg), rng_(rng), eps_(cfg.bandwidth()), sqrt_dt_(std::sqrt(cfg.dt)) {
  if (!(cfg.dt > 0.0)) throw ConfigError("time step must be positive");
  if (cfg.model == Model::kStable) {
    validate_stable(cfg.stable);
    const StableParams& p = cfg.stable;
    const double t = std::tan(std::numbers::pi * p.alpha / 2.0);
    cms_b_ = std::atan(p.beta * t) / p.alpha;
    cms_s_ = std::pow(1.0 + p.beta * p.beta * t * t, 1.0 / (2.0 * p.alpha));
    stable_scale_ = std::pow(p.c_theta * cfg.dt, 1.0 / p.alpha);
  } else {
    cms_b_ = cms_s_ = stable_scale_ = 0.0;
  }
}

double PathStepper::brownian_normal(std::uint64_t k) {
  // Steps 2j and 2j+1 share one Box-Muller pair.
  const std::uint64_t pair = k >> 1;
  if (pair != cached_pair_) {
    const auto [z1, z2] = rng_.normal_pair(pair, Lane::kIncrement);
    cached_[0] = z1;
    cached_[1] = z2;
    cached_pair_ = pair;
  }
  return cached_[k & 1u];
}

void PathStepper::increment(std::uint64_t k, double velocity, double& d_position,
                            double& d_velocity) {
  switch (cfg_.model) {
    case Model::kBrownian:
      d_position = sqrt_dt_ * brownian_normal(k);
      d_velocity = 0.0;
      return;
    case Model::kStable: {
      const auto [u1, u2] = rng_.uniform_pair(k, Lane::kIncrement);
      const double v = std::numbers::pi * (u1 - 0.5);
      const double w = -std::log(u2);
      const double a = cfg_.stable.alpha;
      const double va = a * (v + cms_b_);
      const double x = cms_s_ * std::sin(va) / std::pow(std::cos(v), 1.0 / a) *
                       std::pow(std::cos(v - va) / w, (1.0 - a) / a);
      d_position = stable_scale_ * x;
      d_velocity = 0.0;
      return;
    }
    case Model::kLangevin: {
      // Exact joint law of (B_h - B_0, int_0^h (B_u - B_0) du):
      // variances h and h^3/3, covariance h^2/2.
      const auto [z1, z2] = rng_.normal_pair(k, Lane::kIncrement);
      const double h = cfg_.dt;
      d_velocity = sqrt_dt_ * z1;
      d_position = velocity * h + h * sqrt_dt_ * (0.5 * z1 + z2 / (2.0 * std::sqrt(3.0)));
      return;
    }
  }
}

ModelState PathStepper::step(const ModelState& s, std::uint64_t k) {
  double dp = 0.0;
  double dv = 0.0;
  increment(k, s.velocity, dp, dv);
  return advance_aggregates(s, s.position + dp, s.velocity + dv, cfg_.dt, eps_);
}

PathSample sample_path(const SamplerConfig& cfg, const ModelState& x0, double horizon,
                       std::uint64_t seed, std::uint64_t stream) {
  if (x0.model != cfg.model) throw UsageError("start state model does not match sampler");
  validate_state(x0);
  if (cfg.model != Model::kLangevin && cfg.eps < 0.0) throw ConfigError("bandwidth must be positive");
  const Grid grid = Grid::make(horizon, cfg.dt);
  PathStepper stepper(cfg, CounterRng(seed, stream));

  PathSample path;
  path.model = cfg.model;
  path.dt = cfg.dt;
  path.steps = grid.steps;
  path.eps = cfg.model == Model::kLangevin ? 0.0 : cfg.bandwidth();
  path.seed = seed;
  path.stream = stream;
  const Eigen::Index n = grid.steps + 1;
  path.position.resize(n);
  path.supremum.resize(n);
  if (cfg.model == Model::kLangevin) {
    path.velocity.resize(n);
  } else {
    path.local_time.resize(n);
  }

  ModelState s = x0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k > 0) s = stepper.step(s, static_cast<std::uint64_t>(k - 1));
    path.position[k] = s.position;
    path.supremum[k] = s.supremum;
    if (cfg.model == Model::kLangevin) {
      path.velocity[k] = s.velocity;
    } else {
      path.local_time[k] = s.local_time;
    }
  }
  return path;
}

PathSample sample_brownian_triple(const ModelState& x0, double horizon, double dt, double eps,
                                  std::uint64_t seed, std::uint64_t stream) {
  if (!(eps > 0.0)) throw ConfigError("local-time bandwidth must be positive");
  SamplerConfig cfg{Model::kBrownian, {}, dt, eps};
  return sample_path(cfg, x0, horizon, seed, stream);
}

PathSample sample_stable_triple(const StableParams& p, const ModelState& x0, double horizon,
                                double dt, double eps, std::uint64_t seed, std::uint64_t stream) {
  validate_stable(p);
  if (!(eps > 0.0)) throw ConfigError("local-time bandwidth must be positive");
  SamplerConfig cfg{Model::kStable, p, dt, eps};
  return sample_path(cfg, x0, horizon, seed, stream);
}

PathSample sample_langevin(const ModelState& x0, double horizon, double dt, std::uint64_t seed,
                           std::uint64_t stream) {
  SamplerConfig cfg{Model::kLangevin, {}, dt, 0.0};
  return sample_path(cfg, x0, horizon, seed, stream);
}

Eigen::ArrayXd sample_bessel3(double x0, double horizon, double dt, std::uint64_t seed,
                              std::uint64_t stream) {
  if (!(x0 > 0.0)) throw ConfigError("Bessel(3) start must be positive");
  const Grid grid = Grid::make(horizon, dt);
  const CounterRng rng(seed, stream);
  const double sd = std::sqrt(dt);
  Eigen::ArrayXd r(grid.steps + 1);
  Eigen::Vector3d w(x0, 0.0, 0.0);
  r[0] = x0;
  for (std::int64_t k = 0; k < grid.steps; ++k) {
    const auto [z1, z2] = rng.normal_pair(static_cast<std::uint64_t>(k), Lane::kIncrement);
    const auto z3 = rng.normal_pair(static_cast<std::uint64_t>(k), Lane::kIncrementExtra).first;
    w += sd * Eigen::Vector3d(z1, z2, z3);
    r[k + 1] = w.norm();
  }
  return r;
}

double exponential_clock(double q, std::uint64_t seed, std::uint64_t stream) {
  if (!(q > 0.0)) throw ConfigError("clock rate q must be positive");
  return CounterRng(seed, stream).exponential(0, Lane::kClock) / q;
}

namespace {

constexpr char kMagic[8] = {'P', 'E', 'N', 'A', 'L', 'P', 'T', 'H'};
constexpr std::uint32_t kDumpVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b.data(), 8);
}
void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b.data(), 4);
}
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw std::runtime_error("truncated path dump");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw std::runtime_error("truncated path dump");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void write_path_dump(std::ostream& out, const std::vector<PathSample>& paths) {
  out.write(kMagic, 8);
  put_u32(out, kDumpVersion);
  put_u64(out, paths.size());
  for (const PathSample& p : paths) {
    put_u32(out, static_cast<std::uint32_t>(p.model));
    put_f64(out, p.dt);
    put_f64(out, p.horizon());
    put_f64(out, p.eps);
    put_u64(out, p.seed);
    put_u64(out, p.stream);
    put_u64(out, static_cast<std::uint64_t>(p.first_step));
    put_u64(out, static_cast<std::uint64_t>(p.size()));
    const bool lang = p.model == Model::kLangevin;
    const Eigen::ArrayXd* cols[3] = {lang ? &p.velocity : &p.position,
                                     lang ? &p.position : &p.supremum,
                                     lang ? &p.supremum : &p.local_time};
    for (const Eigen::ArrayXd* c : cols) {
      for (Eigen::Index k = 0; k < c->size(); ++k) put_f64(out, (*c)[k]);
    }
  }
}

std::vector<PathSample> read_path_dump(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw std::runtime_error("not a path dump");
  if (get_u32(in) != kDumpVersion) throw std::runtime_error("unsupported path dump version");
  const std::uint64_t count = get_u64(in);
  std::vector<PathSample> paths;
  paths.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    PathSample p;
    p.model = static_cast<Model>(get_u32(in));
    p.dt = get_f64(in);
    const double horizon = get_f64(in);
    p.eps = get_f64(in);
    p.seed = get_u64(in);
    p.stream = get_u64(in);
    p.first_step = static_cast<std::int64_t>(get_u64(in));
    const auto n = static_cast<Eigen::Index>(get_u64(in));
    p.steps = n - 1;
    (void)horizon;
    const bool lang = p.model == Model::kLangevin;
    Eigen::ArrayXd* cols[3] = {lang ? &p.velocity : &p.position, lang ? &p.position : &p.supremum,
                               lang ? &p.supremum : &p.local_time};
    for (Eigen::ArrayXd* c : cols) {
      c->resize(n);
      for (Eigen::Index k = 0; k < n; ++k) (*c)[k] = get_f64(in);
    }
    paths.push_back(std::move(p));
  }
  return paths;
}

}  // namespace penal
