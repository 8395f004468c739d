#include "penal/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "penal/errors.hpp"
#include "penal/stats.hpp"

namespace penal {

unsigned default_threads() {
  if (const char* env = std::getenv("PENAL_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("PENAL_THREADS must be a positive integer, got '") + env + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

void parallel_chunks(std::int64_t n, std::int64_t chunk, unsigned threads,
                     const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  chunk = std::max<std::int64_t>(chunk, 1);
  const std::int64_t chunks = (n + chunk - 1) / chunk;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::int64_t>(std::max(threads, 1u), chunks));
  if (workers <= 1) {
    for (std::int64_t c = 0; c < chunks; ++c) fn(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        fn(c * chunk, std::min(n, (c + 1) * chunk));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

constexpr std::int64_t kChunk = 256;

struct Context {
  const EnsembleConfig* cfg;
  const std::vector<WeightSpec>* weights;
  const Penalisation* pen;
  SamplerConfig fine;
  double coarse_dt;
  double coarse_eps;
  std::size_t payload_width;
};

struct Particle {
  PathStepper stepper;
  ModelState fine;
  ModelState coarse;
  std::vector<WeightTracker> tr;
  std::vector<WeightTracker> trc;
  std::uint64_t step = 0;
  double mass = 1.0;
  double phi_ref = 1.0;
  std::vector<double> payload;
  bool frozen = false;
};

Particle make_particle(const Context& ctx, std::uint64_t stream) {
  const EnsembleConfig& cfg = *ctx.cfg;
  const CounterRng rng(cfg.seed, stream);
  Particle p{PathStepper(ctx.fine, rng), cfg.x0, cfg.x0, {}, {}, 0, 1.0, 1.0, {}, false};
  p.tr.reserve(ctx.weights->size());
  for (const WeightSpec& w : *ctx.weights) {
    p.tr.emplace_back(w, ctx.fine.dt, rng, Lane::kBridge);
    p.tr.back().start(cfg.x0);
    if (cfg.halving) {
      p.trc.emplace_back(w, ctx.coarse_dt, rng, Lane::kBridgeCoarse);
      p.trc.back().start(cfg.x0);
    }
  }
  p.payload.assign(ctx.payload_width, 0.0);
  if (ctx.pen) p.phi_ref = ctx.pen->phi(cfg.x0);
  return p;
}

bool all_dead(const Particle& p) {
  for (const auto& t : p.tr) {
    if (!t.dead()) return false;
  }
  for (const auto& t : p.trc) {
    if (!t.dead()) return false;
  }
  return true;
}

void advance(Particle& p, std::uint64_t target, const Context& ctx) {
  const bool halving = ctx.cfg->halving;
  const bool stop = ctx.cfg->stop_when_dead;
  while (p.step < target) {
    if (p.frozen) {
      p.step = target;
      return;
    }
    const std::uint64_t k = p.step;
    const ModelState next = p.stepper.step(p.fine, k);
    for (auto& t : p.tr) t.advance(p.fine, next, k);
    p.fine = next;
    if (halving && (k & 1u)) {
      const ModelState c = advance_aggregates(p.coarse, next.position, next.velocity,
                                              ctx.coarse_dt, ctx.coarse_eps);
      for (auto& t : p.trc) t.advance(p.coarse, c, k >> 1);
      p.coarse = c;
    }
    ++p.step;
    if (stop && all_dead(p)) p.frozen = true;
  }
}

double martingale_of(const Particle& p, const Context& ctx) {
  if (!ctx.pen) return std::numeric_limits<double>::quiet_NaN();
  const double g = p.tr[ctx.pen->weight].value();
  if (g == 0.0) return 0.0;
  return p.mass * g * ctx.pen->phi(p.fine) / p.phi_ref;
}

struct Scratch {
  std::vector<double> g;
  std::vector<double> gc;
};

void call_probe(Particle& p, std::int64_t index, double time, std::size_t checkpoint,
                const Context& ctx, const Probe& probe, double* out, Scratch& s) {
  s.g.resize(p.tr.size());
  for (std::size_t j = 0; j < p.tr.size(); ++j) s.g[j] = p.tr[j].value();
  ParticleView v;
  v.index = index;
  v.time = time;
  v.state = &p.fine;
  v.gamma = s.g.data();
  if (ctx.cfg->halving) {
    s.gc.resize(p.trc.size());
    for (std::size_t j = 0; j < p.trc.size(); ++j) s.gc[j] = p.trc[j].value();
    v.coarse = &p.coarse;
    v.coarse_gamma = s.gc.data();
  }
  v.martingale = martingale_of(p, ctx);
  v.payload = p.payload.data();
  probe(v, checkpoint, out);
}

}  // namespace

EnsembleResult run_ensemble(const EnsembleConfig& cfg, const std::vector<WeightSpec>& weights,
                            const std::optional<Penalisation>& pen, std::size_t width,
                            std::size_t payload_width, const Probe& probe) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.n < 1) throw ConfigError("ensemble needs n >= 1");
  if (cfg.x0.model != cfg.sampler.model) throw ConfigError("start state model does not match sampler");
  validate_state(cfg.x0);
  if (pen && pen->weight >= weights.size()) throw ConfigError("penalised weight index out of range");
  if (pen && pen->resample && cfg.halving) {
    throw ConfigError("resampling cannot be combined with coupled step halving");
  }
  if (pen && !membership(weights[pen->weight], cfg.x0)) {
    throw DomainError("start state lies outside the domain of the penalised weight");
  }

  const Grid grid = Grid::make(cfg.horizon, cfg.sampler.dt);
  Context ctx;
  ctx.cfg = &cfg;
  ctx.weights = &weights;
  ctx.pen = pen ? &*pen : nullptr;
  ctx.fine = cfg.sampler;
  ctx.coarse_dt = cfg.sampler.dt;
  ctx.coarse_eps = cfg.sampler.bandwidth();
  ctx.payload_width = payload_width;
  if (cfg.halving) {
    ctx.fine.dt = 0.5 * cfg.sampler.dt;
    ctx.fine.eps = cfg.sampler.eps > 0.0 ? 0.5 * cfg.sampler.eps : 0.0;
  }
  const std::uint64_t ratio = cfg.halving ? 2 : 1;

  EnsembleResult res;
  res.times = cfg.checkpoints;
  if (res.times.empty() || std::abs(res.times.back() - cfg.horizon) > 1e-12 * cfg.horizon) {
    res.times.push_back(cfg.horizon);
  }
  std::vector<std::uint64_t> ck_steps;
  for (std::size_t c = 0; c < res.times.size(); ++c) {
    const auto k = static_cast<std::uint64_t>(grid.index_of(res.times[c])) * ratio;
    if (c > 0 && k <= ck_steps.back()) throw ConfigError("checkpoints must be strictly increasing");
    if (k > static_cast<std::uint64_t>(grid.steps) * ratio) throw ConfigError("checkpoint beyond horizon");
    ck_steps.push_back(k);
  }
  const std::size_t kc = res.times.size();
  res.width = width;
  res.records = Eigen::ArrayXXd::Zero(cfg.n, static_cast<Eigen::Index>(kc * width));
  const unsigned threads = cfg.threads ? cfg.threads : default_threads();

  if (!(pen && pen->resample)) {
    // Streaming: each path runs start to finish; rows are written in place.
    Eigen::ArrayXXd mart;
    if (pen) mart.resize(cfg.n, static_cast<Eigen::Index>(kc));
    parallel_chunks(cfg.n, kChunk, threads, [&](std::int64_t b, std::int64_t e) {
      Scratch s;
      std::vector<double> out(width);
      for (std::int64_t i = b; i < e; ++i) {
        Particle p = make_particle(ctx, path_stream(cfg.stream_base, i));
        for (std::size_t c = 0; c < kc; ++c) {
          advance(p, ck_steps[c], ctx);
          call_probe(p, i, res.times[c], c, ctx, probe, out.data(), s);
          for (std::size_t j = 0; j < width; ++j) {
            res.records(i, static_cast<Eigen::Index>(c * width + j)) = out[j];
          }
          if (pen) mart(i, static_cast<Eigen::Index>(c)) = martingale_of(p, ctx);
        }
      }
    });
    if (pen) {
      for (std::size_t c = 0; c < kc; ++c) {
        res.n_eff.push_back(effective_sample_size(mart.col(static_cast<Eigen::Index>(c))));
      }
    }
  } else {
    // Stored particles with stage-wise systematic resampling.
    std::vector<std::uint64_t> bounds = ck_steps;
    if (pen->stage_length > 0.0) {
      const auto every = static_cast<std::uint64_t>(grid.index_of(pen->stage_length));
      if (every == 0) throw ConfigError("stage_length must be at least one step");
      for (std::uint64_t k = every; k < ck_steps.back(); k += every) bounds.push_back(k);
      std::sort(bounds.begin(), bounds.end());
      bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    }
    std::vector<Particle> ps;
    ps.reserve(static_cast<std::size_t>(cfg.n));
    for (std::int64_t i = 0; i < cfg.n; ++i) ps.push_back(make_particle(ctx, path_stream(cfg.stream_base, i)));
    res.n_eff.assign(kc, 0.0);
    std::size_t c = 0;
    Eigen::ArrayXd m(cfg.n);
    for (std::size_t stage = 0; stage < bounds.size(); ++stage) {
      const std::uint64_t target = bounds[stage];
      parallel_chunks(cfg.n, kChunk, threads, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) advance(ps[i], target, ctx);
      });
      for (std::int64_t i = 0; i < cfg.n; ++i) m[i] = martingale_of(ps[i], ctx);
      const double ess = effective_sample_size(m);
      const bool is_ck = c < kc && ck_steps[c] == target;
      if (is_ck) {
        const double t = res.times[c];
        parallel_chunks(cfg.n, kChunk, threads, [&](std::int64_t b, std::int64_t e) {
          Scratch s;
          std::vector<double> out(width);
          for (std::int64_t i = b; i < e; ++i) {
            call_probe(ps[i], i, t, c, ctx, probe, out.data(), s);
            for (std::size_t j = 0; j < width; ++j) res.records(i, static_cast<Eigen::Index>(c * width + j)) = out[j];
          }
        });
        res.n_eff[c] = ess;
        ++c;
      }
      if (target == ck_steps.back()) break;
      if (!(ess < pen->ess_fraction * static_cast<double>(cfg.n))) continue;
      const double total = m.sum();
      if (!(total > 0.0)) throw NumericalError("all martingale weights vanished; cannot resample");
      // Systematic resampling with one uniform per stage.
      const double u0 = CounterRng(cfg.seed, derive_stream(cfg.stream_base, 0x5e5a, stage))
                            .uniform(stage, Lane::kResample);
      const double mean = total / static_cast<double>(cfg.n);
      std::vector<Particle> next;
      next.reserve(ps.size());
      double cum = m[0];
      std::int64_t j = 0;
      for (std::int64_t i = 0; i < cfg.n; ++i) {
        const double u = (static_cast<double>(i) + u0) * mean;
        while (cum < u && j + 1 < cfg.n) cum += m[++j];
        Particle child = ps[j];
        const std::uint64_t stream = derive_stream(cfg.stream_base, stage + 1, static_cast<std::uint64_t>(i));
        const CounterRng rng(cfg.seed, stream);
        child.stepper = PathStepper(ctx.fine, rng);
        for (auto& t : child.tr) t.reseed(rng);
        child.phi_ref = child.tr[pen->weight].value() * pen->phi(child.fine);
        child.mass = mean;
        next.push_back(std::move(child));
      }
      ps.swap(next);
      res.resampled.push_back(static_cast<double>(target) * ctx.fine.dt);
    }
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

PathEnd simulate_path_end(const SamplerConfig& sampler, const ModelState& x0, double horizon,
                          const std::vector<WeightSpec>& weights, std::uint64_t seed,
                          std::uint64_t stream, bool stop_when_dead) {
  const Grid grid = Grid::make(horizon, sampler.dt);
  const CounterRng rng(seed, stream);
  PathStepper stepper(sampler, rng);
  std::vector<WeightTracker> tr;
  tr.reserve(weights.size());
  for (const WeightSpec& w : weights) {
    tr.emplace_back(w, sampler.dt, rng, Lane::kBridge);
    tr.back().start(x0);
  }
  ModelState s = x0;
  for (std::int64_t k = 0; k < grid.steps; ++k) {
    if (stop_when_dead && std::all_of(tr.begin(), tr.end(), [](const WeightTracker& t) { return t.dead(); })) break;
    const ModelState next = stepper.step(s, static_cast<std::uint64_t>(k));
    for (auto& t : tr) t.advance(s, next, static_cast<std::uint64_t>(k));
    s = next;
  }
  PathEnd out{s, {}};
  for (const auto& t : tr) out.gamma.push_back(t.value());
  return out;
}

}  // namespace penal
