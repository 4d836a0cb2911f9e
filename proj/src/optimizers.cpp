#include "ppdiag/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ppdiag {

namespace {

constexpr std::uint64_t kEvalStreamSalt = 0x9e3779b97f4a7c15ULL;
constexpr int kLineSearchEvaluations = 20;
constexpr double kPdAcceptRatio = 0.001;

// State shared by every optimizer: data, index, the main random stream used
// for sampling, a separate stream of per-evaluation seeds, and the trace.
class Run {
 public:
  Run(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg)
      : data_(data), index_(index), cfg_(cfg), rng_(cfg.seed), eval_seeds_(cfg.seed ^ kEvalStreamSalt) {
    cfg_.validate();
    if (data.cols() <= cfg.d) {
      throw DimensionError("data has " + std::to_string(data.cols()) +
                           " columns; need more than d = " + std::to_string(cfg.d));
    }
    TraceMetadata meta;
    meta.p = data.cols();
    meta.d = cfg.d;
    meta.n = data.rows();
    meta.index_name = index.name;
    meta.seed = cfg.seed;
    meta.config = to_json(cfg);
    log_ = TraceLog(std::move(meta));
  }

  std::size_t p() const { return data_.cols(); }
  std::size_t d() const { return cfg_.d; }
  const OptimizerConfig& cfg() const { return cfg_; }
  Rng& rng() { return rng_; }
  Rng& eval_seeds() { return eval_seeds_; }
  TraceLog& log() { return log_; }

  ScoredBasis score(Basis b) {
    const std::uint64_t seed = eval_seeds_.next_u64();
    Rng r(seed);
    const double v = evaluate(index_, data_, b, r);
    return {std::move(b), v, seed};
  }

  // A noisy index is re-scored with a fresh draw before each inner loop, so a
  // lucky evaluation of the current basis does not stall the search.
  ScoredBasis refresh(const ScoredBasis& cur) { return index_.smooth ? cur : score(cur.basis); }

  void record(const ScoredBasis& s, TraceState state, int j, int l, double alpha) {
    log_.record({0, s.basis, s.index_value, state, j, l, to_string(cfg_.method), alpha});
  }

  ScoredBasis start() {
    Basis b = cfg_.start ? *cfg_.start : random_basis(p(), d(), rng_);
    if (b.p() != p() || b.d() != d()) throw DimensionError("start basis shape does not match the problem");
    return score(std::move(b));
  }

  // Neighbourhood draw; a rank-deficient blend is redrawn.
  Basis blend_candidate(const Basis& current, double alpha) {
    for (;;) {
      const Basis r = random_basis(p(), d(), rng_);
      try {
        return linear_blend(current, r, alpha);
      } catch (const DegenerateInputError&) {
      }
    }
  }

  Basis oriented(const Basis& current, const Basis& target) const {
    return cfg_.orient_check ? orient_match(current, target) : target;
  }

  ScoredBasis leg(const ScoredBasis& cur, const ScoredBasis& target, int j, double alpha) {
    return interpolate_leg(cur, target, index_, data_, cfg_, log_,
                           {to_string(cfg_.method), j, alpha}, eval_seeds_);
  }

  RunResult finish(const ScoredBasis& cur, int j, int l, double alpha, TerminationReason why) {
    record(cur, TraceState::final, j, l, alpha);
    return {cur.basis, cur.index_value, cur.eval_seed, std::move(log_), j, why};
  }

 private:
  const Matrix& data_;
  const IndexFunction& index_;
  OptimizerConfig cfg_;
  Rng rng_;
  Rng eval_seeds_;
  TraceLog log_;
};

// CRS and SA share everything except the acceptance rule for a candidate that
// does not improve on the current value.
template <typename AcceptWorse>
RunResult random_search(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg,
                        AcceptWorse accept_worse) {
  Run run(data, index, cfg);
  ScoredBasis cur = run.start();
  double alpha = cfg.alpha0;
  int j = 1;
  run.record(cur, TraceState::start, j, 1, alpha);

  for (;;) {
    ++j;
    cur = run.refresh(cur);
    std::optional<ScoredBasis> found;
    int l = 1;
    for (; l <= cfg.l_max; ++l) {
      ScoredBasis cand = run.score(run.blend_candidate(cur.basis, alpha));
      run.record(cand, TraceState::random_search, j, l, alpha);
      if (cand.index_value > cur.index_value ||
          accept_worse(cur.index_value, cand.index_value, l, run.rng())) {
        found = std::move(cand);
        break;
      }
    }
    if (!found) return run.finish(cur, j, cfg.l_max, alpha, TerminationReason::l_max_exhausted);
    if (geodesic_distance(cur.basis, found->basis) < cfg.min_geodesic_dist) {
      return run.finish(cur, j, l, alpha, TerminationReason::too_close);
    }
    found->basis = run.oriented(cur.basis, found->basis);
    run.record(*found, TraceState::new_basis, j, l, alpha);
    const double alpha_j = alpha;
    alpha *= cfg.cooling;
    cur = run.leg(cur, *found, j, alpha_j);
  }
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::crs: return "crs";
    case Method::sa: return "sa";
    case Method::pd: return "pd";
    case Method::polish: return "polish";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "crs") return Method::crs;
  if (s == "sa") return Method::sa;
  if (s == "pd") return Method::pd;
  if (s == "polish") return Method::polish;
  throw std::invalid_argument("unknown method '" + s + "' (expected crs, sa, pd or polish)");
}

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::l_max_exhausted: return "l_max_exhausted";
    case TerminationReason::too_close: return "too_close";
    case TerminationReason::polish_threshold: return "polish_threshold";
  }
  return "unknown";
}

bool OptimizerConfig::interrupt_enabled() const {
  if (interrupt) return *interrupt;
  return method == Method::crs || method == Method::polish;
}

void OptimizerConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  if (d < 1) fail("d must be at least 1");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) fail("alpha0 must lie in (0, 1]");
  if (!(cooling > 0.0 && cooling <= 1.0)) fail("cooling must lie in (0, 1]");
  if (l_max < 1) fail("l_max must be at least 1");
  if (!(t0 > 0.0)) fail("t0 must be positive");
  if (pd_directions < 1) fail("pd_directions must be at least 1");
  if (!(pd_delta > 0.0)) fail("pd_delta must be positive");
  if (!(step_angle > 0.0)) fail("step_angle must be positive");
  if (!(min_geodesic_dist >= 0.0)) fail("min_geodesic_dist must be non-negative");
  if (polish.candidates < 1) fail("polish.candidates must be at least 1");
  if (!(polish.shrink > 0.0 && polish.shrink < 1.0)) fail("polish.shrink must lie in (0, 1)");
  if (start && start->d() != d) fail("start basis has the wrong number of columns");
}

nlohmann::json to_json(const OptimizerConfig& cfg) {
  nlohmann::json j = {
      {"method", to_string(cfg.method)},
      {"d", cfg.d},
      {"alpha0", cfg.alpha0},
      {"cooling", cfg.cooling},
      {"l_max", cfg.l_max},
      {"t0", cfg.t0},
      {"pd_directions", cfg.pd_directions},
      {"pd_delta", cfg.pd_delta},
      {"interrupt", cfg.interrupt_enabled()},
      {"orient_check", cfg.orient_check},
      {"step_angle", cfg.step_angle},
      {"seed", cfg.seed},
      {"min_geodesic_dist", cfg.min_geodesic_dist},
      {"polish",
       {{"candidates", cfg.polish.candidates},
        {"min_dist", cfg.polish.min_dist},
        {"min_rel_index", cfg.polish.min_rel_index},
        {"min_alpha", cfg.polish.min_alpha},
        {"shrink", cfg.polish.shrink}}},
  };
  if (cfg.start) {
    j["start"] = {{"p", cfg.start->p()}, {"d", cfg.start->d()}, {"basis", cfg.start->flat()}};
  }
  return j;
}

OptimizerConfig config_from_json(const nlohmann::json& j, OptimizerConfig cfg) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "method") cfg.method = method_from_string(value.get<std::string>());
    else if (key == "d") cfg.d = value.get<std::size_t>();
    else if (key == "alpha0") cfg.alpha0 = value.get<double>();
    else if (key == "cooling") cfg.cooling = value.get<double>();
    else if (key == "l_max") cfg.l_max = value.get<int>();
    else if (key == "t0") cfg.t0 = value.get<double>();
    else if (key == "pd_directions") cfg.pd_directions = value.get<int>();
    else if (key == "pd_delta") cfg.pd_delta = value.get<double>();
    else if (key == "interrupt") {
      if (value.is_null()) cfg.interrupt.reset();
      else cfg.interrupt = value.get<bool>();
    } else if (key == "orient_check") cfg.orient_check = value.get<bool>();
    else if (key == "step_angle") cfg.step_angle = value.get<double>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "min_geodesic_dist") cfg.min_geodesic_dist = value.get<double>();
    else if (key == "polish") {
      for (const auto& [pk, pv] : value.items()) {
        if (pk == "candidates") cfg.polish.candidates = pv.get<std::size_t>();
        else if (pk == "min_dist") cfg.polish.min_dist = pv.get<double>();
        else if (pk == "min_rel_index") cfg.polish.min_rel_index = pv.get<double>();
        else if (pk == "min_alpha") cfg.polish.min_alpha = pv.get<double>();
        else if (pk == "shrink") cfg.polish.shrink = pv.get<double>();
        else throw std::invalid_argument("config: unknown polish field '" + pk + "'");
      }
    } else if (key == "start") {
      const auto p = value.at("p").get<std::size_t>();
      const auto d = value.at("d").get<std::size_t>();
      cfg.start = Basis::from_orthonormal(Matrix(p, d, value.at("basis").get<std::vector<double>>()));
    } else {
      throw std::invalid_argument("config: unknown field '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

double sa_temperature(double t0, int l) { return t0 / std::log(static_cast<double>(l) + 1.0); }

double sa_acceptance_probability(double current, double candidate, double t0, int l) {
  return std::min(std::exp(-std::abs(current - candidate) / sa_temperature(t0, l)), 1.0);
}

bool sa_accept(double current, double candidate, double t0, int l, Rng& rng) {
  const double prob = sa_acceptance_probability(current, candidate, t0, l);
  const double u = rng.uniform();
  return prob > u;
}

ScoredBasis interpolate_leg(const ScoredBasis& current, const ScoredBasis& target,
                            const IndexFunction& index, const Matrix& data,
                            const OptimizerConfig& cfg, TraceLog& trace, const LegContext& ctx,
                            Rng& eval_seeds) {
  const GeodesicPath path = geodesic_path(current.basis, target.basis, cfg.step_angle);
  const std::size_t n = path.frames.size();
  if (n < 2) return target;

  std::vector<ScoredBasis> frames;
  frames.reserve(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    if (k + 1 == n) {
      frames.push_back({path.frames[k], target.index_value, target.eval_seed});
    } else {
      const std::uint64_t seed = eval_seeds.next_u64();
      Rng r(seed);
      frames.push_back({path.frames[k], evaluate(index, data, path.frames[k], r), seed});
    }
  }

  std::size_t stop = frames.size() - 1;
  if (cfg.interrupt_enabled()) {
    stop = 0;
    for (std::size_t k = 1; k < frames.size(); ++k)
      if (frames[k].index_value > frames[stop].index_value) stop = k;
  }
  for (std::size_t k = 0; k <= stop; ++k) {
    trace.record({0, frames[k].basis, frames[k].index_value, TraceState::interpolation, ctx.j,
                  static_cast<int>(k + 1), ctx.method, ctx.alpha});
  }
  return stop + 1 == frames.size() ? target : frames[stop];
}

RunResult crs(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg) {
  if (cfg.method != Method::crs) throw std::invalid_argument("crs: config.method must be crs");
  return random_search(data, index, cfg, [](double, double, int, Rng&) { return false; });
}

RunResult sa(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg) {
  if (cfg.method != Method::sa) throw std::invalid_argument("sa: config.method must be sa");
  const double t0 = cfg.t0;
  return random_search(data, index, cfg, [t0](double cur, double cand, int l, Rng& rng) {
    return sa_accept(cur, cand, t0, l, rng);
  });
}

RunResult pd(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg) {
  if (cfg.method != Method::pd) throw std::invalid_argument("pd: config.method must be pd");
  Run run(data, index, cfg);
  ScoredBasis cur = run.start();
  const double alpha = cfg.alpha0;
  int j = 1;
  run.record(cur, TraceState::start, j, 1, alpha);

  for (;;) {
    ++j;
    cur = run.refresh(cur);
    std::optional<ScoredBasis> found;
    int l = 1;
    for (; l <= cfg.l_max; ++l) {
      std::optional<ScoredBasis> best_probe;
      for (int k = 0; k < cfg.pd_directions; ++k) {
        const Geodesic toward(cur.basis, random_basis(run.p(), run.d(), run.rng()));
        if (toward.length() < kRankTol) continue;
        for (const double sign : {1.0, -1.0}) {
          ScoredBasis probe = run.score(toward.at_angle(sign * cfg.pd_delta));
          run.record(probe, TraceState::direction_search, j, l, alpha);
          if (!best_probe || probe.index_value > best_probe->index_value) best_probe = probe;
        }
      }
      if (!best_probe) continue;
      run.record(*best_probe, TraceState::best_direction_search, j, l, alpha);

      const Geodesic line(cur.basis, best_probe->basis);
      const auto [angle, value] = golden_section_max(
          [&](double s) { return run.score(line.at_angle(s)).index_value; },
          -std::numbers::pi / 4.0, std::numbers::pi / 4.0, kLineSearchEvaluations);
      (void)value;
      ScoredBasis peak = run.score(line.at_angle(angle));
      run.record(peak, TraceState::best_line_search, j, l, alpha);

      const double pdiff = peak.index_value != 0.0
                               ? (peak.index_value - cur.index_value) / peak.index_value
                               : -1.0;
      if (pdiff > kPdAcceptRatio) {
        found = std::move(peak);
        break;
      }
    }
    if (!found) return run.finish(cur, j, cfg.l_max, alpha, TerminationReason::l_max_exhausted);
    if (geodesic_distance(cur.basis, found->basis) < cfg.min_geodesic_dist) {
      return run.finish(cur, j, l, alpha, TerminationReason::too_close);
    }
    found->basis = run.oriented(cur.basis, found->basis);
    run.record(*found, TraceState::new_basis, j, l, alpha);
    cur = run.leg(cur, *found, j, alpha);
  }
}

namespace {
RunResult polish_run(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg,
                     const std::optional<ScoredBasis>& start);
}  // namespace

RunResult polish(const Matrix& data, const IndexFunction& index, const Basis& start,
                 const OptimizerConfig& cfg) {
  OptimizerConfig c = cfg;
  c.start = start;
  c.method = Method::polish;
  return optimize(data, index, c);
}

RunResult polish(const Matrix& data, const IndexFunction& index, const ScoredBasis& start,
                 const OptimizerConfig& cfg) {
  return polish_run(data, index, cfg, start);
}

namespace {

RunResult polish_run(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg,
                     const std::optional<ScoredBasis>& start) {
  OptimizerConfig c = cfg;
  c.method = Method::polish;
  if (start) c.start = start->basis;
  Run run(data, index, c);
  ScoredBasis cur = start ? *start : run.start();
  const PolishConfig& pc = c.polish;
  double alpha = c.alpha0;
  int j = 1;
  run.record(cur, TraceState::start, j, 1, alpha);

  for (;;) {
    ++j;
    std::optional<ScoredBasis> found;
    int l = 1;
    for (; l <= c.l_max; ++l) {
      if (alpha <= pc.min_alpha) {
        return run.finish(cur, j, l, alpha, TerminationReason::polish_threshold);
      }
      std::optional<ScoredBasis> best;
      for (std::size_t k = 0; k < pc.candidates; ++k) {
        ScoredBasis cand = run.score(run.blend_candidate(cur.basis, alpha));
        run.record(cand, TraceState::polish_search, j, l, alpha);
        if (!best || cand.index_value > best->index_value) best = std::move(cand);
      }
      if (best->index_value > cur.index_value) {
        if (geodesic_distance(cur.basis, best->basis) <= pc.min_dist) {
          return run.finish(cur, j, l, alpha, TerminationReason::polish_threshold);
        }
        const double rel = cur.index_value != 0.0
                               ? (best->index_value - cur.index_value) / std::abs(cur.index_value)
                               : std::numeric_limits<double>::infinity();
        if (rel <= pc.min_rel_index) {
          return run.finish(cur, j, l, alpha, TerminationReason::polish_threshold);
        }
        found = std::move(best);
        break;
      }
      alpha *= pc.shrink;
    }
    if (!found) return run.finish(cur, j, c.l_max, alpha, TerminationReason::l_max_exhausted);
    found->basis = run.oriented(cur.basis, found->basis);
    run.record(*found, TraceState::new_basis, j, l, alpha);
    cur = run.leg(cur, *found, j, alpha);
  }
}

}  // namespace

RunResult optimize(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg) {
  switch (cfg.method) {
    case Method::crs: return crs(data, index, cfg);
    case Method::sa: return sa(data, index, cfg);
    case Method::pd: return pd(data, index, cfg);
    case Method::polish: return polish_run(data, index, cfg, std::nullopt);
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace ppdiag
