#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "ppdiag/indexes.hpp"
#include "ppdiag/linalg.hpp"
#include "ppdiag/manifold.hpp"
#include "ppdiag/rng.hpp"
#include "ppdiag/trace.hpp"

namespace ppdiag {

enum class Method { crs, sa, pd, polish };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

enum class TerminationReason { l_max_exhausted, too_close, polish_threshold };

std::string to_string(TerminationReason r);

struct PolishConfig {
  std::size_t candidates = 100;
  double min_dist = 1e-3;
  double min_rel_index = 1e-5;
  double min_alpha = 0.01;
  // Multiplier applied to alpha after every batch that fails to improve.
  double shrink = 0.5;

  friend bool operator==(const PolishConfig&, const PolishConfig&) = default;
};

struct OptimizerConfig {
  Method method = Method::crs;
  std::size_t d = 1;
  double alpha0 = 0.5;
  double cooling = 0.99;
  int l_max = 25;
  double t0 = 0.01;
  int pd_directions = 4;
  double pd_delta = 0.01;
  // Unset means: on for CRS and polish, off for SA and PD.
  std::optional<bool> interrupt;
  bool orient_check = true;
  double step_angle = kDefaultStepAngle;
  std::uint64_t seed = 1;
  double min_geodesic_dist = 1e-3;
  PolishConfig polish;
  // Starting basis; drawn at random from the run's stream when unset.
  std::optional<Basis> start;

  bool interrupt_enabled() const;
  // Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

nlohmann::json to_json(const OptimizerConfig& cfg);
// Missing fields keep their defaults; unknown fields are rejected.
OptimizerConfig config_from_json(const nlohmann::json& j, OptimizerConfig base = {});

struct ScoredBasis {
  Basis basis;
  double index_value = 0.0;
  // Seed of the generator handed to the index when `index_value` was
  // computed; re-evaluating with Rng(eval_seed) reproduces it exactly.
  std::uint64_t eval_seed = 0;
};

struct RunResult {
  Basis final_basis;
  double final_index = 0.0;
  std::uint64_t final_eval_seed = 0;
  TraceLog trace;
  int iterations = 0;
  TerminationReason terminated_by = TerminationReason::l_max_exhausted;
};

double sa_temperature(double t0, int l);
// min{exp(-|current - candidate| / T(l)), 1}
double sa_acceptance_probability(double current, double candidate, double t0, int l);
// Draws U ~ Unif(0, 1) from `rng` and accepts when P > U.
bool sa_accept(double current, double candidate, double t0, int l, Rng& rng);

struct LegContext {
  std::string method;
  int j = 1;
  double alpha = 0.0;
};

// Interpolates from `current` to `target`, recording every displayed frame
// as an interpolation record. Frame values are evaluated, except the last
// frame which reuses `target.index_value`. With interruption the leg stops at
// the highest-valued frame (first seen on ties) and returns it; otherwise the
// target is returned.
ScoredBasis interpolate_leg(const ScoredBasis& current, const ScoredBasis& target,
                            const IndexFunction& index, const Matrix& data,
                            const OptimizerConfig& cfg, TraceLog& trace, const LegContext& ctx,
                            Rng& eval_seeds);

RunResult crs(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg);
RunResult sa(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg);
RunResult pd(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg);

// Refines `start`. The run never ends below the start value.
RunResult polish(const Matrix& data, const IndexFunction& index, const Basis& start,
                 const OptimizerConfig& cfg);
RunResult polish(const Matrix& data, const IndexFunction& index, const ScoredBasis& start,
                 const OptimizerConfig& cfg);

// Dispatches on cfg.method.
RunResult optimize(const Matrix& data, const IndexFunction& index, const OptimizerConfig& cfg);

// Golden-section maximisation of `f` over [lo, hi] using exactly
// `evaluations` calls. Returns (argmax, max) over the evaluated points.
template <typename F>
std::pair<double, double> golden_section_max(F&& f, double lo, double hi, int evaluations);

}  // namespace ppdiag

#include "ppdiag/detail/golden_section.hpp"
