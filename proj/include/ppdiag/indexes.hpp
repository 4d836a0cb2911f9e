#pragma once

#include <functional>
#include <string>

#include "ppdiag/linalg.hpp"
#include "ppdiag/manifold.hpp"
#include "ppdiag/rng.hpp"

namespace ppdiag {

// Projected data Y = X·A is an n x d Matrix.
using IndexEvaluator = std::function<double(const Matrix& projected, Rng& rng)>;

struct IndexFunction {
  std::string name;
  bool smooth = true;
  IndexEvaluator evaluator;
};

// Normalized holes index:
//   (1 - mean_i exp(-|y_i|²/2)) / (1 - exp(-d/2))
double holes(const Matrix& projected);

// One-sided normal Kolmogorov index for d = 1: draws a fresh standard normal
// reference sample of size n from `rng` and returns
// max over pooled points of (ECDF_Y - ECDF_reference).
double kolmogorov(const Matrix& projected, Rng& rng);

// max over pooled points of (ECDF_sample - ECDF_reference); both inputs
// need not be sorted.
double ecdf_max_difference(std::vector<double> sample, std::vector<double> reference);

IndexFunction holes_index();
IndexFunction kolmogorov_index();

// "holes" or "kolmogorov"; throws std::invalid_argument otherwise.
IndexFunction index_by_name(const std::string& name);

Matrix project(const Matrix& data, const Basis& basis);

double evaluate(const IndexFunction& index, const Matrix& data, const Basis& basis, Rng& rng);

}  // namespace ppdiag
