#include "ppdiag/indexes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ppdiag {

double holes(const Matrix& projected) {
  const std::size_t n = projected.rows();
  const std::size_t d = projected.cols();
  if (n == 0 || d == 0) throw DimensionError("holes: empty projection");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += projected(i, j) * projected(i, j);
    acc += std::exp(-0.5 * sq);
  }
  const double mean = acc / static_cast<double>(n);
  return (1.0 - mean) / (1.0 - std::exp(-0.5 * static_cast<double>(d)));
}

double ecdf_max_difference(std::vector<double> sample, std::vector<double> reference) {
  if (sample.empty() || reference.empty()) throw DimensionError("ecdf difference: empty sample");
  std::sort(sample.begin(), sample.end());
  std::sort(reference.begin(), reference.end());
  const double ns = static_cast<double>(sample.size());
  const double nr = static_cast<double>(reference.size());
  std::size_t i = 0;
  std::size_t k = 0;
  double best = -1.0;
  // Walk the pooled points in order; evaluate both ECDFs after absorbing every
  // copy of the current value.
  while (i < sample.size() || k < reference.size()) {
    double x;
    if (k == reference.size() || (i < sample.size() && sample[i] <= reference[k])) {
      x = sample[i];
    } else {
      x = reference[k];
    }
    while (i < sample.size() && sample[i] == x) ++i;
    while (k < reference.size() && reference[k] == x) ++k;
    best = std::max(best, static_cast<double>(i) / ns - static_cast<double>(k) / nr);
  }
  return best;
}

double kolmogorov(const Matrix& projected, Rng& rng) {
  if (projected.cols() != 1) {
    throw DimensionError("kolmogorov index is defined for 1-D projections only, got d = " +
                         std::to_string(projected.cols()));
  }
  const std::size_t n = projected.rows();
  std::vector<double> reference(n);
  for (auto& x : reference) x = rng.normal();
  return ecdf_max_difference(projected.data(), std::move(reference));
}

IndexFunction holes_index() {
  return {"holes", true, [](const Matrix& y, Rng&) { return holes(y); }};
}

IndexFunction kolmogorov_index() {
  return {"kolmogorov", false, [](const Matrix& y, Rng& rng) { return kolmogorov(y, rng); }};
}

IndexFunction index_by_name(const std::string& name) {
  if (name == "holes") return holes_index();
  if (name == "kolmogorov") return kolmogorov_index();
  throw std::invalid_argument("unknown index '" + name + "' (expected holes or kolmogorov)");
}

Matrix project(const Matrix& data, const Basis& basis) {
  if (data.cols() != basis.p()) {
    throw DimensionError("data has " + std::to_string(data.cols()) +
                         " columns but the basis has " + std::to_string(basis.p()) + " rows");
  }
  return data * basis.matrix();
}

double evaluate(const IndexFunction& index, const Matrix& data, const Basis& basis, Rng& rng) {
  return index.evaluator(project(data, basis), rng);
}

}  // namespace ppdiag
