#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ppdiag/linalg.hpp"
#include "ppdiag/manifold.hpp"

namespace ppdiag {

struct NormalMixture {
  std::vector<double> weights;
  std::vector<double> means;
  double sd = 1.0;
};

// Takes -1 or +1 with equal probability.
struct TwoPoint {};

struct ColumnSpec {
  std::string name;
  std::variant<NormalMixture, TwoPoint> distribution;
};

struct Dataset {
  std::vector<std::string> names;
  Matrix values;  // n x p
  bool scaled = false;

  std::size_t n() const { return values.rows(); }
  std::size_t p() const { return values.cols(); }
  std::size_t column_index(const std::string& name) const;
};

enum class DatasetKind { full10, boa5, boa6 };

DatasetKind dataset_kind_from_string(const std::string& s);
std::string to_string(DatasetKind kind);

// x1 ... x10 in order.
const std::vector<ColumnSpec>& simulation_columns();

// Draws every column in order, column by column, from a single stream seeded
// with `seed`. Values are raw (not standardized).
Dataset generate_raw(std::size_t n, std::uint64_t seed);

// Centers each column and scales it to unit sample variance.
Dataset standardize(Dataset data);

Dataset generate(std::size_t n, std::uint64_t seed);

Dataset select_columns(const Dataset& data, const std::vector<std::string>& names);

// x2 plus the four noise columns x1, x8, x9, x10.
Dataset boa5(std::size_t n, std::uint64_t seed);
// x2, x7 plus the four noise columns.
Dataset boa6(std::size_t n, std::uint64_t seed);

Dataset make_dataset(DatasetKind kind, std::size_t n, std::uint64_t seed);

// Known optimum for the simulated data: boa5/d=1 -> x2 axis; boa6/d=1 -> x7
// axis; boa6/d=2 -> the (x2, x7) plane. Other combinations throw.
Basis theoretical_best(DatasetKind kind, std::size_t d);

}  // namespace ppdiag
