#include "ppdiag/simdata.hpp"

#include <cmath>
#include <stdexcept>

#include "ppdiag/rng.hpp"

namespace ppdiag {

namespace {

double draw(const ColumnSpec& spec, Rng& rng) {
  if (std::holds_alternative<TwoPoint>(spec.distribution)) {
    return rng.uniform() < 0.5 ? -1.0 : 1.0;
  }
  const auto& mix = std::get<NormalMixture>(spec.distribution);
  std::size_t comp = 0;
  if (mix.weights.size() > 1) {
    const double u = rng.uniform();
    double acc = 0.0;
    comp = mix.weights.size() - 1;
    for (std::size_t k = 0; k < mix.weights.size(); ++k) {
      acc += mix.weights[k];
      if (u < acc) {
        comp = k;
        break;
      }
    }
  }
  return rng.normal(mix.means[comp], mix.sd);
}

}  // namespace

std::size_t Dataset::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return j;
  throw std::invalid_argument("dataset has no column '" + name + "'");
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "full10") return DatasetKind::full10;
  if (s == "boa5") return DatasetKind::boa5;
  if (s == "boa6") return DatasetKind::boa6;
  throw std::invalid_argument("unknown dataset '" + s + "' (expected full10, boa5 or boa6)");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::full10: return "full10";
    case DatasetKind::boa5: return "boa5";
    case DatasetKind::boa6: return "boa6";
  }
  return "unknown";
}

const std::vector<ColumnSpec>& simulation_columns() {
  static const std::vector<ColumnSpec> cols = {
      {"x1", NormalMixture{{1.0}, {0.0}}},
      {"x2", NormalMixture{{0.5, 0.5}, {-3.0, 3.0}}},
      {"x3", TwoPoint{}},
      {"x4", NormalMixture{{0.25, 0.75}, {-3.0, 3.0}}},
      {"x5", NormalMixture{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, {-5.0, 0.0, 5.0}}},
      {"x6", NormalMixture{{0.45, 0.1, 0.45}, {-5.0, 0.0, 5.0}}},
      {"x7", NormalMixture{{0.5, 0.5}, {-5.0, 5.0}}},
      {"x8", NormalMixture{{1.0}, {0.0}}},
      {"x9", NormalMixture{{1.0}, {0.0}}},
      {"x10", NormalMixture{{1.0}, {0.0}}},
  };
  return cols;
}

Dataset generate_raw(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate: need at least 2 observations");
  const auto& cols = simulation_columns();
  Rng rng(seed);
  Dataset out{{}, Matrix(n, cols.size()), false};
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.names.push_back(cols[j].name);
    for (auto& x : out.values.column(j)) x = draw(cols[j], rng);
  }
  return out;
}

Dataset standardize(Dataset data) {
  const double n = static_cast<double>(data.n());
  for (std::size_t j = 0; j < data.p(); ++j) {
    auto col = data.values.column(j);
    double mean = 0.0;
    for (double x : col) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : col) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) throw DegenerateInputError("standardize: column '" + data.names[j] + "' is constant");
    for (auto& x : col) x = (x - mean) / sd;
  }
  data.scaled = true;
  return data;
}

Dataset generate(std::size_t n, std::uint64_t seed) { return standardize(generate_raw(n, seed)); }

Dataset select_columns(const Dataset& data, const std::vector<std::string>& names) {
  Dataset out{names, Matrix(data.n(), names.size()), data.scaled};
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto src = data.values.column(data.column_index(names[j]));
    std::copy(src.begin(), src.end(), out.values.column(j).begin());
  }
  return out;
}

Dataset boa5(std::size_t n, std::uint64_t seed) {
  return select_columns(generate(n, seed), {"x2", "x1", "x8", "x9", "x10"});
}

Dataset boa6(std::size_t n, std::uint64_t seed) {
  return select_columns(generate(n, seed), {"x2", "x7", "x1", "x8", "x9", "x10"});
}

Dataset make_dataset(DatasetKind kind, std::size_t n, std::uint64_t seed) {
  switch (kind) {
    case DatasetKind::full10: return generate(n, seed);
    case DatasetKind::boa5: return boa5(n, seed);
    case DatasetKind::boa6: return boa6(n, seed);
  }
  throw std::invalid_argument("unknown dataset kind");
}

Basis theoretical_best(DatasetKind kind, std::size_t d) {
  if (kind == DatasetKind::boa5 && d == 1) return Basis::axes(5, {0});
  if (kind == DatasetKind::boa6 && d == 1) return Basis::axes(6, {1});
  if (kind == DatasetKind::boa6 && d == 2) return Basis::axes(6, {0, 1});
  throw std::invalid_argument("no theoretical best basis for " + to_string(kind) + " with d = " +
                              std::to_string(d));
}

}  // namespace ppdiag
