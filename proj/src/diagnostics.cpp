#include "ppdiag/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace ppdiag {

namespace {

struct PcaFit {
  std::vector<double> mean;
  Matrix components;
};

// Top-2 principal axes of the rows of `rows`, each axis signed so its
// largest-magnitude loading is positive.
PcaFit fit_pca(const Matrix& rows) {
  const std::size_t m = rows.rows();
  const std::size_t q = rows.cols();
  if (m < 3) throw std::invalid_argument("pca embedding needs at least 3 points");
  if (q < 2) throw DimensionError("pca embedding needs at least 2 coordinates");
  PcaFit fit{std::vector<double>(q, 0.0), Matrix(q, 2)};
  for (std::size_t k = 0; k < q; ++k) {
    double s = 0.0;
    for (double x : rows.column(k)) s += x;
    fit.mean[k] = s / static_cast<double>(m);
  }
  Matrix cov(q, q);
  for (std::size_t a = 0; a < q; ++a) {
    for (std::size_t b = a; b < q; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += (rows(i, a) - fit.mean[a]) * (rows(i, b) - fit.mean[b]);
      cov(a, b) = cov(b, a) = s / static_cast<double>(m - 1);
    }
  }
  const SymmetricEigen eig = symmetric_eigen(cov);
  for (std::size_t c = 0; c < 2; ++c) {
    auto v = eig.vectors.column(c);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < q; ++k)
      if (std::abs(v[k]) > std::abs(v[arg])) arg = k;
    const double sign = v[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < q; ++k) fit.components(k, c) = sign * v[k];
  }
  return fit;
}

void append_row(std::vector<double>& storage, std::span<const double> row) {
  storage.insert(storage.end(), row.begin(), row.end());
}

Matrix rows_to_matrix(const std::vector<double>& row_major, std::size_t q) {
  const std::size_t m = row_major.size() / q;
  Matrix out(m, q);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < q; ++k) out(i, k) = row_major[i * q + k];
  return out;
}

void finalize_extent(Embedding& e) {
  double r = 0.0;
  for (const auto& pts : e.log_coords)
    for (const auto& pt : pts) r = std::max(r, distance(pt, e.center));
  for (const auto& pt : e.background) r = std::max(r, distance(pt, e.center));
  if (e.theoretical) r = std::max(r, distance(*e.theoretical, e.center));
  e.radius = r;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SearchSummary search_summary(const TraceLog& log, std::size_t cutoff) {
  SearchSummary out;
  out.cutoff = cutoff;
  if (!log.empty()) out.method = log.records().front().method;

  std::map<int, SearchIteration> by_j;
  for (const auto& r : log.records()) {
    if (is_search_state(r.state)) {
      auto& it = by_j[r.j];
      it.j = r.j;
      it.values.push_back(r.index_value);
    } else if (r.state == TraceState::new_basis) {
      auto& it = by_j[r.j];
      it.j = r.j;
      it.accepted = true;
      it.accepted_index = r.index_value;
    }
  }
  for (auto& [j, it] : by_j) {
    it.tries = it.values.size();
    if (!it.values.empty()) {
      it.q1 = quantile(it.values, 0.25);
      it.median = quantile(it.values, 0.5);
      it.q3 = quantile(it.values, 0.75);
      it.min = *std::min_element(it.values.begin(), it.values.end());
      it.max = *std::max_element(it.values.begin(), it.values.end());
    }
    it.show_points = it.tries <= cutoff;
    out.iterations.push_back(std::move(it));
  }
  if (!out.iterations.empty()) out.iterations.back().last_iteration = true;
  return out;
}

InterpSeries interp_trace(const TraceLog& log) {
  InterpSeries s;
  if (!log.empty()) s.label = log.records().front().method;
  for (const auto& r : log.records()) {
    if (r.state == TraceState::interpolation || r.state == TraceState::new_basis) {
      s.points.push_back({r.t, r.index_value, r.state, r.j});
    }
  }
  return s;
}

Point2 Embedding::project(std::span<const double> flat) const {
  if (flat.size() != mean.size()) throw DimensionError("embedding: point has the wrong length");
  Point2 out;
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double c = flat[k] - mean[k];
    out.x += c * components(k, 0);
    out.y += c * components(k, 1);
  }
  return out;
}

Embedding pca_embed_points(const Matrix& points) {
  const std::size_t q = points.cols();
  std::vector<double> rows;
  rows.reserve((points.rows() + 1) * q);
  for (std::size_t i = 0; i < points.rows(); ++i)
    for (std::size_t k = 0; k < q; ++k) rows.push_back(points(i, k));
  rows.insert(rows.end(), q, 0.0);
  const PcaFit fit = fit_pca(rows_to_matrix(rows, q));

  Embedding e;
  e.mean = fit.mean;
  e.components = fit.components;
  std::vector<Point2> coords;
  std::vector<double> buf(q);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (std::size_t k = 0; k < q; ++k) buf[k] = points(i, k);
    coords.push_back(e.project(buf));
  }
  e.log_coords.push_back(std::move(coords));
  e.center = e.project(std::vector<double>(q, 0.0));
  finalize_extent(e);
  return e;
}

Embedding pca_embed(std::span<const TraceLog* const> logs, std::size_t m_background, Rng& rng) {
  if (logs.empty()) throw std::invalid_argument("pca_embed: no traces");
  const std::size_t p = logs.front()->metadata().p;
  const std::size_t d = logs.front()->metadata().d;
  const std::size_t q = p * d;
  for (const TraceLog* log : logs) {
    if (log->metadata().p != p || log->metadata().d != d) {
      throw DimensionError("pca_embed: traces have different basis shapes");
    }
  }

  Embedding e;
  const auto& ref_end = logs.front()->back().basis.flat();
  for (const TraceLog* log : logs) {
    e.flipped.push_back(!log->empty() && dot(ref_end, log->back().basis.flat()) < 0.0);
  }

  std::vector<double> rows;
  std::vector<double> neg(q);
  for (std::size_t li = 0; li < logs.size(); ++li) {
    for (const auto& r : logs[li]->records()) {
      if (e.flipped[li]) {
        for (std::size_t k = 0; k < q; ++k) neg[k] = -r.basis.flat()[k];
        append_row(rows, neg);
      } else {
        append_row(rows, r.basis.flat());
      }
    }
  }
  const Matrix background = bind_random(m_background, p, d, rng);
  for (std::size_t i = 0; i < background.rows(); ++i)
    for (std::size_t k = 0; k < q; ++k) rows.push_back(background(i, k));
  const auto theo = get_theo(*logs.front());
  if (theo) append_row(rows, theo->basis.flat());
  rows.insert(rows.end(), q, 0.0);

  const PcaFit fit = fit_pca(rows_to_matrix(rows, q));
  e.mean = fit.mean;
  e.components = fit.components;

  for (std::size_t li = 0; li < logs.size(); ++li) {
    std::vector<Point2> coords;
    coords.reserve(logs[li]->size());
    for (const auto& r : logs[li]->records()) {
      if (e.flipped[li]) {
        for (std::size_t k = 0; k < q; ++k) neg[k] = -r.basis.flat()[k];
        coords.push_back(e.project(neg));
      } else {
        coords.push_back(e.project(r.basis.flat()));
      }
    }
    e.log_coords.push_back(std::move(coords));
  }
  std::vector<double> buf(q);
  for (std::size_t i = 0; i < background.rows(); ++i) {
    for (std::size_t k = 0; k < q; ++k) buf[k] = background(i, k);
    e.background.push_back(e.project(buf));
  }
  if (theo) e.theoretical = e.project(theo->basis.flat());
  e.center = e.project(std::vector<double>(q, 0.0));
  finalize_extent(e);
  return e;
}

Embedding pca_embed(const std::vector<TraceLog>& logs, std::size_t m_background, Rng& rng) {
  std::vector<const TraceLog*> ptrs;
  for (const auto& l : logs) ptrs.push_back(&l);
  return pca_embed(std::span<const TraceLog* const>(ptrs), m_background, rng);
}

std::vector<TourFrame> basis_space_tour(const Matrix& points, std::size_t n_frames, Rng& rng,
                                        double step_angle) {
  const std::size_t q = points.cols();
  if (q < 3) throw DimensionError("basis_space_tour needs points with at least 3 coordinates");
  std::vector<TourFrame> frames;
  if (n_frames == 0) return frames;

  auto emit = [&](const Basis& proj) {
    TourFrame f{proj.matrix(), {}};
    f.coords.reserve(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
      Point2 pt;
      for (std::size_t k = 0; k < q; ++k) {
        pt.x += points(i, k) * proj(k, 0);
        pt.y += points(i, k) * proj(k, 1);
      }
      f.coords.push_back(pt);
    }
    frames.push_back(std::move(f));
  };

  Basis current = random_basis(q, 2, rng);
  emit(current);
  while (frames.size() < n_frames) {
    const Basis target = orient_match(current, random_basis(q, 2, rng));
    const GeodesicPath path = geodesic_path(current, target, step_angle);
    for (std::size_t k = 1; k < path.frames.size() && frames.size() < n_frames; ++k) {
      emit(path.frames[k]);
    }
    current = target;
  }
  return frames;
}

Matrix torus_background(std::size_t p, std::size_t n, Rng& rng) { return bind_random(n, p, 2, rng); }

void write_csv(const SearchSummary& summary, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "method,j,tries,min,q1,median,q3,max,accepted,accepted_index,show_points,last_iteration\n";
  for (const auto& it : summary.iterations) {
    out << summary.method << ',' << it.j << ',' << it.tries << ',' << format_double(it.min) << ','
        << format_double(it.q1) << ',' << format_double(it.median) << ',' << format_double(it.q3)
        << ',' << format_double(it.max) << ',' << (it.accepted ? 1 : 0) << ','
        << (it.accepted_index ? format_double(*it.accepted_index) : std::string("NA")) << ','
        << (it.show_points ? 1 : 0) << ',' << (it.last_iteration ? 1 : 0) << '\n';
  }
}

void write_csv(const InterpSeries& series, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "label,t,index_value,state,j\n";
  for (const auto& pt : series.points) {
    out << series.label << ',' << pt.t << ',' << format_double(pt.index_value) << ','
        << to_string(pt.state) << ',' << pt.j << '\n';
  }
}

void write_csv(const Embedding& e, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "kind,log,record,x,y\n";
  out << "center,NA,NA," << format_double(e.center.x) << ',' << format_double(e.center.y) << '\n';
  out << "radius,NA,NA," << format_double(e.radius) << ",NA\n";
  for (std::size_t li = 0; li < e.log_coords.size(); ++li)
    for (std::size_t k = 0; k < e.log_coords[li].size(); ++k)
      out << "trace," << li + 1 << ',' << k + 1 << ',' << format_double(e.log_coords[li][k].x)
          << ',' << format_double(e.log_coords[li][k].y) << '\n';
  for (std::size_t k = 0; k < e.background.size(); ++k)
    out << "background,NA," << k + 1 << ',' << format_double(e.background[k].x) << ','
        << format_double(e.background[k].y) << '\n';
  if (e.theoretical)
    out << "theoretical,NA,NA," << format_double(e.theoretical->x) << ','
        << format_double(e.theoretical->y) << '\n';
}

}  // namespace ppdiag
