#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ppdiag/linalg.hpp"
#include "ppdiag/manifold.hpp"
#include "ppdiag/rng.hpp"
#include "ppdiag/trace.hpp"

namespace ppdiag {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(Point2 a, Point2 b);

// Per-iteration view of the search effort.
struct SearchIteration {
  int j = 0;
  std::size_t tries = 0;
  std::vector<double> values;  // index values of this iteration's search records, in t order
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::optional<double> accepted_index;
  bool accepted = false;
  bool show_points = false;  // tries <= cutoff
  bool last_iteration = false;
};

struct SearchSummary {
  std::string method;
  std::size_t cutoff = 15;
  std::vector<SearchIteration> iterations;
};

// Type-7 sample quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double prob);

SearchSummary search_summary(const TraceLog& log, std::size_t cutoff = 15);

struct TracePoint {
  std::int64_t t = 0;
  double index_value = 0.0;
  TraceState state = TraceState::interpolation;
  int j = 0;
};

struct InterpSeries {
  std::string label;
  std::vector<TracePoint> points;
};

// Interpolation and new_basis records in t order.
InterpSeries interp_trace(const TraceLog& log);

struct Embedding {
  // One vector per input log, one point per record.
  std::vector<std::vector<Point2>> log_coords;
  std::vector<Point2> background;
  std::optional<Point2> theoretical;
  Point2 center;
  double radius = 0.0;
  std::vector<bool> flipped;
  // Fitted projection: coords = (flat - mean)·components.
  std::vector<double> mean;
  Matrix components;  // (p*d) x 2

  Point2 project(std::span<const double> flat) const;
  Point2 project(const Basis& b) const { return project(b.flat()); }
};

// PCA of every logged basis, m random background bases and the zero matrix.
// A log whose end basis has negative inner product with the first log's end
// basis has all its bases negated before fitting. The first log's theoretical
// best basis, when bound, is included in the fit.
Embedding pca_embed(std::span<const TraceLog* const> logs, std::size_t m_background, Rng& rng);
Embedding pca_embed(const std::vector<TraceLog>& logs, std::size_t m_background, Rng& rng);

// Variant that fits an explicit point set: rows of `points` are flattened
// bases; the zero matrix is added. Used directly by tests and by pca_embed.
Embedding pca_embed_points(const Matrix& points);

struct TourFrame {
  Matrix projection;  // q x 2, orthonormal columns
  std::vector<Point2> coords;
};

// Grand tour over the rows of `points` (q = points.cols() >= 3): geodesic
// interpolation between random 2-frames, n_frames frames in total.
std::vector<TourFrame> basis_space_tour(const Matrix& points, std::size_t n_frames, Rng& rng,
                                        double step_angle = kDefaultStepAngle);

// n random p x 2 bases, flattened one per row.
Matrix torus_background(std::size_t p, std::size_t n, Rng& rng);

// CSV exports, same numeric conventions as traces.
void write_csv(const SearchSummary& summary, const std::filesystem::path& path);
void write_csv(const InterpSeries& series, const std::filesystem::path& path);
void write_csv(const Embedding& embedding, const std::filesystem::path& path);

}  // namespace ppdiag
