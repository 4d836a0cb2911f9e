#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ppdiag/diagnostics.hpp"
#include "ppdiag/trace.hpp"

namespace ppdiag {

inline constexpr double kCanvasWidth = 800.0;
inline constexpr double kCanvasHeight = 600.0;

// Distinguishable hues for traces; grey is reserved for background points and
// terminal iterations.
inline constexpr const char* kPalette[] = {"#1b9e77", "#a6611a", "#7570b3", "#d95f02"};
inline constexpr const char* kGrey = "#9e9e9e";

const char* palette_color(std::size_t i);

// Affine data-to-pixel map: px = x_scale·x + x_offset, py = y_scale·y + y_offset.
// Every plotting panel carries these four numbers as data-* attributes.
struct AffineMap {
  double x_scale = 1.0;
  double x_offset = 0.0;
  double y_scale = 1.0;
  double y_offset = 0.0;

  Point2 operator()(double x, double y) const { return {x_scale * x + x_offset, y_scale * y + y_offset}; }
  Point2 inverse(double px, double py) const {
    return {(px - x_offset) / x_scale, (py - y_offset) / y_scale};
  }
};

// Minimal SVG 1.1 document builder.
class SvgDocument {
 public:
  SvgDocument(double width = kCanvasWidth, double height = kCanvasHeight);

  void open_group(const std::string& attributes);
  void close_group();
  void raw(const std::string& element);

  void circle(Point2 c, double r, const std::string& attributes);
  void line(Point2 a, Point2 b, const std::string& attributes);
  void rect(double x, double y, double w, double h, const std::string& attributes);
  void polyline(std::span<const Point2> pts, const std::string& attributes);
  void polygon(std::span<const Point2> pts, const std::string& attributes);
  void text(Point2 at, const std::string& content, const std::string& attributes);

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  double width_;
  double height_;
  std::string body_;
  int depth_ = 0;
};

std::string xml_escape(const std::string& s);
std::string panel_attributes(const AffineMap& map);

std::string frame_file_name(std::size_t index);  // frame_000001.svg for index 1

void render_search(const SearchSummary& summary, const std::filesystem::path& path);

// One side-by-side panel per series.
void render_trace(std::span<const InterpSeries> series, const std::filesystem::path& path);

struct EmbeddingOptions {
  bool details = false;
  bool animate = false;
  std::size_t checkpoints = 6;
  std::vector<std::string> labels;  // legend entry per trace
};

// Static plot at `path`, or, with options.animate, a directory `path` of
// frame files each revealing records up to a t checkpoint. Returns the files
// written.
std::vector<std::filesystem::path> render_embedding(const Embedding& embedding,
                                                    std::span<const TraceLog* const> logs,
                                                    const EmbeddingOptions& options,
                                                    const std::filesystem::path& path);

// group[i] == 0 marks background point i (grey); points sharing a positive
// group form a path drawn in that group's colour.
std::vector<std::filesystem::path> render_space_tour(std::span<const TourFrame> frames,
                                                     std::span<const int> group,
                                                     const std::filesystem::path& dir);

}  // namespace ppdiag
