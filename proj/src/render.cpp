#include "ppdiag/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

namespace ppdiag {

namespace {

constexpr double kMargin = 0.05;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::string points_attr(std::span<const Point2> pts) {
  std::string s;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k) s += ' ';
    s += num(pts[k].x) + "," + num(pts[k].y);
  }
  return s;
}

// Map a data box onto a pixel box (y grows downward in pixels).
AffineMap fit_box(double x0, double x1, double y0, double y1, double px0, double px1, double py0,
                  double py1) {
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) y1 = y0 + 1.0;
  AffineMap m;
  m.x_scale = (px1 - px0) / (x1 - x0);
  m.x_offset = px0 - m.x_scale * x0;
  m.y_scale = -(py1 - py0) / (y1 - y0);
  m.y_offset = py1 - m.y_scale * y0;
  return m;
}

std::vector<Point2> star_points(Point2 c, double r) {
  std::vector<Point2> pts;
  for (int k = 0; k < 10; ++k) {
    const double rad = (k % 2 == 0) ? r : r * 0.45;
    const double ang = -std::numbers::pi / 2.0 + k * std::numbers::pi / 5.0;
    pts.push_back({c.x + rad * std::cos(ang), c.y + rad * std::sin(ang)});
  }
  return pts;
}

// Deterministic jitter in [-0.5, 0.5).
double jitter(std::size_t k) {
  const double g = 0.6180339887498949 * static_cast<double>(k + 1);
  return g - std::floor(g) - 0.5;
}

}  // namespace

const char* palette_color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

void SvgDocument::open_group(const std::string& attributes) {
  body_ += std::string(static_cast<std::size_t>(depth_ + 1) * 2, ' ') + "<g " + attributes + ">\n";
  ++depth_;
}

void SvgDocument::close_group() {
  if (depth_ == 0) throw std::logic_error("svg: close_group without open_group");
  --depth_;
  body_ += std::string(static_cast<std::size_t>(depth_ + 1) * 2, ' ') + "</g>\n";
}

void SvgDocument::raw(const std::string& element) {
  body_ += std::string(static_cast<std::size_t>(depth_ + 1) * 2, ' ') + element + "\n";
}

void SvgDocument::circle(Point2 c, double r, const std::string& attributes) {
  raw("<circle cx=\"" + num(c.x) + "\" cy=\"" + num(c.y) + "\" r=\"" + num(r) + "\" " + attributes + "/>");
}

void SvgDocument::line(Point2 a, Point2 b, const std::string& attributes) {
  raw("<line x1=\"" + num(a.x) + "\" y1=\"" + num(a.y) + "\" x2=\"" + num(b.x) + "\" y2=\"" +
      num(b.y) + "\" " + attributes + "/>");
}

void SvgDocument::rect(double x, double y, double w, double h, const std::string& attributes) {
  raw("<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
      "\" " + attributes + "/>");
}

void SvgDocument::polyline(std::span<const Point2> pts, const std::string& attributes) {
  raw("<polyline points=\"" + points_attr(pts) + "\" fill=\"none\" " + attributes + "/>");
}

void SvgDocument::polygon(std::span<const Point2> pts, const std::string& attributes) {
  raw("<polygon points=\"" + points_attr(pts) + "\" " + attributes + "/>");
}

void SvgDocument::text(Point2 at, const std::string& content, const std::string& attributes) {
  raw("<text x=\"" + num(at.x) + "\" y=\"" + num(at.y) + "\" " + attributes + ">" +
      xml_escape(content) + "</text>");
}

std::string SvgDocument::str() const {
  if (depth_ != 0) throw std::logic_error("svg: unbalanced groups");
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(width_) +
       "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
       "\" font-family=\"sans-serif\">\n";
  s += "  <rect x=\"0\" y=\"0\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
       "\" fill=\"white\"/>\n";
  s += body_;
  s += "</svg>\n";
  return s;
}

void SvgDocument::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << str();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string panel_attributes(const AffineMap& m) {
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "class=\"panel\" data-x-scale=\"%.17g\" data-x-offset=\"%.17g\" "
                "data-y-scale=\"%.17g\" data-y-offset=\"%.17g\"",
                m.x_scale, m.x_offset, m.y_scale, m.y_offset);
  return buf;
}

std::string frame_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.svg", index);
  return buf;
}

void render_search(const SearchSummary& summary, const std::filesystem::path& path) {
  SvgDocument svg;
  const double left = kCanvasWidth * kMargin + 40.0;
  const double right = kCanvasWidth * (1.0 - kMargin);
  const double top = kCanvasHeight * kMargin;
  const double bottom = kCanvasHeight * (1.0 - kMargin) - 30.0;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& it : summary.iterations) {
    if (!it.values.empty()) {
      lo = std::min(lo, it.min);
      hi = std::max(hi, it.max);
    }
    if (it.accepted_index) {
      lo = std::min(lo, *it.accepted_index);
      hi = std::max(hi, *it.accepted_index);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  const double pad = (hi - lo) * 0.05 + 1e-12;
  const double groups = static_cast<double>(std::max<std::size_t>(summary.iterations.size(), 1));
  const AffineMap map = fit_box(0.5, groups + 0.5, lo - pad, hi + pad, left, right, top, bottom);
  const double slot = map.x_scale;

  svg.text({kCanvasWidth / 2.0, top - 8.0}, "Search summary: " + summary.method,
           "text-anchor=\"middle\" font-size=\"14\"");
  svg.open_group(panel_attributes(map));
  svg.line(map(0.5, lo - pad), map(groups + 0.5, lo - pad), "class=\"axis\" stroke=\"black\"");
  svg.line(map(0.5, lo - pad), map(0.5, hi + pad), "class=\"axis\" stroke=\"black\"");
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    const Point2 at = map(0.5, v);
    svg.text({at.x - 4.0, at.y + 4.0}, num(v), "class=\"tick\" text-anchor=\"end\" font-size=\"10\"");
  }

  std::vector<Point2> accepted;
  for (std::size_t g = 0; g < summary.iterations.size(); ++g) {
    const auto& it = summary.iterations[g];
    const double x = static_cast<double>(g + 1);
    const char* colour = it.last_iteration ? kGrey : palette_color(0);
    svg.open_group("class=\"iteration\" data-j=\"" + std::to_string(it.j) + "\"");
    if (!it.values.empty()) {
      if (it.show_points) {
        for (std::size_t k = 0; k < it.values.size(); ++k) {
          const Point2 at = map(x + 0.5 * jitter(k), it.values[k]);
          svg.circle(at, 2.0, std::string("class=\"try\" fill=\"") + colour + "\" fill-opacity=\"0.6\"");
        }
      } else {
        const Point2 q1 = map(x, it.q1);
        const Point2 q3 = map(x, it.q3);
        const double w = slot * 0.5;
        svg.line(map(x, it.min), q1, std::string("class=\"whisker\" stroke=\"") + colour + "\"");
        svg.line(q3, map(x, it.max), std::string("class=\"whisker\" stroke=\"") + colour + "\"");
        svg.rect(q3.x - w / 2.0, q3.y, w, std::max(q1.y - q3.y, 0.5),
                 std::string("class=\"box\" fill=\"none\" stroke=\"") + colour + "\"");
        const Point2 med = map(x, it.median);
        svg.line({med.x - w / 2.0, med.y}, {med.x + w / 2.0, med.y},
                 std::string("class=\"median\" stroke=\"") + colour + "\" stroke-width=\"2\"");
      }
    }
    // An iteration that found nothing contributes its best try to the path.
    if (it.accepted_index) {
      const Point2 at = map(x, *it.accepted_index);
      accepted.push_back(at);
      svg.circle(at, 4.0, std::string("class=\"accepted\" fill=\"") + colour + "\"");
    } else if (!it.values.empty()) {
      const Point2 at = map(x, it.max);
      accepted.push_back(at);
      svg.circle(at, 4.0, std::string("class=\"best-try\" fill=\"") + colour + "\"");
    }
    svg.text({map(x, 0.0).x, bottom + 16.0}, std::to_string(it.tries),
             "class=\"tries\" text-anchor=\"middle\" font-size=\"10\"");
    svg.text({map(x, 0.0).x, bottom + 28.0}, std::to_string(it.j),
             "class=\"iteration-label\" text-anchor=\"middle\" font-size=\"10\"");
    svg.close_group();
  }
  svg.polyline(accepted, std::string("class=\"accepted-path\" stroke=\"") + palette_color(0) + "\"");
  svg.close_group();
  svg.save(path);
}

void render_trace(std::span<const InterpSeries> series, const std::filesystem::path& path) {
  SvgDocument svg;
  const std::size_t panels = std::max<std::size_t>(series.size(), 1);
  const double outer_left = kCanvasWidth * kMargin;
  const double outer_right = kCanvasWidth * (1.0 - kMargin);
  const double top = kCanvasHeight * kMargin + 20.0;
  const double bottom = kCanvasHeight * (1.0 - kMargin) - 20.0;
  const double panel_w = (outer_right - outer_left) / static_cast<double>(panels);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series)
    for (const auto& pt : s.points) {
      lo = std::min(lo, pt.index_value);
      hi = std::max(hi, pt.index_value);
    }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  const double pad = (hi - lo) * 0.05 + 1e-12;

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::int64_t max_t = 1;
    for (const auto& pt : s.points) max_t = std::max(max_t, pt.t);
    const double px0 = outer_left + panel_w * static_cast<double>(k) + 40.0;
    const double px1 = outer_left + panel_w * static_cast<double>(k + 1) - 10.0;
    const AffineMap map = fit_box(1.0, static_cast<double>(max_t), lo - pad, hi + pad, px0, px1, top, bottom);
    const char* colour = palette_color(k);
    svg.open_group(panel_attributes(map) + " data-label=\"" + xml_escape(s.label) +
                   "\" data-t-min=\"1\" data-t-max=\"" + std::to_string(max_t) + "\"");
    svg.line(map(1.0, lo - pad), map(static_cast<double>(max_t), lo - pad), "class=\"axis\" stroke=\"black\"");
    svg.line(map(1.0, lo - pad), map(1.0, hi + pad), "class=\"axis\" stroke=\"black\"");
    svg.text({(px0 + px1) / 2.0, top - 8.0}, s.label, "text-anchor=\"middle\" font-size=\"13\"");
    svg.text({(px0 + px1) / 2.0, bottom + 16.0}, "time", "text-anchor=\"middle\" font-size=\"10\"");

    std::vector<Point2> interp;
    for (const auto& pt : s.points)
      if (pt.state == TraceState::interpolation) interp.push_back(map(static_cast<double>(pt.t), pt.index_value));
    svg.polyline(interp, std::string("class=\"interp\" stroke=\"") + colour + "\" stroke-width=\"1.5\"");
    for (const auto& pt : s.points) {
      if (pt.state != TraceState::new_basis) continue;
      svg.circle(map(static_cast<double>(pt.t), pt.index_value), 3.5,
                 std::string("class=\"anchor\" fill=\"") + colour + "\"");
    }
    svg.close_group();
  }
  svg.save(path);
}

namespace {

void draw_embedding(SvgDocument& svg, const Embedding& e, std::span<const TraceLog* const> logs,
                    const EmbeddingOptions& opt, std::int64_t t_limit) {
  const double side = std::min(kCanvasWidth, kCanvasHeight) * (1.0 - 2.0 * kMargin);
  const double cx = kCanvasWidth / 2.0;
  const double cy = kCanvasHeight / 2.0;
  const double extent = std::max(e.radius, 1e-12) * 1.05;
  const AffineMap map = fit_box(e.center.x - extent, e.center.x + extent, e.center.y - extent,
                                e.center.y + extent, cx - side / 2.0, cx + side / 2.0,
                                cy - side / 2.0, cy + side / 2.0);
  auto px = [&](Point2 p) { return map(p.x, p.y); };

  svg.open_group(panel_attributes(map) + " data-center-x=\"" + format_double(e.center.x) +
                 "\" data-center-y=\"" + format_double(e.center.y) + "\" data-radius=\"" +
                 format_double(e.radius) + "\"");
  svg.circle(px(e.center), e.radius * map.x_scale,
             std::string("class=\"space\" fill=\"none\" stroke=\"") + kGrey + "\"");
  svg.open_group("class=\"background\"");
  for (const auto& pt : e.background)
    svg.circle(px(pt), 1.0, std::string("fill=\"") + kGrey + "\" fill-opacity=\"0.35\"");
  svg.close_group();

  for (std::size_t li = 0; li < logs.size() && li < e.log_coords.size(); ++li) {
    const auto& recs = logs[li]->records();
    const auto& coords = e.log_coords[li];
    const char* colour = palette_color(li);
    const std::string label = li < opt.labels.size() ? opt.labels[li] : (recs.empty() ? "" : recs.front().method);
    svg.open_group("class=\"trace\" data-label=\"" + xml_escape(label) + "\" data-flipped=\"" +
                   (e.flipped[li] ? "1" : "0") + "\"");

    if (opt.details) {
      for (std::size_t k = 0; k < recs.size(); ++k) {
        if (recs[k].t > t_limit) break;
        if (is_search_state(recs[k].state)) {
          svg.circle(px(coords[k]), 1.5, std::string("class=\"search\" fill=\"") + colour + "\" fill-opacity=\"0.3\"");
        } else if (recs[k].state == TraceState::new_basis) {
          svg.circle(px(coords[k]), 2.5, std::string("class=\"anchor\" fill=\"") + colour + "\" fill-opacity=\"0.6\"");
        }
      }
    }

    // Interpolation path: start, then every interpolation frame.
    std::vector<std::size_t> path_idx;
    for (std::size_t k = 0; k < recs.size(); ++k) {
      if (recs[k].t > t_limit) break;
      if (recs[k].state == TraceState::start || recs[k].state == TraceState::interpolation) path_idx.push_back(k);
    }
    const double segs = static_cast<double>(std::max<std::size_t>(path_idx.size(), 2) - 1);
    for (std::size_t s = 1; s < path_idx.size(); ++s) {
      const double opacity = 0.15 + 0.85 * static_cast<double>(s) / segs;
      svg.line(px(coords[path_idx[s - 1]]), px(coords[path_idx[s]]),
               std::string("class=\"interp-segment\" stroke=\"") + colour + "\" stroke-width=\"1.5\" stroke-opacity=\"" +
                   num(opacity) + "\"");
    }

    if (!recs.empty() && recs.front().t <= t_limit) {
      const Point2 s = px(coords.front());
      svg.rect(s.x - 4.0, s.y - 4.0, 8.0, 8.0, std::string("class=\"start\" fill=\"") + colour + "\"");
    }
    const std::int64_t first_t = recs.empty() ? 0 : recs.front().t;
    for (const auto& pair : get_interrupt(*logs[li])) {
      if (pair.target.t > t_limit || pair.last_interpolation.t > t_limit) continue;
      svg.line(px(coords[static_cast<std::size_t>(pair.last_interpolation.t - first_t)]),
               px(coords[static_cast<std::size_t>(pair.target.t - first_t)]),
               std::string("class=\"interrupt\" stroke=\"") + colour + "\" stroke-dasharray=\"4,3\"");
    }
    if (!recs.empty() && recs.back().t <= t_limit) {
      svg.circle(px(coords.back()), 6.0, std::string("class=\"end\" fill=\"") + colour + "\" stroke=\"black\"");
    }
    svg.text({kCanvasWidth * kMargin, kCanvasHeight * kMargin + 16.0 * static_cast<double>(li + 1)}, label,
             std::string("class=\"legend\" fill=\"") + colour + "\" font-size=\"12\"");
    svg.close_group();
  }

  if (e.theoretical) {
    svg.polygon(star_points(px(*e.theoretical), 8.0), "class=\"theoretical\" fill=\"black\"");
  }
  svg.close_group();
}

}  // namespace

std::vector<std::filesystem::path> render_embedding(const Embedding& embedding,
                                                    std::span<const TraceLog* const> logs,
                                                    const EmbeddingOptions& options,
                                                    const std::filesystem::path& path) {
  std::vector<std::filesystem::path> written;
  if (!options.animate) {
    SvgDocument svg;
    draw_embedding(svg, embedding, logs, options, std::numeric_limits<std::int64_t>::max());
    svg.save(path);
    written.push_back(path);
    return written;
  }
  if (options.checkpoints == 0) throw std::invalid_argument("render_embedding: need at least one checkpoint");
  std::int64_t max_t = 1;
  for (const TraceLog* log : logs)
    if (!log->empty()) max_t = std::max(max_t, log->back().t);
  std::filesystem::create_directories(path);
  for (std::size_t k = 1; k <= options.checkpoints; ++k) {
    const auto limit = static_cast<std::int64_t>(
        std::ceil(static_cast<double>(max_t) * static_cast<double>(k) / static_cast<double>(options.checkpoints)));
    SvgDocument svg;
    draw_embedding(svg, embedding, logs, options, limit);
    const auto file = path / frame_file_name(k);
    svg.save(file);
    written.push_back(file);
  }
  return written;
}

std::vector<std::filesystem::path> render_space_tour(std::span<const TourFrame> frames,
                                                     std::span<const int> group,
                                                     const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  std::filesystem::create_directories(dir);
  double extent = 0.0;
  for (const auto& f : frames) {
    if (f.coords.size() != group.size()) throw DimensionError("render_space_tour: group labels do not match points");
    for (const auto& pt : f.coords) extent = std::max(extent, std::hypot(pt.x, pt.y));
  }
  extent = std::max(extent, 1e-12) * 1.05;
  const double side = std::min(kCanvasWidth, kCanvasHeight) * (1.0 - 2.0 * kMargin);
  const double cx = kCanvasWidth / 2.0;
  const double cy = kCanvasHeight / 2.0;
  const AffineMap map = fit_box(-extent, extent, -extent, extent, cx - side / 2.0, cx + side / 2.0,
                                cy - side / 2.0, cy + side / 2.0);

  int max_group = 0;
  for (int g : group) max_group = std::max(max_group, g);

  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const auto& f = frames[fi];
    SvgDocument svg;
    svg.open_group(panel_attributes(map) + " data-frame=\"" + std::to_string(fi + 1) + "\"");
    svg.open_group("class=\"background\"");
    for (std::size_t i = 0; i < f.coords.size(); ++i)
      if (group[i] == 0) svg.circle(map(f.coords[i].x, f.coords[i].y), 1.2, std::string("fill=\"") + kGrey + "\" fill-opacity=\"0.4\"");
    svg.close_group();
    for (int g = 1; g <= max_group; ++g) {
      std::vector<Point2> pts;
      for (std::size_t i = 0; i < f.coords.size(); ++i)
        if (group[i] == g) pts.push_back(map(f.coords[i].x, f.coords[i].y));
      if (pts.empty()) continue;
      const char* colour = palette_color(static_cast<std::size_t>(g - 1));
      svg.open_group("class=\"path\" data-group=\"" + std::to_string(g) + "\"");
      svg.polyline(pts, std::string("stroke=\"") + colour + "\" stroke-width=\"1.2\"");
      svg.circle(pts.back(), 5.0, std::string("class=\"end\" fill=\"") + colour + "\"");
      svg.close_group();
    }
    svg.close_group();
    const auto file = dir / frame_file_name(fi + 1);
    svg.save(file);
    written.push_back(file);
  }
  return written;
}

}  // namespace ppdiag
