#include "ppdiag/trace.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace ppdiag {

namespace {

constexpr std::array<std::pair<TraceState, const char*>, 9> kStateNames = {{
    {TraceState::random_search, "random_search"},
    {TraceState::new_basis, "new_basis"},
    {TraceState::interpolation, "interpolation"},
    {TraceState::direction_search, "direction_search"},
    {TraceState::best_direction_search, "best_direction_search"},
    {TraceState::best_line_search, "best_line_search"},
    {TraceState::polish_search, "polish_search"},
    {TraceState::start, "start"},
    {TraceState::final, "final"},
}};

std::vector<TraceRecord> filter(const TraceLog& log, auto pred) {
  std::vector<TraceRecord> out;
  for (const auto& r : log.records())
    if (pred(r)) out.push_back(r);
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& file, std::size_t line,
                    const char* field) {
  if (s.empty()) throw TraceParseError(file, line, std::string("empty ") + field);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw TraceParseError(file, line, std::string("bad number for ") + field + ": '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& s, const std::string& file, std::size_t line,
                    const char* field) {
  if (s.empty()) throw TraceParseError(file, line, std::string("empty ") + field);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw TraceParseError(file, line, std::string("bad integer for ") + field + ": '" + s + "'");
  }
  return v;
}

std::vector<std::string> csv_header(std::size_t pd) {
  std::vector<std::string> h = {"t", "method", "state", "j", "l", "alpha", "index_value"};
  for (std::size_t k = 1; k <= pd; ++k) h.push_back("basis_" + std::to_string(k));
  return h;
}

nlohmann::json basis_to_json(const Basis& b) { return b.flat(); }

Basis basis_from_flat(std::vector<double> flat, std::size_t p, std::size_t d) {
  return Basis::from_orthonormal(Matrix(p, d, std::move(flat)));
}

}  // namespace

std::string to_string(TraceState state) {
  for (const auto& [s, name] : kStateNames)
    if (s == state) return name;
  return "unknown";
}

TraceState trace_state_from_string(const std::string& s) {
  for (const auto& [state, name] : kStateNames)
    if (s == name) return state;
  throw std::invalid_argument("unknown trace state '" + s + "'");
}

bool is_search_state(TraceState state) {
  switch (state) {
    case TraceState::random_search:
    case TraceState::direction_search:
    case TraceState::best_direction_search:
    case TraceState::best_line_search:
    case TraceState::polish_search:
      return true;
    default:
      return false;
  }
}

const TraceRecord& TraceLog::record(TraceRecord r) {
  if (!std::isfinite(r.index_value)) {
    throw TraceError("trace record with non-finite index value rejected");
  }
  if (metadata_.p != 0 && (r.basis.p() != metadata_.p || r.basis.d() != metadata_.d)) {
    throw TraceError("trace record basis is " + std::to_string(r.basis.p()) + "x" +
                     std::to_string(r.basis.d()) + ", log expects " +
                     std::to_string(metadata_.p) + "x" + std::to_string(metadata_.d));
  }
  if (metadata_.p == 0) {
    metadata_.p = r.basis.p();
    metadata_.d = r.basis.d();
  }
  r.t = records_.empty() ? 1 : records_.back().t + 1;
  records_.push_back(std::move(r));
  return records_.back();
}

void append(TraceLog& dst, const TraceLog& src) {
  for (const auto& r : src.records()) dst.record(r);
}

const TraceRecord& get_start(const TraceLog& log) {
  if (log.empty()) throw TraceError("get_start: empty trace");
  for (const auto& r : log.records())
    if (r.state == TraceState::start) return r;
  return log.records().front();
}

const TraceRecord& get_best(const TraceLog& log) {
  if (log.empty()) throw TraceError("get_best: empty trace");
  const TraceRecord* best = &log.records().front();
  for (const auto& r : log.records())
    if (r.index_value > best->index_value) best = &r;
  return *best;
}

std::vector<TraceRecord> get_anchor(const TraceLog& log) {
  return filter(log, [](const TraceRecord& r) { return r.state == TraceState::new_basis; });
}

std::vector<TraceRecord> get_interp(const TraceLog& log) {
  return filter(log, [](const TraceRecord& r) { return r.state == TraceState::interpolation; });
}

std::vector<TraceRecord> get_interp_last(const TraceLog& log) {
  std::vector<TraceRecord> out;
  for (const auto& r : log.records()) {
    if (r.state != TraceState::interpolation) continue;
    if (!out.empty() && out.back().j == r.j && out.back().method == r.method) {
      out.back() = r;
    } else {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<TraceRecord> get_search(const TraceLog& log) {
  return filter(log, [](const TraceRecord& r) { return is_search_state(r.state); });
}

std::vector<std::pair<int, std::size_t>> get_search_count(const TraceLog& log) {
  std::map<int, std::size_t> counts;
  for (const auto& r : log.records())
    if (is_search_state(r.state)) ++counts[r.j];
  return {counts.begin(), counts.end()};
}

std::vector<InterruptPair> get_interrupt(const TraceLog& log) {
  std::vector<InterruptPair> out;
  const auto anchors = get_anchor(log);
  const auto lasts = get_interp_last(log);
  for (const auto& last : lasts) {
    for (const auto& a : anchors) {
      if (a.j != last.j || a.method != last.method) continue;
      if (max_abs_diff(a.basis.matrix(), last.basis.matrix()) > 1e-12) {
        out.push_back({last, a});
      }
      break;
    }
  }
  return out;
}

std::vector<TraceRecord> get_dir_search(const TraceLog& log) {
  return filter(log, [](const TraceRecord& r) {
    return r.state == TraceState::direction_search || r.state == TraceState::best_direction_search;
  });
}

Matrix get_basis_matrix(const TraceLog& log) {
  const std::size_t pd = log.metadata().p * log.metadata().d;
  Matrix m(log.size(), pd);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& flat = log.records()[i].basis.flat();
    for (std::size_t k = 0; k < pd; ++k) m(i, k) = flat[k];
  }
  return m;
}

std::optional<TheoreticalBest> get_theo(const TraceLog& log) { return log.metadata().theoretical; }

void bind_theoretical(TraceLog& log, const Basis& basis, double index_value) {
  if (log.metadata().p != 0 && (basis.p() != log.metadata().p || basis.d() != log.metadata().d)) {
    throw DimensionError("bind_theoretical: basis shape does not match the trace");
  }
  log.metadata().theoretical = TheoreticalBest{basis, index_value};
}

Matrix bind_random(std::size_t m, std::size_t p, std::size_t d, Rng& rng) {
  Matrix out(m, p * d);
  for (std::size_t i = 0; i < m; ++i) {
    const Basis b = random_basis(p, d, rng);
    for (std::size_t k = 0; k < p * d; ++k) out(i, k) = b.flat()[k];
  }
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json metadata_to_json(const TraceMetadata& meta) {
  nlohmann::json j = {
      {"p", meta.p},
      {"d", meta.d},
      {"n", meta.n},
      {"index", meta.index_name},
      {"seed", meta.seed},
      {"config", meta.config},
      {"basis_layout", "column-major: basis_k = A[(k-1) % p, (k-1) / p]"},
  };
  if (meta.theoretical) {
    j["theoretical"] = {{"basis", basis_to_json(meta.theoretical->basis)},
                        {"index_value", meta.theoretical->index_value}};
  }
  return j;
}

TraceMetadata metadata_from_json(const nlohmann::json& j) {
  TraceMetadata meta;
  meta.p = j.at("p").get<std::size_t>();
  meta.d = j.at("d").get<std::size_t>();
  meta.n = j.value("n", std::size_t{0});
  meta.index_name = j.value("index", std::string{});
  meta.seed = j.value("seed", std::uint64_t{0});
  meta.config = j.value("config", nlohmann::json::object());
  if (j.contains("theoretical")) {
    const auto& th = j.at("theoretical");
    meta.theoretical = TheoreticalBest{
        basis_from_flat(th.at("basis").get<std::vector<double>>(), meta.p, meta.d),
        th.at("index_value").get<double>()};
  }
  return meta;
}

TraceFormat trace_format_for(const std::filesystem::path& path) {
  return path.extension() == ".jsonl" ? TraceFormat::jsonl : TraceFormat::csv;
}

std::filesystem::path metadata_path_for(const std::filesystem::path& trace_path) {
  return std::filesystem::path(trace_path.string() + ".meta.json");
}

void serialize_trace(const TraceLog& log, const std::filesystem::path& path) {
  serialize_trace(log, path, trace_format_for(path));
}

void serialize_trace(const TraceLog& log, const std::filesystem::path& path, TraceFormat format) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TraceError("cannot open '" + path.string() + "' for writing");
  const std::size_t pd = log.metadata().p * log.metadata().d;

  if (format == TraceFormat::csv) {
    const auto header = csv_header(pd);
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
    for (const auto& r : log.records()) {
      out << r.t << ',' << r.method << ',' << to_string(r.state) << ',' << r.j << ',' << r.l
          << ',' << format_double(r.alpha) << ',' << format_double(r.index_value);
      for (double x : r.basis.flat()) out << ',' << format_double(x);
      out << '\n';
    }
  } else {
    for (const auto& r : log.records()) {
      nlohmann::json j = {{"t", r.t},         {"method", r.method},
                          {"state", to_string(r.state)},
                          {"j", r.j},         {"l", r.l},
                          {"alpha", r.alpha}, {"index_value", r.index_value},
                          {"basis", basis_to_json(r.basis)}};
      out << j.dump() << '\n';
    }
  }
  if (!out) throw TraceError("write to '" + path.string() + "' failed");

  std::ofstream meta(metadata_path_for(path), std::ios::binary);
  if (!meta) throw TraceError("cannot write trace metadata for '" + path.string() + "'");
  meta << metadata_to_json(log.metadata()).dump(2) << '\n';
}

TraceLog deserialize_trace(const std::filesystem::path& path) {
  const std::string file = path.string();
  std::ifstream meta_in(metadata_path_for(path));
  if (!meta_in) throw TraceError("missing trace metadata sidecar '" + metadata_path_for(path).string() + "'");
  TraceMetadata meta;
  try {
    meta = metadata_from_json(nlohmann::json::parse(meta_in));
  } catch (const nlohmann::json::exception& e) {
    throw TraceParseError(metadata_path_for(path).string(), 1, e.what());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError("cannot open trace '" + file + "'");

  TraceLog log(meta);
  const std::size_t p = meta.p;
  const std::size_t d = meta.d;
  const std::size_t pd = p * d;
  std::string line;
  std::size_t line_no = 0;

  auto push = [&](TraceRecord r, std::size_t at_line) {
    if (!log.records_.empty() && r.t <= log.records_.back().t) {
      throw TraceParseError(file, at_line, "t is not strictly increasing");
    }
    if (!std::isfinite(r.index_value)) throw TraceParseError(file, at_line, "non-finite index value");
    log.records_.push_back(std::move(r));
  };

  if (trace_format_for(path) == TraceFormat::csv) {
    if (!std::getline(in, line)) throw TraceParseError(file, 1, "missing header");
    ++line_no;
    const auto expected = csv_header(pd);
    if (split_csv_line(line) != expected) throw TraceParseError(file, 1, "unexpected header");
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      const auto f = split_csv_line(line);
      if (f.size() != expected.size()) {
        throw TraceParseError(file, line_no, "expected " + std::to_string(expected.size()) +
                                                 " fields, found " + std::to_string(f.size()));
      }
      TraceRecord r;
      r.t = parse_int(f[0], file, line_no, "t");
      r.method = f[1];
      try {
        r.state = trace_state_from_string(f[2]);
      } catch (const std::invalid_argument& e) {
        throw TraceParseError(file, line_no, e.what());
      }
      r.j = static_cast<int>(parse_int(f[3], file, line_no, "j"));
      r.l = static_cast<int>(parse_int(f[4], file, line_no, "l"));
      r.alpha = parse_double(f[5], file, line_no, "alpha");
      r.index_value = parse_double(f[6], file, line_no, "index_value");
      std::vector<double> flat(pd);
      for (std::size_t k = 0; k < pd; ++k) flat[k] = parse_double(f[7 + k], file, line_no, "basis");
      try {
        r.basis = basis_from_flat(std::move(flat), p, d);
      } catch (const std::exception& e) {
        throw TraceParseError(file, line_no, e.what());
      }
      push(std::move(r), line_no);
    }
  } else {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        TraceRecord r;
        r.t = j.at("t").get<std::int64_t>();
        r.method = j.at("method").get<std::string>();
        r.state = trace_state_from_string(j.at("state").get<std::string>());
        r.j = j.at("j").get<int>();
        r.l = j.at("l").get<int>();
        r.alpha = j.at("alpha").get<double>();
        r.index_value = j.at("index_value").get<double>();
        auto flat = j.at("basis").get<std::vector<double>>();
        if (flat.size() != pd) throw std::invalid_argument("basis length mismatch");
        r.basis = basis_from_flat(std::move(flat), p, d);
        push(std::move(r), line_no);
      } catch (const TraceParseError&) {
        throw;
      } catch (const std::exception& e) {
        throw TraceParseError(file, line_no, e.what());
      }
    }
  }
  return log;
}

}  // namespace ppdiag
