#include "doctest.h"

#include <cmath>
#include <fstream>
#include <map>

#include "ppdiag/optimizers.hpp"
#include "ppdiag/simdata.hpp"
#include "ppdiag/trace.hpp"
#include "support.hpp"

using namespace ppdiag;
using testsupport::TempDir;

namespace {

TraceLog synthetic_log(std::size_t n, std::size_t p, std::size_t d, std::uint64_t seed) {
  TraceMetadata meta;
  meta.p = p;
  meta.d = d;
  meta.n = 123;
  meta.index_name = "holes";
  meta.seed = seed;
  meta.config = {{"alpha0", 0.5}, {"method", "crs"}};
  TraceLog log(meta);
  Rng rng(seed);
  const TraceState states[] = {TraceState::start, TraceState::random_search, TraceState::new_basis,
                               TraceState::interpolation, TraceState::polish_search, TraceState::final};
  for (std::size_t k = 0; k < n; ++k) {
    TraceRecord r;
    r.basis = random_basis(p, d, rng);
    r.index_value = rng.normal() * 1e-3 + 1.0 / 3.0;
    r.state = states[k % 6];
    r.j = static_cast<int>(k / 7) + 1;
    r.l = static_cast<int>(k % 7) + 1;
    r.method = k % 2 ? "crs" : "polish";
    r.alpha = 0.5 * std::pow(0.99, static_cast<double>(k));
    log.record(r);
  }
  return log;
}

TraceRecord simple(double value, TraceState state = TraceState::random_search, int j = 1) {
  TraceRecord r;
  r.basis = Basis::axes(3, {0});
  r.index_value = value;
  r.state = state;
  r.j = j;
  r.method = "crs";
  return r;
}

}  // namespace

TEST_CASE("record assigns t and rejects bad values") {
  TraceLog log;
  CHECK(log.record(simple(0.1)).t == 1);
  CHECK(log.record(simple(0.2)).t == 2);
  CHECK(log.records()[0].index_value == 0.1);
  CHECK_THROWS_AS(log.record(simple(NAN)), TraceError);
  CHECK_THROWS_AS(log.record(simple(INFINITY)), TraceError);
  TraceRecord wrong = simple(0.3);
  wrong.basis = Basis::axes(4, {0});
  CHECK_THROWS_AS(log.record(wrong), TraceError);
  CHECK(log.size() == 2);
}

TEST_CASE("accessors") {
  TraceLog log;
  log.record(simple(0.1, TraceState::start));
  log.record(simple(0.3));
  log.record(simple(0.2));
  CHECK(get_best(log).t == 2);
  CHECK(get_start(log).t == 1);
  log.record(simple(0.3, TraceState::new_basis));
  CHECK(get_best(log).t == 2);
  CHECK(get_anchor(log).size() == 1);
  CHECK(get_interp(log).empty());
  CHECK(get_theo(log) == std::nullopt);

  const Matrix m = get_basis_matrix(log);
  CHECK(m.rows() == log.size());
  CHECK(m.cols() == 3);

  TraceLog empty;
  CHECK_THROWS_AS(get_start(empty), TraceError);
  CHECK(get_search(empty).empty());
}

TEST_CASE("search counts agree with a direct grouping") {
  const Dataset ds = boa6(1000, 1);
  OptimizerConfig cfg;
  cfg.d = 2;
  cfg.seed = 4;
  const RunResult r = crs(ds.values, holes_index(), cfg);
  std::map<int, std::size_t> direct;
  for (const auto& rec : r.trace.records())
    if (rec.state == TraceState::random_search) ++direct[rec.j];
  const auto counts = get_search_count(r.trace);
  CHECK(counts.size() == direct.size());
  for (const auto& [j, c] : counts) CHECK(direct[j] == c);
}

TEST_CASE("interruption pairs appear only with interruption on") {
  const Dataset ds = boa6(1000, 1);
  std::size_t pairs_on = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    OptimizerConfig cfg;
    cfg.d = 2;
    cfg.seed = seed;
    pairs_on += get_interrupt(crs(ds.values, holes_index(), cfg).trace).size();
    cfg.interrupt = false;
    CHECK(get_interrupt(crs(ds.values, holes_index(), cfg).trace).empty());
  }
  CHECK(pairs_on > 0);
}

TEST_CASE("last interpolation per iteration") {
  TraceLog log;
  log.record(simple(0.1, TraceState::interpolation, 2));
  log.record(simple(0.2, TraceState::interpolation, 2));
  log.record(simple(0.4, TraceState::interpolation, 3));
  const auto last = get_interp_last(log);
  REQUIRE(last.size() == 2);
  CHECK(last[0].t == 2);
  CHECK(last[1].t == 3);
}

TEST_CASE("theoretical and random background binding") {
  TraceLog log;
  log.record(simple(0.1, TraceState::start));
  bind_theoretical(log, Basis::axes(3, {1}), 0.9);
  REQUIRE(get_theo(log));
  CHECK(get_theo(log)->index_value == 0.9);
  CHECK_THROWS(bind_theoretical(log, Basis::axes(4, {1}), 0.9));
  Rng rng(3);
  const Matrix bg = bind_random(50, 4, 2, rng);
  CHECK(bg.rows() == 50);
  CHECK(bg.cols() == 8);
}

TEST_CASE("CSV and JSONL round trips are exact") {
  TempDir dir("trace");
  const TraceLog log = synthetic_log(500, 4, 2, 8);
  for (const char* name : {"t.csv", "t.jsonl"}) {
    serialize_trace(log, dir / name);
    const TraceLog back = deserialize_trace(dir / name);
    CHECK(back == log);
    CHECK(back.metadata() == log.metadata());
  }
  TraceLog with_theo = log;
  bind_theoretical(with_theo, Basis::axes(4, {0, 2}), 0.75);
  serialize_trace(with_theo, dir / "theo.csv");
  CHECK(deserialize_trace(dir / "theo.csv") == with_theo);
}

TEST_CASE("CSV header has the fixed column order") {
  TempDir dir("header");
  serialize_trace(synthetic_log(3, 3, 2, 1), dir / "h.csv");
  std::ifstream in(dir / "h.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,method,state,j,l,alpha,index_value,basis_1,basis_2,basis_3,basis_4,basis_5,basis_6");
}

TEST_CASE("flattening is column-major") {
  TempDir dir("flat");
  TraceLog log;
  TraceRecord r = simple(0.5);
  const double h = 1.0 / std::sqrt(2.0);
  r.basis = Basis::from_orthonormal(Matrix(3, 2, std::vector<double>{h, h, 0, 0, 0, 1}));
  log.record(r);
  serialize_trace(log, dir / "f.csv");
  std::ifstream in(dir / "f.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(row.substr(row.rfind(",0.5,") + 5) ==
        format_double(h) + "," + format_double(h) + ",0,0,0,1");
}

TEST_CASE("malformed input reports the line") {
  TempDir dir("bad");
  serialize_trace(synthetic_log(10, 3, 1, 2), dir / "b.csv");
  std::string text = testsupport::read_file(dir / "b.csv");
  // Corrupt the index value on data row 4 (file line 5).
  std::size_t pos = 0;
  for (int k = 0; k < 4; ++k) pos = text.find('\n', pos) + 1;
  const auto comma = text.find(",0.33", pos);
  text.replace(comma + 1, 4, "abcd");
  {
    std::ofstream out(dir / "b.csv", std::ios::binary);
    out << text;
  }
  try {
    deserialize_trace(dir / "b.csv");
    FAIL("expected a parse error");
  } catch (const TraceParseError& e) {
    CHECK(e.line() == 5);
  }

  std::filesystem::remove(metadata_path_for(dir / "b.csv"));
  CHECK_THROWS_AS(deserialize_trace(dir / "b.csv"), TraceError);
}

TEST_CASE("format_double keeps every bit") {
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.normal() * std::pow(10.0, static_cast<double>(k % 30) - 15.0);
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("append renumbers t") {
  TraceLog a, b;
  a.record(simple(0.1));
  b.record(simple(0.2));
  b.record(simple(0.3));
  append(a, b);
  REQUIRE(a.size() == 3);
  CHECK(a.records()[2].t == 3);
  CHECK(a.records()[2].index_value == 0.3);
}

TEST_CASE("trace states round trip through strings") {
  for (TraceState s : {TraceState::random_search, TraceState::new_basis, TraceState::interpolation,
                       TraceState::direction_search, TraceState::best_direction_search,
                       TraceState::best_line_search, TraceState::polish_search, TraceState::start,
                       TraceState::final})
    CHECK(trace_state_from_string(to_string(s)) == s);
  CHECK_THROWS(trace_state_from_string("sideways"));
}
