#include "ppdiag/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppdiag/diagnostics.hpp"
#include "ppdiag/indexes.hpp"
#include "ppdiag/manifold.hpp"
#include "ppdiag/optimizers.hpp"
#include "ppdiag/render.hpp"
#include "ppdiag/trace.hpp"

namespace ppdiag {

namespace fs = std::filesystem;

namespace {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void report(std::ostream& err, const std::string& kind, const std::string& message) {
  err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

std::uint64_t parse_u64(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size() || s.empty() || s[0] == '-') throw std::invalid_argument("not a seed: '" + s + "'");
  return v;
}

bool wildcard_match(const std::string& pat, const std::string& s) {
  std::size_t p = 0, i = 0, star = std::string::npos, mark = 0;
  while (i < s.size()) {
    if (p < pat.size() && (pat[p] == '?' || pat[p] == s[i])) {
      ++p;
      ++i;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = i;
    } else if (star != std::string::npos) {
      p = star + 1;
      i = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

std::string alpha_tag(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

// Mean of `reps` evaluations; deterministic indexes simply repeat.
double replicate_mean(const IndexFunction& index, const Matrix& data, const Basis& b, int reps,
                      std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0;
  for (int k = 0; k < reps; ++k) sum += evaluate(index, data, b, rng);
  return sum / reps;
}

std::optional<Basis> try_theoretical(const std::string& dataset, std::size_t d) {
  if (dataset.empty()) return std::nullopt;
  try {
    return theoretical_best(dataset_kind_from_string(dataset), d);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

}  // namespace

fs::path resolve_output(const fs::path& p) {
  const char* dir = std::getenv(kOutputDirEnv);
  if (dir == nullptr || *dir == '\0' || p.is_absolute()) return p;
  return fs::path(dir) / p;
}

void write_dataset_csv(const Dataset& data, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  for (std::size_t c = 0; c < data.p(); ++c) out << (c ? "," : "") << data.names[c];
  out << "\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t c = 0; c < data.p(); ++c) out << (c ? "," : "") << format_double(data.values(i, c));
    out << "\n";
  }
}

Dataset read_dataset_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  Dataset ds;
  ds.names = split(line, ',');
  std::vector<double> rows;
  std::size_t n = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != ds.names.size())
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(ds.names.size()) + " fields");
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || c.empty() || !std::isfinite(v))
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + c + "'");
      rows.push_back(v);
    }
    ++n;
  }
  if (n == 0) throw InputError(path.string() + ": no data rows");
  const std::size_t p = ds.names.size();
  ds.values = Matrix(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < p; ++c) ds.values(i, c) = rows[i * p + c];
  return ds;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split(spec, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(parse_u64(part));
      continue;
    }
    const auto lo = parse_u64(part.substr(0, dots));
    const auto hi = parse_u64(part.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("empty seed range '" + part + "'");
    for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  return seeds;
}

std::vector<double> parse_double_list(const std::string& spec) {
  std::vector<double> values;
  for (const auto& part : split(spec, ',')) {
    std::size_t used = 0;
    const double v = std::stod(part, &used);
    if (used != part.size()) throw std::invalid_argument("not a number: '" + part + "'");
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("empty list");
  return values;
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
  const fs::path pat(pattern);
  const fs::path dir = pat.has_parent_path() ? pat.parent_path() : fs::path(".");
  const std::string name = pat.filename().string();
  std::vector<fs::path> hits;
  if (name.find_first_of("*?") == std::string::npos) {
    if (fs::exists(pat)) hits.push_back(pat);
    return hits;
  }
  if (!fs::is_directory(dir)) return hits;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string fname = entry.path().filename().string();
    if (fname.ends_with(".meta.json")) continue;
    if (wildcard_match(name, fname)) hits.push_back(entry.path());
  }
  std::sort(hits.begin(), hits.end());
  return hits;
}

namespace {

struct SimulateArgs {
  std::string dataset = "boa5";
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string out;
};

struct OptimizeArgs {
  std::string data;
  std::string index = "holes";
  std::string method = "crs";
  std::size_t d = 1;
  std::string config;
  std::string trace_out;
  bool polish = false;
  bool no_interrupt = false;
  bool no_orient_check = false;
  std::uint64_t seed = 1;
  double alpha0 = 0.5;
  std::string theoretical;
  bool dump_config = false;
};

struct SweepArgs {
  std::string seeds = "1..20";
  std::string alpha0 = "0.5,0.7";
  std::string methods = "crs,sa";
  std::size_t jobs = 1;
  std::string dataset = "boa6";
  std::string index = "kolmogorov";
  std::size_t d = 1;
  std::size_t n = 1000;
  std::uint64_t data_seed = 1;
  std::string config;
  std::string out = "sweep";
  bool polish = false;
  bool no_orient_check = false;
};

struct DiagnoseArgs {
  std::string traces;
  std::string kind = "search";
  bool details = false;
  bool animate = false;
  std::string out;
  std::size_t background = 1000;
  std::size_t frames = 60;
  std::size_t checkpoints = 6;
  std::size_t cutoff = 15;
  std::uint64_t seed = 1;
};

OptimizerConfig load_config(const std::string& file) {
  if (file.empty()) return {};
  std::ifstream in(file);
  if (!in) throw InputError("cannot open config '" + file + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("config '" + file + "': " + e.what());
  }
  return config_from_json(j);
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const Dataset ds = make_dataset(dataset_kind_from_string(a.dataset), a.n, a.seed);
  const fs::path path = resolve_output(a.out);
  write_dataset_csv(ds, path);
  out << path.string() << "\n";
  return kExitOk;
}

int cmd_optimize(const OptimizeArgs& a, const CLI::App& app, std::ostream& out) {
  OptimizerConfig cfg = load_config(a.config);
  if (app.count("--method") || a.config.empty()) cfg.method = method_from_string(a.method);
  if (app.count("--d") || a.config.empty()) cfg.d = a.d;
  if (app.count("--seed") || a.config.empty()) cfg.seed = a.seed;
  if (app.count("--alpha0")) cfg.alpha0 = a.alpha0;
  if (a.no_interrupt) cfg.interrupt = false;
  if (a.no_orient_check) cfg.orient_check = false;
  cfg.validate();
  if (a.dump_config) {
    out << to_json(cfg).dump(2) << "\n";
    return kExitOk;
  }
  if (a.data.empty()) throw InputError("--data is required");
  if (a.trace_out.empty()) throw InputError("--trace-out is required");

  const Dataset ds = read_dataset_csv(a.data);
  const IndexFunction index = index_by_name(a.index);
  RunResult run = optimize(ds.values, index, cfg);
  if (a.polish) {
    RunResult pol = polish(ds.values, index, ScoredBasis{run.final_basis, run.final_index, run.final_eval_seed}, cfg);
    append(run.trace, pol.trace);
    run.final_basis = pol.final_basis;
    run.final_index = pol.final_index;
  }
  if (auto theo = try_theoretical(a.theoretical, cfg.d); theo && theo->p() == ds.p()) {
    bind_theoretical(run.trace, *theo, replicate_mean(index, ds.values, *theo, 100, cfg.seed));
  }
  const fs::path path = resolve_output(a.trace_out);
  serialize_trace(run.trace, path);
  out << nlohmann::json{{"trace", path.string()},
                        {"start_index", get_start(run.trace).index_value},
                        {"final_index", run.final_index},
                        {"records", run.trace.size()},
                        {"terminated_by", to_string(run.terminated_by)}}
             .dump()
      << "\n";
  return kExitOk;
}

struct SweepRow {
  std::string method;
  double alpha0 = 0.0;
  std::uint64_t seed = 0;
  double start_index = 0.0;
  double final_index = 0.0;
  std::optional<double> theoretical_index;
  std::optional<double> distance;
  std::size_t run_length = 0;
  int iterations = 0;
  std::string terminated_by;
  std::string trace;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const auto seeds = parse_seed_list(a.seeds);
  const auto alphas = parse_double_list(a.alpha0);
  std::vector<Method> methods;
  for (const auto& m : split(a.methods, ',')) methods.push_back(method_from_string(m));
  if (a.jobs == 0) throw std::invalid_argument("--jobs must be at least 1");

  OptimizerConfig base = load_config(a.config);
  base.d = a.d;
  if (a.no_orient_check) base.orient_check = false;
  const DatasetKind kind = dataset_kind_from_string(a.dataset);
  const Dataset ds = make_dataset(kind, a.n, a.data_seed);
  const IndexFunction index = index_by_name(a.index);
  const auto theo = try_theoretical(a.dataset, a.d);
  const std::optional<double> theo_value =
      theo ? std::optional<double>(replicate_mean(index, ds.values, *theo, 100, a.data_seed)) : std::nullopt;

  const fs::path root = resolve_output(a.out);
  const fs::path trace_dir = root / "traces";
  fs::create_directories(trace_dir);

  struct Job {
    Method method;
    double alpha;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (Method m : methods)
    for (double al : alphas)
      for (auto s : seeds) jobs.push_back({m, al, s});

  std::vector<SweepRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::string first_error;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        const Job& job = jobs[k];
        OptimizerConfig cfg = base;
        cfg.method = job.method;
        cfg.alpha0 = job.alpha;
        cfg.seed = job.seed;
        RunResult run = optimize(ds.values, index, cfg);
        if (a.polish) {
          RunResult pol =
              polish(ds.values, index, ScoredBasis{run.final_basis, run.final_index, run.final_eval_seed}, cfg);
          append(run.trace, pol.trace);
          run.final_basis = pol.final_basis;
          run.final_index = pol.final_index;
        }
        if (theo) bind_theoretical(run.trace, *theo, *theo_value);
        const std::string name =
            to_string(job.method) + "_a" + alpha_tag(job.alpha) + "_s" + std::to_string(job.seed) + ".csv";
        serialize_trace(run.trace, trace_dir / name);
        SweepRow& r = rows[k];
        r.method = to_string(job.method);
        r.alpha0 = job.alpha;
        r.seed = job.seed;
        r.start_index = get_start(run.trace).index_value;
        r.final_index = run.final_index;
        r.theoretical_index = theo_value;
        if (theo) r.distance = geodesic_distance(run.final_basis, *theo);
        r.run_length = run.trace.size();
        r.iterations = run.iterations;
        r.terminated_by = to_string(run.terminated_by);
        r.trace = (fs::path("traces") / name).string();
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(a.jobs, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (!first_error.empty()) throw std::runtime_error("sweep run failed: " + first_error);

  const fs::path summary = root / "summary.csv";
  std::ofstream sum(summary, std::ios::binary);
  if (!sum) throw std::runtime_error("cannot open '" + summary.string() + "' for writing");
  sum << "method,alpha0,seed,start_index,final_index,theoretical_index,distance_to_theoretical,run_length,"
         "iterations,terminated_by,trace\n";
  for (const auto& r : rows) {
    sum << r.method << "," << format_double(r.alpha0) << "," << r.seed << "," << format_double(r.start_index)
        << "," << format_double(r.final_index) << ","
        << (r.theoretical_index ? format_double(*r.theoretical_index) : "") << ","
        << (r.distance ? format_double(*r.distance) : "") << "," << r.run_length << "," << r.iterations << ","
        << r.terminated_by << "," << r.trace << "\n";
  }
  out << nlohmann::json{{"summary", summary.string()}, {"runs", rows.size()}}.dump() << "\n";
  return kExitOk;
}

std::vector<TraceLog> load_traces(const std::string& pattern) {
  std::vector<TraceLog> logs;
  for (const auto& part : split(pattern, ',')) {
    const auto files = expand_glob(part);
    for (const auto& f : files) logs.push_back(deserialize_trace(f));
  }
  if (logs.empty()) throw InputError("no trace files match '" + pattern + "'");
  return logs;
}

std::string log_label(const TraceLog& log, std::size_t k) {
  const std::string m = log.empty() ? "trace" : log.records().front().method;
  return m + "_" + std::to_string(k + 1);
}

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  if (a.out.empty()) throw InputError("--out is required");
  const auto logs = load_traces(a.traces);
  const fs::path dir = resolve_output(a.out);
  fs::create_directories(dir);
  Rng rng(a.seed);
  std::vector<fs::path> written;

  std::vector<std::string> labels;
  for (std::size_t k = 0; k < logs.size(); ++k) labels.push_back(log_label(logs[k], k));

  if (a.kind == "search") {
    for (std::size_t k = 0; k < logs.size(); ++k) {
      auto s = search_summary(logs[k], a.cutoff);
      s.method = labels[k];
      render_search(s, dir / ("search_" + labels[k] + ".svg"));
      write_csv(s, dir / ("search_" + labels[k] + ".csv"));
      written.push_back(dir / ("search_" + labels[k] + ".svg"));
    }
  } else if (a.kind == "trace") {
    std::vector<InterpSeries> series;
    for (std::size_t k = 0; k < logs.size(); ++k) {
      series.push_back(interp_trace(logs[k]));
      series.back().label = labels[k];
      write_csv(series.back(), dir / ("trace_" + labels[k] + ".csv"));
    }
    render_trace(series, dir / "trace.svg");
    written.push_back(dir / "trace.svg");
  } else if (a.kind == "pca") {
    const Embedding e = pca_embed(logs, a.background, rng);
    std::vector<const TraceLog*> ptrs;
    for (const auto& l : logs) ptrs.push_back(&l);
    EmbeddingOptions opt;
    opt.details = a.details;
    opt.animate = a.animate;
    opt.checkpoints = a.checkpoints;
    opt.labels = labels;
    const fs::path target = a.animate ? dir / "pca_frames" : dir / "pca.svg";
    written = render_embedding(e, ptrs, opt, target);
    write_csv(e, dir / "pca.csv");
  } else if (a.kind == "tour" || a.kind == "torus") {
    const std::size_t p = logs.front().metadata().p;
    const std::size_t d = logs.front().metadata().d;
    for (const auto& l : logs)
      if (l.metadata().p != p || l.metadata().d != d) throw InputError("traces differ in shape");
    if (a.kind == "torus" && d != 2) throw InputError("torus view needs d = 2 traces");
    const Matrix bg = a.kind == "torus" ? torus_background(p, a.background, rng) : bind_random(a.background, p, d, rng);
    std::vector<Matrix> parts;
    std::size_t rows_total = bg.rows();
    for (const auto& l : logs) {
      parts.push_back(get_basis_matrix(l));
      rows_total += parts.back().rows();
    }
    const std::size_t q = p * d;
    Matrix pts(rows_total, q);
    std::vector<int> group(rows_total, 0);
    std::size_t r = 0;
    for (std::size_t i = 0; i < bg.rows(); ++i, ++r)
      for (std::size_t c = 0; c < q; ++c) pts(r, c) = bg(i, c);
    for (std::size_t k = 0; k < parts.size(); ++k)
      for (std::size_t i = 0; i < parts[k].rows(); ++i, ++r) {
        for (std::size_t c = 0; c < q; ++c) pts(r, c) = parts[k](i, c);
        group[r] = static_cast<int>(k + 1);
      }
    const auto frames = basis_space_tour(pts, a.frames, rng);
    written = render_space_tour(frames, group, dir / (a.kind + "_frames"));
  } else {
    throw std::invalid_argument("unknown --kind '" + a.kind + "'");
  }
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : written) files.push_back(f.string());
  out << nlohmann::json{{"kind", a.kind}, {"files", files}}.dump() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Projection pursuit optimisation with trace diagnostics", "ppdiag"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Write a simulated dataset as CSV");
  s->add_option("--dataset", sim.dataset, "full10, boa5 or boa6");
  s->add_option("--n", sim.n, "Number of rows");
  s->add_option("--seed", sim.seed, "Generator seed");
  s->add_option("--out", sim.out, "Output CSV")->required();

  OptimizeArgs opt;
  auto* o = app.add_subcommand("optimize", "Run one optimiser and write its trace");
  o->add_option("--data", opt.data, "Input CSV with a header row");
  o->add_option("--index", opt.index, "holes or kolmogorov");
  o->add_option("--method", opt.method, "crs, sa or pd");
  o->add_option("--d", opt.d, "Projection dimension");
  o->add_option("--config", opt.config, "JSON config; flags override it");
  o->add_option("--trace-out", opt.trace_out, "Trace file (.csv or .jsonl)");
  o->add_option("--seed", opt.seed, "Run seed");
  o->add_option("--alpha0", opt.alpha0, "Initial search neighbourhood");
  o->add_option("--theoretical", opt.theoretical, "boa5 or boa6: bind the known optimum to the trace");
  o->add_flag("--polish", opt.polish, "Polish the final basis");
  o->add_flag("--no-interrupt", opt.no_interrupt, "Always interpolate to the target");
  o->add_flag("--no-orient-check", opt.no_orient_check, "Skip the target orientation fix");
  o->add_flag("--dump-config", opt.dump_config, "Print the resolved config and exit");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "Run a seed x alpha0 x method grid");
  w->add_option("--seeds", sw.seeds, "Seed list, e.g. 1..20");
  w->add_option("--alpha0", sw.alpha0, "Comma separated alpha0 values");
  w->add_option("--methods", sw.methods, "Comma separated methods");
  w->add_option("--jobs", sw.jobs, "Concurrent runs");
  w->add_option("--dataset", sw.dataset, "boa5 or boa6");
  w->add_option("--index", sw.index, "holes or kolmogorov");
  w->add_option("--d", sw.d, "Projection dimension");
  w->add_option("--n", sw.n, "Rows of simulated data");
  w->add_option("--data-seed", sw.data_seed, "Seed for the simulated data");
  w->add_option("--config", sw.config, "Base JSON config");
  w->add_option("--out", sw.out, "Output directory");
  w->add_flag("--polish", sw.polish, "Polish every final basis");
  w->add_flag("--no-orient-check", sw.no_orient_check, "Skip the target orientation fix");

  DiagnoseArgs dg;
  auto* g = app.add_subcommand("diagnose", "Render diagnostics from trace files");
  g->add_option("--traces", dg.traces, "Trace file glob; commas join several")->required();
  g->add_option("--kind", dg.kind, "search, trace, pca, tour or torus")
      ->check(CLI::IsMember({"search", "trace", "pca", "tour", "torus"}));
  g->add_flag("--details", dg.details, "Show search and anchor points");
  g->add_flag("--animate", dg.animate, "Write frame sequences");
  g->add_option("--out", dg.out, "Output directory")->required();
  g->add_option("--background", dg.background, "Random background bases");
  g->add_option("--frames", dg.frames, "Tour frames");
  g->add_option("--checkpoints", dg.checkpoints, "Animation frames");
  g->add_option("--cutoff", dg.cutoff, "Tries up to which points replace boxplots");
  g->add_option("--seed", dg.seed, "Seed for backgrounds and tour paths");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (*s) return cmd_simulate(sim, out);
    if (*o) return cmd_optimize(opt, *o, out);
    if (*w) return cmd_sweep(sw, out);
    if (*g) return cmd_diagnose(dg, out);
  } catch (const InputError& e) {
    report(err, "input", e.what());
    return kExitFailure;
  } catch (const TraceError& e) {
    report(err, "input", e.what());
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    report(err, "usage", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    report(err, "runtime", e.what());
    return kExitFailure;
  }
  report(err, "usage", "no subcommand");
  return kExitUsage;
}

}  // namespace ppdiag
