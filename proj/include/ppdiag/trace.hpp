#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ppdiag/manifold.hpp"
#include "ppdiag/rng.hpp"

namespace ppdiag {

enum class TraceState {
  random_search,
  new_basis,
  interpolation,
  direction_search,
  best_direction_search,
  best_line_search,
  polish_search,
  start,
  final,
};

std::string to_string(TraceState state);
TraceState trace_state_from_string(const std::string& s);
bool is_search_state(TraceState state);

struct TraceRecord {
  std::int64_t t = 0;
  Basis basis;
  double index_value = 0.0;
  TraceState state = TraceState::random_search;
  int j = 1;
  int l = 1;
  std::string method;
  double alpha = 0.0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct TheoreticalBest {
  Basis basis;
  double index_value = 0.0;

  friend bool operator==(const TheoreticalBest&, const TheoreticalBest&) = default;
};

struct TraceMetadata {
  std::size_t p = 0;
  std::size_t d = 0;
  std::size_t n = 0;
  std::string index_name;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::optional<TheoreticalBest> theoretical;

  friend bool operator==(const TraceMetadata&, const TraceMetadata&) = default;
};

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TraceParseError : public TraceError {
 public:
  TraceParseError(const std::string& file, std::size_t line, const std::string& what)
      : TraceError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Tidy optimisation log: one row per evaluated or displayed basis.
class TraceLog {
 public:
  TraceLog() = default;
  explicit TraceLog(TraceMetadata metadata) : metadata_(std::move(metadata)) {}

  // Appends `r` with t = previous t + 1 (1 for the first record). Rejects a
  // non-finite index value or a basis whose shape differs from the log's.
  const TraceRecord& record(TraceRecord r);

  const std::vector<TraceRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const TraceRecord& back() const { return records_.back(); }

  const TraceMetadata& metadata() const { return metadata_; }
  TraceMetadata& metadata() { return metadata_; }

  friend bool operator==(const TraceLog&, const TraceLog&) = default;

 private:
  friend TraceLog deserialize_trace(const std::filesystem::path& path);
  TraceMetadata metadata_;
  std::vector<TraceRecord> records_;
};

// Copies every record of `src` onto the end of `dst`, renumbering t.
void append(TraceLog& dst, const TraceLog& src);

const TraceRecord& get_start(const TraceLog& log);
// Highest index value; ties go to the smallest t.
const TraceRecord& get_best(const TraceLog& log);
std::vector<TraceRecord> get_anchor(const TraceLog& log);
std::vector<TraceRecord> get_interp(const TraceLog& log);
std::vector<TraceRecord> get_interp_last(const TraceLog& log);
std::vector<TraceRecord> get_search(const TraceLog& log);
// (j, number of search records in iteration j), ascending j.
std::vector<std::pair<int, std::size_t>> get_search_count(const TraceLog& log);

struct InterruptPair {
  TraceRecord last_interpolation;
  TraceRecord target;
};
// Iterations whose interpolation stopped short of the new target basis.
std::vector<InterruptPair> get_interrupt(const TraceLog& log);
std::vector<TraceRecord> get_dir_search(const TraceLog& log);
// One row per record, p*d columns, column-major flattening of each basis.
Matrix get_basis_matrix(const TraceLog& log);
std::optional<TheoreticalBest> get_theo(const TraceLog& log);

void bind_theoretical(TraceLog& log, const Basis& basis, double index_value);
// m random p x d bases, one flattened basis per row.
Matrix bind_random(std::size_t m, std::size_t p, std::size_t d, Rng& rng);

enum class TraceFormat { csv, jsonl };

TraceFormat trace_format_for(const std::filesystem::path& path);
std::filesystem::path metadata_path_for(const std::filesystem::path& trace_path);

// Writes the records plus a `<path>.meta.json` sidecar. Doubles are written
// with 17 significant digits.
void serialize_trace(const TraceLog& log, const std::filesystem::path& path,
                     TraceFormat format);
void serialize_trace(const TraceLog& log, const std::filesystem::path& path);

// Reads a trace written by serialize_trace (format chosen by extension).
TraceLog deserialize_trace(const std::filesystem::path& path);

std::string format_double(double x);

nlohmann::json metadata_to_json(const TraceMetadata& meta);
TraceMetadata metadata_from_json(const nlohmann::json& j);

}  // namespace ppdiag
