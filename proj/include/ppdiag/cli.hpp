#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ppdiag/linalg.hpp"
#include "ppdiag/simdata.hpp"

namespace ppdiag {

// Relative output paths are resolved against this directory when set.
inline constexpr const char* kOutputDirEnv = "PPDIAG_OUTPUT_DIR";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

std::filesystem::path resolve_output(const std::filesystem::path& p);

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

// "1..20", "3", "1,4,9" or mixes such as "1..3,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& spec);
std::vector<double> parse_double_list(const std::string& spec);

// Paths matching a '*' / '?' wildcard in the file-name component.
std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

// Entry point behind the ppdiag executable. Errors are reported on `err` as a
// single JSON line.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ppdiag
