#pragma once

// Command-line front end. Subcommands:
//   synth     write a synthetic benchmark (scene + probability stacks, labels)
//   segment   scene stack -> smoothed probability stack
//   detect    maximum-likelihood expansion detection over a directory of stacks
//   baseline  scalar changepoint baselines appended to the report stream
//   evaluate  metrics, ROC / cost curves and a comparison table
//
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace shedwatch {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct LocationInput {
    std::string name;  // directory name under the root
    std::filesystem::path stack;
};

// Stacks of the given kind ("prob" or "scene") under root: every
// subdirectory holding <kind>/manifest.json, in name order. A root that is
// itself a stack (has manifest.json) yields that single stack.
std::vector<LocationInput> discover_stacks(const std::filesystem::path& root,
                                           const std::string& kind);

// Runs job(i) for i in [0, n) on up to `threads` workers. Results must be
// written by index, so output order never depends on scheduling. The
// exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job);

}  // namespace shedwatch
