#pragma once

// Batch orchestration shared by the shared-library API and the CLI: loads a
// config (or a previously written manifest), applies overrides, runs one
// subcommand, and writes CSV outputs plus manifest.json into the output
// directory. Exit status contract: 0 pass, 1 criterion or runtime failure,
// 2 usage error.

#include <cstdint>
#include <string>

namespace dnl {

inline constexpr const char* kToolVersion = "0.3.0";

struct RunOptions {
    std::string config_path; // empty = built-in defaults; may be a manifest.json
    std::string out_dir = ".";
    bool has_seed = false;
    std::uint64_t seed = 0;
    int workers = 0; // 0 = hardware concurrency
    bool force = false;
};

struct RunResult {
    int status = 0;
    std::string summary; // human-readable report, one line per finding
};

// name in {validate-config, branch, simulate, stability, contrast, feller,
// kolmogorov}; anything else is a usage error.
RunResult run_subcommand(const std::string& name, const RunOptions& opt);

} // namespace dnl
