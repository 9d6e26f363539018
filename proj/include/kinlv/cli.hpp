#pragma once

#include <string>

#include "kinlv/config.hpp"

namespace kinlv {

inline constexpr const char* kToolVersion = "1.0.0";

// KINLV_THREADS environment cap on worker parallelism (>= 1; default 1).
int threads_cap();

// Subcommand bodies. Each validates its settings, writes its data files
// plus a run manifest into out_dir, and throws KinlvError on failure.
void cmd_means(const RunSettings& s, const std::string& out_dir);
void cmd_cv(const RunSettings& s, const std::string& out_dir);
void cmd_mc(const RunSettings& s, const std::string& out_dir);
void cmd_fp(const RunSettings& s, const std::string& out_dir);
void cmd_figures(const RunSettings& s, const std::string& out_dir);
void cmd_sweep(const RunSettings& s, const std::string& out_dir);

// Full argv entry point. Returns the process exit code:
// 0 success, 2 validation/usage error, 3 numerical failure, 4 I/O error.
int run_cli(int argc, const char* const* argv);

}  // namespace kinlv
