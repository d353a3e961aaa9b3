#pragma once

#include <filesystem>
#include <iosfwd>

#include "config.hpp"

namespace lkl::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInvalidInput = 2;

struct RunContext {
  std::filesystem::path out_dir;
  bool quiet = false;
  std::ostream* log = nullptr;  // progress and summaries; null when quiet
};

int cmd_verify_identity(const ExperimentConfig& config, const RunContext& ctx);
int cmd_oracle(const ExperimentConfig& config, const RunContext& ctx);
int cmd_check_assumptions(const ExperimentConfig& config, const RunContext& ctx);
int cmd_simulate(const ExperimentConfig& config, const RunContext& ctx);
int cmd_fp_solve(const ExperimentConfig& config, const RunContext& ctx);

// Output directory precedence: --out, then $LKL_OUT_DIR, then the config.
inline constexpr const char* kOutDirEnv = "LKL_OUT_DIR";
std::filesystem::path resolve_out_dir(const std::string& flag,
                                      const ExperimentConfig& config);

}  // namespace lkl::cli
