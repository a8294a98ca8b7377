#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "passforge/run_config.hpp"

namespace passforge {

/// Fresh timestamped directory under cfg.out; never reuses an existing one.
struct RunDir {
  std::filesystem::path path;
  nlohmann::json metadata;  // tool, command, config hash, seed

  /// One "key: value" line per metadata entry, for CSV and QASM headers.
  std::string comment_block(std::string_view prefix = "# ") const;
};

RunDir make_run_dir(const RunConfig& cfg, std::string_view command);

/// Each command validates its inputs before doing work, writes into a new
/// run directory and returns its path. Failures throw.
std::filesystem::path cmd_train(const RunConfig& cfg);
std::filesystem::path cmd_compile(const RunConfig& cfg);
std::filesystem::path cmd_eval(const RunConfig& cfg);
std::filesystem::path cmd_bruteforce(const RunConfig& cfg);
std::filesystem::path cmd_bench(const RunConfig& cfg);

}  // namespace passforge
