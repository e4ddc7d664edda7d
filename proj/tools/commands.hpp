#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "scenario.hpp"

namespace granvar::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kModelError = 3 };

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
  unsigned threads = 1;
  bool quick = false;
};

/// `granvar <version> config_hash=<hex> seed=<n>`, the first line of every
/// CSV the tool writes.
std::string header_comment(std::uint64_t config_hash, std::optional<std::uint64_t> seed);

int cmd_estimate(const ScenarioConfig& config, const RunOptions& options);
int cmd_simulate(const ScenarioConfig& config, const RunOptions& options);
int cmd_intercept(const ScenarioConfig& config, const RunOptions& options);
/// `config` may be null; the grid needs no inputs.
int cmd_table1(const ScenarioConfig* config, const RunOptions& options);
int cmd_verify(const ScenarioConfig* config, const RunOptions& options);

}  // namespace granvar::cli
