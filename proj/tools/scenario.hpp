#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "granvar/estimators.hpp"
#include "granvar/fields.hpp"
#include "granvar/intercept.hpp"
#include "granvar/model.hpp"
#include "granvar/selection.hpp"

namespace granvar::cli {

/// Invalid scenario file. The message starts with `file:line:` (and a column
/// for syntax errors) followed by the JSON pointer of the offending value.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line) : std::runtime_error(message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct GridInput {
  std::vector<double> n_k;
  std::vector<double> ratio;
  double v_gy = 1.0;
};

struct BatchInput {
  double mass = 0.0;
  /// Per-class first-order probabilities; correct sampling when absent.
  std::optional<Vector> q;
};

struct FieldInput {
  std::optional<ProcessParams> process;
  /// Field CSV (and its JSON sidecar) to load instead of generating one.
  std::optional<std::filesystem::path> csv;
};

struct CalibrationInput {
  std::vector<CalibrationPoint> points;
  double window_width = 0.0;
  double window_height = 0.0;
  std::size_t window_replicates = 200;
  std::size_t seeds_per_point = 20;
};

struct ScenarioConfig {
  std::string source;
  std::uint64_t hash = 0;
  std::optional<std::uint64_t> seed;
  std::size_t replicates = 1000;
  std::optional<ClassTable> classes;
  std::optional<DependenceMatrix> dependence;
  std::optional<SampleSummary> sample;
  std::optional<ExpectationSummary> expectation;
  std::optional<EmpiricalVarianceInput> empirical;
  std::optional<GridInput> grid;
  std::optional<BatchInput> batch;
  std::optional<SelectionDesign> design;
  /// Window designs only: draw a fresh field for every replicate.
  bool ensemble = false;
  /// Class of each particle for bernoulli and pairwise_pmf designs.
  std::vector<int> population;
  std::optional<FieldInput> field;
  std::optional<TransectSpec> transects;
  std::optional<CalibrationInput> calibration;
  std::optional<std::filesystem::path> output;
};

/// Parses scenario JSON. `source` names the text in error messages; relative
/// field CSV paths resolve against `base_dir`.
ScenarioConfig parse_scenario(const std::string& text, const std::string& source,
                              const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace granvar::cli
