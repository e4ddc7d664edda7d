#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "granvar/errors.hpp"

using namespace granvar::cli;

int main(int argc, char** argv) {
  CLI::App app{"Generalized Gy sampling-variance estimators, oracles and line-intercept tools"};
  app.set_version_flag("--version", std::string("granvar ") + GRANVAR_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 1;
  bool quick = false;
  app.add_option("--config", config_path, "Scenario JSON file");
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", out, "Output directory (default: the config's \"output\", then $GRANVAR_OUT, then .)");
  app.add_option("--threads", threads, "Worker threads; results do not depend on it")->check(CLI::Range(1U, 1024U));
  app.add_flag("--quick", quick, "Reduced verification suite");

  auto* estimate = app.add_subcommand("estimate", "Variance estimators for a given sample");
  auto* simulate = app.add_subcommand("simulate", "Replicate selection and compare estimators with V_e");
  auto* intercept = app.add_subcommand("intercept", "Transect sampling, transitions and adjacency C");
  auto* table = app.add_subcommand("table1", "Solved C_kk grid");
  auto* verify = app.add_subcommand("verify", "Built-in consistency and oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    std::optional<ScenarioConfig> config;
    if (!config_path.empty()) config = load_scenario(config_path);
    const bool needs_config = !(table->parsed() || verify->parsed());
    if (needs_config && !config) {
      std::fprintf(stderr, "granvar: --config is required for this subcommand\n");
      return kConfigError;
    }

    RunOptions opt;
    opt.seed = seed;
    opt.threads = threads;
    opt.quick = quick;
    if (!out.empty()) opt.out = out;
    else if (config && config->output) opt.out = *config->output;
    else if (const char* env = std::getenv("GRANVAR_OUT"); env && *env) opt.out = env;

    const ScenarioConfig* cfg = config ? &*config : nullptr;
    if (estimate->parsed()) return cmd_estimate(*config, opt);
    if (simulate->parsed()) return cmd_simulate(*config, opt);
    if (intercept->parsed()) return cmd_intercept(*config, opt);
    if (table->parsed()) return cmd_table1(cfg, opt);
    return cmd_verify(cfg, opt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "granvar: config error: %s\n", e.what());
    return kConfigError;
  } catch (const granvar::Error& e) {
    std::fprintf(stderr, "granvar: model error: %s\n", e.what());
    return kModelError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "granvar: error: %s\n", e.what());
    return kModelError;
  }
}
