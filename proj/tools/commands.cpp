#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "granvar/csv.hpp"
#include "granvar/errors.hpp"
#include "granvar/estimators.hpp"
#include "granvar/rng.hpp"
#include "granvar/verify.hpp"

namespace granvar::cli {

namespace {

constexpr std::uint64_t kFieldStream = 1;
constexpr std::uint64_t kReplicateStream = 2;
constexpr std::uint64_t kTransectStream = 3;
constexpr std::uint64_t kCalibrationStream = 4;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using csv::number;

std::uint64_t require_seed(const ScenarioConfig& c, const RunOptions& o) {
  if (o.seed) return *o.seed;
  if (c.seed) return *c.seed;
  throw ConfigError(c.source + ":1: /seed: a seed is required (in the config or via --seed)", 1);
}

void require(bool ok, const ScenarioConfig& c, const std::string& what) {
  if (!ok) throw ConfigError(c.source + ":1: /: " + what, 1);
}

std::filesystem::path prepare(const RunOptions& o) {
  std::filesystem::create_directories(o.out);
  return o.out;
}

std::string flag(bool b) { return b ? "1" : "0"; }

SpatialField obtain_field(const ScenarioConfig& c, std::uint64_t seed, const std::filesystem::path& dir,
                          const std::string& comment) {
  SpatialField field;
  if (c.field->csv) {
    try {
      field = read_field(*c.field->csv, sidecar_for(*c.field->csv));
    } catch (const std::exception& e) {
      throw ConfigError(c.source + ":1: /field/csv: " + e.what(), 1);
    }
    require(field.classes == c.classes->size(), c,
            "field file has " + std::to_string(field.classes) + " classes, config has " +
                std::to_string(c.classes->size()));
  } else {
    field = generate_field(*c.field->process, *c.classes, stream_seed(seed, kFieldStream));
    write_field(field, dir / "field.csv", dir / "field.json", comment);
  }
  return field;
}

void variance_row(csv::Writer& w, const std::string& name, const VarianceResult& v) {
  w.row({name, number(v.value), number(v.gy_term), number(v.correction_term)});
}

void value_row(csv::Writer& w, const std::string& name, double v) {
  w.row({name, number(v), number(kNaN), number(kNaN)});
}

void ckk_row(csv::Writer& w, double nk, double ve, double vgy) {
  CkkSolution s{kNaN, false};
  bool identifiable = true;
  try {
    s = solve_c_kk({ve, nk}, vgy);
  } catch (const NonIdentifiable&) {
    identifiable = false;
  }
  w.row({number(nk), number(ve / vgy), number(ve), number(vgy), number(s.c_kk), flag(s.feasible),
         flag(identifiable)});
}

}  // namespace

std::string header_comment(std::uint64_t config_hash, std::optional<std::uint64_t> seed) {
  return std::string("granvar ") + GRANVAR_VERSION + " config_hash=" + csv::hex64(config_hash) +
         " seed=" + (seed ? std::to_string(*seed) : std::string("none"));
}

int cmd_estimate(const ScenarioConfig& c, const RunOptions& o) {
  require(c.classes.has_value(), c, "estimate needs a 'classes' section");
  require(c.sample || c.expectation || c.grid || c.empirical, c,
          "estimate needs 'sample', 'expectation', 'empirical' or 'c_kk_grid'");
  require(!(c.sample || c.expectation) || c.dependence, c, "estimate needs a 'dependence' matrix for variances");
  const auto seed = o.seed ? o.seed : c.seed;
  const auto comment = header_comment(c.hash, seed);
  const auto dir = prepare(o);
  const auto& table = *c.classes;

  if (c.sample || c.expectation) {
    csv::Writer w(dir / "estimate.csv", comment);
    w.header({"estimator", "value", "gy_term", "correction_term"});
    if (c.expectation) variance_row(w, "var_expected", variance_expected(*c.expectation, table, *c.dependence));
    if (c.sample) {
      const auto& s = *c.sample;
      variance_row(w, "var_sample", variance_sample(s, table, *c.dependence));
      value_row(w, "v_gy", variance_gy(s, table));
      variance_row(w, "var_ht", variance_ht(s, table, *c.dependence));
      if (single_nonzero_class(table) >= 0) value_row(w, "v_gy_single_class", v_gy_single_class(s, table));
      if (c.batch) {
        BatchSpec b;
        b.batch_mass = c.batch->mass;
        const bool correct = !c.batch->q.has_value();
        b.first_order_q = correct ? BatchSpec::correct(c.batch->mass, s.mass(), table.size()).first_order_q
                                  : *c.batch->q;
        b.validate();
        value_row(w, "conc_pi_expanded", pi_expanded_concentration(s, table, b));
        const Matrix pij = second_order_inclusion(b.first_order_q, *c.dependence);
        value_row(w, "var_ht_general", variance_ht_general(s, table, b.first_order_q, pij, b));
        if (correct) value_row(w, "var_ht_finite_batch", variance_ht_finite_batch(s, table, *c.dependence, b));
      }
    }
  }

  if (c.grid || c.empirical) {
    csv::Writer w(dir / "c_kk.csv", comment);
    w.header({"n_k", "ratio", "v_e", "v_gy", "c_kk", "feasible", "identifiable"});
    if (c.grid)
      for (double nk : c.grid->n_k)
        for (double r : c.grid->ratio) ckk_row(w, nk, r * c.grid->v_gy, c.grid->v_gy);
    if (c.empirical) {
      require(c.sample.has_value(), c, "'empirical' needs a 'sample' to compute V_GY");
      ckk_row(w, c.empirical->n_k, c.empirical->v_e, v_gy_single_class(*c.sample, table));
    }
  }
  return kOk;
}

int cmd_simulate(const ScenarioConfig& c, const RunOptions& o) {
  require(c.design.has_value(), c, "simulate needs a 'design' section");
  const auto seed = require_seed(c, o);
  const auto comment = header_comment(c.hash, seed);
  const auto dir = prepare(o);
  const auto& table = *c.classes;
  const auto& design = *c.design;

  ReplicateOptions ro;
  ro.replicates = c.replicates;
  ro.seed = stream_seed(seed, kReplicateStream);
  ro.threads = o.threads;

  ReplicateRun run;
  std::optional<ExactDesign> exact;
  if (design.kind == DesignKind::Window) {
    require(c.field.has_value(), c, "window designs need a 'field' section");
    if (c.ensemble) {
      run = run_replicates_ensemble(design, table, *c.field->process, ro);
    } else {
      const auto field = obtain_field(c, seed, dir, comment);
      run = run_replicates(design, table, field, ro);
    }
  } else {
    const bool small = c.population.size() <= SelectionDesign::kMaxEnumeration;
    ro.track_particles = small;
    run = run_replicates(design, table, c.population, ro);
    if (small) exact = enumerate_design(design, table, c.population);
  }

  write_replicates_csv(run.stats, dir / "replicates.csv", comment);
  write_first_order_csv(run.estimate, dir / "first_order.csv", comment);
  write_estimate_csv(run.estimate, dir / "inclusion.csv", comment);
  write_comparison_csv(compare_estimators(run.stats, run.estimate, table), dir / "comparison.csv", comment);

  if (exact) {
    csv::Writer w(dir / "exact.csv", comment);
    w.header({"quantity", "i", "j", "exact", "estimate"});
    const auto k = table.size();
    for (Eigen::Index i = 0; i < k; ++i)
      w.row({"pi", number(static_cast<std::int64_t>(i)), "", number(exact->pi(i)), number(run.estimate.pi(i))});
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = i; j < k; ++j) {
        const auto si = number(static_cast<std::int64_t>(i)), sj = number(static_cast<std::int64_t>(j));
        w.row({"pij", si, sj, number(exact->pij(i, j)), number(run.estimate.pij(i, j))});
        w.row({"c", si, sj, number(exact->c(i, j)), number(run.estimate.c_hat(i, j))});
      }
    const auto n = static_cast<Eigen::Index>(c.population.size());
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a; b < n; ++b)
        w.row({"particle_pij", number(static_cast<std::int64_t>(a)), number(static_cast<std::int64_t>(b)),
               number(exact->particle_pij(a, b)), number(run.estimate.particle_pij(a, b))});
    w.row({"p_empty", "", "", number(exact->p_empty),
           number(static_cast<double>(run.stats.empty_count) / static_cast<double>(c.replicates))});
    w.row({"mean_cs", "", "", number(exact->mean_cs), number(run.stats.mean_cs)});
    w.row({"var_cs", "", "", number(exact->var_cs), number(run.stats.v_e)});
  }
  return kOk;
}

int cmd_intercept(const ScenarioConfig& c, const RunOptions& o) {
  require(c.field.has_value(), c, "intercept needs a 'field' section");
  require(c.transects.has_value(), c, "intercept needs a 'transects' section");
  const auto seed = require_seed(c, o);
  const auto comment = header_comment(c.hash, seed);
  const auto dir = prepare(o);
  const auto& table = *c.classes;
  const auto k = table.size();

  const auto field = obtain_field(c, seed, dir, comment);
  if (field.particles.empty()) throw ConfigError(c.source + ":1: /field: the field has no particles", 1);

  const auto records = cast_transects(field, *c.transects, stream_seed(seed, kTransectStream), o.threads);
  write_transects_csv(records, dir / "transects.csv", comment);
  const auto counts = transition_counts(records, k);
  write_counts_csv(counts, dir / "counts.csv", comment);

  const auto fit = markov_fit(counts);
  write_matrix_csv(fit.p, dir / "markov.csv", comment);
  {
    csv::Writer w(dir / "stationary.csv", comment);
    w.header({"class", "stationary", "absorbing_unknown", "irreducible", "residual", "iterations"});
    for (Eigen::Index i = 0; i < k; ++i)
      w.row({number(static_cast<std::int64_t>(i)), number(fit.stationary ? (*fit.stationary)(i) : kNaN),
             flag(fit.absorbing_unknown[static_cast<std::size_t>(i)]), flag(fit.irreducible), number(fit.residual),
             number(fit.iterations)});
  }

  const auto freq = size_corrected_frequencies(records, table);
  {
    csv::Writer w(dir / "frequencies.csv", comment);
    w.header({"class", "hits", "raw", "corrected"});
    for (Eigen::Index i = 0; i < k; ++i)
      w.row({number(static_cast<std::int64_t>(i)), number(freq.hits(i)), number(freq.raw(i)),
             number(freq.corrected(i))});
  }

  if (counts.total() > 0) {
    const auto adj = c_from_adjacency(counts, c.transects->size_correction ? freq.corrected : freq.raw);
    csv::Writer w(dir / "adjacency.csv", comment);
    w.header({"i", "j", "a", "b", "c_hat", "estimable"});
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = i; j < k; ++j)
        w.row({number(static_cast<std::int64_t>(i)), number(static_cast<std::int64_t>(j)), number(adj.a(i, j)),
               number(adj.b(i, j)), number(adj.c_hat(i, j)), flag(adj.estimable(i, j))});
  }

  if (c.calibration) {
    CalibrationSpec spec;
    spec.points = c.calibration->points;
    spec.window = SelectionDesign::window(c.calibration->window_width, c.calibration->window_height);
    spec.window_replicates = c.calibration->window_replicates;
    spec.transects = *c.transects;
    spec.seeds_per_point = c.calibration->seeds_per_point;
    spec.seed = stream_seed(seed, kCalibrationStream);
    spec.threads = o.threads;
    const auto report = calibrate_against_oracle(spec, table);
    {
      csv::Writer w(dir / "calibration.csv", comment);
      w.header({"point", "i", "j", "fields", "oracle_mean", "oracle_se", "adjacency_mean", "adjacency_se",
                "adjacency_rate"});
      for (const auto& p : report.points)
        for (Eigen::Index i = 0; i < k; ++i)
          for (Eigen::Index j = i; j < k; ++j)
            w.row({p.label, number(static_cast<std::int64_t>(i)), number(static_cast<std::int64_t>(j)),
                   number(p.fields), number(p.oracle_mean(i, j)), number(p.oracle_se(i, j)),
                   number(p.adjacency_mean(i, j)), number(p.adjacency_se(i, j)), number(p.adjacency_rate(i, j))});
    }
    csv::Writer w(dir / "calibration_summary.csv", comment);
    w.header({"i", "j", "spearman", "sign_agreement", "null_regime", "transitions", "gaps"});
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = i; j < k; ++j)
        w.row({number(static_cast<std::int64_t>(i)), number(static_cast<std::int64_t>(j)),
               number(report.spearman(i, j)), number(report.sign_agreement(i, j)), flag(report.null_regime),
               "symmetrized", "ignored"});
  }
  return kOk;
}

int cmd_table1(const ScenarioConfig* c, const RunOptions& o) {
  const auto grid = table1();
  const auto comment = header_comment(c ? c->hash : csv::fnv1a64(""), o.seed ? o.seed : (c ? c->seed : std::nullopt));
  const auto dir = prepare(o);
  csv::Writer w(dir / "table1.csv", comment);
  w.header({"n_k", "ratio", "c_kk"});
  std::printf("%8s", "N_k \\ r");
  for (double r : CkkGrid::ratio) std::printf(" %9g", r);
  std::printf("\n");
  for (std::size_t i = 0; i < CkkGrid::n_k.size(); ++i) {
    std::printf("%8g", CkkGrid::n_k[i]);
    for (std::size_t j = 0; j < CkkGrid::ratio.size(); ++j) {
      const double v = grid.c_kk(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      w.row({number(CkkGrid::n_k[i]), number(CkkGrid::ratio[j]), number(v)});
      std::printf(" %9s", csv::significant(v, 2).c_str());
    }
    std::printf("\n");
  }
  return kOk;
}

int cmd_verify(const ScenarioConfig* c, const RunOptions& o) {
  VerifyOptions vo;
  vo.quick = o.quick;
  vo.threads = o.threads;
  if (o.seed) vo.seed = *o.seed;
  else if (c && c->seed) vo.seed = *c->seed;
  const auto results = run_verification(vo);
  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s %-24s %7.3fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
    if (!r.passed) ++failed;
  }
  std::printf("%zu checks, %d failed\n", results.size(), failed);
  if (failed > 0) {
    for (const auto& r : results)
      if (!r.passed) std::fprintf(stderr, "verify: check '%s' failed\n", r.name.c_str());
    return kVerifyFailed;
  }
  return kOk;
}

}  // namespace granvar::cli
