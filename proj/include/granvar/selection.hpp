#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "granvar/fields.hpp"
#include "granvar/model.hpp"

namespace granvar {

enum class DesignKind { Bernoulli, PairwisePmf, Window };

const char* to_string(DesignKind kind);
DesignKind parse_design_kind(const std::string& name);

/// How a sample is drawn from a population of particles.
///
///  - Bernoulli: particle a is included independently with q_{class(a)}.
///  - PairwisePmf: p(s) proportional to prod_a q^s_a (1-q)^(1-s_a) times
///    prod_{a<b} phi_{class(a),class(b)}^(s_a s_b) over subsets s of at most
///    kMaxEnumeration particles; phi = 1 recovers Bernoulli.
///  - Window: all particles of a SpatialField whose centres fall in a
///    window_width x window_height window placed uniformly on the torus.
struct SelectionDesign {
  DesignKind kind = DesignKind::Bernoulli;
  Vector q;
  Matrix phi;
  double window_width = 0.0;
  double window_height = 0.0;

  static constexpr std::size_t kMaxEnumeration = 24;

  static SelectionDesign bernoulli(Vector q);
  static SelectionDesign pairwise(Vector q, Matrix phi);
  static SelectionDesign window(double width, double height);

  /// Throws InvalidArgument if parameters are out of range for K classes.
  void validate(Eigen::Index classes) const;
};

/// Exact first- and second-order inclusion probabilities and moments of c_s
/// by summing over all 2^n outcomes.
struct ExactDesign {
  Vector particle_pi;
  /// n x n; diagonal holds particle_pi.
  Matrix particle_pij;
  /// Class-level averages over particles / distinct particle pairs. Entries
  /// for classes (or same-class pairs) with too few particles are NaN.
  Vector pi;
  Matrix pij;
  Matrix c;
  /// Max - min of the particle-level values behind each class-level average.
  Vector pi_spread;
  Matrix pij_spread;
  /// Probability that the selection is empty; c_s moments condition on
  /// non-empty selections.
  double p_empty = 0.0;
  double mean_cs = 0.0;
  double var_cs = 0.0;
  double mean_mass = 0.0;
};

/// Throws InvalidArgument for window designs, n > kMaxEnumeration, or a pmf
/// whose weights are all zero.
ExactDesign enumerate_design(const SelectionDesign& design, const ClassTable& table,
                             std::span<const int> class_of);

struct ReplicateRecord {
  CountVector counts;
  double mass = 0.0;
  /// NaN for empty replicates.
  double concentration = 0.0;
  bool empty() const { return mass == 0.0; }
};

/// Per-replicate sample summaries and the empirical variance V_e of c_s
/// over non-empty replicates.
struct ReplicateStats {
  std::vector<ReplicateRecord> replicates;
  std::size_t empty_count = 0;
  double mean_cs = 0.0;
  double v_e = 0.0;
  double v_e_se = 0.0;
  double mean_mass = 0.0;
  /// Coefficient of variation of M_s over non-empty replicates; audits the
  /// constant-mass assumption of the Horvitz-Thompson estimator.
  double mass_cv = 0.0;
  /// Mean counts over non-empty replicates.
  Vector mean_counts;
};

/// Empirical inclusion probabilities. Class-level values are means over
/// replicates of N_i/n_i and of N_i N_j/(n_i n_j) (i != j) or
/// N_i (N_i-1)/(n_i (n_i-1)) (distinct same-class pairs). Standard errors are
/// across replicates; c_hat = 1 - pij/(pi_i pi_j) with delta-method errors.
struct InclusionEstimate {
  Vector pi;
  Vector pi_se;
  Matrix pij;
  Matrix pij_se;
  Matrix c_hat;
  Matrix c_se;
  std::size_t replicates = 0;
  /// Population class sizes n_i (for ensemble runs, the smallest over the
  /// replicate fields).
  CountVector population;
  /// Particle level, filled only when tracking was requested.
  Vector particle_pi;
  Matrix particle_pij;
};

struct ReplicateOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Accumulate particle-level pi and pij (O(n^2) per replicate).
  bool track_particles = false;
};

struct ReplicateRun {
  ReplicateStats stats;
  InclusionEstimate estimate;
};

/// Bernoulli and pairwise-pmf designs over particles with the given classes.
/// Replicate r uses stream (seed, r); results do not depend on `threads`.
ReplicateRun run_replicates(const SelectionDesign& design, const ClassTable& table,
                            std::span<const int> class_of, const ReplicateOptions& options);

/// Window design over a spatial field.
ReplicateRun run_replicates(const SelectionDesign& design, const ClassTable& table,
                            const SpatialField& field, const ReplicateOptions& options);

/// Window design over independent fields: replicate r generates a fresh
/// field from `process` and places one window on it. The estimates then
/// describe the point process rather than one realization of it. Throws
/// InvalidArgument if a generated field has fewer than two particles of a
/// class.
ReplicateRun run_replicates_ensemble(const SelectionDesign& design, const ClassTable& table,
                                     const ProcessParams& process, const ReplicateOptions& options);

/// C_hat with 95% delta-method confidence intervals. Pairs involving a
/// class with pi_hat = 0 (or no distinct pair) are flagged unestimable.
struct DependenceEstimate {
  Matrix c_hat;
  Matrix se;
  Matrix ci_lo;
  Matrix ci_hi;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> estimable;

  bool covers_zero(Eigen::Index i, Eigen::Index j) const {
    return estimable(i, j) && ci_lo(i, j) <= 0.0 && ci_hi(i, j) >= 0.0;
  }
  /// c_hat with unestimable entries replaced by 0.
  DependenceMatrix usable() const;
};

DependenceEstimate empirical_dependence(const InclusionEstimate& est);

struct EstimatorRow {
  std::string name;
  double value = 0.0;
  double se = 0.0;
  double ratio = 0.0;
  double z = 0.0;
  bool available = true;
};

/// Variance estimators against V_e. Rows:
///   sample_chat_replicate, sample_gy_replicate, ht_chat_replicate  (per-replicate
///   evaluation at the sample's own N_i, M_s, c_s, averaged), and
///   expected_chat_mean, expected_gy_mean, ht_chat_mean (evaluated once at the mean
///   composition). z = (value - V_e) / sqrt(se^2 + se(V_e)^2).
struct ComparisonReport {
  double v_e = 0.0;
  double v_e_se = 0.0;
  double mass_cv = 0.0;
  std::size_t empty_count = 0;
  std::vector<EstimatorRow> rows;

  const EstimatorRow& row(const std::string& name) const;
};

ComparisonReport compare_estimators(const ReplicateStats& stats, const InclusionEstimate& est,
                                    const ClassTable& table);

/// `replicate,M_s,c_s,N_0..N_{K-1}`.
void write_replicates_csv(const ReplicateStats& stats, const std::filesystem::path& path,
                          const std::string& comment);
/// `i,j,pi_ij,se,pc_hat,ci_lo,ci_hi` over class pairs i <= j.
void write_estimate_csv(const InclusionEstimate& est, const std::filesystem::path& path,
                        const std::string& comment);
/// `i,pi,se`.
void write_first_order_csv(const InclusionEstimate& est, const std::filesystem::path& path,
                           const std::string& comment);
/// `estimator,value,se,ratio_to_v_e,z` plus V_e, its SE, mass CV, empty count.
void write_comparison_csv(const ComparisonReport& report, const std::filesystem::path& path,
                          const std::string& comment);

}  // namespace granvar
