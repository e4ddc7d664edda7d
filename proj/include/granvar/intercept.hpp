#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "granvar/fields.hpp"
#include "granvar/selection.hpp"

namespace granvar {

/// Segment start + t * (dx, dy), t in [0, length], (dx, dy) a unit vector.
struct Transect {
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 1.0;
  double dy = 0.0;
  double length = 0.0;
};

struct Intercept {
  int particle_id = 0;
  int class_id = 0;
  /// Distance along the transect where it enters the disk (clipped to 0).
  double entry = 0.0;
  double chord = 0.0;
  /// Projected width perpendicular to the transect; 2 * radius for disks.
  double width = 0.0;
};

/// Particles crossed by one transect, ordered by entry point, ties by id.
struct TransectRecord {
  Transect line;
  std::vector<Intercept> hits;
};

struct TransectSpec {
  std::size_t count = 1;
  /// Uniform angle in [0, pi) per transect when true, otherwise `angle`.
  bool random_orientation = true;
  double angle = 0.0;
  /// When non-empty these lines are used instead of random placement.
  std::vector<Transect> lines;
  /// Weight hits by 1/width when estimating class frequencies.
  bool size_correction = true;
};

/// All disks of `field` with a positive-length chord along `line`.
TransectRecord intersect_transect(const SpatialField& field, const Transect& line);

/// Each random transect passes through a uniform point of the domain and is
/// clipped to the domain rectangle. Transect t uses stream (seed, t).
std::vector<TransectRecord> cast_transects(const SpatialField& field, const TransectSpec& spec,
                                           std::uint64_t seed, unsigned threads = 1);

/// Directed transition tallies N_ij between consecutive hits within each
/// transect.
struct TransitionCounts {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> n;
  std::int64_t total() const { return n.sum(); }
};

TransitionCounts transition_counts(std::span<const TransectRecord> records, Eigen::Index classes);

/// Row-normalized transition matrix with stationary distribution.
struct MarkovFit {
  Matrix p;
  /// Classes with no outgoing transitions; their rows are zero and they are
  /// left out of the stationary computation.
  std::vector<bool> absorbing_unknown;
  bool irreducible = false;
  /// Present only for irreducible chains (over the classes with data).
  std::optional<Vector> stationary;
  double residual = 0.0;
  int iterations = 0;
};

/// Power iteration on the lazy chain (P + I)/2, which shares P's stationary
/// distribution and is aperiodic, until the L1 residual of pi P - pi is
/// below 1e-12.
MarkovFit markov_fit(const TransitionCounts& counts);

struct ClassFrequencies {
  CountVector hits;
  /// Hit shares.
  Vector raw;
  /// Shares of sum 1/width; removes the bias towards wide particles.
  Vector corrected;
};

/// Throws InvalidArgument if a hit has zero width.
ClassFrequencies size_corrected_frequencies(std::span<const TransectRecord> records, const ClassTable& table);

/// Adjacency-based dependence estimate.
///
/// A_ij = (N_ij + N_ji) / (2T) is the symmetrized share of transitions
/// between i and j (T = total transitions) and B_ij = f_i f_j is its value
/// when classes follow each other independently with frequencies f. The
/// estimate is C_ij = 1 - A_ij / B_ij: excess adjacency gives C_ij < 0.
/// This mapping from transitions to C is a modelling choice, validated only
/// by sign and rank agreement with the window oracle.
struct AdjacencyEstimate {
  Matrix a;
  Matrix b;
  Matrix c_hat;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> estimable;
};

/// Throws InvalidArgument if there are no transitions or `freq` has the
/// wrong size.
AdjacencyEstimate c_from_adjacency(const TransitionCounts& counts, const Vector& freq);

struct CalibrationPoint {
  std::string label;
  ProcessParams params;
};

struct CalibrationSpec {
  std::vector<CalibrationPoint> points;
  SelectionDesign window;
  std::size_t window_replicates = 200;
  TransectSpec transects;
  std::size_t seeds_per_point = 20;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct CalibrationPointResult {
  std::string label;
  std::size_t fields = 0;
  /// Means and standard errors across fields of the two estimates, and the
  /// mean adjacency share A_ij.
  Matrix oracle_mean;
  Matrix oracle_se;
  Matrix adjacency_mean;
  Matrix adjacency_se;
  Matrix adjacency_rate;
};

struct CalibrationReport {
  std::vector<CalibrationPointResult> points;
  /// Per class pair, over point means.
  Matrix spearman;
  /// Per class pair: share of fields with a significant oracle estimate in
  /// which the adjacency estimate has the same sign. NaN when none.
  Matrix sign_agreement;
  /// True when every oracle mean is within its 95% interval of zero; sign
  /// agreement then carries no information.
  bool null_regime = false;
};

/// For each point and seed: generate a field, estimate C with the window
/// oracle and with transect adjacency, then compare the two across points.
CalibrationReport calibrate_against_oracle(const CalibrationSpec& spec, const ClassTable& table);

/// `transect_id,order,particle_id,class_id,chord_length,width`.
void write_transects_csv(std::span<const TransectRecord> records, const std::filesystem::path& path,
                         const std::string& comment);
/// K x K matrix with a header row and column of class ids.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path, const std::string& comment);
void write_counts_csv(const TransitionCounts& counts, const std::filesystem::path& path,
                      const std::string& comment);

}  // namespace granvar
