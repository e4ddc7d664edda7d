#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "granvar/model.hpp"

namespace granvar {

/// Rectangle [0, width) x [0, height). Spatial processes treat it as a torus.
struct Domain {
  double width = 1.0;
  double height = 1.0;
  double area() const { return width * height; }
};

struct Particle {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;
  int class_id = 0;
  /// Parent index for cluster processes, -1 otherwise.
  int cluster = -1;
};

enum class ProcessKind { Poisson, MaternCluster, Hardcore, Graded };
enum class ClassMode { Independent, ClusterCorrelated };

const char* to_string(ProcessKind kind);
ProcessKind parse_process_kind(const std::string& name);

/// Parameters of the synthetic field generators.
///
///  - Poisson: count ~ Poisson(intensity * area), uniform positions.
///  - MaternCluster: parents ~ Poisson(parent_intensity * area), each with
///    Poisson(offspring_mean) offspring uniform in a disk of cluster_radius,
///    wrapped toroidally. `intensity` is ignored.
///  - Hardcore: target count ~ Poisson(intensity * area), placed by dart
///    throwing with rejection when a toroidal centre distance is below
///    r_i + r_j + min_gap. Budget: 100 attempts per target particle.
///  - Graded: Poisson count; class i has vertical density proportional to
///    1 + gradient_i * (2y/height - 1), gradient_i in [-1, 1].
///
/// Classes are drawn from `mixing`. In ClusterCorrelated mode an offspring
/// copies its parent's class with probability rho and is otherwise drawn
/// independently.
struct ProcessParams {
  ProcessKind kind = ProcessKind::Poisson;
  Domain domain;
  double intensity = 0.0;
  double parent_intensity = 0.0;
  double offspring_mean = 0.0;
  double cluster_radius = 0.0;
  double min_gap = 0.0;
  std::vector<double> mixing;
  ClassMode class_mode = ClassMode::Independent;
  double rho = 0.0;
  std::vector<double> gradient;

  /// Throws InvalidArgument on non-positive rates, a mixing vector of the
  /// wrong length or not summing to 1, rho outside [0, 1], or a gradient
  /// outside [-1, 1].
  void validate(Eigen::Index classes) const;
};

struct SpatialField {
  Domain domain;
  std::vector<Particle> particles;
  std::string process_tag;
  Eigen::Index classes = 1;

  /// Number of particles per class.
  CountVector class_counts() const;
};

/// Deterministic in (params, table, seed). Throws SaturationError when a
/// hard-core field cannot be packed within its attempt budget.
SpatialField generate_field(const ProcessParams& params, const ClassTable& table, std::uint64_t seed);

/// Class ids for particles with the given cluster ids (-1 = no cluster).
/// Independent mode draws i.i.d. from `mixing`; ClusterCorrelated mode gives
/// each cluster a class and lets each member keep it with probability rho.
std::vector<int> class_assignment(std::span<const int> cluster_ids, std::span<const double> mixing,
                                  ClassMode mode, double rho, std::uint64_t seed);

/// Smallest value of (toroidal distance - r_i - r_j - gap) over all pairs;
/// non-negative iff the hard-core constraint holds. O(n^2).
double min_hardcore_slack(const SpatialField& field, double gap);

/// Chi-square statistic of particle counts over a cols x rows grid against
/// uniform expectation.
double uniformity_chi_square(const SpatialField& field, int cols, int rows);

/// CSV with header `x,y,radius,class_id` plus a JSON sidecar holding the
/// domain, class count and process tag. A leading `#` comment line is
/// written when `comment` is non-empty and skipped on read.
void write_field(const SpatialField& field, const std::filesystem::path& csv,
                 const std::filesystem::path& sidecar, const std::string& comment = {});
SpatialField read_field(const std::filesystem::path& csv, const std::filesystem::path& sidecar);

/// Sidecar path next to a field CSV: `name.csv` -> `name.json`.
std::filesystem::path sidecar_for(const std::filesystem::path& csv);

}  // namespace granvar
