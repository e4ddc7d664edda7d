#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "granvar/errors.hpp"

namespace granvar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// One particle class: mass and analyte concentration per particle, and the
/// radius used by the spatial modules (diameter = 2 * radius).
///
/// Concentrations are mass fractions but any proportional unit works; the
/// variance formulas are homogeneous of degree two in concentration. Values
/// above 1 are accepted.
struct ParticleClass {
  int id = 0;
  double mass = 1.0;
  double concentration = 0.0;
  double radius = 0.0;
};

/// Ordered, gap-free set of particle classes.
class ClassTable {
 public:
  /// Throws InvalidArgument unless K >= 1, ids are 0..K-1 in order,
  /// mass > 0, concentration >= 0 and radius >= 0.
  explicit ClassTable(std::vector<ParticleClass> classes);

  /// Convenience constructor; ids assigned in order, radii default to 0.
  static ClassTable from_vectors(std::span<const double> masses,
                                 std::span<const double> concentrations,
                                 std::span<const double> radii = {});

  Eigen::Index size() const { return static_cast<Eigen::Index>(classes_.size()); }
  const ParticleClass& operator[](Eigen::Index i) const { return classes_[static_cast<std::size_t>(i)]; }
  const std::vector<ParticleClass>& classes() const { return classes_; }

  const Vector& masses() const { return masses_; }
  const Vector& concentrations() const { return concentrations_; }
  const Vector& radii() const { return radii_; }

 private:
  std::vector<ParticleClass> classes_;
  Vector masses_;
  Vector concentrations_;
  Vector radii_;
};

/// Symmetric K x K matrix of dependent-selection parameters C_ij.
///
/// Construction does not validate; call validate_dependence(). Estimators
/// that divide by 1 - C_ij check their own preconditions.
class DependenceMatrix {
 public:
  DependenceMatrix() = default;
  explicit DependenceMatrix(Matrix c) : c_(std::move(c)) {}

  static DependenceMatrix zero(Eigen::Index k) { return DependenceMatrix(Matrix::Zero(k, k)); }
  static DependenceMatrix constant(Eigen::Index k, double value) {
    return DependenceMatrix(Matrix::Constant(k, k, value));
  }

  Eigen::Index size() const { return c_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return c_(i, j); }
  const Matrix& matrix() const { return c_; }

 private:
  Matrix c_;
};

/// Per-class counts N_i with the derived sample mass and concentration.
///
/// The mass and concentration are always recomputed from counts and the class
/// table, so the identities M = sum N_i m_i and c = sum N_i m_i c_i / M hold
/// by construction. `checked()` accepts externally supplied values and
/// rejects them if they disagree with the derivation beyond 1e-12 relative.
template <typename CountScalar>
class BasicSummary {
 public:
  using Counts = Eigen::Matrix<CountScalar, Eigen::Dynamic, 1>;

  static BasicSummary derive(const Counts& counts, const ClassTable& table);
  static BasicSummary checked(const Counts& counts, double mass, double concentration,
                              const ClassTable& table);

  const Counts& counts() const { return counts_; }
  Vector counts_real() const { return counts_.template cast<double>(); }
  double mass() const { return mass_; }
  double concentration() const { return concentration_; }
  Eigen::Index size() const { return counts_.size(); }

 private:
  BasicSummary(Counts counts, double mass, double concentration)
      : counts_(std::move(counts)), mass_(mass), concentration_(concentration) {}

  Counts counts_;
  double mass_ = 0.0;
  double concentration_ = 0.0;
};

/// Observed sample: integer counts, M_s, c_s.
using SampleSummary = BasicSummary<std::int64_t>;
/// Expected sample: real-valued expected counts N_i', M_s', c_s'.
using ExpectationSummary = BasicSummary<double>;

extern template class BasicSummary<std::int64_t>;
extern template class BasicSummary<double>;

/// Builds a SampleSummary from counts. Throws EmptySample if every count is
/// zero and InvalidArgument on a length mismatch or negative count.
SampleSummary derive_summary(std::span<const std::int64_t> counts, const ClassTable& table);
ExpectationSummary derive_expectation(std::span<const double> counts, const ClassTable& table);

/// Batch mass and per-class first-order inclusion probabilities q_i.
struct BatchSpec {
  double batch_mass = 0.0;
  Vector first_order_q;

  /// Correct sampling: every q_i = sample_mass / batch_mass.
  static BatchSpec correct(double batch_mass, double sample_mass, Eigen::Index k);

  /// Throws InvalidArgument unless batch_mass > 0 and 0 < q_i <= 1; with
  /// `require_correct`, also requires all q_i equal.
  void validate(bool require_correct = false) const;
};

struct DependenceViolation {
  enum class Kind { Shape, NotFinite, Asymmetric, NotBelowOne, Infeasible };
  Kind kind;
  Eigen::Index i;
  Eigen::Index j;
  std::string message;
};

/// Lists every violated constraint: square shape, finiteness, exact symmetry,
/// C_ij < 1 and, when q is given, C_ij >= 1 - 1/max(q_i, q_j) (equivalently
/// pi_ij <= min(q_i, q_j)). Empty result means valid.
std::vector<DependenceViolation> validate_dependence(const DependenceMatrix& c,
                                                     const std::optional<Vector>& q = std::nullopt);

/// Throws DegenerateDependence if any C_ij >= 1.
void require_below_one(const DependenceMatrix& c);

}  // namespace granvar
