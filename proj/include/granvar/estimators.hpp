#pragma once

#include <array>

#include "granvar/model.hpp"

namespace granvar {

/// Variance of the sample concentration split into its two sums.
/// For the Gy-generalized forms `gy_term` is the C-free part and
/// `correction_term` the C-dependent part; for the Horvitz-Thompson form they
/// are the first and second sum. In both cases value = gy_term - correction_term.
struct VarianceResult {
  double value = 0.0;
  double gy_term = 0.0;
  double correction_term = 0.0;
};

/// Empirical variance V_e and the count N_k (or expectation) of particles in
/// the only class with non-zero concentration.
struct EmpiricalVarianceInput {
  double v_e = 0.0;
  double n_k = 1.0;
};

struct CkkSolution {
  double c_kk = 0.0;
  /// False when c_kk >= 1: no valid selection process reproduces V_e.
  bool feasible = true;
};

/// pi_ij = q_i q_j (1 - C_ij). Throws FeasibilityError if the result leaves
/// [0, min(q_i, q_j)] and InvalidArgument on q outside (0, 1] or C_ij >= 1.
double second_order_inclusion(double q_i, double q_j, double c_ij);

/// Class-pair matrix of second-order inclusion probabilities from q and C.
Matrix second_order_inclusion(const Vector& q, const DependenceMatrix& c);

/// Variance at the expected sample composition (N_i', M_s', c_s').
VarianceResult variance_expected(const ExpectationSummary& exp, const ClassTable& table,
                                 const DependenceMatrix& c);

/// Plug-in estimator: same form evaluated at the observed (N_i, M_s, c_s).
VarianceResult variance_sample(const SampleSummary& s, const ClassTable& table,
                               const DependenceMatrix& c);

/// The C-free first term of variance_sample (Gy's model).
double variance_gy(const SampleSummary& s, const ClassTable& table);

/// c_s c_k m_k / M_s for a sample whose only non-zero-concentration class is
/// k. This is the value at which the solved C_kk is zero, and differs from
/// variance_gy() in general. Throws InvalidArgument if more than one class has
/// non-zero concentration, or none.
double v_gy_single_class(const SampleSummary& s, const ClassTable& table);

/// Index of the single class with non-zero concentration, or -1.
Eigen::Index single_nonzero_class(const ClassTable& table);

/// Horvitz-Thompson estimator for constant-mass, correct sampling from an
/// effectively infinite batch. Throws DegenerateDependence if any C_ij >= 1.
VarianceResult variance_ht(const SampleSummary& s, const ClassTable& table,
                           const DependenceMatrix& c);

/// Closed form of variance_ht when only class k has non-zero concentration.
double ht_single_class(double c_s, double c_k, double m_k, double m_s, double n_k, double c_kk);

/// Inverts ht_single_class for C_kk given V_e. Throws NonIdentifiable when
/// V_e == N_k V_GY and InvalidArgument unless v_gy > 0, v_e >= 0, n_k >= 1.
CkkSolution solve_c_kk(const EmpiricalVarianceInput& e, double v_gy);

/// Grid of solved C_kk over N_k in {10, 100, 1000, 10000} (rows) and
/// V_e/V_GY in {0.1, 0.2, 0.4, 1, 2, 4} (columns).
struct CkkGrid {
  static constexpr std::array<double, 4> n_k{10.0, 100.0, 1000.0, 10000.0};
  static constexpr std::array<double, 6> ratio{0.1, 0.2, 0.4, 1.0, 2.0, 4.0};
  Eigen::Matrix<double, 4, 6> c_kk;
};
CkkGrid table1();

/// pi-expanded estimator of the batch concentration, sum N_i m_i c_i /
/// (M_batch pi_i), with pi_i = batch.first_order_q.
double pi_expanded_concentration(const SampleSummary& s, const ClassTable& table,
                                 const BatchSpec& batch);

/// General Horvitz-Thompson variance from explicit first- and second-order
/// inclusion probabilities. Throws InvalidArgument on a zero or negative
/// probability in a denominator that is used.
double variance_ht_general(const SampleSummary& s, const ClassTable& table, const Vector& pi,
                           const Matrix& pij, const BatchSpec& batch);

/// Horvitz-Thompson variance with the finite-batch term M_s/M_batch kept.
/// Tends to variance_ht as M_batch grows.
double variance_ht_finite_batch(const SampleSummary& s, const ClassTable& table,
                                const DependenceMatrix& c, const BatchSpec& batch);

}  // namespace granvar
