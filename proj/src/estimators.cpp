#include "granvar/estimators.hpp"

#include <cmath>
#include <string>

#include "granvar/kernels.hpp"

namespace granvar {

namespace {

void require_sizes(Eigen::Index counts, const ClassTable& table, const DependenceMatrix* c) {
  if (counts != table.size())
    throw InvalidArgument("summary has " + std::to_string(counts) + " classes, table has " +
                          std::to_string(table.size()));
  if (c != nullptr && (c->matrix().rows() != table.size() || c->matrix().cols() != table.size()))
    throw InvalidArgument("dependence matrix must be K x K with K = " + std::to_string(table.size()));
}

template <typename Summary>
VarianceResult gy_generalized(const Summary& s, const ClassTable& table, const DependenceMatrix& c) {
  require_sizes(s.size(), table, &c);
  const auto& n = s.counts();
  const double gy = kernels::gy_term(n, table.masses(), table.concentrations(), s.concentration(), s.mass());
  const double corr = kernels::correction_term(n, table.masses(), table.concentrations(), c.matrix(),
                                               s.concentration(), s.mass());
  return {gy - corr, gy, corr};
}

}  // namespace

double second_order_inclusion(double q_i, double q_j, double c_ij) {
  if (!(q_i > 0.0 && q_i <= 1.0) || !(q_j > 0.0 && q_j <= 1.0))
    throw InvalidArgument("first-order probabilities must lie in (0, 1]");
  if (!(c_ij < 1.0)) throw InvalidArgument("C_ij must be < 1");
  const double pij = q_i * q_j * (1.0 - c_ij);
  if (pij < 0.0 || pij > std::min(q_i, q_j))
    throw FeasibilityError("pi_ij = " + std::to_string(pij) + " outside [0, min(q_i, q_j)]");
  return pij;
}

Matrix second_order_inclusion(const Vector& q, const DependenceMatrix& c) {
  if (c.size() != q.size()) throw InvalidArgument("q and C size mismatch");
  Matrix pij(q.size(), q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i)
    for (Eigen::Index j = 0; j < q.size(); ++j) pij(i, j) = second_order_inclusion(q(i), q(j), c(i, j));
  return pij;
}

VarianceResult variance_expected(const ExpectationSummary& exp, const ClassTable& table,
                                 const DependenceMatrix& c) {
  return gy_generalized(exp, table, c);
}

VarianceResult variance_sample(const SampleSummary& s, const ClassTable& table,
                               const DependenceMatrix& c) {
  return gy_generalized(s, table, c);
}

double variance_gy(const SampleSummary& s, const ClassTable& table) {
  require_sizes(s.size(), table, nullptr);
  return kernels::gy_term(s.counts(), table.masses(), table.concentrations(), s.concentration(), s.mass());
}

Eigen::Index single_nonzero_class(const ClassTable& table) {
  Eigen::Index found = -1;
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    if (table[i].concentration != 0.0) {
      if (found >= 0) return -1;
      found = i;
    }
  }
  return found;
}

double v_gy_single_class(const SampleSummary& s, const ClassTable& table) {
  require_sizes(s.size(), table, nullptr);
  const Eigen::Index k = single_nonzero_class(table);
  if (k < 0) throw InvalidArgument("V_GY needs exactly one class with non-zero concentration");
  return s.concentration() * table[k].concentration * table[k].mass / s.mass();
}

VarianceResult variance_ht(const SampleSummary& s, const ClassTable& table, const DependenceMatrix& c) {
  require_sizes(s.size(), table, &c);
  require_below_one(c);
  const auto& n = s.counts();
  const double first = kernels::ht_first_sum(n, table.masses(), table.concentrations(), c.matrix(), s.mass());
  const double second = kernels::ht_second_sum(n, table.masses(), table.concentrations(), c.matrix(), s.mass());
  return {first - second, first, second};
}

double ht_single_class(double c_s, double c_k, double m_k, double m_s, double n_k, double c_kk) {
  if (!(c_kk < 1.0)) throw DegenerateDependence("C_kk must be < 1");
  if (!(m_s > 0.0)) throw InvalidArgument("sample mass must be > 0");
  return kernels::ht_single_class(c_s, c_k, m_k, m_s, n_k, c_kk);
}

CkkSolution solve_c_kk(const EmpiricalVarianceInput& e, double v_gy) {
  if (!(v_gy > 0.0)) throw InvalidArgument("V_GY must be > 0");
  if (!(e.v_e >= 0.0)) throw InvalidArgument("V_e must be >= 0");
  if (!(e.n_k >= 1.0)) throw InvalidArgument("N_k must be >= 1");
  if (e.v_e - e.n_k * v_gy == 0.0)
    throw NonIdentifiable("V_e equals N_k * V_GY; C_kk is not identifiable");
  const double c = kernels::solve_c_kk(e.v_e, e.n_k, v_gy) + 0.0;  // folds -0 into +0
  return {c, c < 1.0};
}

CkkGrid table1() {
  CkkGrid grid;
  for (std::size_t r = 0; r < CkkGrid::n_k.size(); ++r) {
    for (std::size_t k = 0; k < CkkGrid::ratio.size(); ++k) {
      // V_GY = 1 makes V_e equal to the tabulated ratio.
      grid.c_kk(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          solve_c_kk({CkkGrid::ratio[k], CkkGrid::n_k[r]}, 1.0).c_kk;
    }
  }
  return grid;
}

double pi_expanded_concentration(const SampleSummary& s, const ClassTable& table, const BatchSpec& batch) {
  require_sizes(s.size(), table, nullptr);
  if (batch.first_order_q.size() != table.size()) throw InvalidArgument("pi vector size mismatch");
  if (!(batch.batch_mass > 0.0)) throw InvalidArgument("batch mass must be > 0");
  for (Eigen::Index i = 0; i < table.size(); ++i)
    if (!(batch.first_order_q(i) > 0.0)) throw InvalidArgument("pi_" + std::to_string(i) + " must be > 0");
  return kernels::pi_expanded(s.counts(), table.masses(), table.concentrations(), batch.first_order_q,
                              batch.batch_mass);
}

double variance_ht_general(const SampleSummary& s, const ClassTable& table, const Vector& pi,
                           const Matrix& pij, const BatchSpec& batch) {
  require_sizes(s.size(), table, nullptr);
  const Eigen::Index k = table.size();
  if (pi.size() != k || pij.rows() != k || pij.cols() != k)
    throw InvalidArgument("inclusion probability shapes must match K = " + std::to_string(k));
  if (!(batch.batch_mass > 0.0)) throw InvalidArgument("batch mass must be > 0");
  const auto& n = s.counts();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (n(i) == 0) continue;
    if (!(pi(i) > 0.0)) throw InvalidArgument("pi_" + std::to_string(i) + " must be > 0");
    for (Eigen::Index j = 0; j < k; ++j) {
      if (n(j) > 0 && !(pij(i, j) > 0.0))
        throw InvalidArgument("pi_ij must be > 0 at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  return kernels::ht_general(n, table.masses(), table.concentrations(), pi, pij, batch.batch_mass);
}

double variance_ht_finite_batch(const SampleSummary& s, const ClassTable& table, const DependenceMatrix& c,
                                const BatchSpec& batch) {
  require_sizes(s.size(), table, &c);
  require_below_one(c);
  if (!(batch.batch_mass >= s.mass())) throw InvalidArgument("batch mass must be >= sample mass");
  return kernels::ht_finite_batch(s.counts(), table.masses(), table.concentrations(), c.matrix(), s.mass(),
                                  batch.batch_mass);
}

}  // namespace granvar
