#pragma once

// Scalar-generic kernels behind the typed estimator API. They take any Eigen
// vector/matrix expression, perform no validation, and accumulate with
// compensated sums. Counts may have a different scalar type from the masses;
// the masses' scalar is the working precision.

#include <Eigen/Core>

#include "granvar/numeric.hpp"

namespace granvar::kernels {

template <typename DN, typename DM>
typename DM::Scalar sample_mass(const Eigen::MatrixBase<DN>& n, const Eigen::MatrixBase<DM>& m) {
  using S = typename DM::Scalar;
  CompensatedSum<S> acc;
  for (Eigen::Index i = 0; i < m.size(); ++i) acc += static_cast<S>(n(i)) * m(i);
  return acc.value();
}

template <typename DN, typename DM, typename DC>
typename DM::Scalar sample_concentration(const Eigen::MatrixBase<DN>& n,
                                         const Eigen::MatrixBase<DM>& m,
                                         const Eigen::MatrixBase<DC>& c) {
  using S = typename DM::Scalar;
  CompensatedSum<S> acc;
  for (Eigen::Index i = 0; i < m.size(); ++i) acc += static_cast<S>(n(i)) * m(i) * c(i);
  return acc.value() / sample_mass(n, m);
}

/// (1/M^2) sum_i N_i m_i^2 (c_i - c_s)^2; the C-free part of the model.
template <typename DN, typename DM, typename DC, typename S>
S gy_term(const Eigen::MatrixBase<DN>& n, const Eigen::MatrixBase<DM>& m,
          const Eigen::MatrixBase<DC>& c, S cs, S mass) {
  CompensatedSum<S> acc;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const S d = c(i) - cs;
    acc += static_cast<S>(n(i)) * m(i) * m(i) * d * d;
  }
  return acc.value() / (mass * mass);
}

/// (1/M^2) sum_ij C_ij N_i N_j m_i m_j (c_i - c_s)(c_j - c_s).
template <typename DN, typename DM, typename DC, typename DD, typename S>
S correction_term(const Eigen::MatrixBase<DN>& n, const Eigen::MatrixBase<DM>& m,
                  const Eigen::MatrixBase<DC>& c, const Eigen::MatrixBase<DD>& dep, S cs,
                  S mass) {
  const Eigen::Index k = m.size();
  CompensatedSum<S> acc;
  for (Eigen::Index i = 0; i < k; ++i) {
    const S zi = static_cast<S>(n(i)) * m(i) * (c(i) - cs);
    for (Eigen::Index j = 0; j < k; ++j) {
      const S zj = static_cast<S>(n(j)) * m(j) * (c(j) - cs);
      acc += dep(i, j) * zi * zj;
    }
  }
  return acc.value() / (mass * mass);
}

/// (1/M^2) sum_i N_i m_i^2 c_i^2 / (1 - C_ii).
template <typename DN, typename DM, typename DC, typename DD, typename S>
S ht_first_sum(const Eigen::MatrixBase<DN>& n, const Eigen::MatrixBase<DM>& m,
               const Eigen::MatrixBase<DC>& c, const Eigen::MatrixBase<DD>& dep, S mass) {
  CompensatedSum<S> acc;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    acc += static_cast<S>(n(i)) * m(i) * m(i) * c(i) * c(i) / (S(1) - dep(i, i));
  }
  return acc.value() / (mass * mass);
}

/// (1/M^2) sum_ij C_ij N_i N_j c_i c_j m_i m_j / (1 - C_ij).
template <typename DN, typename DM, typename DC, typename DD, typename S>
S ht_second_sum(const Eigen::MatrixBase<DN>& n, const Eigen::MatrixBase<DM>& m,
                const Eigen::MatrixBase<DC>& c, const Eigen::MatrixBase<DD>& dep, S mass) {
  const Eigen::Index k = m.size();
  CompensatedSum<S> acc;
  for (Eigen::Index i = 0; i < k; ++i) {
    const S zi = static_cast<S>(n(i)) * m(i) * c(i);
    for (Eigen::Index j = 0; j < k; ++j) {
      const S zj = static_cast<S>(n(j)) * m(j) * c(j);
      acc += dep(i, j) * zi * zj / (S(1) - dep(i, j));
    }
  }
  return acc.value() / (mass * mass);
}

/// sum_i N_i m_i c_i / (M_batch pi_i).
template <typename DN, typename DM, typename DC, typename DP, typename S>
S pi_expanded(const Eigen::MatrixBase<DN>& n, const Eigen::MatrixBase<DM>& m,
              const Eigen::MatrixBase<DC>& c, const Eigen::MatrixBase<DP>& pi, S batch_mass) {
  CompensatedSum<S> acc;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    acc += static_cast<S>(n(i)) * m(i) * c(i) / (batch_mass * pi(i));
  }
  return acc.value();
}

/// General Horvitz-Thompson variance of the pi-expanded concentration:
///   sum_ij N_i N_j (1/(pi_i pi_j) - 1/pi_ij) m_i m_j c_i c_j / M_b^2
/// + sum_i  N_i (1/pi_ii - 1/pi_i) m_i^2 c_i^2 / M_b^2.
/// Pairs with a zero count contribute nothing and their pi_ij is not read.
template <typename DN, typename DM, typename DC, typename DP, typename DQ, typename S>
S ht_general(const Eigen::MatrixBase<DN>& n, const Eigen::MatrixBase<DM>& m,
             const Eigen::MatrixBase<DC>& c, const Eigen::MatrixBase<DP>& pi,
             const Eigen::MatrixBase<DQ>& pij, S batch_mass) {
  const Eigen::Index k = m.size();
  CompensatedSum<S> acc;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (n(i) == 0) continue;
    const S zi = static_cast<S>(n(i)) * m(i) * c(i);
    for (Eigen::Index j = 0; j < k; ++j) {
      if (n(j) == 0) continue;
      const S zj = static_cast<S>(n(j)) * m(j) * c(j);
      acc += (S(1) / (pi(i) * pi(j)) - S(1) / pij(i, j)) * zi * zj;
    }
    acc += static_cast<S>(n(i)) * (S(1) / pij(i, i) - S(1) / pi(i)) * m(i) * m(i) * c(i) * c(i);
  }
  return acc.value() / (batch_mass * batch_mass);
}

/// Finite-batch form after substituting pi_ij = q^2 (1 - C_ij), q = M_s/M_b:
///   sum_ij N_i N_j (1 - 1/(1 - C_ij)) m_i m_j c_i c_j / M_s^2
/// + sum_i (1/(1 - C_ii) - M_s/M_b) N_i m_i^2 c_i^2 / M_s^2.
template <typename DN, typename DM, typename DC, typename DD, typename S>
S ht_finite_batch(const Eigen::MatrixBase<DN>& n, const Eigen::MatrixBase<DM>& m,
                  const Eigen::MatrixBase<DC>& c, const Eigen::MatrixBase<DD>& dep, S mass,
                  S batch_mass) {
  const Eigen::Index k = m.size();
  const S ratio = mass / batch_mass;
  CompensatedSum<S> acc;
  for (Eigen::Index i = 0; i < k; ++i) {
    const S zi = static_cast<S>(n(i)) * m(i) * c(i);
    for (Eigen::Index j = 0; j < k; ++j) {
      const S zj = static_cast<S>(n(j)) * m(j) * c(j);
      acc += (S(1) - S(1) / (S(1) - dep(i, j))) * zi * zj;
    }
    acc += (S(1) / (S(1) - dep(i, i)) - ratio) * static_cast<S>(n(i)) * m(i) * m(i) * c(i) * c(i);
  }
  return acc.value() / (mass * mass);
}

/// Single non-zero class k: (1/M) c_s (1 - N_k C_kk) c_k m_k / (1 - C_kk).
template <typename S>
S ht_single_class(S cs, S ck, S mk, S mass, S nk, S ckk) {
  return cs * (S(1) - nk * ckk) * ck * mk / ((S(1) - ckk) * mass);
}

/// C_kk = (V_e - V_GY) / (V_e - N_k V_GY).
template <typename S>
S solve_c_kk(S ve, S nk, S vgy) {
  return (ve - vgy) / (ve - nk * vgy);
}

}  // namespace granvar::kernels
