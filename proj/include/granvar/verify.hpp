#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

namespace granvar {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  /// Only the fast closed-form checks plus a reduced enumeration oracle.
  bool quick = false;
  unsigned threads = 1;
  std::uint64_t seed = 20240601;
};

/// Solved C_kk grid against an independent long-double evaluation of
/// (r - 1)/(r - N_k), and the zero column at r = 1.
CheckResult check_table1_closed_form();
/// ht_single_class(solve_c_kk(V_e)) == V_e over random feasible draws.
CheckResult check_round_trip(std::uint64_t seed, int draws = 1000);
/// Probabilities pi_ij = q_i q_j (1 - C_ij) in the general Horvitz-Thompson variance reproduce
/// the finite-batch form, which tends to the infinite-batch form.
CheckResult check_consistency_chain(std::uint64_t seed, int draws = 1000);
/// Monte Carlo inclusion probabilities and V_e against exact enumeration.
CheckResult check_enumeration_oracle(std::uint64_t seed, int designs, std::size_t replicates, unsigned threads);
/// Bernoulli designs enumerate to pi_ij = q_i q_j exactly.
CheckResult check_bernoulli_independence();
/// Replicate statistics are bit-identical for 1 and several threads.
CheckResult check_replicate_determinism(std::uint64_t seed, unsigned threads);
/// Generated hard-core fields satisfy the minimum-distance constraint.
CheckResult check_hardcore_invariant(std::uint64_t seed);
/// Window oracle signs: clustering gives C_ii < 0, repulsion C_ii > 0.
CheckResult check_window_sign_laws(std::uint64_t seed, unsigned threads);

std::vector<CheckResult> run_verification(const VerifyOptions& options);

}  // namespace granvar
