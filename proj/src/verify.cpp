#include "granvar/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <sstream>

#include "granvar/estimators.hpp"
#include "granvar/fields.hpp"
#include "granvar/kernels.hpp"
#include "granvar/numeric.hpp"
#include "granvar/rng.hpp"
#include "granvar/selection.hpp"

namespace granvar {

namespace {

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

template <typename Fn>
CheckResult timed(const std::string& name, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  r.name = name;
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct RandomSample {
  ClassTable table;
  SampleSummary sample;
  DependenceMatrix dep;
};

RandomSample random_sample(Rng& rng) {
  const auto k = static_cast<Eigen::Index>(1 + rng.below(4));
  std::vector<double> m, c;
  std::vector<std::int64_t> n;
  for (Eigen::Index i = 0; i < k; ++i) {
    m.push_back(log_uniform(rng, 0.1, 10.0));
    c.push_back(rng.uniform() < 0.2 ? 0.0 : rng.uniform());
    n.push_back(static_cast<std::int64_t>(rng.below(60)));
  }
  c[0] = 0.05 + rng.uniform();
  n[0] += 1;
  auto table = ClassTable::from_vectors(m, c);
  auto sample = derive_summary(n, table);
  Matrix dep(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j) dep(i, j) = dep(j, i) = rng.uniform(-0.5, 0.5);
  return {std::move(table), std::move(sample), DependenceMatrix(dep)};
}

}  // namespace

CheckResult check_table1_closed_form() {
  return timed("table1_closed_form", [](CheckResult& r) {
    const auto grid = table1();
    double worst = 0.0;
    bool zero_column = true;
    for (std::size_t i = 0; i < CkkGrid::n_k.size(); ++i) {
      for (std::size_t j = 0; j < CkkGrid::ratio.size(); ++j) {
        const long double rr = CkkGrid::ratio[j], nk = CkkGrid::n_k[i];
        const long double ref = (rr - 1.0L) / (rr - nk);
        const double got = grid.c_kk(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (CkkGrid::ratio[j] == 1.0) zero_column = zero_column && got == 0.0;
        else worst = std::max(worst, static_cast<double>(std::fabs((got - ref) / ref)));
      }
    }
    r.passed = zero_column && worst <= 1e-14;
    std::ostringstream d;
    d << "max relative deviation " << worst << ", zero column " << (zero_column ? "exact" : "wrong");
    r.detail = d.str();
  });
}

CheckResult check_round_trip(std::uint64_t seed, int draws) {
  return timed("round_trip", [&](CheckResult& r) {
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < draws; ++t) {
      const double nk = static_cast<double>(2 + rng.below(9999));
      const double mk = log_uniform(rng, 1e-3, 1e3);
      const double ck = 0.01 + rng.uniform();
      const double rest = log_uniform(rng, 1e-3, 1e6);
      const double ms = nk * mk + rest;
      const double cs = nk * mk * ck / ms;
      const double vgy = cs * ck * mk / ms;
      const double ve = log_uniform(rng, 0.01, 0.99 * nk) * vgy;
      const auto sol = solve_c_kk({ve, nk}, vgy);
      const double back = ht_single_class(cs, ck, mk, ms, nk, sol.c_kk);
      worst = std::max(worst, std::abs(back - ve) / ve);
    }
    r.passed = worst <= 1e-12;
    std::ostringstream d;
    d << draws << " draws, max relative error " << worst;
    r.detail = d.str();
  });
}

CheckResult check_consistency_chain(std::uint64_t seed, int draws) {
  return timed("consistency_chain", [&](CheckResult& r) {
    Rng rng(seed);
    double worst_gf = 0.0, worst_conv = 0.0;
    for (int t = 0; t < draws; ++t) {
      const auto rs = random_sample(rng);
      const auto& s = rs.sample;
      const double ratio_exp = rng.uniform(2.0, 9.0);
      const double batch_mass = s.mass() * std::pow(10.0, ratio_exp);
      const auto batch = BatchSpec::correct(batch_mass, s.mass(), rs.table.size());
      const Matrix pij = second_order_inclusion(batch.first_order_q, rs.dep);
      const double general = variance_ht_general(s, rs.table, batch.first_order_q, pij, batch);
      const double finite = variance_ht_finite_batch(s, rs.table, rs.dep, batch);
      worst_gf = std::max(worst_gf, std::abs(general - finite) / std::abs(finite));

      const double infinite = variance_ht(s, rs.table, rs.dep).value;
      const double q = s.mass() / batch_mass;
      const double s2 = kernels::ht_first_sum(s.counts(), rs.table.masses(), rs.table.concentrations(),
                                              DependenceMatrix::zero(rs.table.size()).matrix(), s.mass());
      const double bound = 10.0 * q * s2 / std::abs(infinite);
      worst_conv = std::max(worst_conv, (std::abs(finite - infinite) / std::abs(infinite)) / bound);
    }
    r.passed = worst_gf <= 1e-10 && worst_conv <= 1.0;
    std::ostringstream d;
    d << draws << " draws, max |general-finite|/|finite| = " << worst_gf << ", max (finite->infinite error)/bound = " << worst_conv;
    r.detail = d.str();
  });
}

CheckResult check_enumeration_oracle(std::uint64_t seed, int designs, std::size_t replicates, unsigned threads) {
  return timed("enumeration_oracle", [&](CheckResult& r) {
    Rng rng(seed);
    std::size_t cells = 0, inside = 0, ve_ok = 0;
    for (int d = 0; d < designs; ++d) {
      const auto k = static_cast<Eigen::Index>(1 + rng.below(4));
      const auto n = static_cast<std::size_t>(2 + rng.below(11));
      std::vector<double> m, c;
      for (Eigen::Index i = 0; i < k; ++i) {
        m.push_back(rng.uniform(0.5, 2.0));
        c.push_back(rng.uniform());
      }
      const auto table = ClassTable::from_vectors(m, c);
      std::vector<int> class_of(n);
      for (auto& x : class_of) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
      Vector q(k);
      Matrix phi(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        q(i) = rng.uniform(0.15, 0.85);
        for (Eigen::Index j = i; j < k; ++j) phi(i, j) = phi(j, i) = log_uniform(rng, 0.25, 4.0);
      }
      const auto design = SelectionDesign::pairwise(q, phi);
      const auto exact = enumerate_design(design, table, class_of);
      ReplicateOptions opt;
      opt.replicates = replicates;
      opt.seed = stream_seed(seed, static_cast<std::uint64_t>(d));
      opt.threads = threads;
      opt.track_particles = true;
      const auto run = run_replicates(design, table, class_of, opt);
      const double rr = static_cast<double>(replicates);
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
          const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
          const double p = exact.particle_pij(ia, ib);
          const double se = std::sqrt(p * (1.0 - p) / rr);
          const double diff = std::abs(run.estimate.particle_pij(ia, ib) - p);
          ++cells;
          if (se > 0.0 ? diff <= 4.0 * se : diff == 0.0) ++inside;
        }
      }
      if (std::abs(run.stats.v_e - exact.var_cs) <= 4.0 * run.stats.v_e_se + 1e-15) ++ve_ok;
    }
    const double frac = static_cast<double>(inside) / static_cast<double>(cells);
    r.passed = frac >= 0.99 && ve_ok == static_cast<std::size_t>(designs);
    std::ostringstream d;
    d << designs << " designs, " << inside << "/" << cells << " particle cells within 4 SE, V_e within 4 SE in "
      << ve_ok << "/" << designs;
    r.detail = d.str();
  });
}

CheckResult check_bernoulli_independence() {
  return timed("bernoulli_independence", [](CheckResult& r) {
    const auto table = ClassTable::from_vectors(std::vector<double>{1.0, 2.0, 0.5},
                                                std::vector<double>{1.0, 0.0, 0.3});
    Vector q(3);
    q << 0.3, 0.6, 0.9;
    const std::vector<int> class_of{0, 1, 2, 0, 1, 2, 0, 1};
    const auto exact = enumerate_design(SelectionDesign::bernoulli(q), table, class_of);
    double worst = 0.0;
    for (Eigen::Index a = 0; a < exact.particle_pij.rows(); ++a)
      for (Eigen::Index b = 0; b < exact.particle_pij.cols(); ++b) {
        if (a == b) continue;
        const double want = q(class_of[static_cast<std::size_t>(a)]) * q(class_of[static_cast<std::size_t>(b)]);
        worst = std::max(worst, std::abs(exact.particle_pij(a, b) - want));
      }
    r.passed = worst <= 1e-14 && exact.c.cwiseAbs().maxCoeff() <= 1e-13;
    std::ostringstream d;
    d << "max |pi_ab - q_a q_b| = " << worst << ", max |C| = " << exact.c.cwiseAbs().maxCoeff();
    r.detail = d.str();
  });
}

CheckResult check_replicate_determinism(std::uint64_t seed, unsigned threads) {
  return timed("replicate_determinism", [&](CheckResult& r) {
    const auto table = ClassTable::from_vectors(std::vector<double>{1.0, 1.5}, std::vector<double>{1.0, 0.0},
                                                std::vector<double>{0.004, 0.004});
    ProcessParams p;
    p.kind = ProcessKind::MaternCluster;
    p.parent_intensity = 50;
    p.offspring_mean = 8;
    p.cluster_radius = 0.03;
    p.mixing = {0.5, 0.5};
    p.class_mode = ClassMode::ClusterCorrelated;
    p.rho = 0.7;
    const auto field = generate_field(p, table, seed);
    ReplicateOptions opt;
    opt.replicates = 500;
    opt.seed = seed;
    opt.threads = 1;
    const auto design = SelectionDesign::window(0.2, 0.2);
    const auto a = run_replicates(design, table, field, opt);
    opt.threads = std::max(2U, threads);
    const auto b = run_replicates(design, table, field, opt);
    bool same = a.stats.replicates.size() == b.stats.replicates.size();
    for (std::size_t i = 0; same && i < a.stats.replicates.size(); ++i) {
      const auto& x = a.stats.replicates[i];
      const auto& y = b.stats.replicates[i];
      same = x.counts == y.counts && std::memcmp(&x.mass, &y.mass, sizeof(double)) == 0 &&
             std::memcmp(&x.concentration, &y.concentration, sizeof(double)) == 0;
    }
    same = same && std::memcmp(&a.stats.v_e, &b.stats.v_e, sizeof(double)) == 0;
    r.passed = same;
    r.detail = same ? "identical replicate records and V_e" : "replicate records differ between thread counts";
  });
}

CheckResult check_hardcore_invariant(std::uint64_t seed) {
  return timed("hardcore_invariant", [&](CheckResult& r) {
    const auto table = ClassTable::from_vectors(std::vector<double>{1.0, 8.0}, std::vector<double>{1.0, 0.0},
                                                std::vector<double>{0.006, 0.012});
    ProcessParams p;
    p.kind = ProcessKind::Hardcore;
    p.intensity = 400;
    p.min_gap = 0.004;
    p.mixing = {0.6, 0.4};
    double worst = 1.0;
    for (int f = 0; f < 5; ++f) {
      const auto field = generate_field(p, table, stream_seed(seed, static_cast<std::uint64_t>(f)));
      worst = std::min(worst, min_hardcore_slack(field, p.min_gap));
    }
    r.passed = worst >= 0.0;
    std::ostringstream d;
    d << "min slack over 5 fields = " << worst;
    r.detail = d.str();
  });
}

CheckResult check_window_sign_laws(std::uint64_t seed, unsigned threads) {
  return timed("window_sign_laws", [&](CheckResult& r) {
    const int seeds = 12;
    auto mean_c00 = [&](const ProcessParams& p, const ClassTable& table, const SelectionDesign& w,
                        std::size_t reps, std::uint64_t salt) {
      MomentAccumulator acc;
      for (int s = 0; s < seeds; ++s) {
        const auto fseed = stream_seed(seed ^ salt, static_cast<std::uint64_t>(s));
        const auto field = generate_field(p, table, fseed);
        ReplicateOptions opt;
        opt.replicates = reps;
        opt.seed = mix64(fseed);
        opt.threads = threads;
        const auto run = run_replicates(w, table, field, opt);
        if (std::isfinite(run.estimate.c_hat(0, 0))) acc.add(run.estimate.c_hat(0, 0));
      }
      return std::pair{acc.mean(), acc.mean_se()};
    };
    const auto cluster_table = ClassTable::from_vectors(std::vector<double>{1.0, 1.0},
                                                        std::vector<double>{1.0, 0.0},
                                                        std::vector<double>{0.003, 0.003});
    ProcessParams m;
    m.kind = ProcessKind::MaternCluster;
    m.parent_intensity = 100;
    m.offspring_mean = 5;
    m.cluster_radius = 0.02;
    m.mixing = {0.5, 0.5};
    m.class_mode = ClassMode::ClusterCorrelated;
    m.rho = 1.0;
    const auto [cm, cse] = mean_c00(m, cluster_table, SelectionDesign::window(0.25, 0.25), 200, 1);

    const auto hc_table = ClassTable::from_vectors(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 0.0},
                                                   std::vector<double>{0.01, 0.01});
    ProcessParams h;
    h.kind = ProcessKind::Hardcore;
    h.intensity = 500;
    h.min_gap = 0.005;
    h.mixing = {0.5, 0.5};
    const auto [hm, hse] = mean_c00(h, hc_table, SelectionDesign::window(0.05, 0.05), 1000, 2);

    r.passed = cm + kZ95OneSided * cse < 0.0 && hm - kZ95OneSided * hse > 0.0;
    std::ostringstream d;
    d << "matern C_00 = " << cm << " +- " << cse << ", hardcore C_00 = " << hm << " +- " << hse;
    r.detail = d.str();
  });
}

std::vector<CheckResult> run_verification(const VerifyOptions& o) {
  std::vector<CheckResult> out;
  out.push_back(check_table1_closed_form());
  out.push_back(check_round_trip(o.seed));
  out.push_back(check_consistency_chain(mix64(o.seed)));
  out.push_back(check_bernoulli_independence());
  if (o.quick) {
    out.push_back(check_enumeration_oracle(o.seed, 4, 20000, o.threads));
    return out;
  }
  out.push_back(check_enumeration_oracle(o.seed, 20, 100000, o.threads));
  out.push_back(check_replicate_determinism(o.seed, o.threads));
  out.push_back(check_hardcore_invariant(o.seed));
  out.push_back(check_window_sign_laws(o.seed, o.threads));
  return out;
}

}  // namespace granvar
