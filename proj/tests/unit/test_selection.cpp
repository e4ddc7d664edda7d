#include <doctest.h>

#include <cmath>
#include <vector>

#include "granvar/selection.hpp"

using namespace granvar;

namespace {

ClassTable two_class() {
  const std::vector<double> m{1.0, 1.0};
  const std::vector<double> c{1.0, 0.0};
  return ClassTable::from_vectors(m, c);
}

ClassTable one_class() {
  const std::vector<double> m{1.0};
  const std::vector<double> c{1.0};
  return ClassTable::from_vectors(m, c);
}

SelectionDesign pair_design(double q, double phi) {
  return SelectionDesign::pairwise(Vector::Constant(1, q), Matrix::Constant(1, 1, phi));
}

}  // namespace

TEST_CASE("enumeration of a Bernoulli design gives independent inclusions") {
  const auto t = one_class();
  const std::vector<int> cls{0, 0, 0};
  const auto e = enumerate_design(SelectionDesign::bernoulli(Vector::Constant(1, 0.3)), t, cls);
  for (int a = 0; a < 3; ++a) {
    CHECK(e.particle_pi(a) == doctest::Approx(0.3).epsilon(1e-15));
    for (int b = 0; b < 3; ++b) {
      if (a != b) CHECK(e.particle_pij(a, b) == doctest::Approx(0.09).epsilon(1e-14));
    }
  }
  CHECK(e.pi(0) == doctest::Approx(0.3));
  CHECK(std::abs(e.c(0, 0)) < 1e-14);
  CHECK(e.p_empty == doctest::Approx(0.343).epsilon(1e-14));
  CHECK(e.pi_spread(0) < 1e-15);
}

TEST_CASE("pairwise pmf with phi = 0 forbids joint inclusion") {
  const auto t = one_class();
  const std::vector<int> cls{0, 0};
  const auto e = enumerate_design(pair_design(0.5, 0.0), t, cls);
  CHECK(e.pi(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(e.pij(0, 0) == 0.0);
  CHECK(e.c(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("pairwise pmf with phi = 2 favours joint inclusion") {
  const auto t = one_class();
  const std::vector<int> cls{0, 0};
  const auto e = enumerate_design(pair_design(0.5, 2.0), t, cls);
  CHECK(e.pi(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(e.pij(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(e.c(0, 0) == doctest::Approx(-1.0 / 9.0).epsilon(1e-14));
  CHECK(e.p_empty == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("enumerated moments of c_s") {
  const auto t = two_class();
  const std::vector<int> cls{0, 1};
  const auto d = SelectionDesign::pairwise(Vector::Constant(2, 0.5), Matrix::Constant(2, 2, 2.0));
  const auto e = enumerate_design(d, t, cls);
  CHECK(e.mean_cs == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(e.var_cs == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(std::isnan(e.pij(0, 0)));
}

TEST_CASE("enumeration rejects unsupported designs") {
  const auto t = one_class();
  const std::vector<int> big(SelectionDesign::kMaxEnumeration + 1, 0);
  CHECK_THROWS_AS(enumerate_design(SelectionDesign::bernoulli(Vector::Constant(1, 0.5)), t, big),
                  InvalidArgument);
  const std::vector<int> two{0, 0};
  CHECK_THROWS_AS(enumerate_design(SelectionDesign::window(0.5, 0.5), t, two), InvalidArgument);
  CHECK_THROWS_AS(SelectionDesign::bernoulli(Vector::Constant(1, 1.5)).validate(1), InvalidArgument);
}

TEST_CASE("Monte Carlo inclusion estimates agree with enumeration") {
  const auto t = two_class();
  const std::vector<int> cls{0, 0, 0, 1, 1, 1, 1};
  Matrix phi(2, 2);
  phi << 1.8, 0.6, 0.6, 1.2;
  Vector q(2);
  q << 0.4, 0.6;
  const auto d = SelectionDesign::pairwise(q, phi);
  const auto exact = enumerate_design(d, t, cls);
  ReplicateOptions opt;
  opt.replicates = 40000;
  opt.seed = 77;
  opt.threads = 4;
  const auto run = run_replicates(d, t, cls, opt);
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(std::abs(run.estimate.pi(i) - exact.pi(i)) <= 4.0 * run.estimate.pi_se(i));
    for (Eigen::Index j = 0; j < 2; ++j) {
      CHECK(std::abs(run.estimate.pij(i, j) - exact.pij(i, j)) <= 4.0 * run.estimate.pij_se(i, j));
    }
  }
  CHECK(std::abs(run.stats.v_e - exact.var_cs) <= 4.0 * run.stats.v_e_se);
  CHECK(std::abs(run.stats.mean_cs - exact.mean_cs) <= 0.02);
}

TEST_CASE("replicates are independent of the thread count") {
  const auto t = two_class();
  const std::vector<int> cls{0, 1, 0, 1, 0, 1, 1, 1};
  const auto d = SelectionDesign::bernoulli(Vector::Constant(2, 0.3));
  ReplicateOptions opt;
  opt.replicates = 500;
  opt.seed = 3;
  opt.track_particles = true;
  const auto a = run_replicates(d, t, cls, opt);
  opt.threads = 5;
  const auto b = run_replicates(d, t, cls, opt);
  CHECK(a.stats.v_e == b.stats.v_e);
  CHECK(a.estimate.pij == b.estimate.pij);
  CHECK(a.estimate.particle_pij == b.estimate.particle_pij);
  CHECK(a.stats.empty_count == b.stats.empty_count);
}

TEST_CASE("sampling everything has zero variance") {
  const auto t = two_class();
  SUBCASE("Bernoulli with q = 1") {
    const std::vector<int> cls{0, 1, 1, 0, 1};
    ReplicateOptions opt;
    opt.replicates = 50;
    const auto run = run_replicates(SelectionDesign::bernoulli(Vector::Constant(2, 1.0)), t, cls, opt);
    CHECK(run.stats.v_e == 0.0);
    CHECK(run.stats.empty_count == 0);
    CHECK(run.estimate.pi(0) == 1.0);
  }
  SUBCASE("window covering the whole domain") {
    ProcessParams p;
    p.intensity = 200;
    p.mixing = {0.5, 0.5};
    const auto field = generate_field(p, t, 9);
    ReplicateOptions opt;
    opt.replicates = 50;
    const auto run = run_replicates(SelectionDesign::window(1.0, 1.0), t, field, opt);
    CHECK(run.stats.v_e == 0.0);
    CHECK(run.stats.mass_cv == 0.0);
  }
}

TEST_CASE("window replicates over one field") {
  const auto t = two_class();
  ProcessParams p;
  p.intensity = 400;
  p.mixing = {0.5, 0.5};
  const auto field = generate_field(p, t, 21);
  ReplicateOptions opt;
  opt.replicates = 2000;
  opt.seed = 8;
  const auto run = run_replicates(SelectionDesign::window(0.3, 0.3), t, field, opt);
  CHECK(run.stats.replicates.size() == 2000);
  CHECK(run.estimate.population == field.class_counts());
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(std::abs(run.estimate.pi(i) - 0.09) <= 4.0 * run.estimate.pi_se(i) + 0.01);
  }
}

TEST_CASE("ensemble replicates target the process") {
  const auto t = two_class();
  ProcessParams p;
  p.intensity = 300;
  p.mixing = {0.5, 0.5};
  ReplicateOptions opt;
  opt.replicates = 1500;
  opt.seed = 4;
  opt.threads = 3;
  const auto run = run_replicates_ensemble(SelectionDesign::window(0.3, 0.3), t, p, opt);
  const auto dep = empirical_dependence(run.estimate);
  int covered = 0;
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = i; j < 2; ++j) covered += dep.covers_zero(i, j) ? 1 : 0;
  }
  CHECK(covered >= 2);
  opt.threads = 1;
  const auto again = run_replicates_ensemble(SelectionDesign::window(0.3, 0.3), t, p, opt);
  CHECK(again.stats.v_e == run.stats.v_e);

  opt.track_particles = true;
  CHECK_THROWS_AS(run_replicates_ensemble(SelectionDesign::window(0.3, 0.3), t, p, opt), InvalidArgument);
  opt.track_particles = false;
  CHECK_THROWS_AS(
      run_replicates_ensemble(SelectionDesign::bernoulli(Vector::Constant(2, 0.5)), t, p, opt),
      InvalidArgument);
}

TEST_CASE("empirical dependence flags unestimable pairs") {
  InclusionEstimate est;
  est.pi = Vector(2);
  est.pi << 0.5, 0.0;
  est.pi_se = Vector::Constant(2, 0.01);
  est.pij = Matrix::Zero(2, 2);
  est.pij(0, 0) = 0.25;
  est.pij_se = Matrix::Constant(2, 2, 0.01);
  est.c_hat = Matrix::Zero(2, 2);
  est.c_se = Matrix::Constant(2, 2, 0.01);
  est.replicates = 100;
  est.population = CountVector::Constant(2, 5);
  const auto dep = empirical_dependence(est);
  CHECK(dep.estimable(0, 0));
  CHECK_FALSE(dep.estimable(0, 1));
  CHECK_FALSE(dep.estimable(1, 1));
  CHECK(dep.usable().matrix()(1, 1) == 0.0);
}

TEST_CASE("comparison rows") {
  const auto t = two_class();
  const std::vector<int> cls{0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
  ReplicateOptions opt;
  opt.replicates = 3000;
  opt.seed = 12;
  const auto run = run_replicates(SelectionDesign::bernoulli(Vector::Constant(2, 0.5)), t, cls, opt);
  const auto report = compare_estimators(run.stats, run.estimate, t);
  for (const char* name : {"sample_chat_replicate", "sample_gy_replicate", "ht_chat_replicate",
                           "expected_chat_mean", "expected_gy_mean", "ht_chat_mean"}) {
    CHECK_NOTHROW(report.row(name));
  }
  CHECK(report.v_e == run.stats.v_e);
  CHECK_THROWS(report.row("missing"));
}
