#include <doctest.h>

#include <cmath>
#include <vector>

#include "granvar/estimators.hpp"
#include "granvar/rng.hpp"

using namespace granvar;

namespace {

ClassTable make_table(std::vector<double> m, std::vector<double> c) {
  return ClassTable::from_vectors(m, c);
}

SampleSummary make_sample(std::vector<std::int64_t> n, const ClassTable& t) {
  return derive_summary(n, t);
}

/// Plain double loops over the defining sums, kept independent of the
/// library's vectorised implementation.
double naive_plugin(const std::vector<double>& n, const std::vector<double>& m,
                    const std::vector<double>& c, const Matrix& cc) {
  double ms = 0.0, num = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    ms += n[i] * m[i];
    num += n[i] * m[i] * c[i];
  }
  const double cs = num / ms;
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    first += n[i] * m[i] * m[i] * (c[i] - cs) * (c[i] - cs);
    for (std::size_t j = 0; j < n.size(); ++j) {
      second += cc(i, j) * n[i] * n[j] * m[i] * m[j] * (c[i] - cs) * (c[j] - cs);
    }
  }
  return (first - second) / (ms * ms);
}

double naive_ht(const std::vector<double>& n, const std::vector<double>& m,
                const std::vector<double>& c, const Matrix& cc) {
  double ms = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) ms += n[i] * m[i];
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    first += n[i] * m[i] * m[i] * c[i] * c[i] / (1.0 - cc(i, i));
    for (std::size_t j = 0; j < n.size(); ++j) {
      second += cc(i, j) * n[i] * n[j] * c[i] * c[j] * m[i] * m[j] / (1.0 - cc(i, j));
    }
  }
  return (first - second) / (ms * ms);
}

}  // namespace

TEST_CASE("second_order_inclusion") {
  CHECK(second_order_inclusion(0.5, 0.5, 0.0) == 0.25);
  CHECK(second_order_inclusion(0.5, 0.5, 0.999) == doctest::Approx(2.5e-4).epsilon(1e-12));
  CHECK(second_order_inclusion(0.2, 0.1, -0.5) == doctest::Approx(0.03).epsilon(1e-14));
  CHECK_THROWS_AS(second_order_inclusion(0.5, 0.1, -20.0), FeasibilityError);
  CHECK_THROWS_AS(second_order_inclusion(0.5, 0.5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(second_order_inclusion(0.0, 0.5, 0.0), InvalidArgument);

  Vector q(2);
  q << 0.2, 0.1;
  Matrix c(2, 2);
  c << 0.0, -0.5, -0.5, 0.5;
  const Matrix p = second_order_inclusion(q, DependenceMatrix(c));
  CHECK(p(0, 0) == doctest::Approx(0.04));
  CHECK(p(0, 1) == doctest::Approx(0.03));
  CHECK(p(1, 0) == p(0, 1));
  CHECK(p(1, 1) == doctest::Approx(0.005));
}

TEST_CASE("variance_expected and variance_sample on the two-class hand case") {
  const auto t = make_table({1, 1}, {1, 0});
  Matrix c = Matrix::Zero(2, 2);
  c(0, 0) = 0.02;
  const std::vector<double> ne{5, 5};
  const auto r = variance_expected(derive_expectation(ne, t), t, DependenceMatrix(c));
  CHECK(r.gy_term == doctest::Approx(0.025).epsilon(1e-14));
  CHECK(r.correction_term == doctest::Approx(0.00125).epsilon(1e-14));
  CHECK(r.value == doctest::Approx(0.02375).epsilon(1e-14));

  const auto s = variance_sample(make_sample({5, 5}, t), t, DependenceMatrix(c));
  CHECK(s.value == doctest::Approx(0.02375).epsilon(1e-14));
  CHECK(s.value == doctest::Approx(s.gy_term - s.correction_term).epsilon(1e-12));
}

TEST_CASE("equal concentrations give zero variance") {
  const auto t = make_table({1, 2, 3}, {0.4, 0.4, 0.4});
  Matrix c(3, 3);
  c << 0.1, -0.2, 0.3, -0.2, 0.5, 0.0, 0.3, 0.0, -0.7;
  const auto s = make_sample({3, 4, 5}, t);
  CHECK(std::abs(variance_sample(s, t, DependenceMatrix(c)).value) < 1e-16);
  CHECK(std::abs(variance_gy(s, t)) < 1e-16);
}

TEST_CASE("zero dependence reduces to the Gy term") {
  const auto t = make_table({0.5, 2.0, 1.0}, {0.9, 0.1, 0.0});
  const auto s = make_sample({7, 3, 11}, t);
  const auto r = variance_sample(s, t, DependenceMatrix::zero(3));
  CHECK(r.correction_term == 0.0);
  CHECK(r.value == r.gy_term);
  CHECK(r.value == doctest::Approx(variance_gy(s, t)).epsilon(1e-15));
}

TEST_CASE("constant dependence matrix has no correction") {
  const auto t = make_table({0.5, 2.0, 1.0}, {0.9, 0.1, 0.0});
  const auto s = make_sample({7, 3, 11}, t);
  const auto r = variance_sample(s, t, DependenceMatrix::constant(3, 0.37));
  CHECK(std::abs(r.correction_term) <= 1e-12 * r.gy_term);
}

TEST_CASE("plug-in estimator is linear in C and matches naive sums") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(5));
    std::vector<double> m(k), c(k), nr(k);
    std::vector<std::int64_t> n(k);
    Matrix cc(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      m[i] = rng.uniform(0.1, 3.0);
      c[i] = rng.uniform(0.0, 2.0);
      n[i] = 1 + static_cast<std::int64_t>(rng.below(50));
      nr[i] = static_cast<double>(n[i]);
      for (Eigen::Index j = 0; j <= i; ++j) cc(i, j) = cc(j, i) = rng.uniform(-0.9, 0.9);
    }
    const auto t = ClassTable::from_vectors(m, c);
    const auto s = derive_summary(n, t);
    const auto r1 = variance_sample(s, t, DependenceMatrix(cc));
    const auto r2 = variance_sample(s, t, DependenceMatrix(Matrix(2.0 * cc)));
    const double scale = r1.gy_term + std::abs(r1.correction_term) + 1e-300;
    CHECK(std::abs(r1.value - naive_plugin(nr, m, c, cc)) <= 1e-12 * scale);
    CHECK(std::abs(r2.correction_term - 2.0 * r1.correction_term) <= 1e-12 * scale);
    CHECK(r2.gy_term == doctest::Approx(r1.gy_term).epsilon(1e-15));

    const double ht = variance_ht(s, t, DependenceMatrix(cc)).value;
    const double ref = naive_ht(nr, m, c, cc);
    CHECK(std::abs(ht - ref) <= 1e-11 * (std::abs(ref) + 1e-300) + 1e-14 * std::abs(ref));
  }
}

TEST_CASE("plug-in estimator is shift invariant, Horvitz-Thompson is not") {
  const auto t = make_table({1.0, 2.0}, {0.8, 0.1});
  const auto shifted = make_table({1.0, 2.0}, {1.3, 0.6});
  Matrix cc(2, 2);
  cc << -0.1, 0.2, 0.2, 0.05;
  const auto s = make_sample({6, 9}, t);
  const auto s2 = make_sample({6, 9}, shifted);
  CHECK(variance_sample(s2, shifted, DependenceMatrix(cc)).value ==
        doctest::Approx(variance_sample(s, t, DependenceMatrix(cc)).value).epsilon(1e-12));
  CHECK(variance_ht(s2, shifted, DependenceMatrix(cc)).value !=
        doctest::Approx(variance_ht(s, t, DependenceMatrix(cc)).value).epsilon(1e-3));
}

TEST_CASE("variance_gy and the single-class V_GY are distinct") {
  const auto t = make_table({1, 1}, {1, 0});
  const auto s = make_sample({5, 5}, t);
  CHECK(variance_gy(s, t) == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(v_gy_single_class(s, t) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(single_nonzero_class(t) == 0);
  const auto both = make_table({1, 1}, {1, 0.5});
  CHECK(single_nonzero_class(both) == -1);
  CHECK_THROWS_AS(v_gy_single_class(make_sample({5, 5}, both), both), InvalidArgument);
  const auto single = make_table({2.0}, {0.3});
  CHECK(variance_gy(make_sample({4}, single), single) == 0.0);
}

TEST_CASE("variance_ht hand cases") {
  const auto t = make_table({1, 1}, {1, 0});
  const auto s = make_sample({5, 5}, t);
  CHECK(variance_ht(s, t, DependenceMatrix::zero(2)).value == doctest::Approx(0.05).epsilon(1e-15));
  Matrix c = Matrix::Zero(2, 2);
  c(0, 0) = -0.5;
  const auto r = variance_ht(s, t, DependenceMatrix(c));
  CHECK(r.value == doctest::Approx(0.05 * 3.5 / 1.5).epsilon(1e-14));
  CHECK(r.value == doctest::Approx(r.gy_term - r.correction_term).epsilon(1e-14));
  const auto zero = make_table({1, 1}, {0, 0});
  CHECK(variance_ht(make_sample({5, 5}, zero), zero, DependenceMatrix(c)).value == 0.0);
  c(0, 1) = c(1, 0) = 1.0;
  CHECK_THROWS_AS(variance_ht(s, t, DependenceMatrix(c)), DegenerateDependence);
}

TEST_CASE("ht_single_class") {
  CHECK(ht_single_class(0.5, 1.0, 1.0, 10.0, 5.0, 0.0) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(ht_single_class(0.5, 1.0, 1.0, 10.0, 5.0, -0.5) ==
        doctest::Approx(0.35 / 3.0).epsilon(1e-14));
  for (double ckk : {-3.0, -0.2, 0.4, 0.95}) {
    CHECK(ht_single_class(0.2, 0.7, 3.0, 40.0, 1.0, ckk) ==
          doctest::Approx(0.2 * 0.7 * 3.0 / 40.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(ht_single_class(0.5, 1.0, 1.0, 10.0, 5.0, 1.0), DegenerateDependence);
}

TEST_CASE("ht_single_class agrees with variance_ht on the embedded problem") {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const double mk = rng.uniform(0.1, 5.0);
    const double ck = rng.uniform(0.01, 3.0);
    const double m1 = rng.uniform(0.1, 5.0);
    const std::int64_t nk = 1 + static_cast<std::int64_t>(rng.below(200));
    const std::int64_t n1 = static_cast<std::int64_t>(rng.below(200));
    const double ckk = rng.uniform(-0.99, 0.99);
    const auto t = make_table({mk, m1}, {ck, 0.0});
    const auto s = make_sample({nk, n1}, t);
    Matrix c = Matrix::Zero(2, 2);
    c(0, 0) = ckk;
    c(0, 1) = c(1, 0) = rng.uniform(-0.9, 0.9);
    c(1, 1) = rng.uniform(-0.9, 0.9);
    const double general = variance_ht(s, t, DependenceMatrix(c)).value;
    const double closed =
        ht_single_class(s.concentration(), ck, mk, s.mass(), static_cast<double>(nk), ckk);
    CHECK(std::abs(general - closed) <= 1e-10 * std::abs(closed) + 1e-300);
  }
}

TEST_CASE("solve_c_kk") {
  const auto at = [](double r, double n) { return solve_c_kk({r, n}, 1.0).c_kk; };
  CHECK(at(0.1, 10) == doctest::Approx(0.9 / 9.9).epsilon(1e-14));
  CHECK(at(4.0, 10) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(at(2.0, 100) == doctest::Approx(-1.0 / 98.0).epsilon(1e-14));
  for (double n : {1.5, 10.0, 1e4}) {
    CHECK(at(1.0, n) == 0.0);
    CHECK_FALSE(std::signbit(solve_c_kk({2e-3, n}, 2e-3).c_kk));
  }
  CHECK_THROWS_AS(solve_c_kk({10.0, 10.0}, 1.0), NonIdentifiable);
  CHECK_THROWS_AS(solve_c_kk({1.0, 10.0}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(solve_c_kk({-1.0, 10.0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(solve_c_kk({1.0, 0.5}, 1.0), InvalidArgument);
  const auto beyond = solve_c_kk({20.0, 10.0}, 1.0);
  CHECK(beyond.c_kk == doctest::Approx(1.9).epsilon(1e-14));
  CHECK_FALSE(beyond.feasible);
  CHECK(solve_c_kk({0.1, 10.0}, 1.0).feasible);
}

TEST_CASE("solve_c_kk round-trips through ht_single_class") {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const double n = std::floor(std::exp(rng.uniform(std::log(2.0), std::log(1e4))));
    const double v_gy = std::exp(rng.uniform(std::log(1e-8), std::log(1e-1)));
    double r = std::exp(rng.uniform(std::log(0.05), std::log(0.95 * n)));
    const double v_e = r * v_gy;
    const auto sol = solve_c_kk({v_e, n}, v_gy);
    REQUIRE(sol.c_kk < 1.0);
    const double m_s = 10.0, c_s = 0.3, m_k = 0.1;
    const double c_k = v_gy * m_s / (c_s * m_k);
    const double back = ht_single_class(c_s, c_k, m_k, m_s, n, sol.c_kk);
    CHECK(std::abs(back - v_e) <= 1e-12 * v_e);
  }
}

TEST_CASE("C_kk grid matches the closed form and the printed cells") {
  const auto g = table1();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double r = CkkGrid::ratio[j];
      const double n = CkkGrid::n_k[i];
      CHECK(g.c_kk(i, j) == doctest::Approx((r - 1.0) / (r - n)).epsilon(1e-14));
    }
  }
  CHECK(g.c_kk(3, 0) == doctest::Approx(9.0e-5).epsilon(0.01));
  CHECK(g.c_kk(2, 4) == doctest::Approx(-1.0e-3).epsilon(0.01));
  CHECK(g.c_kk(1, 2) == doctest::Approx(6.0e-3).epsilon(0.01));
  CHECK(g.c_kk(0, 5) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK((g.c_kk.col(3).array() == 0.0).all());
}

TEST_CASE("pi_expanded_concentration") {
  const auto t = make_table({1.0}, {1.0});
  BatchSpec b{100.0, Vector::Constant(1, 0.1)};
  CHECK(pi_expanded_concentration(make_sample({4}, t), t, b) == doctest::Approx(0.4).epsilon(1e-15));

  const auto t2 = make_table({0.7, 1.9}, {0.6, 0.05});
  const auto s = make_sample({12, 30}, t2);
  const auto correct = BatchSpec::correct(1e4, s.mass(), 2);
  CHECK(pi_expanded_concentration(s, t2, correct) ==
        doctest::Approx(s.concentration()).epsilon(1e-12));

  const auto z = make_table({1.0, 2.0}, {0.0, 0.0});
  CHECK(pi_expanded_concentration(make_sample({3, 3}, z), z, correct) == 0.0);

  BatchSpec zero_q{100.0, Vector::Zero(2)};
  CHECK_THROWS(pi_expanded_concentration(s, t2, zero_q));
}

TEST_CASE("finite-batch Horvitz-Thompson") {
  const auto t = make_table({1.0, 2.0}, {0.5, 0.2});
  const auto s = make_sample({4, 3}, t);
  const double ms = s.mass();

  SUBCASE("zero dependence shows the finite-population factor") {
    const auto b = BatchSpec::correct(5.0 * ms, ms, 2);
    const double sum_sq = 4 * 1.0 * 0.25 + 3 * 4.0 * 0.04;
    const double expected = (1.0 - 0.2) * sum_sq / (ms * ms);
    CHECK(variance_ht_finite_batch(s, t, DependenceMatrix::zero(2), b) ==
          doctest::Approx(expected).epsilon(1e-14));
  }

  SUBCASE("tends to the infinite-batch form") {
    Matrix c(2, 2);
    c << -0.3, 0.1, 0.1, 0.2;
    const auto b = BatchSpec::correct(ms * 1e10, ms, 2);
    const double finite = variance_ht_finite_batch(s, t, DependenceMatrix(c), b);
    const double infinite = variance_ht(s, t, DependenceMatrix(c)).value;
    CHECK(std::abs(finite - infinite) <= 1e-8 * std::abs(infinite));
  }

  SUBCASE("general form with independent pairs keeps only the self term") {
    const Vector pi = Vector::Constant(2, 0.2);
    const Matrix pij = pi * pi.transpose();
    const BatchSpec b{ms / 0.2, pi};
    const double sum_sq = 4 * 1.0 * 0.25 + 3 * 4.0 * 0.04;
    CHECK(variance_ht_general(s, t, pi, pij, b) ==
          doctest::Approx((1.0 - 0.2) * sum_sq / (ms * ms)).epsilon(1e-13));
    CHECK(variance_ht_general(s, t, pi, pij, b) ==
          doctest::Approx(variance_ht_finite_batch(s, t, DependenceMatrix::zero(2), b)).epsilon(1e-13));
  }

  SUBCASE("general form with second-order pi from C equals the finite-batch form") {
    Matrix c(2, 2);
    c << -0.3, 0.1, 0.1, 0.2;
    const auto b = BatchSpec::correct(ms * 20.0, ms, 2);
    const Matrix pij = second_order_inclusion(b.first_order_q, DependenceMatrix(c));
    const double general = variance_ht_general(s, t, b.first_order_q, pij, b);
    const double finite = variance_ht_finite_batch(s, t, DependenceMatrix(c), b);
    CHECK(general == doctest::Approx(finite).epsilon(1e-12));
  }

  SUBCASE("all-zero concentrations") {
    const auto z = make_table({1.0, 2.0}, {0.0, 0.0});
    const auto sz = make_sample({4, 3}, z);
    const auto b = BatchSpec::correct(100.0, sz.mass(), 2);
    CHECK(variance_ht_finite_batch(sz, z, DependenceMatrix::zero(2), b) == 0.0);
    Matrix pij = Matrix::Constant(2, 2, 0.01);
    CHECK(variance_ht_general(sz, z, b.first_order_q, pij, b) == 0.0);
  }
}
