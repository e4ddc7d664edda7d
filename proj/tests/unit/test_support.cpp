#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "granvar/csv.hpp"
#include "granvar/numeric.hpp"
#include "granvar/parallel.hpp"
#include "granvar/rng.hpp"

using namespace granvar;

TEST_CASE("significant rounds the exact value half away from zero") {
  CHECK(csv::significant(0.0625, 2) == "6.3e-02");
  CHECK(csv::significant(-0.125, 2) == "-1.3e-01");
  CHECK(csv::significant(0.0, 2) == "0");
  CHECK(csv::significant(-0.5, 2) == "-5.0e-01");
  CHECK(csv::significant(9.96, 2) == "1.0e+01");
  CHECK(csv::significant(0.9 / 9.9, 2) == "9.1e-02");
  CHECK(csv::significant(0.15, 1) == "1e-01");
}

TEST_CASE("number round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    CHECK(std::stod(csv::number(v)) == v);
  }
  CHECK(csv::number(std::int64_t{-42}) == "-42");
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(csv::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(csv::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(csv::hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("compensated summation recovers cancelled terms") {
  CompensatedSum<double> s;
  s += 1e16;
  s += 1.0;
  s += -1e16;
  CHECK(s.value() == 1.0);
}

TEST_CASE("moment accumulator") {
  MomentAccumulator m;
  for (double v : {1.0, 2.0, 3.0, 4.0}) m.add(v);
  CHECK(m.mean() == 2.5);
  CHECK(m.variance() == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(m.mean_se() == doctest::Approx(std::sqrt(5.0 / 12.0)).epsilon(1e-15));
}

TEST_CASE("spearman") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{10, 20, 30, 40};
  const std::vector<double> rev{4, 3, 2, 1};
  const std::vector<double> flat{1, 1, 1, 1};
  CHECK(spearman(x, y) == doctest::Approx(1.0));
  CHECK(spearman(x, rev) == doctest::Approx(-1.0));
  CHECK(std::isnan(spearman(x, flat)));
  const std::vector<double> ties{1, 2, 2, 3};
  const auto r = average_ranks(ties);
  CHECK(r[1] == 2.5);
  CHECK(r[2] == 2.5);
}

TEST_CASE("random streams") {
  Rng a = Rng::stream(1, 2);
  Rng b = Rng::stream(1, 2);
  Rng c = Rng::stream(1, 3);
  const auto va = a.bits();
  CHECK(va == b.bits());
  CHECK(va != c.bits());

  Rng r(123);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  std::vector<int> hist(7, 0);
  double pois = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
    ++hist[r.below(7)];
    pois += static_cast<double>(r.poisson(3.5));
  }
  CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  for (int h : hist) CHECK(std::abs(h - n / 7.0) < 4.0 * std::sqrt(n / 7.0));
  CHECK(std::abs(pois / n - 3.5) < 4.0 * std::sqrt(3.5 / n));
}

TEST_CASE("parallel_for result is schedule independent") {
  std::vector<double> one(1000), many(1000);
  parallel_for(1000, 1, [&](std::size_t i) { one[i] = Rng::stream(9, i).uniform(); });
  parallel_for(1000, 6, [&](std::size_t i) { many[i] = Rng::stream(9, i).uniform(); });
  CHECK(one == many);
}
