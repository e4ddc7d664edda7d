#include <doctest.h>

#include <cmath>
#include <vector>

#include "granvar/intercept.hpp"

using namespace granvar;

namespace {

SpatialField field_of(std::vector<Particle> particles, Eigen::Index classes = 2) {
  SpatialField f;
  f.domain = {10.0, 10.0};
  f.particles = std::move(particles);
  f.classes = classes;
  return f;
}

TransectRecord record_of(std::vector<int> classes) {
  TransectRecord r;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    r.hits.push_back({static_cast<int>(i), classes[i], static_cast<double>(i), 0.5, 1.0});
  }
  return r;
}

TransitionCounts counts_of(std::initializer_list<std::int64_t> values) {
  TransitionCounts c;
  c.n.resize(2, 2);
  auto it = values.begin();
  c.n << it[0], it[1], it[2], it[3];
  return c;
}

const Transect kHorizontal{0.0, 5.0, 1.0, 0.0, 10.0};

}  // namespace

TEST_CASE("transect geometry") {
  SUBCASE("disk centred on the line gives a diameter chord") {
    const auto r = intersect_transect(field_of({{4.0, 5.0, 0.5, 0}}), kHorizontal);
    REQUIRE(r.hits.size() == 1);
    CHECK(r.hits[0].chord == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.hits[0].entry == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(r.hits[0].width == 1.0);
  }
  SUBCASE("disk beyond its radius is missed") {
    CHECK(intersect_transect(field_of({{4.0, 5.6, 0.5, 0}}), kHorizontal).hits.empty());
  }
  SUBCASE("hits are ordered along the line") {
    const auto r = intersect_transect(field_of({{3.0, 5.0, 0.4, 1}, {1.0, 5.0, 0.4, 0}}), kHorizontal);
    REQUIRE(r.hits.size() == 2);
    CHECK(r.hits[0].particle_id == 1);
    CHECK(r.hits[1].particle_id == 0);
  }
  SUBCASE("off-centre chord length") {
    const auto r = intersect_transect(field_of({{4.0, 5.3, 0.5, 0}}), kHorizontal);
    REQUIRE(r.hits.size() == 1);
    CHECK(r.hits[0].chord == doctest::Approx(0.8).epsilon(1e-14));
  }
}

TEST_CASE("random transects are deterministic and stay in the domain") {
  const std::vector<double> m{1.0, 1.0}, c{1.0, 0.0}, rad{0.01, 0.01};
  const auto t = ClassTable::from_vectors(m, c, rad);
  ProcessParams p;
  p.intensity = 1000;
  p.mixing = {0.5, 0.5};
  const auto f = generate_field(p, t, 2);
  TransectSpec spec;
  spec.count = 20;
  const auto a = cast_transects(f, spec, 5, 1);
  const auto b = cast_transects(f, spec, 5, 4);
  REQUIRE(a.size() == 20);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].hits.size() == b[i].hits.size());
    hits += a[i].hits.size();
    const auto& l = a[i].line;
    for (double s : {0.0, l.length}) {
      CHECK(l.x0 + s * l.dx >= -1e-12);
      CHECK(l.x0 + s * l.dx <= 1.0 + 1e-12);
      CHECK(l.y0 + s * l.dy >= -1e-12);
      CHECK(l.y0 + s * l.dy <= 1.0 + 1e-12);
    }
  }
  CHECK(hits > 0);
}

TEST_CASE("transition counts") {
  SUBCASE("A B A") {
    const std::vector<TransectRecord> r{record_of({0, 1, 0})};
    const auto c = transition_counts(r, 2);
    CHECK(c.n(0, 1) == 1);
    CHECK(c.n(1, 0) == 1);
    CHECK(c.n(0, 0) == 0);
    CHECK(c.n(1, 1) == 0);
  }
  SUBCASE("short records give nothing") {
    const std::vector<TransectRecord> r{record_of({0}), record_of({}), record_of({1})};
    CHECK(transition_counts(r, 2).total() == 0);
  }
  SUBCASE("tally across records") {
    const std::vector<TransectRecord> r{record_of({0, 0}), record_of({0, 0}), record_of({1, 0})};
    const auto c = transition_counts(r, 2);
    CHECK(c.n(0, 0) == 2);
    CHECK(c.n(1, 0) == 1);
    CHECK(c.total() == 3);
  }
  SUBCASE("class out of range") {
    const std::vector<TransectRecord> r{record_of({0, 2})};
    CHECK_THROWS_AS(transition_counts(r, 2), InvalidArgument);
  }
}

TEST_CASE("Markov fits") {
  SUBCASE("alternating chain") {
    const auto fit = markov_fit(counts_of({0, 2, 2, 0}));
    CHECK(fit.p(0, 1) == 1.0);
    CHECK(fit.p(1, 0) == 1.0);
    REQUIRE(fit.stationary.has_value());
    CHECK((*fit.stationary)(0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(fit.irreducible);
  }
  SUBCASE("reducible chain") {
    const auto fit = markov_fit(counts_of({4, 0, 0, 4}));
    CHECK_FALSE(fit.irreducible);
    CHECK_FALSE(fit.stationary.has_value());
  }
  SUBCASE("uniform chain") {
    const auto fit = markov_fit(counts_of({1, 1, 1, 1}));
    CHECK(fit.p(0, 0) == 0.5);
    REQUIRE(fit.stationary.has_value());
    CHECK((*fit.stationary)(1) == doctest::Approx(0.5).epsilon(1e-10));
  }
  SUBCASE("stationary distribution of an asymmetric chain") {
    const auto fit = markov_fit(counts_of({1, 3, 1, 1}));
    REQUIRE(fit.stationary.has_value());
    // P = [[1/4, 3/4], [1/2, 1/2]] has stationary (2/5, 3/5).
    CHECK((*fit.stationary)(0) == doctest::Approx(0.4).epsilon(1e-10));
    CHECK(fit.residual < 1e-12);
  }
}

TEST_CASE("size-corrected frequencies") {
  const std::vector<double> m{1.0, 1.0}, c{1.0, 0.0};
  SUBCASE("equal widths leave frequencies unchanged") {
    const std::vector<double> rad{0.5, 0.5};
    const auto t = ClassTable::from_vectors(m, c, rad);
    const std::vector<TransectRecord> r{record_of({0, 1, 1, 1})};
    const auto f = size_corrected_frequencies(r, t);
    CHECK(f.raw(0) == 0.25);
    CHECK(f.corrected(0) == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("wide particles are down-weighted") {
    const std::vector<double> rad{0.5, 1.0};
    const auto t = ClassTable::from_vectors(m, c, rad);
    TransectRecord r;
    r.hits = {{0, 0, 0.0, 1.0, 1.0}, {1, 1, 1.0, 2.0, 2.0}, {2, 1, 3.0, 2.0, 2.0}};
    const std::vector<TransectRecord> rs{r};
    const auto f = size_corrected_frequencies(rs, t);
    CHECK(f.raw(1) == doctest::Approx(2.0 / 3.0));
    CHECK(f.corrected(1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(f.hits(1) == 2);
  }
}

TEST_CASE("adjacency estimate") {
  SUBCASE("single class is independent") {
    TransitionCounts tc;
    tc.n = Eigen::Matrix<std::int64_t, 1, 1>::Constant(7);
    const auto e = c_from_adjacency(tc, Vector::Constant(1, 1.0));
    CHECK(e.a(0, 0) == 1.0);
    CHECK(e.b(0, 0) == 1.0);
    CHECK(e.c_hat(0, 0) == 0.0);
  }
  SUBCASE("perfect alternation") {
    Vector f(2);
    f << 0.5, 0.5;
    const auto e = c_from_adjacency(counts_of({0, 3, 1, 0}), f);
    CHECK(e.a(0, 1) == doctest::Approx(0.5));
    CHECK(e.a(0, 1) == e.a(1, 0));
    CHECK(e.c_hat(0, 0) == doctest::Approx(1.0));
    CHECK(e.c_hat(0, 1) == doctest::Approx(-1.0));
  }
  SUBCASE("errors") {
    Vector f(2);
    f << 0.5, 0.5;
    CHECK_THROWS_AS(c_from_adjacency(counts_of({0, 0, 0, 0}), f), InvalidArgument);
    CHECK_THROWS_AS(c_from_adjacency(counts_of({1, 0, 0, 1}), Vector::Constant(3, 0.3)), InvalidArgument);
  }
}

TEST_CASE("co-clustered classes show excess adjacency") {
  const std::vector<double> m{1.0, 1.0}, c{1.0, 0.0}, rad{0.005, 0.005};
  const auto t = ClassTable::from_vectors(m, c, rad);
  ProcessParams p;
  p.kind = ProcessKind::MaternCluster;
  p.parent_intensity = 40;
  p.offspring_mean = 25;
  p.cluster_radius = 0.03;
  p.mixing = {0.5, 0.5};
  p.class_mode = ClassMode::ClusterCorrelated;
  p.rho = 1.0;
  TransectSpec spec;
  spec.count = 200;
  double sum00 = 0.0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const auto f = generate_field(p, t, 300 + s);
    const auto rec = cast_transects(f, spec, s);
    const auto freq = size_corrected_frequencies(rec, t);
    sum00 += c_from_adjacency(transition_counts(rec, 2), freq.corrected).c_hat(0, 0);
  }
  CHECK(sum00 / seeds < 0.0);
}
