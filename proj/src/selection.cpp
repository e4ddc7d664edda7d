#include "granvar/selection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "granvar/csv.hpp"
#include "granvar/estimators.hpp"
#include "granvar/kernels.hpp"
#include "granvar/numeric.hpp"
#include "granvar/parallel.hpp"
#include "granvar/rng.hpp"

namespace granvar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_classes(std::span<const int> class_of, Eigen::Index classes) {
  for (std::size_t a = 0; a < class_of.size(); ++a) {
    if (class_of[a] < 0 || class_of[a] >= classes)
      throw InvalidArgument("particle " + std::to_string(a) + " has class " + std::to_string(class_of[a]) +
                            " outside 0.." + std::to_string(classes - 1));
  }
}

// Unnormalized outcome weights indexed by selection bitmask. Built one
// particle at a time: extending the first h particles by particle h either
// excludes it (factor 1 - q) or includes it (factor q times phi with every
// already-included particle).
std::vector<double> outcome_weights(const SelectionDesign& d, std::span<const int> class_of) {
  const std::size_t n = class_of.size();
  std::vector<double> w(std::size_t{1} << n, 0.0);
  w[0] = 1.0;
  const bool pairwise = d.kind == DesignKind::PairwisePmf;
  for (std::size_t h = 0; h < n; ++h) {
    const int ch = class_of[h];
    const double q = d.q(ch);
    const std::size_t half = std::size_t{1} << h;
    for (std::size_t s = 0; s < half; ++s) {
      double inc = w[s] * q;
      if (pairwise && inc != 0.0) {
        for (std::uint64_t bits = s; bits != 0; bits &= bits - 1) {
          const auto b = static_cast<std::size_t>(std::countr_zero(bits));
          inc *= d.phi(ch, class_of[b]);
        }
      }
      w[s | half] = inc;
      w[s] *= 1.0 - q;
    }
  }
  return w;
}

struct ClassLevel {
  Vector pi;
  Matrix pij;
  Vector pi_spread;
  Matrix pij_spread;
};

ClassLevel aggregate_particles(const Vector& ppi, const Matrix& ppij, std::span<const int> class_of,
                               Eigen::Index k) {
  ClassLevel out{Vector::Constant(k, kNaN), Matrix::Constant(k, k, kNaN), Vector::Constant(k, kNaN),
                 Matrix::Constant(k, k, kNaN)};
  const auto n = static_cast<Eigen::Index>(class_of.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    CompensatedSum<double> s;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    Eigen::Index cnt = 0;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (class_of[static_cast<std::size_t>(a)] != i) continue;
      s += ppi(a);
      lo = std::min(lo, ppi(a));
      hi = std::max(hi, ppi(a));
      ++cnt;
    }
    if (cnt > 0) {
      out.pi(i) = s.value() / static_cast<double>(cnt);
      out.pi_spread(i) = hi - lo;
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      CompensatedSum<double> ps;
      double plo = std::numeric_limits<double>::infinity(), phi = -plo;
      Eigen::Index pairs = 0;
      for (Eigen::Index a = 0; a < n; ++a) {
        if (class_of[static_cast<std::size_t>(a)] != i) continue;
        for (Eigen::Index b = 0; b < n; ++b) {
          if (b == a || class_of[static_cast<std::size_t>(b)] != j) continue;
          ps += ppij(a, b);
          plo = std::min(plo, ppij(a, b));
          phi = std::max(phi, ppij(a, b));
          ++pairs;
        }
      }
      if (pairs > 0) {
        out.pij(i, j) = ps.value() / static_cast<double>(pairs);
        out.pij_spread(i, j) = phi - plo;
      }
    }
  }
  return out;
}

Matrix dependence_from(const Vector& pi, const Matrix& pij) {
  const Eigen::Index k = pi.size();
  Matrix c(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) c(i, j) = 1.0 - pij(i, j) / (pi(i) * pi(j));
  return c;
}

// Column layout of the per-replicate observation matrix.
struct Columns {
  Eigen::Index k;
  Eigen::Index x(Eigen::Index i) const { return i; }
  Eigen::Index y(Eigen::Index i, Eigen::Index j) const {
    if (i > j) std::swap(i, j);
    return k + i * k - i * (i - 1) / 2 + (j - i);
  }
  Eigen::Index count() const { return k + k * (k + 1) / 2; }
};

/// `populations` holds either one population shared by all replicates or
/// one per replicate; `population` below is the one for replicate t.
InclusionEstimate estimate_from_counts(const std::vector<CountVector>& counts,
                                       const std::vector<CountVector>& populations) {
  const Eigen::Index k = populations.front().size();
  CountVector population = populations.front();
  for (std::size_t t = 1; t < populations.size(); ++t) population = population.cwiseMin(populations[t]);
  const auto r = static_cast<Eigen::Index>(counts.size());
  const Columns col{k};
  Matrix obs = Matrix::Zero(r, col.count());
  for (Eigen::Index t = 0; t < r; ++t) {
    const auto& n = counts[static_cast<std::size_t>(t)];
    const auto& pop = populations.size() == 1 ? populations.front() : populations[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < k; ++i) {
      const double ni = static_cast<double>(pop(i));
      if (ni > 0) obs(t, col.x(i)) = static_cast<double>(n(i)) / ni;
      for (Eigen::Index j = i; j < k; ++j) {
        const double nj = static_cast<double>(pop(j));
        if (i == j) {
          if (ni >= 2)
            obs(t, col.y(i, i)) =
                static_cast<double>(n(i)) * static_cast<double>(n(i) - 1) / (ni * (ni - 1.0));
        } else if (ni > 0 && nj > 0) {
          obs(t, col.y(i, j)) = static_cast<double>(n(i)) * static_cast<double>(n(j)) / (ni * nj);
        }
      }
    }
  }
  const Vector mean = obs.colwise().mean();
  const Matrix centered = obs.rowwise() - mean.transpose();
  const Matrix cov = r > 1 ? Matrix(centered.transpose() * centered / static_cast<double>(r - 1))
                           : Matrix::Zero(col.count(), col.count());
  const double rr = static_cast<double>(r);

  InclusionEstimate est;
  est.replicates = static_cast<std::size_t>(r);
  est.population = population;
  est.pi = Vector::Constant(k, kNaN);
  est.pi_se = Vector::Constant(k, kNaN);
  est.pij = Matrix::Constant(k, k, kNaN);
  est.pij_se = Matrix::Constant(k, k, kNaN);
  est.c_hat = Matrix::Constant(k, k, kNaN);
  est.c_se = Matrix::Constant(k, k, kNaN);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (population(i) == 0) continue;
    est.pi(i) = mean(col.x(i));
    est.pi_se(i) = std::sqrt(cov(col.x(i), col.x(i)) / rr);
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const bool defined = i == j ? population(i) >= 2 : (population(i) > 0 && population(j) > 0);
      if (!defined) continue;
      const Eigen::Index cy = col.y(i, j);
      est.pij(i, j) = mean(cy);
      est.pij_se(i, j) = std::sqrt(cov(cy, cy) / rr);
      const double xi = mean(col.x(i)), xj = mean(col.x(j)), y = mean(cy);
      if (!(xi > 0.0 && xj > 0.0)) continue;
      est.c_hat(i, j) = 1.0 - y / (xi * xj);
      // Gradient of 1 - y/(x_i x_j) with respect to (y, x_i[, x_j]).
      if (i == j) {
        const Eigen::Index ci = col.x(i);
        Eigen::Vector2d g2(-1.0 / (xi * xi), 2.0 * y / (xi * xi * xi));
        Eigen::Matrix2d s2;
        s2 << cov(cy, cy), cov(cy, ci), cov(ci, cy), cov(ci, ci);
        est.c_se(i, j) = std::sqrt(std::max(0.0, g2.dot(s2 * g2)) / rr);
      } else {
        const Eigen::Index ci = col.x(i), cj = col.x(j);
        Eigen::Vector3d g;
        Eigen::Matrix3d s;
        g << -1.0 / (xi * xj), y / (xi * xi * xj), y / (xi * xj * xj);
        const Eigen::Index idx[3] = {cy, ci, cj};
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) s(a, b) = cov(idx[a], idx[b]);
        est.c_se(i, j) = std::sqrt(std::max(0.0, g.dot(s * g)) / rr);
      }
    }
  }
  return est;
}

ReplicateStats stats_from_counts(const std::vector<CountVector>& counts, const ClassTable& table) {
  ReplicateStats st;
  MomentAccumulator cs;
  MomentAccumulator mass;
  const Eigen::Index k = table.size();
  Vector count_sum = Vector::Zero(k);
  st.replicates.reserve(counts.size());
  for (const auto& n : counts) {
    ReplicateRecord rec;
    rec.counts = n;
    rec.mass = kernels::sample_mass(n, table.masses());
    if (rec.mass > 0.0) {
      rec.concentration = kernels::sample_concentration(n, table.masses(), table.concentrations());
      cs.add(rec.concentration);
      mass.add(rec.mass);
      count_sum += n.cast<double>();
    } else {
      rec.concentration = kNaN;
      ++st.empty_count;
    }
    st.replicates.push_back(std::move(rec));
  }
  st.mean_cs = cs.mean();
  st.v_e = cs.variance();
  st.v_e_se = cs.variance_se();
  st.mean_mass = mass.mean();
  st.mass_cv = st.mean_mass > 0.0 ? std::sqrt(mass.variance()) / st.mean_mass : 0.0;
  st.mean_counts = cs.count() > 0 ? Vector(count_sum / static_cast<double>(cs.count())) : Vector::Zero(k);
  return st;
}

CountVector counts_of(std::span<const std::uint8_t> mask, std::span<const int> class_of, Eigen::Index k) {
  CountVector n = CountVector::Zero(k);
  for (std::size_t a = 0; a < mask.size(); ++a)
    if (mask[a]) ++n(class_of[a]);
  return n;
}

template <typename Draw>
ReplicateRun run_generic(const ClassTable& table, std::span<const int> class_of,
                         const ReplicateOptions& opt, Draw&& draw) {
  if (opt.replicates < 2) throw InvalidArgument("replicate count must be >= 2");
  const Eigen::Index k = table.size();
  const std::size_t n = class_of.size();
  const std::size_t r = opt.replicates;
  std::vector<CountVector> counts(r);
  std::vector<std::vector<std::uint8_t>> masks(opt.track_particles ? r : 0);

  parallel_for(r, opt.threads, [&](std::size_t t) {
    Rng rng = Rng::stream(opt.seed, t);
    std::vector<std::uint8_t> mask(n, 0);
    draw(rng, mask);
    counts[t] = counts_of(mask, class_of, k);
    if (opt.track_particles) masks[t] = std::move(mask);
  });

  CountVector population = CountVector::Zero(k);
  for (int c : class_of) ++population(c);

  ReplicateRun run;
  run.stats = stats_from_counts(counts, table);
  run.estimate = estimate_from_counts(counts, {population});
  if (opt.track_particles) {
    const auto nn = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd hits = Eigen::MatrixXd::Zero(nn, nn);
    std::vector<Eigen::Index> on;
    for (const auto& m : masks) {
      on.clear();
      for (std::size_t a = 0; a < n; ++a)
        if (m[a]) on.push_back(static_cast<Eigen::Index>(a));
      for (auto a : on)
        for (auto b : on) hits(a, b) += 1.0;
    }
    run.estimate.particle_pij = hits / static_cast<double>(r);
    run.estimate.particle_pi = run.estimate.particle_pij.diagonal();
  }
  return run;
}

}  // namespace

const char* to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::Bernoulli: return "bernoulli";
    case DesignKind::PairwisePmf: return "pairwise_pmf";
    case DesignKind::Window: return "window";
  }
  return "unknown";
}

DesignKind parse_design_kind(const std::string& name) {
  if (name == "bernoulli") return DesignKind::Bernoulli;
  if (name == "pairwise_pmf") return DesignKind::PairwisePmf;
  if (name == "window") return DesignKind::Window;
  throw InvalidArgument("unknown design '" + name + "' (expected bernoulli, pairwise_pmf or window)");
}

SelectionDesign SelectionDesign::bernoulli(Vector q) {
  SelectionDesign d;
  d.kind = DesignKind::Bernoulli;
  d.q = std::move(q);
  return d;
}

SelectionDesign SelectionDesign::pairwise(Vector q, Matrix phi) {
  SelectionDesign d;
  d.kind = DesignKind::PairwisePmf;
  d.q = std::move(q);
  d.phi = std::move(phi);
  return d;
}

SelectionDesign SelectionDesign::window(double width, double height) {
  SelectionDesign d;
  d.kind = DesignKind::Window;
  d.window_width = width;
  d.window_height = height;
  return d;
}

void SelectionDesign::validate(Eigen::Index classes) const {
  switch (kind) {
    case DesignKind::Bernoulli:
    case DesignKind::PairwisePmf:
      if (q.size() != classes) throw InvalidArgument("design needs one q per class");
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        if (kind == DesignKind::Bernoulli && !(q(i) > 0.0 && q(i) <= 1.0))
          throw InvalidArgument("bernoulli q_i must lie in (0, 1]");
        if (kind == DesignKind::PairwisePmf && !(q(i) >= 0.0 && q(i) <= 1.0))
          throw InvalidArgument("pairwise_pmf q_i must lie in [0, 1]");
      }
      if (kind == DesignKind::PairwisePmf) {
        if (phi.rows() != classes || phi.cols() != classes) throw InvalidArgument("phi must be K x K");
        for (Eigen::Index i = 0; i < classes; ++i)
          for (Eigen::Index j = 0; j < classes; ++j) {
            if (!(phi(i, j) >= 0.0) || !std::isfinite(phi(i, j))) throw InvalidArgument("phi_ij must be >= 0");
            if (phi(i, j) != phi(j, i)) throw InvalidArgument("phi must be symmetric");
          }
      }
      break;
    case DesignKind::Window:
      if (!(window_width > 0.0 && window_height > 0.0)) throw InvalidArgument("window sides must be > 0");
      break;
  }
}

ExactDesign enumerate_design(const SelectionDesign& design, const ClassTable& table,
                             std::span<const int> class_of) {
  if (design.kind == DesignKind::Window) throw InvalidArgument("window designs cannot be enumerated");
  design.validate(table.size());
  check_classes(class_of, table.size());
  const std::size_t n = class_of.size();
  if (n > SelectionDesign::kMaxEnumeration)
    throw InvalidArgument("enumeration supports at most " + std::to_string(SelectionDesign::kMaxEnumeration) +
                          " particles, got " + std::to_string(n));

  const auto w = outcome_weights(design, class_of);
  CompensatedSum<double> z;
  for (double v : w) z += v;
  const double total = z.value();
  if (!(total > 0.0)) throw InvalidArgument("selection pmf is not normalizable (all weights zero)");

  const auto nn = static_cast<Eigen::Index>(n);
  const auto& m = table.masses();
  const auto& c = table.concentrations();
  Matrix pair = Matrix::Zero(nn, nn);
  CompensatedSum<double> empty, mean_acc, mass_acc;
  std::vector<Eigen::Index> on;
  on.reserve(n);
  auto sample_of = [&](std::size_t s, double& mass, double& conc) {
    CompensatedSum<double> ms, mc;
    for (std::uint64_t bits = s; bits != 0; bits &= bits - 1) {
      const int cls = class_of[static_cast<std::size_t>(std::countr_zero(bits))];
      ms += m(cls);
      mc += m(cls) * c(cls);
    }
    mass = ms.value();
    conc = mass > 0.0 ? mc.value() / mass : 0.0;
  };

  for (std::size_t s = 0; s < w.size(); ++s) {
    const double p = w[s] / total;
    if (p == 0.0) continue;
    if (s == 0) {
      empty += p;
      continue;
    }
    on.clear();
    for (std::uint64_t bits = s; bits != 0; bits &= bits - 1) on.push_back(std::countr_zero(bits));
    for (auto a : on)
      for (auto b : on) pair(a, b) += p;
    double mass = 0.0, conc = 0.0;
    sample_of(s, mass, conc);
    if (mass > 0.0) {
      mean_acc += p * conc;
      mass_acc += p * mass;
    } else {
      empty += p;
    }
  }
  ExactDesign out;
  out.p_empty = empty.value();
  const double nonempty = 1.0 - out.p_empty;
  out.mean_cs = nonempty > 0.0 ? mean_acc.value() / nonempty : kNaN;
  out.mean_mass = nonempty > 0.0 ? mass_acc.value() / nonempty : 0.0;
  CompensatedSum<double> var_acc;
  for (std::size_t s = 1; s < w.size() && nonempty > 0.0; ++s) {
    const double p = w[s] / total;
    if (p == 0.0) continue;
    double mass = 0.0, conc = 0.0;
    sample_of(s, mass, conc);
    if (mass > 0.0) var_acc += p * (conc - out.mean_cs) * (conc - out.mean_cs);
  }
  out.var_cs = nonempty > 0.0 ? var_acc.value() / nonempty : kNaN;

  out.particle_pij = pair;
  out.particle_pi = pair.diagonal();
  auto cl = aggregate_particles(out.particle_pi, out.particle_pij, class_of, table.size());
  out.pi = cl.pi;
  out.pij = cl.pij;
  out.pi_spread = cl.pi_spread;
  out.pij_spread = cl.pij_spread;
  out.c = dependence_from(out.pi, out.pij);
  return out;
}

ReplicateRun run_replicates(const SelectionDesign& design, const ClassTable& table,
                            std::span<const int> class_of, const ReplicateOptions& options) {
  design.validate(table.size());
  check_classes(class_of, table.size());
  switch (design.kind) {
    case DesignKind::Bernoulli:
      return run_generic(table, class_of, options, [&](Rng& rng, std::vector<std::uint8_t>& mask) {
        for (std::size_t a = 0; a < mask.size(); ++a) mask[a] = rng.uniform() < design.q(class_of[a]) ? 1 : 0;
      });
    case DesignKind::PairwisePmf: {
      if (class_of.size() > SelectionDesign::kMaxEnumeration)
        throw InvalidArgument("pairwise_pmf supports at most " +
                              std::to_string(SelectionDesign::kMaxEnumeration) + " particles");
      auto cdf = outcome_weights(design, class_of);
      for (std::size_t s = 1; s < cdf.size(); ++s) cdf[s] += cdf[s - 1];
      const double total = cdf.back();
      if (!(total > 0.0)) throw InvalidArgument("selection pmf is not normalizable (all weights zero)");
      return run_generic(table, class_of, options, [&](Rng& rng, std::vector<std::uint8_t>& mask) {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        const auto s = static_cast<std::uint64_t>(it - cdf.begin());
        for (std::size_t a = 0; a < mask.size(); ++a) mask[a] = (s >> a) & 1U;
      });
    }
    case DesignKind::Window:
      throw InvalidArgument("window designs need a spatial field");
  }
  throw InvalidArgument("unknown design");
}

ReplicateRun run_replicates(const SelectionDesign& design, const ClassTable& table, const SpatialField& field,
                            const ReplicateOptions& options) {
  if (design.kind != DesignKind::Window) {
    std::vector<int> class_of;
    for (const auto& p : field.particles) class_of.push_back(p.class_id);
    return run_replicates(design, table, class_of, options);
  }
  design.validate(table.size());
  if (field.classes != table.size()) throw InvalidArgument("field and class table disagree on K");
  if (design.window_width > field.domain.width || design.window_height > field.domain.height)
    throw InvalidArgument("window does not fit in the field domain");
  std::vector<int> class_of;
  class_of.reserve(field.particles.size());
  for (const auto& p : field.particles) class_of.push_back(p.class_id);
  const Domain d = field.domain;
  return run_generic(table, class_of, options, [&](Rng& rng, std::vector<std::uint8_t>& mask) {
    const double x0 = rng.uniform() * d.width;
    const double y0 = rng.uniform() * d.height;
    for (std::size_t a = 0; a < mask.size(); ++a) {
      double dx = field.particles[a].x - x0;
      double dy = field.particles[a].y - y0;
      if (dx < 0.0) dx += d.width;
      if (dy < 0.0) dy += d.height;
      mask[a] = (dx < design.window_width && dy < design.window_height) ? 1 : 0;
    }
  });
}

ReplicateRun run_replicates_ensemble(const SelectionDesign& design, const ClassTable& table,
                                     const ProcessParams& process, const ReplicateOptions& options) {
  if (design.kind != DesignKind::Window) throw InvalidArgument("ensemble runs need a window design");
  design.validate(table.size());
  process.validate(table.size());
  if (design.window_width > process.domain.width || design.window_height > process.domain.height)
    throw InvalidArgument("window does not fit in the field domain");
  if (options.replicates < 2) throw InvalidArgument("replicate count must be >= 2");
  if (options.track_particles) throw InvalidArgument("particle tracking needs a fixed field");
  const Eigen::Index k = table.size();
  const std::size_t r = options.replicates;
  const std::uint64_t field_master = mix64(options.seed ^ 0x656e73656d626c65ULL);
  std::vector<CountVector> counts(r), populations(r);

  parallel_for(r, options.threads, [&](std::size_t t) {
    const auto field = generate_field(process, table, stream_seed(field_master, t));
    Rng rng = Rng::stream(options.seed, t);
    const double x0 = rng.uniform() * process.domain.width;
    const double y0 = rng.uniform() * process.domain.height;
    CountVector n = CountVector::Zero(k), pop = CountVector::Zero(k);
    for (const auto& p : field.particles) {
      ++pop(p.class_id);
      double dx = p.x - x0;
      double dy = p.y - y0;
      if (dx < 0.0) dx += process.domain.width;
      if (dy < 0.0) dy += process.domain.height;
      if (dx < design.window_width && dy < design.window_height) ++n(p.class_id);
    }
    counts[t] = std::move(n);
    populations[t] = std::move(pop);
  });

  for (std::size_t t = 0; t < r; ++t)
    if (populations[t].minCoeff() < 2)
      throw InvalidArgument("replicate field " + std::to_string(t) + " has fewer than two particles of some class");
  ReplicateRun run;
  run.stats = stats_from_counts(counts, table);
  run.estimate = estimate_from_counts(counts, populations);
  return run;
}

DependenceMatrix DependenceEstimate::usable() const {
  Matrix c = c_hat;
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j)
      if (!estimable(i, j)) c(i, j) = 0.0;
  return DependenceMatrix(c);
}

DependenceEstimate empirical_dependence(const InclusionEstimate& est) {
  const Eigen::Index k = est.pi.size();
  DependenceEstimate out;
  out.c_hat = est.c_hat;
  out.se = est.c_se;
  out.ci_lo = Matrix::Constant(k, k, kNaN);
  out.ci_hi = Matrix::Constant(k, k, kNaN);
  out.estimable.setConstant(k, k, false);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const bool ok = std::isfinite(est.c_hat(i, j)) && std::isfinite(est.c_se(i, j)) && est.pi(i) > 0.0 &&
                      est.pi(j) > 0.0;
      out.estimable(i, j) = ok;
      if (!ok) {
        out.c_hat(i, j) = kNaN;
        continue;
      }
      out.ci_lo(i, j) = est.c_hat(i, j) - kZ95 * est.c_se(i, j);
      out.ci_hi(i, j) = est.c_hat(i, j) + kZ95 * est.c_se(i, j);
    }
  }
  return out;
}

const EstimatorRow& ComparisonReport::row(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw InvalidArgument("no estimator row named " + name);
}

ComparisonReport compare_estimators(const ReplicateStats& stats, const InclusionEstimate& est,
                                    const ClassTable& table) {
  ComparisonReport rep;
  rep.v_e = stats.v_e;
  rep.v_e_se = stats.v_e_se;
  rep.mass_cv = stats.mass_cv;
  rep.empty_count = stats.empty_count;

  const DependenceMatrix chat = empirical_dependence(est).usable();
  const DependenceMatrix zero = DependenceMatrix::zero(table.size());
  bool ht_ok = true;
  for (Eigen::Index i = 0; i < chat.size(); ++i)
    for (Eigen::Index j = 0; j < chat.size(); ++j) ht_ok = ht_ok && chat(i, j) < 1.0;

  MomentAccumulator sample_chat, sample_gy, ht_chat;
  for (const auto& rec : stats.replicates) {
    if (rec.empty()) continue;
    const auto s = SampleSummary::derive(rec.counts, table);
    sample_chat.add(variance_sample(s, table, chat).value);
    sample_gy.add(variance_sample(s, table, zero).value);
    if (ht_ok) ht_chat.add(variance_ht(s, table, chat).value);
  }

  auto finish = [&](EstimatorRow r) {
    const double denom = std::sqrt(r.se * r.se + rep.v_e_se * rep.v_e_se);
    r.ratio = rep.v_e != 0.0 ? r.value / rep.v_e : kNaN;
    r.z = denom > 0.0 ? (r.value - rep.v_e) / denom : (r.value == rep.v_e ? 0.0 : kNaN);
    rep.rows.push_back(std::move(r));
  };
  auto from_acc = [&](const std::string& name, const MomentAccumulator& acc, bool available) {
    EstimatorRow r;
    r.name = name;
    r.available = available && acc.count() > 0;
    r.value = r.available ? acc.mean() : kNaN;
    r.se = r.available ? acc.mean_se() : kNaN;
    finish(std::move(r));
  };
  from_acc("sample_chat_replicate", sample_chat, true);
  from_acc("sample_gy_replicate", sample_gy, true);
  from_acc("ht_chat_replicate", ht_chat, ht_ok);

  const bool have_mean = stats.mean_counts.size() == table.size() && stats.mean_counts.sum() > 0.0;
  auto at_mean = [&](const std::string& name, auto&& eval, bool available) {
    EstimatorRow r;
    r.name = name;
    r.available = available && have_mean;
    r.value = r.available ? eval() : kNaN;
    r.se = 0.0;
    finish(std::move(r));
  };
  if (have_mean) {
    const auto e = ExpectationSummary::derive(stats.mean_counts, table);
    at_mean("expected_chat_mean", [&] { return variance_expected(e, table, chat).value; }, true);
    at_mean("expected_gy_mean", [&] { return variance_expected(e, table, zero).value; }, true);
    at_mean("ht_chat_mean", [&] {
      return kernels::ht_first_sum(e.counts(), table.masses(), table.concentrations(), chat.matrix(), e.mass()) -
             kernels::ht_second_sum(e.counts(), table.masses(), table.concentrations(), chat.matrix(), e.mass());
    }, ht_ok);
  } else {
    for (const char* name : {"expected_chat_mean", "expected_gy_mean", "ht_chat_mean"})
      at_mean(name, [] { return kNaN; }, false);
  }
  return rep;
}

void write_replicates_csv(const ReplicateStats& stats, const std::filesystem::path& path,
                          const std::string& comment) {
  csv::Writer w(path, comment);
  const Eigen::Index k = stats.replicates.empty() ? 0 : stats.replicates.front().counts.size();
  std::vector<std::string> head{"replicate", "M_s", "c_s"};
  for (Eigen::Index i = 0; i < k; ++i) head.push_back("N_" + std::to_string(i));
  w.header(head);
  for (std::size_t r = 0; r < stats.replicates.size(); ++r) {
    const auto& rec = stats.replicates[r];
    std::vector<std::string> row{csv::number(r), csv::number(rec.mass), csv::number(rec.concentration)};
    for (Eigen::Index i = 0; i < k; ++i) row.push_back(csv::number(rec.counts(i)));
    w.row(row);
  }
}

void write_estimate_csv(const InclusionEstimate& est, const std::filesystem::path& path,
                        const std::string& comment) {
  const auto dep = empirical_dependence(est);
  csv::Writer w(path, comment);
  w.header({"i", "j", "pi_ij", "se", "pc_hat", "ci_lo", "ci_hi"});
  for (Eigen::Index i = 0; i < est.pi.size(); ++i)
    for (Eigen::Index j = i; j < est.pi.size(); ++j)
      w.row({csv::number(i), csv::number(j), csv::number(est.pij(i, j)), csv::number(est.pij_se(i, j)),
             csv::number(dep.c_hat(i, j)), csv::number(dep.ci_lo(i, j)), csv::number(dep.ci_hi(i, j))});
}

void write_first_order_csv(const InclusionEstimate& est, const std::filesystem::path& path,
                           const std::string& comment) {
  csv::Writer w(path, comment);
  w.header({"i", "pi", "se"});
  for (Eigen::Index i = 0; i < est.pi.size(); ++i)
    w.row({csv::number(i), csv::number(est.pi(i)), csv::number(est.pi_se(i))});
}

void write_comparison_csv(const ComparisonReport& report, const std::filesystem::path& path,
                          const std::string& comment) {
  csv::Writer w(path, comment);
  w.header({"estimator", "value", "se", "ratio_to_v_e", "z"});
  w.row({"v_e", csv::number(report.v_e), csv::number(report.v_e_se), csv::number(1.0), csv::number(0.0)});
  for (const auto& r : report.rows)
    w.row({r.name, csv::number(r.value), csv::number(r.se), csv::number(r.ratio), csv::number(r.z)});
  w.row({"mass_cv", csv::number(report.mass_cv), "", "", ""});
  w.row({"empty_replicates", csv::number(report.empty_count), "", "", ""});
}

}  // namespace granvar
