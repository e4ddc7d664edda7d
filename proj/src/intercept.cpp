#include "granvar/intercept.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "granvar/csv.hpp"
#include "granvar/numeric.hpp"
#include "granvar/parallel.hpp"
#include "granvar/rng.hpp"

namespace granvar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Clip the infinite line through (px, py) with direction (dx, dy) to the
// domain rectangle.
Transect clip_line(const Domain& d, double px, double py, double dx, double dy) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  auto slab = [&](double p, double dir, double extent) {
    if (std::abs(dir) < 1e-15) return;
    double a = (0.0 - p) / dir, b = (extent - p) / dir;
    if (a > b) std::swap(a, b);
    lo = std::max(lo, a);
    hi = std::min(hi, b);
  };
  slab(px, dx, d.width);
  slab(py, dy, d.height);
  Transect t;
  t.dx = dx;
  t.dy = dy;
  t.x0 = px + lo * dx;
  t.y0 = py + lo * dy;
  t.length = std::max(0.0, hi - lo);
  return t;
}

// Strong connectivity: every observed class reaches, and is reached from,
// the first observed class.
bool strongly_connected(const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>& n,
                        const std::vector<bool>& observed) {
  const Eigen::Index k = n.rows();
  Eigen::Index root = -1;
  for (Eigen::Index i = 0; i < k; ++i)
    if (observed[static_cast<std::size_t>(i)]) {
      root = i;
      break;
    }
  if (root < 0) return false;
  auto reach = [&](bool forward) {
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    std::vector<Eigen::Index> stack{root};
    seen[static_cast<std::size_t>(root)] = true;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < k; ++v) {
        const auto edge = forward ? n(u, v) : n(v, u);
        if (edge > 0 && !seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = true;
          stack.push_back(v);
        }
      }
    }
    return seen;
  };
  const auto fwd = reach(true);
  const auto bwd = reach(false);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto s = static_cast<std::size_t>(i);
    if (observed[s] && !(fwd[s] && bwd[s])) return false;
  }
  return true;
}

}  // namespace

TransectRecord intersect_transect(const SpatialField& field, const Transect& line) {
  TransectRecord rec;
  rec.line = line;
  for (std::size_t id = 0; id < field.particles.size(); ++id) {
    const auto& p = field.particles[id];
    const double rx = p.x - line.x0, ry = p.y - line.y0;
    const double along = rx * line.dx + ry * line.dy;
    const double perp2 = std::max(0.0, rx * rx + ry * ry - along * along);
    const double r2 = p.radius * p.radius;
    if (perp2 >= r2) continue;
    const double half = std::sqrt(r2 - perp2);
    const double enter = std::max(0.0, along - half);
    const double leave = std::min(line.length, along + half);
    if (!(leave > enter)) continue;
    rec.hits.push_back({static_cast<int>(id), p.class_id, enter, leave - enter, 2.0 * p.radius});
  }
  std::sort(rec.hits.begin(), rec.hits.end(), [](const Intercept& a, const Intercept& b) {
    if (a.entry != b.entry) return a.entry < b.entry;
    return a.particle_id < b.particle_id;
  });
  return rec;
}

std::vector<TransectRecord> cast_transects(const SpatialField& field, const TransectSpec& spec,
                                           std::uint64_t seed, unsigned threads) {
  if (!spec.lines.empty()) {
    std::vector<TransectRecord> out(spec.lines.size());
    parallel_for(out.size(), threads, [&](std::size_t t) { out[t] = intersect_transect(field, spec.lines[t]); });
    return out;
  }
  if (spec.count < 1) throw InvalidArgument("transect count must be >= 1");
  std::vector<TransectRecord> out(spec.count);
  parallel_for(spec.count, threads, [&](std::size_t t) {
    Rng rng = Rng::stream(seed, t);
    const double px = rng.uniform() * field.domain.width;
    const double py = rng.uniform() * field.domain.height;
    const double theta = spec.random_orientation ? rng.uniform() * std::numbers::pi : spec.angle;
    out[t] = intersect_transect(field, clip_line(field.domain, px, py, std::cos(theta), std::sin(theta)));
  });
  return out;
}

TransitionCounts transition_counts(std::span<const TransectRecord> records, Eigen::Index classes) {
  TransitionCounts tc;
  tc.n.setZero(classes, classes);
  for (const auto& rec : records) {
    for (std::size_t h = 1; h < rec.hits.size(); ++h) {
      const int from = rec.hits[h - 1].class_id, to = rec.hits[h].class_id;
      if (from < 0 || from >= classes || to < 0 || to >= classes)
        throw InvalidArgument("transect hit has class outside 0..K-1");
      ++tc.n(from, to);
    }
  }
  return tc;
}

MarkovFit markov_fit(const TransitionCounts& counts) {
  const auto& n = counts.n;
  const Eigen::Index k = n.rows();
  MarkovFit fit;
  fit.p = Matrix::Zero(k, k);
  fit.absorbing_unknown.assign(static_cast<std::size_t>(k), false);
  std::vector<bool> observed(static_cast<std::size_t>(k), false);
  bool all_rows = true;
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto row = n.row(i).sum();
    const auto col = n.col(i).sum();
    const auto s = static_cast<std::size_t>(i);
    observed[s] = row > 0 || col > 0;
    if (row == 0) {
      fit.absorbing_unknown[s] = true;
      if (observed[s]) all_rows = false;
      continue;
    }
    for (Eigen::Index j = 0; j < k; ++j)
      fit.p(i, j) = static_cast<double>(n(i, j)) / static_cast<double>(row);
  }
  fit.irreducible = all_rows && strongly_connected(n, observed);
  if (!fit.irreducible) return fit;

  Eigen::RowVectorXd pi = Eigen::RowVectorXd::Zero(k);
  double active = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    if (observed[static_cast<std::size_t>(i)]) active += 1.0;
  for (Eigen::Index i = 0; i < k; ++i)
    if (observed[static_cast<std::size_t>(i)]) pi(i) = 1.0 / active;
  const Matrix lazy = 0.5 * (fit.p + Matrix::Identity(k, k));
  constexpr int kMaxIterations = 10'000'000;
  for (fit.iterations = 0; fit.iterations < kMaxIterations; ++fit.iterations) {
    fit.residual = (pi * fit.p - pi).lpNorm<1>();
    if (fit.residual < 1e-12) break;
    pi = pi * lazy;
    pi /= pi.sum();
  }
  fit.stationary = pi.transpose();
  return fit;
}

ClassFrequencies size_corrected_frequencies(std::span<const TransectRecord> records, const ClassTable& table) {
  const Eigen::Index k = table.size();
  ClassFrequencies f;
  f.hits = CountVector::Zero(k);
  std::vector<CompensatedSum<double>> inv(static_cast<std::size_t>(k));
  for (const auto& rec : records) {
    for (const auto& h : rec.hits) {
      if (!(h.width > 0.0)) throw InvalidArgument("intercepted particle has zero width");
      if (h.class_id < 0 || h.class_id >= k) throw InvalidArgument("transect hit has class outside 0..K-1");
      ++f.hits(h.class_id);
      inv[static_cast<std::size_t>(h.class_id)] += 1.0 / h.width;
    }
  }
  const double total = static_cast<double>(f.hits.sum());
  f.raw = total > 0.0 ? Vector(f.hits.cast<double>() / total) : Vector::Zero(k);
  f.corrected.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) f.corrected(i) = inv[static_cast<std::size_t>(i)].value();
  const double s = f.corrected.sum();
  if (s > 0.0) f.corrected /= s;
  return f;
}

AdjacencyEstimate c_from_adjacency(const TransitionCounts& counts, const Vector& freq) {
  const Eigen::Index k = counts.n.rows();
  if (freq.size() != k) throw InvalidArgument("frequency vector must have K entries");
  const double total = static_cast<double>(counts.total());
  if (!(total >= 1.0)) throw InvalidArgument("adjacency estimate needs at least one transition");
  AdjacencyEstimate est;
  est.a.resize(k, k);
  est.b.resize(k, k);
  est.c_hat.resize(k, k);
  est.estimable.setConstant(k, k, false);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      est.a(i, j) = static_cast<double>(counts.n(i, j) + counts.n(j, i)) / (2.0 * total);
      est.b(i, j) = freq(i) * freq(j);
      if (est.b(i, j) > 0.0) {
        est.c_hat(i, j) = 1.0 - est.a(i, j) / est.b(i, j);
        est.estimable(i, j) = true;
      } else {
        est.c_hat(i, j) = kNaN;
      }
    }
  }
  return est;
}

CalibrationReport calibrate_against_oracle(const CalibrationSpec& spec, const ClassTable& table) {
  if (spec.points.empty()) throw InvalidArgument("calibration needs at least one ensemble point");
  if (spec.seeds_per_point < 2) throw InvalidArgument("calibration needs at least 2 seeds per point");
  spec.window.validate(table.size());
  const Eigen::Index k = table.size();
  const std::size_t per = spec.seeds_per_point;
  const std::size_t jobs = spec.points.size() * per;

  struct FieldResult {
    Matrix oracle;
    Matrix oracle_se;
    Matrix adjacency;
    Matrix rate;
  };
  std::vector<FieldResult> results(jobs);
  parallel_for(jobs, spec.threads, [&](std::size_t job) {
    const auto& point = spec.points[job / per];
    const std::uint64_t field_seed = stream_seed(spec.seed, job);
    const auto field = generate_field(point.params, table, field_seed);
    ReplicateOptions opt;
    opt.replicates = spec.window_replicates;
    opt.seed = stream_seed(field_seed, 0x77696e646f77ULL);
    const auto run = run_replicates(spec.window, table, field, opt);
    const auto dep = empirical_dependence(run.estimate);
    FieldResult fr;
    fr.oracle = dep.c_hat;
    fr.oracle_se = dep.se;
    const auto records = cast_transects(field, spec.transects, stream_seed(field_seed, 0x6c696e65ULL));
    const auto counts = transition_counts(records, k);
    if (counts.total() > 0) {
      const auto freq = size_corrected_frequencies(records, table);
      const auto adj = c_from_adjacency(counts, spec.transects.size_correction ? freq.corrected : freq.raw);
      fr.adjacency = adj.c_hat;
      fr.rate = adj.a;
    } else {
      fr.adjacency = Matrix::Constant(k, k, kNaN);
      fr.rate = Matrix::Constant(k, k, kNaN);
    }
    results[job] = std::move(fr);
  });

  CalibrationReport rep;
  rep.null_regime = true;
  for (std::size_t p = 0; p < spec.points.size(); ++p) {
    CalibrationPointResult pr;
    pr.label = spec.points[p].label;
    pr.fields = per;
    pr.oracle_mean.resize(k, k);
    pr.oracle_se.resize(k, k);
    pr.adjacency_mean.resize(k, k);
    pr.adjacency_se.resize(k, k);
    pr.adjacency_rate.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        MomentAccumulator o, a, r;
        for (std::size_t s = 0; s < per; ++s) {
          const auto& fr = results[p * per + s];
          if (std::isfinite(fr.oracle(i, j))) o.add(fr.oracle(i, j));
          if (std::isfinite(fr.adjacency(i, j))) a.add(fr.adjacency(i, j));
          if (std::isfinite(fr.rate(i, j))) r.add(fr.rate(i, j));
        }
        pr.oracle_mean(i, j) = o.count() ? o.mean() : kNaN;
        pr.oracle_se(i, j) = o.count() > 1 ? o.mean_se() : kNaN;
        pr.adjacency_mean(i, j) = a.count() ? a.mean() : kNaN;
        pr.adjacency_se(i, j) = a.count() > 1 ? a.mean_se() : kNaN;
        pr.adjacency_rate(i, j) = r.count() ? r.mean() : kNaN;
        if (std::isfinite(pr.oracle_mean(i, j)) &&
            std::abs(pr.oracle_mean(i, j)) > kZ95 * pr.oracle_se(i, j))
          rep.null_regime = false;
      }
    }
    rep.points.push_back(std::move(pr));
  }

  rep.spearman.resize(k, k);
  rep.sign_agreement.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      std::vector<double> xs, ys;
      for (const auto& pr : rep.points) {
        if (std::isfinite(pr.oracle_mean(i, j)) && std::isfinite(pr.adjacency_mean(i, j))) {
          xs.push_back(pr.adjacency_mean(i, j));
          ys.push_back(pr.oracle_mean(i, j));
        }
      }
      rep.spearman(i, j) = spearman(xs, ys);
      std::size_t significant = 0, agree = 0;
      for (const auto& fr : results) {
        const double o = fr.oracle(i, j), se = fr.oracle_se(i, j), a = fr.adjacency(i, j);
        if (!std::isfinite(o) || !std::isfinite(se) || !std::isfinite(a)) continue;
        if (std::abs(o) <= kZ95 * se) continue;
        ++significant;
        if ((o < 0.0) == (a < 0.0)) ++agree;
      }
      rep.sign_agreement(i, j) =
          significant ? static_cast<double>(agree) / static_cast<double>(significant) : kNaN;
    }
  }
  return rep;
}

void write_transects_csv(std::span<const TransectRecord> records, const std::filesystem::path& path,
                         const std::string& comment) {
  csv::Writer w(path, comment);
  w.header({"transect_id", "order", "particle_id", "class_id", "chord_length", "width"});
  for (std::size_t t = 0; t < records.size(); ++t)
    for (std::size_t h = 0; h < records[t].hits.size(); ++h) {
      const auto& hit = records[t].hits[h];
      w.row({csv::number(t), csv::number(h), csv::number(hit.particle_id), csv::number(hit.class_id),
             csv::number(hit.chord), csv::number(hit.width)});
    }
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path, const std::string& comment) {
  csv::Writer w(path, comment);
  std::vector<std::string> head{"class"};
  for (Eigen::Index j = 0; j < m.cols(); ++j) head.push_back(std::to_string(j));
  w.header(head);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(csv::number(m(i, j)));
    w.row(row);
  }
}

void write_counts_csv(const TransitionCounts& counts, const std::filesystem::path& path,
                      const std::string& comment) {
  csv::Writer w(path, comment);
  std::vector<std::string> head{"class"};
  for (Eigen::Index j = 0; j < counts.n.cols(); ++j) head.push_back(std::to_string(j));
  w.header(head);
  for (Eigen::Index i = 0; i < counts.n.rows(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (Eigen::Index j = 0; j < counts.n.cols(); ++j) row.push_back(csv::number(counts.n(i, j)));
    w.row(row);
  }
}

}  // namespace granvar
