#include "granvar/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "granvar/csv.hpp"
#include "granvar/rng.hpp"

namespace granvar {

namespace {

// Sub-stream indices under a field seed.
constexpr std::uint64_t kPositionStream = 0;
constexpr std::uint64_t kClassStream = 1;

double wrap(double v, double period) {
  double r = std::fmod(v, period);
  if (r < 0.0) r += period;
  // fmod of a tiny negative can round up to period.
  if (r >= period) r = 0.0;
  return r;
}

double torus_delta(double a, double b, double period) {
  double d = std::abs(a - b);
  return std::min(d, period - d);
}

double torus_distance(const Particle& a, const Particle& b, const Domain& d) {
  const double dx = torus_delta(a.x, b.x, d.width);
  const double dy = torus_delta(a.y, b.y, d.height);
  return std::sqrt(dx * dx + dy * dy);
}

void check_mixing(std::span<const double> mixing, Eigen::Index classes) {
  if (static_cast<Eigen::Index>(mixing.size()) != classes)
    throw InvalidArgument("mixing proportions need one entry per class (" + std::to_string(classes) + ")");
  double sum = 0.0;
  for (double p : mixing) {
    if (!(p >= 0.0)) throw InvalidArgument("mixing proportions must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("mixing proportions must sum to 1");
}

std::vector<Particle> poisson_positions(const ProcessParams& p, Rng& rng) {
  const auto n = rng.poisson(p.intensity * p.domain.area());
  std::vector<Particle> out(n);
  for (auto& q : out) {
    q.x = rng.uniform() * p.domain.width;
    q.y = rng.uniform() * p.domain.height;
  }
  return out;
}

std::vector<Particle> matern_positions(const ProcessParams& p, Rng& rng) {
  const auto parents = rng.poisson(p.parent_intensity * p.domain.area());
  std::vector<Particle> out;
  for (std::uint64_t k = 0; k < parents; ++k) {
    const double px = rng.uniform() * p.domain.width;
    const double py = rng.uniform() * p.domain.height;
    const auto offspring = rng.poisson(p.offspring_mean);
    for (std::uint64_t o = 0; o < offspring; ++o) {
      double dx = 0.0, dy = 0.0;
      rng.in_disk(p.cluster_radius, dx, dy);
      Particle q;
      q.x = wrap(px + dx, p.domain.width);
      q.y = wrap(py + dy, p.domain.height);
      q.cluster = static_cast<int>(k);
      out.push_back(q);
    }
  }
  return out;
}

// Uniform-grid neighbour index on the torus for the hard-core sampler.
class TorusGrid {
 public:
  TorusGrid(const Domain& d, double reach)
      : domain_(d),
        cols_(std::max(1, static_cast<int>(std::floor(d.width / reach)))),
        rows_(std::max(1, static_cast<int>(std::floor(d.height / reach)))),
        cells_(static_cast<std::size_t>(cols_) * static_cast<std::size_t>(rows_)) {}

  template <typename Fn>
  bool all_neighbours(const Particle& p, Fn&& ok) const {
    if (cols_ < 3 || rows_ < 3) {
      for (const auto& cell : cells_)
        for (const auto& q : cell)
          if (!ok(q)) return false;
      return true;
    }
    const int cx = cell_x(p.x), cy = cell_y(p.y);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = (cx + dx + cols_) % cols_;
        const int y = (cy + dy + rows_) % rows_;
        for (const auto& q : cells_[static_cast<std::size_t>(y * cols_ + x)])
          if (!ok(q)) return false;
      }
    }
    return true;
  }

  void insert(const Particle& p) {
    cells_[static_cast<std::size_t>(cell_y(p.y) * cols_ + cell_x(p.x))].push_back(p);
  }

 private:
  int cell_x(double x) const { return std::min(cols_ - 1, static_cast<int>(x / domain_.width * cols_)); }
  int cell_y(double y) const { return std::min(rows_ - 1, static_cast<int>(y / domain_.height * rows_)); }

  Domain domain_;
  int cols_;
  int rows_;
  std::vector<std::vector<Particle>> cells_;
};

std::vector<Particle> hardcore_field(const ProcessParams& p, const ClassTable& table, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, kPositionStream);
  const auto target = static_cast<std::size_t>(rng.poisson(p.intensity * p.domain.area()));
  const std::vector<int> singletons(target, -1);
  const auto classes = class_assignment(singletons, p.mixing, ClassMode::Independent, 0.0,
                                        stream_seed(seed, kClassStream));
  const double reach = 2.0 * table.radii().maxCoeff() + p.min_gap;
  TorusGrid grid(p.domain, reach > 0.0 ? reach : p.domain.width);

  const std::size_t budget = 100 * std::max<std::size_t>(target, 1);
  std::size_t attempts = 0;
  std::vector<Particle> out;
  out.reserve(target);
  for (std::size_t k = 0; k < target; ++k) {
    Particle cand;
    cand.class_id = classes[k];
    cand.radius = table[cand.class_id].radius;
    for (;;) {
      if (attempts >= budget) throw SaturationError(attempts, out.size(), target);
      ++attempts;
      cand.x = rng.uniform() * p.domain.width;
      cand.y = rng.uniform() * p.domain.height;
      const bool free = grid.all_neighbours(cand, [&](const Particle& q) {
        return torus_distance(cand, q, p.domain) >= cand.radius + q.radius + p.min_gap;
      });
      if (free) break;
    }
    grid.insert(cand);
    out.push_back(cand);
  }
  return out;
}

std::vector<Particle> graded_field(const ProcessParams& p, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, kPositionStream);
  const auto n = static_cast<std::size_t>(rng.poisson(p.intensity * p.domain.area()));
  const std::vector<int> singletons(n, -1);
  const auto classes = class_assignment(singletons, p.mixing, ClassMode::Independent, 0.0,
                                        stream_seed(seed, kClassStream));
  std::vector<Particle> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& q = out[k];
    q.class_id = classes[k];
    const double g = p.gradient[static_cast<std::size_t>(q.class_id)];
    q.x = rng.uniform() * p.domain.width;
    for (;;) {
      const double u = rng.uniform();
      if (rng.uniform() * (1.0 + std::abs(g)) <= 1.0 + g * (2.0 * u - 1.0)) {
        q.y = u * p.domain.height;
        break;
      }
    }
  }
  return out;
}

}  // namespace

const char* to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::Poisson: return "poisson";
    case ProcessKind::MaternCluster: return "matern_cluster";
    case ProcessKind::Hardcore: return "hardcore";
    case ProcessKind::Graded: return "graded";
  }
  return "unknown";
}

ProcessKind parse_process_kind(const std::string& name) {
  if (name == "poisson") return ProcessKind::Poisson;
  if (name == "matern_cluster") return ProcessKind::MaternCluster;
  if (name == "hardcore") return ProcessKind::Hardcore;
  if (name == "graded") return ProcessKind::Graded;
  throw InvalidArgument("unknown process '" + name + "' (expected poisson, matern_cluster, hardcore or graded)");
}

void ProcessParams::validate(Eigen::Index classes) const {
  if (!(domain.width > 0.0) || !(domain.height > 0.0)) throw InvalidArgument("domain sides must be > 0");
  check_mixing(mixing, classes);
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("rho must lie in [0, 1]");
  switch (kind) {
    case ProcessKind::Poisson:
    case ProcessKind::Hardcore:
    case ProcessKind::Graded:
      if (!(intensity > 0.0)) throw InvalidArgument("intensity must be > 0");
      break;
    case ProcessKind::MaternCluster:
      if (!(parent_intensity > 0.0)) throw InvalidArgument("parent_intensity must be > 0");
      if (!(offspring_mean > 0.0)) throw InvalidArgument("offspring_mean must be > 0");
      if (!(cluster_radius > 0.0)) throw InvalidArgument("cluster_radius must be > 0");
      break;
  }
  if (kind == ProcessKind::Hardcore && !(min_gap >= 0.0)) throw InvalidArgument("min_gap must be >= 0");
  if (kind == ProcessKind::Graded) {
    if (static_cast<Eigen::Index>(gradient.size()) != classes)
      throw InvalidArgument("graded process needs one gradient per class");
    for (double g : gradient)
      if (!(g >= -1.0 && g <= 1.0)) throw InvalidArgument("gradients must lie in [-1, 1]");
  }
}

CountVector SpatialField::class_counts() const {
  CountVector n = CountVector::Zero(classes);
  for (const auto& p : particles) ++n(p.class_id);
  return n;
}

std::vector<int> class_assignment(std::span<const int> cluster_ids, std::span<const double> mixing,
                                  ClassMode mode, double rho, std::uint64_t seed) {
  if (mixing.empty()) throw InvalidArgument("mixing proportions must not be empty");
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidArgument("rho must lie in [0, 1]");
  Rng rng(seed);
  std::vector<int> out(cluster_ids.size());
  if (mixing.size() == 1) return out;
  if (mode == ClassMode::Independent || rho == 0.0) {
    for (auto& c : out) c = static_cast<int>(rng.categorical(mixing));
    return out;
  }
  // Cluster classes come from their own stream so adding members does not
  // shift them.
  Rng cluster_rng(mix64(seed));
  std::vector<int> cluster_class;
  for (std::size_t i = 0; i < cluster_ids.size(); ++i) {
    const int k = cluster_ids[i];
    if (k < 0) {
      out[i] = static_cast<int>(rng.categorical(mixing));
      continue;
    }
    while (static_cast<int>(cluster_class.size()) <= k)
      cluster_class.push_back(static_cast<int>(cluster_rng.categorical(mixing)));
    const bool inherit = rng.uniform() < rho;
    const int own = static_cast<int>(rng.categorical(mixing));
    out[i] = inherit ? cluster_class[static_cast<std::size_t>(k)] : own;
  }
  return out;
}

SpatialField generate_field(const ProcessParams& params, const ClassTable& table, std::uint64_t seed) {
  params.validate(table.size());
  SpatialField field;
  field.domain = params.domain;
  field.process_tag = to_string(params.kind);
  field.classes = table.size();

  switch (params.kind) {
    case ProcessKind::Hardcore:
      field.particles = hardcore_field(params, table, seed);
      return field;
    case ProcessKind::Graded:
      field.particles = graded_field(params, seed);
      break;
    case ProcessKind::Poisson: {
      Rng rng = Rng::stream(seed, kPositionStream);
      field.particles = poisson_positions(params, rng);
      break;
    }
    case ProcessKind::MaternCluster: {
      Rng rng = Rng::stream(seed, kPositionStream);
      field.particles = matern_positions(params, rng);
      break;
    }
  }
  if (params.kind != ProcessKind::Graded) {
    std::vector<int> clusters(field.particles.size());
    std::transform(field.particles.begin(), field.particles.end(), clusters.begin(),
                   [](const Particle& p) { return p.cluster; });
    const auto ids = class_assignment(clusters, params.mixing, params.class_mode, params.rho,
                                      stream_seed(seed, kClassStream));
    for (std::size_t i = 0; i < ids.size(); ++i) field.particles[i].class_id = ids[i];
  }
  for (auto& p : field.particles) p.radius = table[p.class_id].radius;
  return field;
}

double min_hardcore_slack(const SpatialField& field, double gap) {
  double best = std::numeric_limits<double>::infinity();
  const auto& ps = field.particles;
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = i + 1; j < ps.size(); ++j)
      best = std::min(best, torus_distance(ps[i], ps[j], field.domain) - ps[i].radius - ps[j].radius - gap);
  return best;
}

double uniformity_chi_square(const SpatialField& field, int cols, int rows) {
  std::vector<double> counts(static_cast<std::size_t>(cols * rows), 0.0);
  for (const auto& p : field.particles) {
    const int cx = std::min(cols - 1, static_cast<int>(p.x / field.domain.width * cols));
    const int cy = std::min(rows - 1, static_cast<int>(p.y / field.domain.height * rows));
    counts[static_cast<std::size_t>(cy * cols + cx)] += 1.0;
  }
  const double expected = static_cast<double>(field.particles.size()) / (cols * rows);
  if (expected == 0.0) return 0.0;
  double chi = 0.0;
  for (double c : counts) chi += (c - expected) * (c - expected) / expected;
  return chi;
}

std::filesystem::path sidecar_for(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

void write_field(const SpatialField& field, const std::filesystem::path& csv_path,
                 const std::filesystem::path& sidecar, const std::string& comment) {
  csv::Writer w(csv_path, comment);
  w.header({"x", "y", "radius", "class_id"});
  for (const auto& p : field.particles)
    w.row({csv::number(p.x), csv::number(p.y), csv::number(p.radius), csv::number(p.class_id)});

  nlohmann::ordered_json meta;
  meta["width"] = field.domain.width;
  meta["height"] = field.domain.height;
  meta["classes"] = field.classes;
  meta["process"] = field.process_tag;
  std::ofstream out(sidecar, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + sidecar.string() + " for writing");
  out << meta.dump(2) << '\n';
}

SpatialField read_field(const std::filesystem::path& csv_path, const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw InvalidArgument("cannot open field sidecar " + sidecar.string());
  SpatialField field;
  try {
    const auto meta = nlohmann::json::parse(in);
    field.domain.width = meta.at("width").get<double>();
    field.domain.height = meta.at("height").get<double>();
    field.classes = meta.at("classes").get<Eigen::Index>();
    field.process_tag = meta.value("process", std::string("imported"));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(sidecar.string() + ": " + e.what());
  }
  if (!(field.domain.width > 0.0 && field.domain.height > 0.0) || field.classes < 1)
    throw InvalidArgument(sidecar.string() + ": domain sides and class count must be positive");

  const auto rows = csv::read(csv_path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"x", "y", "radius", "class_id"})
    throw InvalidArgument(csv_path.string() + ": header must be x,y,radius,class_id");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const std::string where = csv_path.string() + ": data row " + std::to_string(r) + ": ";
    if (f.size() != 4) throw InvalidArgument(where + "expected 4 fields");
    Particle p;
    try {
      p.x = std::stod(f[0]);
      p.y = std::stod(f[1]);
      p.radius = std::stod(f[2]);
      p.class_id = std::stoi(f[3]);
    } catch (const std::exception&) {
      throw InvalidArgument(where + "unparseable number");
    }
    if (!(p.x >= 0.0 && p.x < field.domain.width && p.y >= 0.0 && p.y < field.domain.height))
      throw InvalidArgument(where + "centre outside domain");
    if (!(p.radius >= 0.0)) throw InvalidArgument(where + "radius must be >= 0");
    if (p.class_id < 0 || p.class_id >= field.classes) throw InvalidArgument(where + "class_id out of range");
    field.particles.push_back(p);
  }
  return field;
}

}  // namespace granvar
