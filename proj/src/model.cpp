#include "granvar/model.hpp"

#include <cmath>
#include <sstream>

#include "granvar/kernels.hpp"

namespace granvar {

namespace {

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace

ClassTable::ClassTable(std::vector<ParticleClass> classes) : classes_(std::move(classes)) {
  if (classes_.empty()) throw InvalidArgument("class table must contain at least one class");
  const auto k = static_cast<Eigen::Index>(classes_.size());
  masses_.resize(k);
  concentrations_.resize(k);
  radii_.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& pc = classes_[static_cast<std::size_t>(i)];
    const std::string where = "class " + std::to_string(i) + ": ";
    if (pc.id != i) throw InvalidArgument(where + "ids must be 0..K-1 in order, got " + std::to_string(pc.id));
    if (!(pc.mass > 0.0) || !std::isfinite(pc.mass)) throw InvalidArgument(where + "mass must be > 0");
    if (!(pc.concentration >= 0.0) || !std::isfinite(pc.concentration))
      throw InvalidArgument(where + "concentration must be >= 0");
    if (!(pc.radius >= 0.0) || !std::isfinite(pc.radius)) throw InvalidArgument(where + "radius must be >= 0");
    masses_(i) = pc.mass;
    concentrations_(i) = pc.concentration;
    radii_(i) = pc.radius;
  }
}

ClassTable ClassTable::from_vectors(std::span<const double> masses,
                                    std::span<const double> concentrations,
                                    std::span<const double> radii) {
  if (masses.size() != concentrations.size() || (!radii.empty() && radii.size() != masses.size()))
    throw InvalidArgument("class vectors must have equal length");
  std::vector<ParticleClass> classes;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    classes.push_back({static_cast<int>(i), masses[i], concentrations[i], radii.empty() ? 0.0 : radii[i]});
  }
  return ClassTable(std::move(classes));
}

template <typename CountScalar>
BasicSummary<CountScalar> BasicSummary<CountScalar>::derive(const Counts& counts,
                                                            const ClassTable& table) {
  if (counts.size() != table.size())
    throw InvalidArgument("count vector has " + std::to_string(counts.size()) +
                          " entries, class table has " + std::to_string(table.size()));
  bool any = false;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (!(counts(i) >= 0) || !std::isfinite(static_cast<double>(counts(i))))
      throw InvalidArgument("count for class " + std::to_string(i) + " must be >= 0");
    if (counts(i) > 0) any = true;
  }
  if (!any) throw EmptySample();
  const double mass = kernels::sample_mass(counts, table.masses());
  const double conc = kernels::sample_concentration(counts, table.masses(), table.concentrations());
  return BasicSummary(counts, mass, conc);
}

template <typename CountScalar>
BasicSummary<CountScalar> BasicSummary<CountScalar>::checked(const Counts& counts, double mass,
                                                             double concentration,
                                                             const ClassTable& table) {
  auto s = derive(counts, table);
  if (!close_rel(mass, s.mass_, 1e-12)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "sample mass " << mass << " disagrees with sum N_i m_i = " << s.mass_;
    throw InvalidArgument(msg.str());
  }
  if (!close_rel(concentration, s.concentration_, 1e-12) &&
      std::abs(concentration - s.concentration_) > 1e-300) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "sample concentration " << concentration << " disagrees with derived value "
        << s.concentration_;
    throw InvalidArgument(msg.str());
  }
  return s;
}

template class BasicSummary<std::int64_t>;
template class BasicSummary<double>;

SampleSummary derive_summary(std::span<const std::int64_t> counts, const ClassTable& table) {
  CountVector n(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) n(static_cast<Eigen::Index>(i)) = counts[i];
  return SampleSummary::derive(n, table);
}

ExpectationSummary derive_expectation(std::span<const double> counts, const ClassTable& table) {
  Vector n(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) n(static_cast<Eigen::Index>(i)) = counts[i];
  return ExpectationSummary::derive(n, table);
}

BatchSpec BatchSpec::correct(double batch_mass, double sample_mass, Eigen::Index k) {
  BatchSpec b{batch_mass, Vector::Constant(k, sample_mass / batch_mass)};
  b.validate(true);
  return b;
}

void BatchSpec::validate(bool require_correct) const {
  if (!(batch_mass > 0.0)) throw InvalidArgument("batch mass must be > 0");
  for (Eigen::Index i = 0; i < first_order_q.size(); ++i) {
    const double q = first_order_q(i);
    if (!(q > 0.0 && q <= 1.0))
      throw InvalidArgument("first-order probability q_" + std::to_string(i) + " must lie in (0, 1]");
    if (require_correct && q != first_order_q(0))
      throw InvalidArgument("correct sampling requires equal first-order probabilities");
  }
}

std::vector<DependenceViolation> validate_dependence(const DependenceMatrix& dep,
                                                     const std::optional<Vector>& q) {
  using Kind = DependenceViolation::Kind;
  std::vector<DependenceViolation> out;
  const Matrix& c = dep.matrix();
  if (c.rows() != c.cols() || c.rows() == 0) {
    out.push_back({Kind::Shape, c.rows(), c.cols(), "dependence matrix must be square and non-empty"});
    return out;
  }
  if (q && q->size() != c.rows()) {
    out.push_back({Kind::Shape, q->size(), c.rows(), "first-order probability vector length mismatch"});
  }
  const Eigen::Index k = c.rows();
  auto at = [](Eigen::Index i, Eigen::Index j) {
    return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
  };
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double v = c(i, j);
      if (!std::isfinite(v)) {
        out.push_back({Kind::NotFinite, i, j, "C" + at(i, j) + " is not finite"});
        continue;
      }
      if (j > i && v != c(j, i)) {
        out.push_back({Kind::Asymmetric, i, j, "C_ij must equal C_ji at " + at(i, j)});
      }
      if (v >= 1.0) {
        out.push_back({Kind::NotBelowOne, i, j, "C_ij must be < 1 at " + at(i, j)});
      }
      if (q && q->size() == k && j >= i) {
        const double qmax = std::max((*q)(i), (*q)(j));
        if (v < 1.0 - 1.0 / qmax) {
          out.push_back({Kind::Infeasible, i, j,
                         "C_ij below 1 - 1/max(q_i, q_j) at " + at(i, j) +
                             " (pi_ij would exceed min(q_i, q_j))"});
        }
      }
    }
  }
  return out;
}

void require_below_one(const DependenceMatrix& c) {
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    for (Eigen::Index j = 0; j < c.size(); ++j) {
      if (!(c(i, j) < 1.0))
        throw DegenerateDependence("C_ij must be < 1, got " + std::to_string(c(i, j)) + " at (" +
                                   std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
}

}  // namespace granvar
