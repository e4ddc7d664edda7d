#include "scenario.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "granvar/csv.hpp"
#include "granvar/errors.hpp"

namespace granvar::cli {

namespace {

using nlohmann::json;

/// Input iterator over a character buffer that publishes its position on
/// every read, so SAX callbacks can tell where in the text they are.
class ProbeIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  ProbeIterator(const char* p, std::size_t* probe, const char* base) : p_(p), probe_(probe), base_(base) {}
  reference operator*() const {
    *probe_ = static_cast<std::size_t>(p_ - base_) + 1;
    return *p_;
  }
  ProbeIterator& operator++() {
    ++p_;
    return *this;
  }
  ProbeIterator operator++(int) {
    auto t = *this;
    ++p_;
    return t;
  }
  bool operator==(const ProbeIterator& o) const { return p_ == o.p_; }
  bool operator!=(const ProbeIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_;
  std::size_t* probe_;
  const char* base_;
};

/// Maps JSON pointers to the byte offset where their value was read.
class Locator : public nlohmann::json_sax<json> {
 public:
  explicit Locator(const std::size_t* probe) : probe_(probe) {}

  bool null() override { return scalar(); }
  bool boolean(bool) override { return scalar(); }
  bool number_integer(number_integer_t) override { return scalar(); }
  bool number_unsigned(number_unsigned_t) override { return scalar(); }
  bool number_float(number_float_t, const string_t&) override { return scalar(); }
  bool string(string_t&) override { return scalar(); }
  bool binary(binary_t&) override { return scalar(); }
  bool start_object(std::size_t) override { return open(false); }
  bool start_array(std::size_t) override { return open(true); }
  bool end_object() override { return close(); }
  bool end_array() override { return close(); }
  bool key(string_t& k) override {
    stack_.back().key = escape(k);
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

  std::map<std::string, std::size_t> offsets;

 private:
  struct Frame {
    std::string path;
    bool array = false;
    std::size_t index = 0;
    std::string key;
  };

  static std::string escape(const std::string& k) {
    std::string out;
    for (char ch : k) {
      if (ch == '~') out += "~0";
      else if (ch == '/') out += "~1";
      else out += ch;
    }
    return out;
  }

  std::string here() const {
    if (stack_.empty()) return "";
    const auto& f = stack_.back();
    return f.path + "/" + (f.array ? std::to_string(f.index) : f.key);
  }
  void record(const std::string& path) { offsets.emplace(path, *probe_ == 0 ? 0 : *probe_ - 1); }
  void advance() {
    if (!stack_.empty() && stack_.back().array) ++stack_.back().index;
  }
  bool scalar() {
    record(here());
    advance();
    return true;
  }
  bool open(bool array) {
    const auto path = here();
    record(path);
    stack_.push_back({path, array, 0, {}});
    return true;
  }
  bool close() {
    stack_.pop_back();
    advance();
    return true;
  }

  const std::size_t* probe_;
  std::vector<Frame> stack_;
};

struct LineCol {
  int line = 1;
  int col = 1;
};

LineCol line_col(const std::string& text, std::size_t offset) {
  LineCol lc;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++lc.line;
      lc.col = 1;
    } else {
      ++lc.col;
    }
  }
  return lc;
}

class Reader {
 public:
  Reader(const std::string& text, const std::string& source, std::map<std::string, std::size_t> offsets)
      : text_(text), source_(source), offsets_(std::move(offsets)) {}

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    std::string p = ptr;
    auto it = offsets_.find(p);
    while (it == offsets_.end() && !p.empty()) {
      p = p.substr(0, p.rfind('/'));
      it = offsets_.find(p);
    }
    const int line = it == offsets_.end() ? 1 : line_col(text_, it->second).line;
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + (ptr.empty() ? "/" : ptr) + ": " + msg, line);
  }

  void allow(const json& obj, const std::string& ptr, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(ptr, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        fail(ptr + "/" + k, "unknown key '" + k + "'");
    }
  }

  double number(const json& j, const std::string& ptr) const {
    if (!j.is_number()) fail(ptr, "expected a number");
    return j.get<double>();
  }
  std::uint64_t unsigned_int(const json& j, const std::string& ptr) const {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
    fail(ptr, "expected a non-negative integer");
  }
  std::int64_t integer(const json& j, const std::string& ptr) const {
    if (!j.is_number_integer()) fail(ptr, "expected an integer");
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
      fail(ptr, "integer out of range");
    return j.get<std::int64_t>();
  }
  bool boolean(const json& j, const std::string& ptr) const {
    if (!j.is_boolean()) fail(ptr, "expected true or false");
    return j.get<bool>();
  }
  std::string string(const json& j, const std::string& ptr) const {
    if (!j.is_string()) fail(ptr, "expected a string");
    return j.get<std::string>();
  }
  std::vector<double> numbers(const json& j, const std::string& ptr) const {
    if (!j.is_array()) fail(ptr, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], ptr + "/" + std::to_string(i)));
    return out;
  }
  Vector vector(const json& j, const std::string& ptr, Eigen::Index expect) const {
    const auto v = numbers(j, ptr);
    if (static_cast<Eigen::Index>(v.size()) != expect)
      fail(ptr, "expected " + std::to_string(expect) + " entries (one per class), got " + std::to_string(v.size()));
    return Eigen::Map<const Vector>(v.data(), expect);
  }
  Matrix matrix(const json& j, const std::string& ptr, Eigen::Index k) const {
    if (j.is_number()) return Matrix::Constant(k, k, j.get<double>());
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != k)
      fail(ptr, "expected a " + std::to_string(k) + "x" + std::to_string(k) + " matrix or a number");
    Matrix m(k, k);
    for (Eigen::Index i = 0; i < k; ++i) m.row(i) = vector(j[i], ptr + "/" + std::to_string(i), k).transpose();
    return m;
  }

  template <typename Fn>
  auto guard(const std::string& ptr, Fn&& fn) const {
    try {
      return fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(ptr, e.what());
    }
  }

 private:
  const std::string& text_;
  std::string source_;
  std::map<std::string, std::size_t> offsets_;
};

Eigen::Index require_classes(const Reader& r, const ScenarioConfig& c, const std::string& ptr) {
  if (!c.classes) r.fail(ptr, "requires a 'classes' section");
  return c.classes->size();
}

ClassMode parse_class_mode(const Reader& r, const std::string& s, const std::string& ptr) {
  if (s == "independent") return ClassMode::Independent;
  if (s == "cluster_correlated") return ClassMode::ClusterCorrelated;
  r.fail(ptr, "unknown class_mode '" + s + "' (expected independent or cluster_correlated)");
}

ProcessParams parse_process(const Reader& r, const json& j, const std::string& ptr, Eigen::Index k) {
  r.allow(j, ptr,
          {"process", "width", "height", "intensity", "parent_intensity", "offspring_mean", "cluster_radius",
           "min_gap", "mixing", "class_mode", "rho", "gradient"});
  if (!j.contains("process")) r.fail(ptr, "missing 'process'");
  ProcessParams p;
  p.kind = r.guard(ptr + "/process", [&] { return parse_process_kind(r.string(j["process"], ptr + "/process")); });
  auto opt = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = r.number(j[key], ptr + "/" + key);
  };
  p.domain.width = 1.0;
  p.domain.height = 1.0;
  opt("width", p.domain.width);
  opt("height", p.domain.height);
  opt("intensity", p.intensity);
  opt("parent_intensity", p.parent_intensity);
  opt("offspring_mean", p.offspring_mean);
  opt("cluster_radius", p.cluster_radius);
  opt("min_gap", p.min_gap);
  opt("rho", p.rho);
  if (j.contains("mixing")) {
    p.mixing = r.numbers(j["mixing"], ptr + "/mixing");
  } else {
    p.mixing.assign(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
  }
  if (j.contains("class_mode"))
    p.class_mode = parse_class_mode(r, r.string(j["class_mode"], ptr + "/class_mode"), ptr + "/class_mode");
  if (j.contains("gradient")) p.gradient = r.numbers(j["gradient"], ptr + "/gradient");
  r.guard(ptr, [&] {
    p.validate(k);
    return 0;
  });
  return p;
}

Transect parse_line(const Reader& r, const json& j, const std::string& ptr) {
  r.allow(j, ptr, {"x0", "y0", "dx", "dy", "angle", "length"});
  for (const char* key : {"x0", "y0", "length"})
    if (!j.contains(key)) r.fail(ptr, std::string("missing '") + key + "'");
  Transect t;
  t.x0 = r.number(j["x0"], ptr + "/x0");
  t.y0 = r.number(j["y0"], ptr + "/y0");
  t.length = r.number(j["length"], ptr + "/length");
  if (!(t.length > 0.0)) r.fail(ptr + "/length", "must be > 0");
  if (j.contains("angle")) {
    if (j.contains("dx") || j.contains("dy")) r.fail(ptr, "give either 'angle' or 'dx'/'dy'");
    const double a = r.number(j["angle"], ptr + "/angle");
    t.dx = std::cos(a);
    t.dy = std::sin(a);
  } else {
    t.dx = j.contains("dx") ? r.number(j["dx"], ptr + "/dx") : 1.0;
    t.dy = j.contains("dy") ? r.number(j["dy"], ptr + "/dy") : 0.0;
    const double norm = std::hypot(t.dx, t.dy);
    if (!(norm > 0.0)) r.fail(ptr, "direction must be non-zero");
    t.dx /= norm;
    t.dy /= norm;
  }
  return t;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& source,
                              const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto lc = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string what = e.what();
    if (const auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError(source + ":" + std::to_string(lc.line) + ":" + std::to_string(lc.col) + ": " + what, lc.line);
  }

  std::size_t probe = 0;
  Locator locator(&probe);
  ProbeIterator first(text.data(), &probe, text.data());
  ProbeIterator last(text.data() + text.size(), &probe, text.data());
  json::sax_parse(first, last, &locator);
  const Reader r(text, source, std::move(locator.offsets));

  ScenarioConfig c;
  c.source = source;
  c.hash = csv::fnv1a64(text);
  r.allow(root, "",
          {"seed", "replicates", "output", "classes", "dependence", "sample", "expectation", "empirical",
           "c_kk_grid", "batch", "design", "field", "transects", "calibration"});

  if (root.contains("seed")) c.seed = r.unsigned_int(root["seed"], "/seed");
  if (root.contains("replicates")) {
    c.replicates = static_cast<std::size_t>(r.unsigned_int(root["replicates"], "/replicates"));
    if (c.replicates < 2) r.fail("/replicates", "must be >= 2");
  }
  if (root.contains("output")) c.output = r.string(root["output"], "/output");

  if (root.contains("classes")) {
    const auto& j = root["classes"];
    if (!j.is_array() || j.empty()) r.fail("/classes", "expected a non-empty array of classes");
    std::vector<ParticleClass> classes;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto ptr = "/classes/" + std::to_string(i);
      r.allow(j[i], ptr, {"mass", "concentration", "radius"});
      if (!j[i].contains("mass") || !j[i].contains("concentration"))
        r.fail(ptr, "each class needs 'mass' and 'concentration'");
      ParticleClass pc;
      pc.id = static_cast<int>(i);
      pc.mass = r.number(j[i]["mass"], ptr + "/mass");
      pc.concentration = r.number(j[i]["concentration"], ptr + "/concentration");
      if (j[i].contains("radius")) pc.radius = r.number(j[i]["radius"], ptr + "/radius");
      if (!(pc.mass > 0.0)) r.fail(ptr + "/mass", "must be > 0");
      if (!(pc.concentration >= 0.0)) r.fail(ptr + "/concentration", "must be >= 0");
      if (!(pc.radius >= 0.0)) r.fail(ptr + "/radius", "must be >= 0");
      classes.push_back(pc);
    }
    c.classes = r.guard("/classes", [&] { return ClassTable(classes); });
  }

  if (root.contains("dependence")) {
    const auto k = require_classes(r, c, "/dependence");
    DependenceMatrix dep(r.matrix(root["dependence"], "/dependence", k));
    const auto issues = validate_dependence(dep);
    if (!issues.empty()) {
      const auto& v = issues.front();
      r.fail("/dependence/" + std::to_string(v.i) + "/" + std::to_string(v.j), v.message);
    }
    c.dependence = std::move(dep);
  }

  if (root.contains("sample")) {
    const auto k = require_classes(r, c, "/sample");
    const auto& j = root["sample"];
    r.allow(j, "/sample", {"counts", "mass", "concentration"});
    if (!j.contains("counts")) r.fail("/sample", "missing 'counts'");
    const auto& cj = j["counts"];
    if (!cj.is_array() || static_cast<Eigen::Index>(cj.size()) != k)
      r.fail("/sample/counts", "expected " + std::to_string(k) + " integer counts");
    CountVector counts(k);
    for (Eigen::Index i = 0; i < k; ++i)
      counts(i) = r.integer(cj[static_cast<std::size_t>(i)], "/sample/counts/" + std::to_string(i));
    if (j.contains("mass") != j.contains("concentration"))
      r.fail("/sample", "give both 'mass' and 'concentration' or neither");
    if (j.contains("mass")) {
      const double m = r.number(j["mass"], "/sample/mass");
      const double cs = r.number(j["concentration"], "/sample/concentration");
      c.sample = r.guard("/sample", [&] { return SampleSummary::checked(counts, m, cs, *c.classes); });
    } else {
      c.sample = r.guard("/sample", [&] { return SampleSummary::derive(counts, *c.classes); });
    }
  }

  if (root.contains("expectation")) {
    const auto k = require_classes(r, c, "/expectation");
    const auto& j = root["expectation"];
    r.allow(j, "/expectation", {"counts"});
    if (!j.contains("counts")) r.fail("/expectation", "missing 'counts'");
    const Vector counts = r.vector(j["counts"], "/expectation/counts", k);
    c.expectation = r.guard("/expectation", [&] { return ExpectationSummary::derive(counts, *c.classes); });
  }

  if (root.contains("empirical")) {
    const auto& j = root["empirical"];
    r.allow(j, "/empirical", {"v_e", "n_k"});
    if (!j.contains("v_e")) r.fail("/empirical", "missing 'v_e'");
    EmpiricalVarianceInput e;
    e.v_e = r.number(j["v_e"], "/empirical/v_e");
    if (j.contains("n_k")) {
      e.n_k = r.number(j["n_k"], "/empirical/n_k");
    } else if (c.sample && c.classes) {
      const auto k = single_nonzero_class(*c.classes);
      if (k < 0) r.fail("/empirical", "'n_k' is needed unless exactly one class has non-zero concentration");
      e.n_k = static_cast<double>(c.sample->counts()(k));
    } else {
      r.fail("/empirical", "missing 'n_k' (or a sample to take it from)");
    }
    if (!(e.v_e >= 0.0)) r.fail("/empirical/v_e", "must be >= 0");
    if (!(e.n_k >= 1.0)) r.fail("/empirical", "n_k must be >= 1");
    c.empirical = e;
  }

  if (root.contains("c_kk_grid")) {
    const auto& j = root["c_kk_grid"];
    r.allow(j, "/c_kk_grid", {"n_k", "ratio", "v_gy"});
    GridInput g;
    g.n_k = j.contains("n_k") ? r.numbers(j["n_k"], "/c_kk_grid/n_k")
                              : std::vector<double>(CkkGrid::n_k.begin(), CkkGrid::n_k.end());
    g.ratio = j.contains("ratio") ? r.numbers(j["ratio"], "/c_kk_grid/ratio")
                                  : std::vector<double>(CkkGrid::ratio.begin(), CkkGrid::ratio.end());
    if (j.contains("v_gy")) g.v_gy = r.number(j["v_gy"], "/c_kk_grid/v_gy");
    if (!(g.v_gy > 0.0)) r.fail("/c_kk_grid/v_gy", "must be > 0");
    for (std::size_t i = 0; i < g.n_k.size(); ++i)
      if (!(g.n_k[i] >= 1.0)) r.fail("/c_kk_grid/n_k/" + std::to_string(i), "must be >= 1");
    for (std::size_t i = 0; i < g.ratio.size(); ++i)
      if (!(g.ratio[i] >= 0.0)) r.fail("/c_kk_grid/ratio/" + std::to_string(i), "must be >= 0");
    c.grid = std::move(g);
  }

  if (root.contains("batch")) {
    const auto k = require_classes(r, c, "/batch");
    const auto& j = root["batch"];
    r.allow(j, "/batch", {"mass", "q"});
    if (!j.contains("mass")) r.fail("/batch", "missing 'mass'");
    BatchInput b;
    b.mass = r.number(j["mass"], "/batch/mass");
    if (!(b.mass > 0.0)) r.fail("/batch/mass", "must be > 0");
    if (j.contains("q")) {
      b.q = r.vector(j["q"], "/batch/q", k);
      for (Eigen::Index i = 0; i < k; ++i)
        if (!((*b.q)(i) > 0.0 && (*b.q)(i) <= 1.0)) r.fail("/batch/q/" + std::to_string(i), "must lie in (0, 1]");
    }
    if (c.sample && !(b.mass >= c.sample->mass())) r.fail("/batch/mass", "batch mass is below the sample mass");
    c.batch = std::move(b);
  }

  if (root.contains("design")) {
    const auto k = require_classes(r, c, "/design");
    const auto& j = root["design"];
    r.allow(j, "/design", {"kind", "q", "phi", "width", "height", "ensemble", "population", "class_sizes"});
    if (!j.contains("kind")) r.fail("/design", "missing 'kind'");
    const auto kind = r.guard("/design/kind", [&] { return parse_design_kind(r.string(j["kind"], "/design/kind")); });
    SelectionDesign d;
    if (kind == DesignKind::Window) {
      if (!j.contains("width") || !j.contains("height")) r.fail("/design", "window designs need 'width' and 'height'");
      d = SelectionDesign::window(r.number(j["width"], "/design/width"), r.number(j["height"], "/design/height"));
      if (j.contains("ensemble")) c.ensemble = r.boolean(j["ensemble"], "/design/ensemble");
    } else {
      if (j.contains("ensemble")) r.fail("/design/ensemble", "only window designs take 'ensemble'");
      if (!j.contains("q")) r.fail("/design", "missing 'q'");
      Vector q = r.vector(j["q"], "/design/q", k);
      if (kind == DesignKind::Bernoulli) {
        d = SelectionDesign::bernoulli(std::move(q));
      } else {
        Matrix phi = j.contains("phi") ? r.matrix(j["phi"], "/design/phi", k) : Matrix::Ones(k, k);
        d = SelectionDesign::pairwise(std::move(q), std::move(phi));
      }
      if (j.contains("population") == j.contains("class_sizes"))
        r.fail("/design", "give exactly one of 'population' (class per particle) or 'class_sizes'");
      if (j.contains("population")) {
        const auto& pj = j["population"];
        if (!pj.is_array() || pj.empty()) r.fail("/design/population", "expected a non-empty array of class ids");
        for (std::size_t i = 0; i < pj.size(); ++i) {
          const auto ptr = "/design/population/" + std::to_string(i);
          const auto id = r.integer(pj[i], ptr);
          if (id < 0 || id >= k) r.fail(ptr, "class id outside 0.." + std::to_string(k - 1));
          c.population.push_back(static_cast<int>(id));
        }
      } else {
        const auto& sj = j["class_sizes"];
        if (!sj.is_array() || static_cast<Eigen::Index>(sj.size()) != k)
          r.fail("/design/class_sizes", "expected " + std::to_string(k) + " class sizes");
        for (Eigen::Index i = 0; i < k; ++i) {
          const auto n = r.unsigned_int(sj[static_cast<std::size_t>(i)], "/design/class_sizes/" + std::to_string(i));
          c.population.insert(c.population.end(), n, static_cast<int>(i));
        }
        if (c.population.empty()) r.fail("/design/class_sizes", "population is empty");
      }
    }
    r.guard("/design", [&] {
      d.validate(k);
      return 0;
    });
    if (kind == DesignKind::PairwisePmf && c.population.size() > SelectionDesign::kMaxEnumeration)
      r.fail("/design", "pairwise_pmf supports at most " + std::to_string(SelectionDesign::kMaxEnumeration) +
                            " particles");
    c.design = std::move(d);
  }

  if (root.contains("field")) {
    const auto k = require_classes(r, c, "/field");
    const auto& j = root["field"];
    FieldInput f;
    if (j.is_object() && j.contains("csv")) {
      r.allow(j, "/field", {"csv"});
      std::filesystem::path p = r.string(j["csv"], "/field/csv");
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      f.csv = p;
    } else {
      f.process = parse_process(r, j, "/field", k);
    }
    c.field = std::move(f);
  }

  if (c.ensemble && (!c.field || !c.field->process))
    r.fail("/design/ensemble", "ensemble runs need a generated 'field' (process parameters, not a csv)");

  if (root.contains("transects")) {
    const auto& j = root["transects"];
    r.allow(j, "/transects", {"count", "angle", "lines", "size_correction"});
    TransectSpec t;
    if (j.contains("lines")) {
      if (j.contains("count") || j.contains("angle")) r.fail("/transects", "'lines' excludes 'count' and 'angle'");
      const auto& lj = j["lines"];
      if (!lj.is_array() || lj.empty()) r.fail("/transects/lines", "expected a non-empty array of lines");
      for (std::size_t i = 0; i < lj.size(); ++i)
        t.lines.push_back(parse_line(r, lj[i], "/transects/lines/" + std::to_string(i)));
      t.count = t.lines.size();
    } else {
      if (!j.contains("count")) r.fail("/transects", "missing 'count' (or explicit 'lines')");
      t.count = static_cast<std::size_t>(r.unsigned_int(j["count"], "/transects/count"));
      if (t.count < 1) r.fail("/transects/count", "must be >= 1");
      if (j.contains("angle")) {
        t.random_orientation = false;
        t.angle = r.number(j["angle"], "/transects/angle");
      }
    }
    if (j.contains("size_correction")) t.size_correction = r.boolean(j["size_correction"], "/transects/size_correction");
    c.transects = std::move(t);
  }

  if (root.contains("calibration")) {
    const auto k = require_classes(r, c, "/calibration");
    const auto& j = root["calibration"];
    r.allow(j, "/calibration", {"points", "window", "window_replicates", "seeds_per_point"});
    CalibrationInput cal;
    if (!j.contains("points") || !j["points"].is_array() || j["points"].empty())
      r.fail("/calibration", "expected a non-empty 'points' array");
    for (std::size_t i = 0; i < j["points"].size(); ++i) {
      const auto ptr = "/calibration/points/" + std::to_string(i);
      const auto& pj = j["points"][i];
      r.allow(pj, ptr, {"label", "field"});
      if (!pj.contains("field")) r.fail(ptr, "missing 'field'");
      CalibrationPoint pt;
      pt.label = pj.contains("label") ? r.string(pj["label"], ptr + "/label") : "point" + std::to_string(i);
      if (pt.label.find_first_of(",\n\"") != std::string::npos) r.fail(ptr + "/label", "labels cannot contain commas or quotes");
      pt.params = parse_process(r, pj["field"], ptr + "/field", k);
      cal.points.push_back(std::move(pt));
    }
    if (!j.contains("window")) r.fail("/calibration", "missing 'window'");
    const auto& wj = j["window"];
    r.allow(wj, "/calibration/window", {"width", "height"});
    if (!wj.contains("width") || !wj.contains("height")) r.fail("/calibration/window", "needs 'width' and 'height'");
    cal.window_width = r.number(wj["width"], "/calibration/window/width");
    cal.window_height = r.number(wj["height"], "/calibration/window/height");
    r.guard("/calibration/window", [&] {
      SelectionDesign::window(cal.window_width, cal.window_height).validate(k);
      return 0;
    });
    if (j.contains("window_replicates")) {
      cal.window_replicates = r.unsigned_int(j["window_replicates"], "/calibration/window_replicates");
      if (cal.window_replicates < 2) r.fail("/calibration/window_replicates", "must be >= 2");
    }
    if (j.contains("seeds_per_point")) {
      cal.seeds_per_point = r.unsigned_int(j["seeds_per_point"], "/calibration/seeds_per_point");
      if (cal.seeds_per_point < 1) r.fail("/calibration/seeds_per_point", "must be >= 1");
    }
    if (!c.transects) r.fail("/calibration", "requires a 'transects' section");
    c.calibration = std::move(cal);
  }

  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ":0: cannot open config file", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string(), path.parent_path());
}

}  // namespace granvar::cli
