#include "multimag/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace multimag {

namespace pt = boost::property_tree;

MaterialLaw MultiscaleSpec::make_law() const {
  if (law == "zero") return MaterialLaw::zero();
  if (law == "linear") return MaterialLaw::linear(chi);
  if (law == "tanh") return MaterialLaw::tanh(c1, c2);
  if (law == "rational") return MaterialLaw::rational(c1, c2, c3, c4);
  throw ConfigError(fmt::format("multiscale law '{}' has no material law", law));
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"mesh", {"omega1", "omega2"}},
      {"physical", {"A", "K", "Ms", "alpha", "L", "T"}},
      {"reduced", {"C_exch", "C_ani", "alpha"}},
      {"time", {"theta", "k", "steps"}},
      {"initial", {"preset", "direction", "center", "axis", "core", "file", "perturbation", "seed"}},
      {"anisotropy", {"type", "axis", "K1", "K2"}},
      {"applied", {"type", "value", "amplitude", "omega", "phase"}},
      {"strayfield", {"method"}},
      {"multiscale", {"law", "chi", "c1", "c2", "c3", "c4", "tol_nl", "max_iter", "scheme"}},
      {"solver", {"tol", "fem_tol"}},
      {"output", {"dir", "cadence", "vtk", "threads"}},
  };
  return s;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  [[nodiscard]] bool has(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    return sec && sec->get_child_optional(key);
  }
  [[nodiscard]] bool has_section(const std::string& section) const { return tree_.get_child_optional(section).has_value(); }

  [[nodiscard]] std::string str(const std::string& section, const std::string& key, const std::string& fallback) const {
    return has(section, key) ? raw(section, key) : fallback;
  }
  [[nodiscard]] std::string require(const std::string& section, const std::string& key) const {
    if (!has(section, key)) throw ConfigError(fmt::format("missing required key [{}] {}", section, key));
    return raw(section, key);
  }
  [[nodiscard]] double num(const std::string& section, const std::string& key, std::optional<double> fallback = {}) const {
    if (!has(section, key)) {
      if (fallback) return *fallback;
      throw ConfigError(fmt::format("missing required key [{}] {}", section, key));
    }
    const std::string v = raw(section, key);
    std::istringstream ss(v);
    double x = 0.0;
    std::string extra;
    if (!(ss >> x) || (ss >> extra) || !std::isfinite(x))
      throw ConfigError(fmt::format("[{}] {}: '{}' is not a finite number", section, key, v));
    return x;
  }
  [[nodiscard]] std::size_t count(const std::string& section, const std::string& key, std::size_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = raw(section, key);
    std::istringstream ss(v);
    long long x = -1;
    std::string extra;
    if (!(ss >> x) || (ss >> extra) || x < 0)
      throw ConfigError(fmt::format("[{}] {}: '{}' is not a non-negative integer", section, key, v));
    return static_cast<std::size_t>(x);
  }
  [[nodiscard]] Vec3 vec(const std::string& section, const std::string& key, const Vec3& fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = raw(section, key);
    std::istringstream ss(v);
    Vec3 x;
    std::string extra;
    if (!(ss >> x[0] >> x[1] >> x[2]) || (ss >> extra) || !x.allFinite())
      throw ConfigError(fmt::format("[{}] {}: '{}' is not three numbers", section, key, v));
    return x;
  }
  [[nodiscard]] bool flag(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = raw(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(fmt::format("[{}] {}: '{}' is not a boolean", section, key, v));
  }

 private:
  [[nodiscard]] std::string raw(const std::string& section, const std::string& key) const {
    return tree_.get_child(section).get<std::string>(key);
  }
  const pt::ptree& tree_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <class T>
T choose(const std::string& section, const std::string& key, const std::string& value, const std::map<std::string, T>& options) {
  const auto it = options.find(value);
  if (it != options.end()) return it->second;
  std::string allowed;
  for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : "|") + name;
  throw ConfigError(fmt::format("[{}] {}: '{}' is not one of {}", section, key, value, allowed));
}

}  // namespace

SimulationConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config syntax error at line {}: {}", e.line(), e.message()));
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (body.empty() && !body.data().empty()) throw ConfigError(fmt::format("key '{}' outside of a section", section));
    if (it == schema().end()) throw ConfigError(fmt::format("unknown section [{}]", section));
    for (const auto& [key, _] : body)
      if (!it->second.count(key)) throw ConfigError(fmt::format("unknown key '{}' in section [{}]", key, section));
  }

  const Reader r(tree);
  SimulationConfig c;
  c.omega1_mesh = resolve(base_dir, r.require("mesh", "omega1"));
  if (r.has("mesh", "omega2")) c.omega2_mesh = resolve(base_dir, r.require("mesh", "omega2"));

  const bool physical = r.has_section("physical"), reduced = r.has_section("reduced");
  if (physical == reduced) throw ConfigError("exactly one of [physical] or [reduced] must be given");
  if (physical) {
    c.constants = compute_constants(r.num("physical", "A"), r.num("physical", "K"), r.num("physical", "Ms"),
                                    r.num("physical", "alpha"), r.num("physical", "L"), r.num("physical", "T"));
  } else {
    c.constants.C_exch = r.num("reduced", "C_exch");
    c.constants.C_ani = r.num("reduced", "C_ani", 0.0);
    c.constants.alpha = r.num("reduced", "alpha");
    if (!(c.constants.C_exch > 0.0)) throw ConfigError("[reduced] C_exch must be positive");
    if (!(c.constants.alpha > 0.0)) throw ConfigError("[reduced] alpha must be positive");
    if (c.constants.C_ani < 0.0) throw ConfigError("[reduced] C_ani must be non-negative");
  }

  c.theta = r.num("time", "theta", 1.0);
  c.k = r.num("time", "k");
  c.steps = r.count("time", "steps", 0);
  if (!(c.theta >= 0.0 && c.theta <= 1.0)) throw ConfigError(fmt::format("[time] theta must lie in [0, 1], got {}", c.theta));
  if (!(c.k > 0.0)) throw ConfigError(fmt::format("[time] k must be positive, got {}", c.k));

  using P = InitialSpec::Preset;
  c.initial.preset = choose<P>("initial", "preset", r.str("initial", "preset", "uniform"),
                               {{"uniform", P::Uniform}, {"vortex", P::Vortex}, {"file", P::File}});
  c.initial.direction = r.vec("initial", "direction", c.initial.direction);
  c.initial.center = r.vec("initial", "center", c.initial.center);
  c.initial.axis = r.vec("initial", "axis", c.initial.axis);
  c.initial.core = r.num("initial", "core", c.initial.core);
  c.initial.perturbation = r.num("initial", "perturbation", 0.0);
  c.initial.seed = static_cast<unsigned>(r.count("initial", "seed", 1));
  if (c.initial.perturbation < 0.0) throw ConfigError("[initial] perturbation must be non-negative");
  if (c.initial.preset == P::File) c.initial.file = resolve(base_dir, r.require("initial", "file"));

  using A = AnisotropySpec::Type;
  c.anisotropy.type = choose<A>("anisotropy", "type", r.str("anisotropy", "type", "none"),
                                {{"none", A::None}, {"uniaxial", A::Uniaxial}, {"cubic", A::Cubic}});
  c.anisotropy.axis = r.vec("anisotropy", "axis", c.anisotropy.axis);
  c.anisotropy.K1 = r.num("anisotropy", "K1", 0.0);
  c.anisotropy.K2 = r.num("anisotropy", "K2", 0.0);
  if (c.anisotropy.type == A::Uniaxial && std::abs(c.anisotropy.axis.norm() - 1.0) > 1e-12)
    throw ConfigError("[anisotropy] axis must be a unit vector");
  if (c.anisotropy.type != A::None && !(c.constants.C_ani > 0.0))
    throw ConfigError("anisotropy selected but C_ani is zero");

  const std::string applied = r.str("applied", "type", "none");
  choose<int>("applied", "type", applied, {{"none", 0}, {"constant", 1}, {"sinusoidal", 2}});
  if (applied == "constant") {
    c.applied.value = r.vec("applied", "value", Vec3::Zero());
  } else if (applied == "sinusoidal") {
    c.applied.kind = AppliedField::Kind::Sinusoidal;
    c.applied.value = r.vec("applied", "value", Vec3::Zero());
    c.applied.amplitude = r.vec("applied", "amplitude", Vec3::Zero());
    c.applied.omega = r.num("applied", "omega");
    c.applied.phase = r.num("applied", "phase", 0.0);
  }

  const std::string sf = r.str("strayfield", "method", "none");
  if (sf != "none") c.strayfield = parse_strayfield_method(sf);

  auto& ms = c.multiscale;
  ms.law = r.str("multiscale", "law", "none");
  choose<int>("multiscale", "law", ms.law, {{"none", 0}, {"zero", 1}, {"linear", 2}, {"tanh", 3}, {"rational", 4}});
  ms.chi = r.num("multiscale", "chi", 0.0);
  ms.c1 = r.num("multiscale", "c1", 0.0);
  ms.c2 = r.num("multiscale", "c2", 0.0);
  ms.c3 = r.num("multiscale", "c3", 0.0);
  ms.c4 = r.num("multiscale", "c4", 0.0);
  ms.options.tol_nl = r.num("multiscale", "tol_nl", 1e-8);
  ms.options.max_iter = r.count("multiscale", "max_iter", 200);
  ms.options.scheme = parse_scheme(r.str("multiscale", "scheme", "zarantonello"));
  if (ms.enabled()) {
    if (!c.omega2_mesh) throw ConfigError("[multiscale] law requires [mesh] omega2");
    const auto law = ms.make_law();
    if (!(law.gamma() > 0.25))
      throw ConfigError(fmt::format("[multiscale] law {} has gamma = {}; the stabilized coupling needs gamma > 1/4",
                                    law.describe(), law.gamma()));
  }

  c.step.tol = r.num("solver", "tol", 1e-10);
  c.fem.tol = r.num("solver", "fem_tol", 1e-10);
  ms.options.solve = c.fem;
  if (!(c.step.tol > 0.0) || !(c.fem.tol > 0.0)) throw ConfigError("[solver] tolerances must be positive");

  c.output_dir = resolve(base_dir, r.str("output", "dir", "output"));
  c.cadence = r.count("output", "cadence", 1);
  if (c.cadence == 0) throw ConfigError("[output] cadence must be positive");
  c.vtk = r.flag("output", "vtk", false);
  c.threads = static_cast<unsigned>(r.count("output", "threads", 1));
  return c;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace multimag
