#pragma once

#include "multimag/fields.hpp"
#include "multimag/integrator.hpp"
#include "multimag/multiscale.hpp"
#include "multimag/strayfield.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace multimag {

struct InitialSpec {
  enum class Preset { Uniform, Vortex, File } preset = Preset::Uniform;
  Vec3 direction = Vec3(0, 0, 1);
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3(0, 0, 1);
  double core = 0.2;
  std::filesystem::path file;
  double perturbation = 0.0;  ///< amplitude of a seeded random nodal perturbation
  unsigned seed = 1;
};

struct AnisotropySpec {
  enum class Type { None, Uniaxial, Cubic } type = Type::None;
  Vec3 axis = Vec3(0, 0, 1);
  double K1 = 0.0;
  double K2 = 0.0;
};

struct MultiscaleSpec {
  std::string law = "none";  ///< none | zero | linear | tanh | rational
  double chi = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
  MultiscaleOptions options;

  [[nodiscard]] bool enabled() const { return law != "none"; }
  [[nodiscard]] MaterialLaw make_law() const;
};

struct SimulationConfig {
  std::filesystem::path omega1_mesh;
  std::optional<std::filesystem::path> omega2_mesh;
  NondimConstants constants;
  double theta = 1.0;
  double k = 1e-3;
  std::size_t steps = 0;
  InitialSpec initial;
  AnisotropySpec anisotropy;
  AppliedField applied;
  std::optional<StrayfieldMethod> strayfield;
  MultiscaleSpec multiscale;
  StepOptions step;
  SolveOptions fem;
  std::filesystem::path output_dir = "output";
  std::size_t cadence = 1;
  bool vtk = false;
  unsigned threads = 1;
};

/// INI parser; relative paths resolve against `base_dir`. Unknown sections or
/// keys, malformed values and inconsistent settings throw ConfigError.
SimulationConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
SimulationConfig load_config(const std::filesystem::path& path);

}  // namespace multimag
