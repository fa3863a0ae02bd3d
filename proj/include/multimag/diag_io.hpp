#pragma once

#include "multimag/fields.hpp"
#include "multimag/integrator.hpp"
#include "multimag/mesh.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace multimag {

struct EnergyRecord {
  std::size_t step = 0;
  double time = 0.0;
  double exchange = 0.0;     ///< C_exch/2 ||grad m||^2
  double interaction = 0.0;  ///< sum of the contributions' energies
  double zeeman = 0.0;       ///< -<f, m>
  double total = 0.0;
  double dissipation_sum = 0.0;  ///< sum_i alpha k ||v_i||^2
};

struct EnergyTerms {
  double exchange = 0.0;
  double interaction = 0.0;
  double zeeman = 0.0;
  std::vector<std::string> excluded;  ///< contributions without an energy
};

/// Energy parts at m. Contributions flagged linear self-adjoint enter with
/// 1/2 <pi(m), m>; others use their own energy or are excluded.
EnergyTerms energy(const LlgOperators& ops, const NodalVectorField& m, const ContributionList& contributions,
                   const NodalVectorField& f, const NondimConstants& constants, const FieldContext& ctx = {});

/// Same, reusing an already evaluated pi per contribution (list order).
EnergyTerms energy_from_fields(const LlgOperators& ops, const NodalVectorField& m, const ContributionList& contributions,
                               const std::vector<NodalVectorField>& pis, const NodalVectorField& f,
                               const NondimConstants& constants);

struct DecayReport {
  bool passed = true;
  std::optional<std::size_t> first_violation;  ///< step index of the first failing record
  double max_excess = 0.0;  ///< largest E_j + D_j - E_0 - slack_j (negative when passing)
  double slack_base = 0.0;  ///< 1e-8 (1 + |E_0|)
  double defect_constant = 0.0;
};

/// E_j + D_j <= E_0 + 1e-8 (1 + |E_0|) + c k sum ||v||^2 for every record,
/// with k sum ||v||^2 = D_j / alpha.
DecayReport check_energy_decay(const std::vector<EnergyRecord>& records, double alpha = 1.0, double defect_constant = 0.0);

// ---------------------------------------------------------------- output

inline constexpr const char* kEnergyHeader = "step,time,E_exch,E_int,E_zeeman,E_total,dissipation_sum";

std::string format_energy_row(const EnergyRecord& r);
std::vector<EnergyRecord> read_energies(const std::filesystem::path& csv);

void write_snapshot(const std::filesystem::path& path, const NodalVectorField& m);
NodalVectorField read_snapshot(const std::filesystem::path& path);
/// Legacy-VTK unstructured grid with m as point vectors.
void write_vtk(const std::filesystem::path& path, const TetMesh& mesh, const NodalVectorField& m);

std::string snapshot_name(std::size_t step);

/// Streams energies.csv and snapshots at steps 0, multiples of `cadence` and
/// the final step.
class TrajectoryWriter {
 public:
  TrajectoryWriter(std::filesystem::path dir, std::size_t cadence, std::size_t final_step, const TetMesh* vtk_mesh = nullptr);
  void record(const EnergyRecord& energy, const NodalVectorField& m);
  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }
  [[nodiscard]] std::size_t snapshots_written() const { return snapshots_; }

 private:
  std::filesystem::path dir_;
  std::size_t cadence_;
  std::size_t final_step_;
  const TetMesh* vtk_mesh_;
  std::ofstream csv_;
  std::size_t snapshots_ = 0;
};

/// Writes a finished trajectory: records[i] belongs to trajectory.states[i].
void write_trajectory(const Trajectory& trajectory, const std::vector<EnergyRecord>& records, const std::filesystem::path& dir,
                      std::size_t cadence, const TetMesh* vtk_mesh = nullptr);

}  // namespace multimag
