#pragma once

#include "multimag/config.hpp"
#include "multimag/diag_io.hpp"
#include "multimag/integrator.hpp"

#include <memory>

namespace multimag {

/// Everything a configured run needs, built from a SimulationConfig.
struct SimulationContext {
  std::unique_ptr<TetMesh> omega1;
  std::unique_ptr<TetMesh> omega2;
  std::unique_ptr<LlgOperators> ops;
  ContributionList contributions;
  AppliedFieldFunction applied;
  NodalVectorField m0;
};

SimulationContext build_simulation(const SimulationConfig& config);

struct SimulationSummary {
  std::size_t steps = 0;
  MagnetizationState final_state;
  std::vector<EnergyRecord> energies;
  std::vector<std::string> excluded_from_energy;
  DecayReport decay;
  std::size_t snapshots = 0;
};

/// Runs the configured simulation, streaming energies.csv, snapshots and a
/// summary.txt into config.output_dir.
SimulationSummary run_simulation(const SimulationConfig& config);

/// Energy record of a state, given the running dissipation sum.
EnergyRecord make_energy_record(const LlgOperators& ops, const MagnetizationState& state, const ContributionList& contributions,
                                const AppliedFieldFunction& applied, const NondimConstants& constants, double dissipation,
                                std::vector<std::string>* excluded = nullptr);

}  // namespace multimag
