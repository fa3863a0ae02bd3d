#include "multimag/simulation.hpp"

#include "multimag/parallel.hpp"

#include <fmt/format.h>
#include <fmt/os.h>
#include <spdlog/spdlog.h>

#include <random>

namespace multimag {

namespace {

NodalVectorField initial_state(const SimulationConfig& config, const TetMesh& mesh) {
  const auto& spec = config.initial;
  NodalVectorField m;
  switch (spec.preset) {
    case InitialSpec::Preset::Uniform: m = uniform_magnetization(mesh, spec.direction); break;
    case InitialSpec::Preset::Vortex: m = vortex_magnetization(mesh, spec.center, spec.axis, spec.core); break;
    case InitialSpec::Preset::File:
      m = read_snapshot(spec.file);
      if (m.size() != mesh.num_nodes())
        throw ConfigError(fmt::format("initial file {} has {} nodes, mesh has {}", spec.file.string(), m.size(), mesh.num_nodes()));
      break;
  }
  if (spec.perturbation > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& v : m.values) {
      const Vec3 d(g(rng), g(rng), g(rng));
      v = (v.normalized() + spec.perturbation * d.normalized()).normalized();
    }
  }
  return m;
}

}  // namespace

SimulationContext build_simulation(const SimulationConfig& config) {
  set_num_threads(config.threads);
  SimulationContext ctx;
  ctx.omega1 = std::make_unique<TetMesh>(load_mesh(config.omega1_mesh, Region::Omega1));
  ctx.ops = std::make_unique<LlgOperators>(*ctx.omega1);
  const double c_ani = config.constants.C_ani;
  switch (config.anisotropy.type) {
    case AnisotropySpec::Type::None: break;
    case AnisotropySpec::Type::Uniaxial:
      ctx.contributions.push_back(std::make_shared<UniaxialContribution>(c_ani, config.anisotropy.axis));
      break;
    case AnisotropySpec::Type::Cubic:
      ctx.contributions.push_back(std::make_shared<CubicContribution>(*ctx.omega1, c_ani, config.anisotropy.K1, config.anisotropy.K2));
      break;
  }
  if (config.strayfield) {
    auto ws = std::make_shared<StrayfieldWorkspace>(*ctx.omega1, *config.strayfield, BemOptions{}, config.fem);
    ctx.contributions.push_back(std::make_shared<StrayfieldContribution>(std::move(ws)));
  }
  const AppliedField applied = config.applied;
  ctx.applied = applied;
  if (config.multiscale.enabled()) {
    ctx.omega2 = std::make_unique<TetMesh>(load_mesh(*config.omega2_mesh, Region::Omega2));
    auto ws = std::make_shared<MultiscaleWorkspace>(*ctx.omega1, *ctx.omega2, config.multiscale.options);
    ctx.contributions.push_back(std::make_shared<MultiscaleContribution>(std::move(ws), config.multiscale.make_law(), ctx.applied));
  }
  ctx.m0 = initial_state(config, *ctx.omega1);
  return ctx;
}

EnergyRecord make_energy_record(const LlgOperators& ops, const MagnetizationState& state, const ContributionList& contributions,
                                const AppliedFieldFunction& applied, const NondimConstants& constants, double dissipation,
                                std::vector<std::string>* excluded) {
  const auto f = applied ? sample_applied_field(applied, ops.mesh(), state.time) : NodalVectorField(ops.mesh().num_nodes());
  const FieldContext fc{state.time, state.step, &f};
  const auto terms = energy(ops, state.m, contributions, f, constants, fc);
  if (excluded) *excluded = terms.excluded;
  EnergyRecord r;
  r.step = state.step;
  r.time = state.time;
  r.exchange = terms.exchange;
  r.interaction = terms.interaction;
  r.zeeman = terms.zeeman;
  r.total = terms.exchange + terms.interaction + terms.zeeman;
  r.dissipation_sum = dissipation;
  return r;
}

SimulationSummary run_simulation(const SimulationConfig& config) {
  auto ctx = build_simulation(config);
  RunSetup setup;
  setup.ops = ctx.ops.get();
  setup.contributions = ctx.contributions;
  setup.applied = ctx.applied;
  setup.constants = config.constants;
  setup.theta = config.theta;
  setup.k = config.k;
  setup.steps = config.steps;
  setup.step = config.step;
  setup.keep_states = false;

  SimulationSummary summary;
  TrajectoryWriter writer(config.output_dir, config.cadence, config.steps, config.vtk ? ctx.omega1.get() : nullptr);
  double dissipation = 0.0;
  bool warned = false;
  auto observer = [&](const MagnetizationState& s, const NodalVectorField* v, const StepDiagnostics*) {
    if (v) dissipation += config.constants.alpha * config.k * mass_inner(ctx.ops->mass(), *v, *v);
    std::vector<std::string> excluded;
    const auto rec = make_energy_record(*ctx.ops, s, ctx.contributions, ctx.applied, config.constants, dissipation, &excluded);
    if (!excluded.empty() && !warned) {
      spdlog::warn("energy bookkeeping excludes the nonlinear contribution(s): {}", fmt::join(excluded, ", "));
      summary.excluded_from_energy = excluded;
      warned = true;
    }
    writer.record(rec, s.m);
    summary.energies.push_back(rec);
  };

  auto write_summary = [&] {
    auto out = fmt::output_file((config.output_dir / "summary.txt").string());
    out.print("steps = {}\nk = {:.17g}\ntheta = {:.17g}\nalpha = {:.17g}\nC_exch = {:.17g}\nC_ani = {:.17g}\n", summary.steps,
              config.k, config.theta, config.constants.alpha, config.constants.C_exch, config.constants.C_ani);
    out.print("excluded_from_energy = {}\n", fmt::join(summary.excluded_from_energy, " "));
  };

  try {
    auto traj = run(setup, ctx.m0, observer);
    summary.final_state = traj.states.back();
  } catch (const RunError& e) {
    summary.steps = e.step();
    write_summary();
    throw;
  }
  summary.steps = config.steps;
  summary.snapshots = writer.snapshots_written();
  summary.decay = check_energy_decay(summary.energies, config.constants.alpha);
  write_summary();
  return summary;
}

}  // namespace multimag
