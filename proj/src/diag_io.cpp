#include "multimag/diag_io.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace multimag {

EnergyTerms energy_from_fields(const LlgOperators& ops, const NodalVectorField& m, const ContributionList& contributions,
                               const std::vector<NodalVectorField>& pis, const NodalVectorField& f,
                               const NondimConstants& constants) {
  if (pis.size() != contributions.size()) throw std::invalid_argument("one field per contribution expected");
  EnergyTerms e;
  e.exchange = 0.5 * constants.C_exch * stiffness_inner(ops.stiffness(), m, m);
  for (std::size_t i = 0; i < contributions.size(); ++i) {
    const auto part = contributions[i]->has_energy() ? contributions[i]->energy(m, pis[i], ops.mass()) : std::nullopt;
    if (part)
      e.interaction += *part;
    else
      e.excluded.push_back(contributions[i]->name());
  }
  e.zeeman = -mass_inner(ops.mass(), f, m);
  return e;
}

EnergyTerms energy(const LlgOperators& ops, const NodalVectorField& m, const ContributionList& contributions,
                   const NodalVectorField& f, const NondimConstants& constants, const FieldContext& ctx) {
  std::vector<NodalVectorField> pis;
  pis.reserve(contributions.size());
  for (const auto& c : contributions) pis.push_back(c->energy_uses_field() ? c->evaluate(m, ctx) : NodalVectorField());
  return energy_from_fields(ops, m, contributions, pis, f, constants);
}

DecayReport check_energy_decay(const std::vector<EnergyRecord>& records, double alpha, double defect_constant) {
  DecayReport rep;
  rep.defect_constant = defect_constant;
  if (records.empty()) return rep;
  const double e0 = records.front().total;
  rep.slack_base = 1e-8 * (1.0 + std::abs(e0));
  rep.max_excess = -std::numeric_limits<double>::infinity();
  for (const auto& r : records) {
    const double slack = rep.slack_base + defect_constant * r.dissipation_sum / alpha;
    const double excess = r.total + r.dissipation_sum - e0 - slack;
    rep.max_excess = std::max(rep.max_excess, excess);
    if (!(excess <= 0.0) && !rep.first_violation) {
      rep.first_violation = r.step;
      rep.passed = false;
    }
  }
  return rep;
}

std::string format_energy_row(const EnergyRecord& r) {
  return fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", r.step, r.time, r.exchange, r.interaction, r.zeeman,
                     r.total, r.dissipation_sum);
}

std::vector<EnergyRecord> read_energies(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", csv.string()));
  std::string line;
  if (!std::getline(in, line) || line != kEnergyHeader)
    throw std::runtime_error(fmt::format("{}: unexpected header", csv.string()));
  std::vector<EnergyRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    EnergyRecord r;
    std::string extra;
    if (!(ss >> r.step >> r.time >> r.exchange >> r.interaction >> r.zeeman >> r.total >> r.dissipation_sum) || (ss >> extra))
      throw std::runtime_error(fmt::format("{}: malformed row at line {}", csv.string(), lineno));
    out.push_back(r);
  }
  return out;
}

void write_snapshot(const std::filesystem::path& path, const NodalVectorField& m) {
  auto out = fmt::output_file(path.string());
  out.print("nodal-field 3 {}\n", m.size());
  for (const auto& v : m.values) out.print("{:.17g} {:.17g} {:.17g}\n", v[0], v[1], v[2]);
}

NodalVectorField read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  std::string tag;
  int dim = 0;
  long long n = -1;
  if (!(in >> tag >> dim >> n) || tag != "nodal-field" || dim != 3 || n < 0)
    throw std::runtime_error(fmt::format("{}: expected header 'nodal-field 3 <N>'", path.string()));
  NodalVectorField m(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    auto& v = m[static_cast<std::size_t>(i)];
    if (!(in >> v[0] >> v[1] >> v[2]))
      throw std::runtime_error(fmt::format("{}: missing or malformed value for node {} (line {})", path.string(), i, i + 2));
  }
  std::string extra;
  if (in >> extra) throw std::runtime_error(fmt::format("{}: trailing content after {} nodes", path.string(), n));
  return m;
}

void write_vtk(const std::filesystem::path& path, const TetMesh& mesh, const NodalVectorField& m) {
  if (m.size() != mesh.num_nodes()) throw std::invalid_argument("field size differs from the mesh node count");
  auto out = fmt::output_file(path.string());
  out.print("# vtk DataFile Version 3.0\nmagnetization\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS {} double\n", mesh.num_nodes());
  for (const auto& p : mesh.nodes()) out.print("{:.17g} {:.17g} {:.17g}\n", p[0], p[1], p[2]);
  out.print("CELLS {} {}\n", mesh.num_tets(), 5 * mesh.num_tets());
  for (const auto& t : mesh.tets()) out.print("4 {} {} {} {}\n", t[0], t[1], t[2], t[3]);
  out.print("CELL_TYPES {}\n", mesh.num_tets());
  for (std::size_t t = 0; t < mesh.num_tets(); ++t) out.print("10\n");
  out.print("POINT_DATA {}\nVECTORS m double\n", mesh.num_nodes());
  for (const auto& v : m.values) out.print("{:.17g} {:.17g} {:.17g}\n", v[0], v[1], v[2]);
}

std::string snapshot_name(std::size_t step) { return fmt::format("m_{:06d}.txt", step); }

TrajectoryWriter::TrajectoryWriter(std::filesystem::path dir, std::size_t cadence, std::size_t final_step, const TetMesh* vtk_mesh)
    : dir_(std::move(dir)), cadence_(cadence), final_step_(final_step), vtk_mesh_(vtk_mesh) {
  if (cadence_ == 0) throw ConfigError("output cadence must be positive");
  std::filesystem::create_directories(dir_);
  csv_.open(dir_ / "energies.csv");
  if (!csv_) throw std::runtime_error(fmt::format("cannot write {}", (dir_ / "energies.csv").string()));
  csv_ << kEnergyHeader << '\n';
}

void TrajectoryWriter::record(const EnergyRecord& energy, const NodalVectorField& m) {
  csv_ << format_energy_row(energy) << '\n';
  csv_.flush();
  if (!csv_) throw std::runtime_error("write to energies.csv failed");
  if (energy.step % cadence_ == 0 || energy.step == final_step_) {
    write_snapshot(dir_ / snapshot_name(energy.step), m);
    if (vtk_mesh_) write_vtk(dir_ / fmt::format("m_{:06d}.vtk", energy.step), *vtk_mesh_, m);
    ++snapshots_;
  }
}

void write_trajectory(const Trajectory& trajectory, const std::vector<EnergyRecord>& records, const std::filesystem::path& dir,
                      std::size_t cadence, const TetMesh* vtk_mesh) {
  if (records.size() != trajectory.states.size()) throw std::invalid_argument("one energy record per state expected");
  if (trajectory.states.empty()) throw std::invalid_argument("empty trajectory");
  TrajectoryWriter w(dir, cadence, trajectory.states.back().step, vtk_mesh);
  for (std::size_t i = 0; i < records.size(); ++i) w.record(records[i], trajectory.states[i].m);
}

}  // namespace multimag
