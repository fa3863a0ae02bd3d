#include "meshgen.hpp"
#include "multimag/diag_io.hpp"
#include "multimag/simulation.hpp"
#include "multimag/strayfield.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <map>

using namespace multimag;

namespace {

int cmd_simulate(const std::string& path, const std::string& out_override) {
  auto config = load_config(path);
  if (!out_override.empty()) config.output_dir = out_override;
  const auto summary = run_simulation(config);
  fmt::print("{} steps written to {} ({} snapshots)\n", summary.steps, config.output_dir.string(), summary.snapshots);
  if (!summary.energies.empty())
    fmt::print("E_total: {:.10g} -> {:.10g}\n", summary.energies.front().total, summary.energies.back().total);
  if (!summary.excluded_from_energy.empty())
    fmt::print("excluded from energy: {}\n", fmt::join(summary.excluded_from_energy, ", "));
  fmt::print("energy decay: {}\n", summary.decay.passed ? "ok" : fmt::format("violated at step {}", *summary.decay.first_violation));
  return 0;
}

int cmd_check_mesh(const std::string& path) {
  const auto mesh = load_mesh(path);
  const auto surface = boundary_faces(mesh);
  fmt::print("nodes {}  tets {}  boundary faces {}\n", mesh.num_nodes(), mesh.num_tets(), surface.num_faces());
  fmt::print("volume {:.6g}  surface area {:.6g}\n", mesh.total_volume(), surface.total_area());
  fmt::print("h_max {:.4g}  diameter ratio {:.3g}\n", mesh.mesh_size(), mesh.diameter_ratio());
  const auto bad = check_angle_condition(mesh);
  if (bad.empty()) {
    fmt::print("angle condition: satisfied\n");
    return 0;
  }
  fmt::print("angle condition: violated by {} positive off-diagonal stiffness entries\n", bad.size());
  for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 10); ++i) fmt::print("  nodes {} {}\n", bad[i].first, bad[i].second);
  fmt::print("the energy bound of the scheme is not guaranteed on this mesh\n");
  return 0;
}

int cmd_strayfield_test(const std::string& path, const std::string& method_name) {
  const auto method = parse_strayfield_method(method_name);
  const auto mesh = load_mesh(path);
  const auto t0 = std::chrono::steady_clock::now();
  const StrayfieldWorkspace ws(mesh, method);
  const Vec3 dir(0.0, 0.0, 1.0);
  const NodalVectorField m(mesh.num_nodes(), dir);
  const auto pi = method == StrayfieldMethod::FK ? fk_strayfield(ws, m) : gcr_strayfield(ws, m);
  Vec3 mean = Vec3::Zero();
  for (std::size_t i = 0; i < pi.size(); ++i) mean += ws.lumped()[static_cast<Eigen::Index>(i)] * pi[i];
  mean /= mesh.total_volume();
  const double err = (mean - dir / 3.0).norm() * 3.0;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fmt::print("{} on {} tets: mean field ({:.6f}, {:.6f}, {:.6f}), expected (0, 0, 1/3) for a ball\n", to_string(method), mesh.num_tets(),
             mean[0], mean[1], mean[2]);
  fmt::print("relative error {:.3f}%  ({:.2f}s)\n", 100.0 * err, secs);
  return err < 0.1 ? 0 : 1;
}

std::map<std::string, std::string> read_summary(const std::filesystem::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

int cmd_energy_report(const std::filesystem::path& dir, std::optional<double> alpha_opt, double defect_constant) {
  const auto records = read_energies(dir / "energies.csv");
  if (records.empty()) throw std::runtime_error("energies.csv has no rows");
  double alpha = 1.0;
  const auto summary = read_summary(dir / "summary.txt");
  if (alpha_opt)
    alpha = *alpha_opt;
  else if (auto it = summary.find("alpha"); it != summary.end())
    alpha = std::stod(it->second);
  else
    spdlog::warn("summary.txt has no alpha; assuming 1");
  if (auto it = summary.find("excluded_from_energy"); it != summary.end() && !it->second.empty())
    fmt::print("note: excluded from E_int: {}\n", it->second);
  const auto rep = check_energy_decay(records, alpha, defect_constant);
  const auto& a = records.front();
  const auto& b = records.back();
  fmt::print("{} records, steps {}..{}, t = {:.6g}..{:.6g}\n", records.size(), a.step, b.step, a.time, b.time);
  fmt::print("E_exch {:.10g} -> {:.10g}\nE_int  {:.10g} -> {:.10g}\nE_zee  {:.10g} -> {:.10g}\nE_tot  {:.10g} -> {:.10g}\n", a.exchange,
             b.exchange, a.interaction, b.interaction, a.zeeman, b.zeeman, a.total, b.total);
  fmt::print("dissipation sum {:.10g}\n", b.dissipation_sum);
  if (rep.passed) {
    fmt::print("decay check: PASS (max excess {:.3e})\n", rep.max_excess);
    return 0;
  }
  fmt::print("decay check: FAIL at step {} (max excess {:.3e})\n", *rep.first_violation, rep.max_excess);
  return 1;
}

int cmd_gen_mesh(const std::string& shape, int level, int layers, double size, const std::vector<double>& c, const std::string& out) {
  const Vec3 center(c[0], c[1], c[2]);
  TetMesh mesh = shape == "ball" ? meshgen::icosphere_ball(level, layers, size, center)
               : shape == "cube" ? meshgen::kuhn_cube(level, size, center)
                                 : throw ConfigError(fmt::format("unknown shape '{}' (ball|cube)", shape));
  save_mesh(mesh, out);
  fmt::print("wrote {} ({} nodes, {} tets)\n", out, mesh.num_nodes(), mesh.num_tets());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimag: tangent-plane LLG with FEM-BEM stray field and multiscale coupling"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string config_path, out_dir;
  auto* sim = app.add_subcommand("simulate", "Run a simulation from an ini config");
  sim->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--output", out_dir, "Override [output] dir");

  std::string mesh_path;
  auto* chk = app.add_subcommand("check-mesh", "Validate a mesh and report the angle condition");
  chk->add_option("mesh", mesh_path)->required()->check(CLI::ExistingFile);

  std::string method = "fk";
  auto* sf = app.add_subcommand("strayfield-test", "Uniformly magnetized ball oracle (mean field m/3)");
  sf->add_option("mesh", mesh_path)->required()->check(CLI::ExistingFile);
  sf->add_option("method", method, "fk or gcr");

  std::string run_dir;
  std::optional<double> alpha;
  double defect_c = 0.0;
  auto* er = app.add_subcommand("energy-report", "Energy decay check of an output directory");
  er->add_option("dir", run_dir)->required()->check(CLI::ExistingDirectory);
  er->add_option("--alpha", alpha, "Damping (default: from summary.txt)");
  er->add_option("--defect-constant", defect_c, "Constant c in the c*D/alpha slack");

  std::string shape = "ball", mesh_out;
  int level = 2, layers = 2;
  double size = 1.0;
  std::vector<double> center{0.0, 0.0, 0.0};
  auto* gm = app.add_subcommand("gen-mesh", "Write a ball or cube mesh");
  gm->add_option("shape", shape, "ball or cube");
  gm->add_option("out", mesh_out)->required();
  gm->add_option("--level", level, "Icosphere subdivisions (ball) or cells per side (cube)");
  gm->add_option("--layers", layers, "Radial layers (ball)");
  gm->add_option("--size", size, "Radius (ball) or edge length (cube)");
  gm->add_option("--center", center, "Ball center or cube origin")->expected(3);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
  try {
    if (*sim) return cmd_simulate(config_path, out_dir);
    if (*chk) return cmd_check_mesh(mesh_path);
    if (*sf) return cmd_strayfield_test(mesh_path, method);
    if (*er) return cmd_energy_report(run_dir, alpha, defect_c);
    if (*gm) return cmd_gen_mesh(shape, level, layers, size, center, mesh_out);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 3;
  }
  return 0;
}
