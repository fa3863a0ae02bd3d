#include "multimag/strayfield.hpp"

#include <fmt/format.h>

#include <cmath>

namespace multimag {

StrayfieldMethod parse_strayfield_method(std::string_view name) {
  if (name == "fk") return StrayfieldMethod::FK;
  if (name == "gcr") return StrayfieldMethod::GCR;
  throw ConfigError(fmt::format("unknown stray-field method '{}' (expected fk or gcr)", name));
}

std::string_view to_string(StrayfieldMethod method) { return method == StrayfieldMethod::FK ? "fk" : "gcr"; }

StrayfieldWorkspace::StrayfieldWorkspace(const TetMesh& mesh, StrayfieldMethod method, const BemOptions& bem,
                                         const SolveOptions& solve)
    : mesh_(&mesh),
      fingerprint_(mesh.fingerprint()),
      method_(method),
      solve_(solve),
      surface_(boundary_faces(mesh)),
      stiffness_(assemble_stiffness(mesh)),
      mass_(assemble_mass(mesh)),
      lumped_(lumped_mass(mesh)) {
  bem_ = assemble_bem(surface_, bem);
}

void StrayfieldWorkspace::check_mesh(const TetMesh& mesh) const {
  if (mesh.fingerprint() != fingerprint_)
    throw MeshError(fmt::format("stray-field workspace was built for mesh {:016x}, got {:016x}", fingerprint_, mesh.fingerprint()));
}

namespace {

void check_input(const StrayfieldWorkspace& ws, const NodalVectorField& m) {
  if (m.size() != ws.mesh().num_nodes())
    throw std::invalid_argument(fmt::format("magnetization has {} nodes, mesh has {}", m.size(), ws.mesh().num_nodes()));
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!(m[i].norm() <= 1.0 + 1e-10)) throw std::invalid_argument(fmt::format("|m| = {} > 1 at node {}", m[i].norm(), i));
}

bool is_zero(const NodalVectorField& m) {
  for (const auto& v : m.values)
    if (!v.isZero(0.0)) return false;
  return true;
}

NodalVectorField lift(const TetMesh& mesh, const NodalScalarField& u11, const NodalScalarField& u12) {
  NodalScalarField u = u11;
  u.values += u12.values;
  return nodal_gradient(mesh, u);
}

}  // namespace

NodalScalarField fk_interior_potential(const TetMesh& mesh, const SparseOperator& stiffness, const Vector& lumped,
                                       const NodalVectorField& m, const SolveOptions& options) {
  return solve_spd(stiffness, divergence_rhs(mesh, m), ZeroMean{lumped}, options);
}

NodalVectorField fk_strayfield(const StrayfieldWorkspace& ws, const NodalVectorField& m, StrayfieldPotentials* parts) {
  check_input(ws, m);
  const TetMesh& mesh = ws.mesh();
  const std::size_t n = mesh.num_nodes();
  if (is_zero(m)) {
    if (parts) *parts = {NodalScalarField(n), NodalScalarField(n)};
    return NodalVectorField(n);
  }
  const auto u11 = fk_interior_potential(mesh, ws.stiffness(), ws.lumped(), m, ws.solve_options());
  const Vector tr = trace(ws.surface(), u11);
  const Vector integrals = ws.bem().K * tr - 0.5 * (ws.bem().Mb * tr);
  const Vector g = clement_from_face_integrals(ws.surface(), integrals);
  const auto u12 = solve_spd(ws.stiffness(), Vector::Zero(static_cast<Eigen::Index>(n)), boundary_data(ws.surface(), g),
                             ws.solve_options());
  if (parts) *parts = {u11, u12};
  return lift(mesh, u11, u12);
}

NodalVectorField gcr_strayfield(const StrayfieldWorkspace& ws, const NodalVectorField& m, StrayfieldPotentials* parts) {
  check_input(ws, m);
  const TetMesh& mesh = ws.mesh();
  const SurfaceMesh& surface = ws.surface();
  const std::size_t n = mesh.num_nodes();
  if (is_zero(m)) {
    if (parts) *parts = {NodalScalarField(n), NodalScalarField(n)};
    return NodalVectorField(n);
  }
  const auto zero_bc = boundary_data(surface, Vector::Zero(static_cast<Eigen::Index>(surface.num_nodes())));
  const auto u11 = solve_spd(ws.stiffness(), divergence_rhs(mesh, m), zero_bc, ws.solve_options());
  const Vector rho = normal_trace_projection(surface, m).values - normal_derivative(mesh, u11, surface).values;
  const Vector integrals = ws.bem().V * rho;
  const Vector g = clement_from_face_integrals(surface, integrals);
  const auto u12 = solve_spd(ws.stiffness(), Vector::Zero(static_cast<Eigen::Index>(n)), boundary_data(surface, g),
                             ws.solve_options());
  if (parts) *parts = {u11, u12};
  return lift(mesh, u11, u12);
}

std::string StrayfieldContribution::name() const { return fmt::format("strayfield-{}", to_string(ws_->method())); }

NodalVectorField StrayfieldContribution::evaluate(const NodalVectorField& m, const FieldContext&) {
  auto pi = ws_->method() == StrayfieldMethod::FK ? fk_strayfield(*ws_, m) : gcr_strayfield(*ws_, m);
  if (!pi.all_finite()) throw std::runtime_error(fmt::format("{} produced a non-finite value", name()));
  return pi;
}

}  // namespace multimag
