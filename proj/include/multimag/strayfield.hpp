#pragma once

#include "multimag/bem.hpp"
#include "multimag/fem.hpp"
#include "multimag/fields.hpp"
#include "multimag/mesh.hpp"

#include <memory>
#include <string_view>

namespace multimag {

enum class StrayfieldMethod { FK, GCR };

StrayfieldMethod parse_strayfield_method(std::string_view name);
std::string_view to_string(StrayfieldMethod method);

/// Operators for the stray-field solves on one body: stiffness, mass,
/// boundary surface and Galerkin BEM matrices. Built once per mesh.
class StrayfieldWorkspace {
 public:
  StrayfieldWorkspace(const TetMesh& mesh, StrayfieldMethod method, const BemOptions& bem = {}, const SolveOptions& solve = {});

  [[nodiscard]] const TetMesh& mesh() const { return *mesh_; }
  [[nodiscard]] const SurfaceMesh& surface() const { return surface_; }
  [[nodiscard]] const BemOperatorSet& bem() const { return bem_; }
  [[nodiscard]] const SparseOperator& stiffness() const { return stiffness_; }
  [[nodiscard]] const SparseOperator& mass() const { return mass_; }
  [[nodiscard]] StrayfieldMethod method() const { return method_; }
  [[nodiscard]] const SolveOptions& solve_options() const { return solve_; }
  [[nodiscard]] const Vector& lumped() const { return lumped_; }

  /// Throws MeshError unless `mesh` is the mesh the operators were built for.
  void check_mesh(const TetMesh& mesh) const;

 private:
  const TetMesh* mesh_;
  std::uint64_t fingerprint_;
  StrayfieldMethod method_;
  SolveOptions solve_;
  SurfaceMesh surface_;
  BemOperatorSet bem_;
  SparseOperator stiffness_;
  SparseOperator mass_;
  Vector lumped_;
};

/// Potential pieces of the last evaluation.
struct StrayfieldPotentials {
  NodalScalarField u11;
  NodalScalarField u12;
};

/// pi_h(m) = grad(u11 + u12), Fredkin-Koehler splitting.
NodalVectorField fk_strayfield(const StrayfieldWorkspace& ws, const NodalVectorField& m, StrayfieldPotentials* parts = nullptr);
/// pi_h(m) = grad(u11 + u12), Garcia-Cervera-Roma splitting.
NodalVectorField gcr_strayfield(const StrayfieldWorkspace& ws, const NodalVectorField& m, StrayfieldPotentials* parts = nullptr);

/// Zero-mean Neumann solve of <grad u, grad v> = <m, grad v>; the first FK stage.
NodalScalarField fk_interior_potential(const TetMesh& mesh, const SparseOperator& stiffness, const Vector& lumped,
                                       const NodalVectorField& m, const SolveOptions& options = {});

class StrayfieldContribution final : public FieldContribution {
 public:
  explicit StrayfieldContribution(std::shared_ptr<const StrayfieldWorkspace> ws) : ws_(std::move(ws)) {}
  [[nodiscard]] std::string name() const override;
  NodalVectorField evaluate(const NodalVectorField& m, const FieldContext& ctx) override;
  [[nodiscard]] bool linear_self_adjoint() const override { return true; }

 private:
  std::shared_ptr<const StrayfieldWorkspace> ws_;
};

}  // namespace multimag
