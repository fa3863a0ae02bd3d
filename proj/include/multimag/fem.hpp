#pragma once

#include "multimag/material.hpp"
#include "multimag/mesh.hpp"
#include "multimag/types.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <span>
#include <variant>

namespace multimag {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct SparseOperator {
  SparseMatrix matrix;
  bool symmetric = true;

  [[nodiscard]] Eigen::Index dim() const { return matrix.rows(); }
};

/// P1 stiffness <c grad eta_j, grad eta_i> with per-element coefficient c
/// (empty span means c = 1).
SparseOperator assemble_stiffness(const TetMesh& mesh, std::span<const double> coeff = {});
SparseOperator assemble_mass(const TetMesh& mesh);
/// Stiffness weighted by 1 + chi~(|grad u|_T|) per element.
SparseOperator assemble_weighted_stiffness(const TetMesh& mesh, const NodalScalarField& u, const MaterialLaw& law);
/// Element weights 1 + chi~(|grad u|_T|).
std::vector<double> material_weights(const TetMesh& mesh, const NodalScalarField& u, const MaterialLaw& law);

/// Row sums of the mass matrix: the integrals of the hat functions.
Vector lumped_mass(const TetMesh& mesh);

struct NoConstraint {};
/// sum_i w_i u_i = 0; empty weights mean the arithmetic mean.
struct ZeroMean {
  Vector weights;
};
/// u = values on the listed nodes (parent-mesh indices).
struct Dirichlet {
  std::vector<int> nodes;
  Vector values;
};
using Constraint = std::variant<NoConstraint, ZeroMean, Dirichlet>;

struct SolveOptions {
  double tol = 1e-10;
  std::size_t max_iter = 0;  ///< 0 selects 10 * unknowns
};

struct SolveReport {
  std::size_t iterations = 0;
  double residual = 0.0;  ///< relative residual of the constrained system
};

/// Diagonally preconditioned CG on the constrained subspace.
NodalScalarField solve_spd(const SparseOperator& op, const Vector& rhs, const Constraint& constraint,
                           const SolveOptions& options = {}, SolveReport* report = nullptr);

/// Quadrature points of the 7-point rule, face-major (7 per face).
std::vector<Vec3> face_quadrature_points(const SurfaceMesh& surface);
/// Per-face integrals from samples at face_quadrature_points.
Vector face_integrals_from_samples(const SurfaceMesh& surface, const Vector& samples);
/// Node value = sum of face integrals over the patch / patch area. Indexed by
/// surface-local node.
Vector clement_from_face_integrals(const SurfaceMesh& surface, const Vector& integrals);
Vector clement_boundary_interpolation(const SurfaceMesh& surface, const std::function<double(const Vec3&)>& g);
FaceDensity l2_projection_faces(const SurfaceMesh& surface, const std::function<double(const Vec3&)>& g);

/// Face value = grad u on the parent tet dotted with the outward normal.
FaceDensity normal_derivative(const TetMesh& mesh, const NodalScalarField& u, const SurfaceMesh& surface);

std::vector<Vec3> element_gradients(const TetMesh& mesh, const NodalScalarField& u);
/// Volume-weighted average of element vectors at each node.
NodalVectorField nodal_lift(const TetMesh& mesh, const std::vector<Vec3>& element_values);
NodalVectorField nodal_gradient(const TetMesh& mesh, const NodalScalarField& u);

/// b_i = <m, grad eta_i> for a P1 vector field m.
Vector divergence_rhs(const TetMesh& mesh, const NodalVectorField& m);
/// Face-wise average of m . nu (exact L2 projection of a P1 field's normal trace).
FaceDensity normal_trace_projection(const SurfaceMesh& surface, const NodalVectorField& m);

/// Applies a scalar operator to each Cartesian component.
NodalVectorField apply_componentwise(const SparseMatrix& A, const NodalVectorField& m);
/// <a, b> with the consistent mass matrix.
double mass_inner(const SparseMatrix& M, const NodalVectorField& a, const NodalVectorField& b);
/// Dirichlet form sum_c a_c^T K b_c.
double stiffness_inner(const SparseMatrix& K, const NodalVectorField& a, const NodalVectorField& b);

/// Entries of a surface-local nodal vector, restricted to the parent mesh indices.
Dirichlet boundary_data(const SurfaceMesh& surface, const Vector& local_values);
/// Trace of a nodal field on the surface-local node ordering.
Vector trace(const SurfaceMesh& surface, const NodalScalarField& u);

}  // namespace multimag
