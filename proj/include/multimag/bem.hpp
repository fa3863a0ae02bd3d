#pragma once

#include "multimag/mesh.hpp"
#include "multimag/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace multimag {

/// Outer-quadrature refinement for the Galerkin matrices. A test triangle
/// is split into 4^levels congruent pieces, each carrying the 7-point rule.
struct BemOptions {
  int near_levels = 2;     ///< pairs closer than near_factor * diameter
  int self_levels = 3;     ///< coincident pairs
  double near_factor = 2.0;
  bool symmetrize = true;  ///< replace V by (V + V^T)/2 after assembly
};

/// Galerkin matrices on a closed, outward-oriented surface.
///   V  : P0 x P0, V_ij = <V chi_j, chi_i>
///   K  : P0 x P1, K_ia = <K eta_a, chi_i>
///   Mb : P0 x P1, Mb_ia = <eta_a, chi_i>
/// Columns of K and Mb follow the surface-local node ordering.
struct BemOperatorSet {
  const SurfaceMesh* surface = nullptr;
  Eigen::MatrixXd V;
  Eigen::MatrixXd K;
  Eigen::MatrixXd Mb;
};

BemOperatorSet assemble_bem(const SurfaceMesh& surface, const BemOptions& options = {});

/// Single-layer potential of a P0 density at off-surface points.
Vector eval_single_layer(const SurfaceMesh& surface, const FaceDensity& density, const std::vector<Vec3>& points);
/// Double-layer potential of a P1 trace (surface-local node ordering) at off-surface points.
Vector eval_double_layer(const SurfaceMesh& surface, const Vector& trace, const std::vector<Vec3>& points);

/// Dense evaluation matrices at fixed off-surface points: single (points x
/// faces) maps a P0 density, dbl (points x boundary nodes) maps a P1 trace.
struct PotentialMatrices {
  Eigen::MatrixXd single;
  Eigen::MatrixXd dbl;
};
PotentialMatrices potential_matrices(const SurfaceMesh& surface, const std::vector<Vec3>& points);

namespace detail {

/// Closed-form integrals over a flat triangle (a, b, c) with unit normal n,
/// without the 1/(4 pi) factor:
///   single     = int 1/|x-y| dy
///   dl_const   = int (x-y).n / |x-y|^3 dy
///   dl_linear  = the same with the barycentric weights of a, b, c
/// For x in the plane of the triangle the double-layer values are the
/// principal values (zero).
struct TriangleIntegrals {
  double single = 0.0;
  double dl_const = 0.0;
  std::array<double, 3> dl_linear{};
  bool in_plane_inside = false;  ///< x lies on the closed triangle
};

TriangleIntegrals triangle_integrals(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& n);

}  // namespace detail

}  // namespace multimag
