#pragma once

#include "multimag/mesh.hpp"

namespace multimag::meshgen {

TetMesh reference_tet();

/// Unit-cube lattice with n cells per side, each cell split into the six
/// Kuhn tetrahedra around its main diagonal. Satisfies the angle condition.
TetMesh kuhn_cube(int n, double size = 1.0, const Vec3& origin = Vec3::Zero(), Region region = Region::Omega1);

/// Ball built from an icosphere with `subdivisions` refinements and `layers`
/// concentric shells: one center node, shells at radius * l / layers, core
/// tets to the center and prism layers split by the vertex-id rule.
/// Tet count 20 * 4^s * (1 + 3 (layers - 1)).
TetMesh icosphere_ball(int subdivisions, int layers, double radius = 1.0, const Vec3& center = Vec3::Zero(),
                       Region region = Region::Omega1);

}  // namespace multimag::meshgen
