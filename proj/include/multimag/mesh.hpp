#pragma once

#include "multimag/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace multimag {

enum class Region { Omega1, Omega2 };

using Tet = std::array<int, 4>;
using Tri = std::array<int, 3>;

/// Conforming tetrahedral mesh. Immutable after construction; all geometric
/// quantities (volumes, barycentric gradients, diameters) are cached.
///
/// Vertex ordering convention: det(p1-p0, p2-p0, p3-p0) > 0 for every tet.
class TetMesh {
 public:
  /// Validates and builds. Throws MeshError on out-of-range indices,
  /// non-positive volumes, duplicate nodes or non-conforming connectivity.
  TetMesh(std::vector<Vec3> nodes, std::vector<Tet> tets, Region region = Region::Omega1);

  [[nodiscard]] std::size_t num_nodes() const { return nodes_.size(); }
  [[nodiscard]] std::size_t num_tets() const { return tets_.size(); }
  [[nodiscard]] const std::vector<Vec3>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<Tet>& tets() const { return tets_; }
  [[nodiscard]] const Vec3& node(std::size_t i) const { return nodes_[i]; }
  [[nodiscard]] const Tet& tet(std::size_t t) const { return tets_[t]; }
  [[nodiscard]] Region region() const { return region_; }

  [[nodiscard]] double volume(std::size_t t) const { return volumes_[t]; }
  [[nodiscard]] double total_volume() const { return total_volume_; }
  /// Gradient of the barycentric coordinate of local vertex a on tet t.
  [[nodiscard]] const Vec3& grad_lambda(std::size_t t, int a) const { return grads_[t][static_cast<std::size_t>(a)]; }

  /// Maximum element diameter.
  [[nodiscard]] double mesh_size() const { return h_max_; }
  /// max diameter / min diameter; reported for diagnostics only.
  [[nodiscard]] double diameter_ratio() const { return h_max_ / h_min_; }

  /// Order-sensitive hash of coordinates and connectivity.
  [[nodiscard]] std::uint64_t fingerprint() const { return fingerprint_; }

  [[nodiscard]] Vec3 centroid(std::size_t t) const;

 private:
  std::vector<Vec3> nodes_;
  std::vector<Tet> tets_;
  Region region_;
  std::vector<double> volumes_;
  std::vector<std::array<Vec3, 4>> grads_;
  double total_volume_ = 0.0;
  double h_max_ = 0.0;
  double h_min_ = 0.0;
  std::uint64_t fingerprint_ = 0;
};

/// Oriented boundary triangulation of a TetMesh. Face vertex indices refer
/// to the parent mesh; faces are ordered counter-clockwise when seen from
/// outside, so (b-a)x(c-a) points along the outward normal.
struct SurfaceMesh {
  std::vector<Tri> faces;
  std::vector<Vec3> normals;
  std::vector<double> areas;
  std::vector<int> parent_tet;

  /// Sorted parent-mesh indices of the nodes on the boundary.
  std::vector<int> nodes;
  /// parent node index -> position in `nodes`, or -1 for interior nodes.
  std::vector<int> local_index;
  /// Faces as local (boundary-node) indices.
  std::vector<Tri> local_faces;

  std::vector<Vec3> points;  ///< coordinates of `nodes`, same order

  [[nodiscard]] std::size_t num_faces() const { return faces.size(); }
  [[nodiscard]] std::size_t num_nodes() const { return nodes.size(); }
  [[nodiscard]] double total_area() const;
  [[nodiscard]] std::array<Vec3, 3> vertices(std::size_t f) const;
  [[nodiscard]] Vec3 centroid(std::size_t f) const;
  [[nodiscard]] double diameter(std::size_t f) const;
};

/// Reads the plain-text mesh format:
///   nodes N / N lines "x y z" / tets M / M lines "i j k l" (0-based), '#' comments.
TetMesh load_mesh(const std::filesystem::path& path, Region region = Region::Omega1);
TetMesh parse_mesh(const std::string& text, Region region = Region::Omega1);
void save_mesh(const TetMesh& mesh, const std::filesystem::path& path);

SurfaceMesh boundary_faces(const TetMesh& mesh);

/// Node pairs (i < j) whose P1 stiffness entry <grad eta_i, grad eta_j> is
/// positive, i.e. where the non-obtuse angle condition fails.
std::vector<std::pair<int, int>> check_angle_condition(const TetMesh& mesh, double tol = 1e-12);

}  // namespace multimag
