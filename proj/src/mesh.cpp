#include "multimag/mesh.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace multimag {

namespace {

// Outward-oriented faces of a positively oriented tet, indexed by the
// opposite local vertex.
constexpr std::array<std::array<int, 3>, 4> kLocalFaces{{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

Tri sorted_tri(int a, int b, int c) {
  Tri t{a, b, c};
  std::sort(t.begin(), t.end());
  return t;
}

bool point_in_closed_triangle(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c, double tol) {
  const Vec3 n = (b - a).cross(c - a);
  const double n2 = n.squaredNorm();
  const double len = std::sqrt(std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()}));
  if (std::abs((x - a).dot(n)) > tol * len * std::sqrt(n2)) return false;
  const double l0 = (b - x).cross(c - x).dot(n) / n2;
  const double l1 = (c - x).cross(a - x).dot(n) / n2;
  const double l2 = 1.0 - l0 - l1;
  return l0 >= -tol && l1 >= -tol && l2 >= -tol;
}

void check_duplicates(const std::vector<Vec3>& nodes) {
  constexpr double tol = 1e-12;
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return nodes[i].x() < nodes[j].x(); });
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      if (nodes[order[b]].x() - nodes[order[a]].x() > tol) break;
      if ((nodes[order[a]] - nodes[order[b]]).norm() <= tol)
        throw MeshError(fmt::format("duplicate nodes {} and {}", std::min(order[a], order[b]), std::max(order[a], order[b])));
    }
  }
}

struct FaceRecord {
  Tri key;
  std::size_t tet;
  int local;
};

std::vector<FaceRecord> collect_faces(const std::vector<Tet>& tets) {
  std::vector<FaceRecord> faces;
  faces.reserve(4 * tets.size());
  for (std::size_t t = 0; t < tets.size(); ++t)
    for (int a = 0; a < 4; ++a) {
      const auto& lf = kLocalFaces[static_cast<std::size_t>(a)];
      faces.push_back({sorted_tri(tets[t][lf[0]], tets[t][lf[1]], tets[t][lf[2]]), t, a});
    }
  std::sort(faces.begin(), faces.end(), [](const FaceRecord& x, const FaceRecord& y) {
    return x.key != y.key ? x.key < y.key : (x.tet != y.tet ? x.tet < y.tet : x.local < y.local);
  });
  return faces;
}

}  // namespace

TetMesh::TetMesh(std::vector<Vec3> nodes, std::vector<Tet> tets, Region region)
    : nodes_(std::move(nodes)), tets_(std::move(tets)), region_(region) {
  if (nodes_.empty()) throw MeshError("mesh has no nodes");
  if (tets_.empty()) throw MeshError("mesh has no tetrahedra");
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!nodes_[i].allFinite()) throw MeshError(fmt::format("node {} has non-finite coordinates", i));
  const auto n = static_cast<int>(nodes_.size());
  for (std::size_t t = 0; t < tets_.size(); ++t) {
    for (int v : tets_[t])
      if (v < 0 || v >= n) throw MeshError(fmt::format("tet {} references node index {} out of range [0, {})", t, v, n));
    auto s = tets_[t];
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw MeshError(fmt::format("tet {} repeats a node", t));
  }
  check_duplicates(nodes_);

  volumes_.resize(tets_.size());
  grads_.resize(tets_.size());
  h_max_ = 0.0;
  h_min_ = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < tets_.size(); ++t) {
    const auto& T = tets_[t];
    const Vec3& p0 = nodes_[T[0]];
    const double vol = signed_volume(p0, nodes_[T[1]], nodes_[T[2]], nodes_[T[3]]);
    if (!(vol > 0.0)) throw MeshError(fmt::format("tet {} has non-positive signed volume {:.6g}", t, vol));
    volumes_[t] = vol;
    total_volume_ += vol;
    Eigen::Matrix3d J;
    J.col(0) = nodes_[T[1]] - p0;
    J.col(1) = nodes_[T[2]] - p0;
    J.col(2) = nodes_[T[3]] - p0;
    const Eigen::Matrix3d Jit = J.inverse().transpose();
    grads_[t][1] = Jit.col(0);
    grads_[t][2] = Jit.col(1);
    grads_[t][3] = Jit.col(2);
    grads_[t][0] = -(grads_[t][1] + grads_[t][2] + grads_[t][3]);
    double diam = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) diam = std::max(diam, (nodes_[T[a]] - nodes_[T[b]]).norm());
    h_max_ = std::max(h_max_, diam);
    h_min_ = std::min(h_min_, diam);
  }

  // Conformity: faces shared by at most two tets, boundary closed, no
  // hanging nodes on boundary faces, tets do not overlap.
  const auto faces = collect_faces(tets_);
  std::vector<FaceRecord> bnd;
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    if (j - i > 2)
      throw MeshError(fmt::format("non-conforming mesh: face ({}, {}, {}) shared by {} tets", faces[i].key[0],
                                  faces[i].key[1], faces[i].key[2], j - i));
    if (j - i == 1) bnd.push_back(faces[i]);
    i = j;
  }
  std::map<std::pair<int, int>, int> edge_count;
  std::vector<char> on_boundary(nodes_.size(), 0);
  double div_volume = 0.0;
  for (const auto& f : bnd) {
    const auto& T = tets_[f.tet];
    const auto& lf = kLocalFaces[static_cast<std::size_t>(f.local)];
    const Vec3& a = nodes_[T[lf[0]]];
    const Vec3& b = nodes_[T[lf[1]]];
    const Vec3& c = nodes_[T[lf[2]]];
    div_volume += a.dot((b - a).cross(c - a)) / 6.0;
    for (int e = 0; e < 3; ++e) {
      const int u = f.key[static_cast<std::size_t>(e)];
      const int v = f.key[static_cast<std::size_t>((e + 1) % 3)];
      ++edge_count[{std::min(u, v), std::max(u, v)}];
      on_boundary[static_cast<std::size_t>(u)] = 1;
    }
  }
  for (const auto& [edge, count] : edge_count)
    if (count % 2 != 0)
      throw MeshError(fmt::format("non-conforming mesh: boundary edge ({}, {}) is shared by {} boundary faces", edge.first,
                                  edge.second, count));
  for (const auto& f : bnd) {
    const Vec3& a = nodes_[f.key[0]];
    const Vec3& b = nodes_[f.key[1]];
    const Vec3& c = nodes_[f.key[2]];
    const Vec3 lo = a.cwiseMin(b).cwiseMin(c);
    const Vec3 hi = a.cwiseMax(b).cwiseMax(c);
    const double pad = 1e-10 * (hi - lo).norm();
    for (std::size_t z = 0; z < nodes_.size(); ++z) {
      if (!on_boundary[z]) continue;
      const int zi = static_cast<int>(z);
      if (zi == f.key[0] || zi == f.key[1] || zi == f.key[2]) continue;
      const Vec3& x = nodes_[z];
      if ((x.array() < lo.array() - pad).any() || (x.array() > hi.array() + pad).any()) continue;
      if (point_in_closed_triangle(x, a, b, c, 1e-10))
        throw MeshError(fmt::format("non-conforming mesh: node {} lies on boundary face ({}, {}, {})", z, f.key[0],
                                    f.key[1], f.key[2]));
    }
  }
  if (std::abs(div_volume - total_volume_) > 1e-9 * total_volume_)
    throw MeshError(fmt::format("non-conforming mesh: tets overlap (volume {:.12g} vs enclosed {:.12g})", total_volume_,
                                div_volume));

  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : nodes_) h = fnv1a(h, p.data(), 3 * sizeof(double));
  for (const auto& T : tets_) h = fnv1a(h, T.data(), 4 * sizeof(int));
  fingerprint_ = h;
}

Vec3 TetMesh::centroid(std::size_t t) const {
  const auto& T = tets_[t];
  return 0.25 * (nodes_[T[0]] + nodes_[T[1]] + nodes_[T[2]] + nodes_[T[3]]);
}

double SurfaceMesh::total_area() const { return std::accumulate(areas.begin(), areas.end(), 0.0); }

std::array<Vec3, 3> SurfaceMesh::vertices(std::size_t f) const {
  const auto& F = local_faces[f];
  return {points[static_cast<std::size_t>(F[0])], points[static_cast<std::size_t>(F[1])],
          points[static_cast<std::size_t>(F[2])]};
}

Vec3 SurfaceMesh::centroid(std::size_t f) const {
  const auto v = vertices(f);
  return (v[0] + v[1] + v[2]) / 3.0;
}

double SurfaceMesh::diameter(std::size_t f) const {
  const auto v = vertices(f);
  return std::max({(v[0] - v[1]).norm(), (v[1] - v[2]).norm(), (v[2] - v[0]).norm()});
}

SurfaceMesh boundary_faces(const TetMesh& mesh) {
  const auto faces = collect_faces(mesh.tets());
  std::vector<std::pair<std::size_t, int>> owned;
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i;
    while (j < faces.size() && faces[j].key == faces[i].key) ++j;
    if (j - i == 1) owned.emplace_back(faces[i].tet, faces[i].local);
    i = j;
  }
  std::sort(owned.begin(), owned.end());

  SurfaceMesh s;
  s.local_index.assign(mesh.num_nodes(), -1);
  for (const auto& [t, a] : owned) {
    const auto& T = mesh.tet(t);
    const auto& lf = kLocalFaces[static_cast<std::size_t>(a)];
    const Tri f{T[lf[0]], T[lf[1]], T[lf[2]]};
    const Vec3& p0 = mesh.node(static_cast<std::size_t>(f[0]));
    const Vec3 cr = (mesh.node(static_cast<std::size_t>(f[1])) - p0).cross(mesh.node(static_cast<std::size_t>(f[2])) - p0);
    s.faces.push_back(f);
    s.areas.push_back(0.5 * cr.norm());
    s.normals.push_back(cr.normalized());
    s.parent_tet.push_back(static_cast<int>(t));
    for (int v : f) s.local_index[static_cast<std::size_t>(v)] = 0;
  }
  for (std::size_t z = 0; z < mesh.num_nodes(); ++z)
    if (s.local_index[z] == 0) {
      s.local_index[z] = static_cast<int>(s.nodes.size());
      s.nodes.push_back(static_cast<int>(z));
      s.points.push_back(mesh.node(z));
    }
  s.local_faces.reserve(s.faces.size());
  for (const auto& f : s.faces)
    s.local_faces.push_back({s.local_index[static_cast<std::size_t>(f[0])], s.local_index[static_cast<std::size_t>(f[1])],
                             s.local_index[static_cast<std::size_t>(f[2])]});
  return s;
}

std::vector<std::pair<int, int>> check_angle_condition(const TetMesh& mesh, double tol) {
  std::map<std::pair<int, int>, double> offdiag;
  for (std::size_t t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tet(t);
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) {
        const int i = T[static_cast<std::size_t>(a)];
        const int j = T[static_cast<std::size_t>(b)];
        offdiag[{std::min(i, j), std::max(i, j)}] += mesh.volume(t) * mesh.grad_lambda(t, a).dot(mesh.grad_lambda(t, b));
      }
  }
  std::vector<std::pair<int, int>> bad;
  for (const auto& [key, value] : offdiag)
    if (value > tol) bad.push_back(key);
  return bad;
}

TetMesh parse_mesh(const std::string& text, Region region) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, raw)) {
      ++line_no;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      out = raw;
      return true;
    }
    return false;
  };
  auto fail = [&](const std::string& what) { return MeshError(fmt::format("line {}: {}", line_no, what)); };

  auto read_header = [&](const char* keyword) {
    std::string line;
    if (!next_line(line)) throw fail(fmt::format("expected '{} <count>', found end of file", keyword));
    std::istringstream ls(line);
    std::string word;
    long long count = -1;
    std::string extra;
    if (!(ls >> word >> count) || word != keyword || count < 0 || (ls >> extra))
      throw fail(fmt::format("expected '{} <count>'", keyword));
    return static_cast<std::size_t>(count);
  };

  const std::size_t n = read_header("nodes");
  std::vector<Vec3> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string line;
    if (!next_line(line)) throw fail("unexpected end of file in node block");
    std::istringstream ls(line);
    std::string extra;
    if (!(ls >> nodes[i].x() >> nodes[i].y() >> nodes[i].z()) || (ls >> extra)) throw fail("expected 'x y z'");
  }
  const std::size_t m = read_header("tets");
  std::vector<Tet> tets(m);
  for (std::size_t t = 0; t < m; ++t) {
    std::string line;
    if (!next_line(line)) throw fail("unexpected end of file in tet block");
    std::istringstream ls(line);
    std::string extra;
    auto& T = tets[t];
    if (!(ls >> T[0] >> T[1] >> T[2] >> T[3]) || (ls >> extra)) throw fail("expected 'i j k l'");
  }
  if (std::string line; next_line(line)) throw fail("trailing content after tet block");
  return TetMesh(std::move(nodes), std::move(tets), region);
}

TetMesh load_mesh(const std::filesystem::path& path, Region region) {
  std::ifstream in(path);
  if (!in) throw MeshError(fmt::format("cannot open mesh file '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_mesh(buf.str(), region);
  } catch (const MeshError& e) {
    throw MeshError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_mesh(const TetMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MeshError(fmt::format("cannot write mesh file '{}'", path.string()));
  out << fmt::format("nodes {}\n", mesh.num_nodes());
  for (const auto& p : mesh.nodes()) out << fmt::format("{:.17g} {:.17g} {:.17g}\n", p.x(), p.y(), p.z());
  out << fmt::format("tets {}\n", mesh.num_tets());
  for (const auto& T : mesh.tets()) out << fmt::format("{} {} {} {}\n", T[0], T[1], T[2], T[3]);
  if (!out) throw MeshError(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace multimag
