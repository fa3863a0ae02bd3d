#include "meshgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace multimag::meshgen {

namespace {

double orient(const std::vector<Vec3>& p, const Tet& t) {
  return (p[t[1]] - p[t[0]]).dot((p[t[2]] - p[t[0]]).cross(p[t[3]] - p[t[0]]));
}

void push_oriented(std::vector<Tet>& tets, const std::vector<Vec3>& p, Tet t) {
  if (orient(p, t) < 0.0) std::swap(t[2], t[3]);
  tets.push_back(t);
}

struct Icosphere {
  std::vector<Vec3> points;
  std::vector<std::array<int, 3>> faces;
};

Icosphere icosphere(int subdivisions) {
  const double g = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosphere s;
  s.points = {{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
              {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
  for (auto& p : s.points) p.normalize();
  s.faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
             {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      if (auto it = mid.find(key); it != mid.end()) return it->second;
      s.points.push_back((0.5 * (s.points[static_cast<std::size_t>(a)] + s.points[static_cast<std::size_t>(b)])).normalized());
      const int id = static_cast<int>(s.points.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * s.faces.size());
    for (const auto& f : s.faces) {
      const int ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    s.faces = std::move(next);
  }
  return s;
}

}  // namespace

TetMesh reference_tet() {
  return TetMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 1, 2, 3}});
}

TetMesh kuhn_cube(int n, double size, const Vec3& origin, Region region) {
  if (n < 1) throw std::invalid_argument("kuhn_cube: n must be positive");
  const double h = size / n;
  auto id = [n](int i, int j, int k) { return (k * (n + 1) + j) * (n + 1) + i; };
  std::vector<Vec3> p;
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) p.push_back(origin + h * Vec3(i, j, k));
  static constexpr std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::vector<Tet> tets;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& perm : perms) {
          std::array<int, 3> c{i, j, k};
          Tet t{};
          t[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[static_cast<std::size_t>(perm[static_cast<std::size_t>(s)])];
            t[static_cast<std::size_t>(s + 1)] = id(c[0], c[1], c[2]);
          }
          push_oriented(tets, p, t);
        }
  return TetMesh(std::move(p), std::move(tets), region);
}

TetMesh icosphere_ball(int subdivisions, int layers, double radius, const Vec3& center, Region region) {
  if (subdivisions < 0 || layers < 1) throw std::invalid_argument("icosphere_ball: invalid parameters");
  const Icosphere s = icosphere(subdivisions);
  const int ns = static_cast<int>(s.points.size());
  std::vector<Vec3> p{center};
  for (int l = 1; l <= layers; ++l)
    for (const auto& q : s.points) p.push_back(center + radius * static_cast<double>(l) / layers * q);
  auto id = [ns](int layer, int v) { return 1 + (layer - 1) * ns + v; };
  std::vector<Tet> tets;
  for (const auto& f : s.faces) push_oriented(tets, p, {0, id(1, f[0]), id(1, f[1]), id(1, f[2])});
  for (int l = 1; l < layers; ++l)
    for (const auto& f : s.faces) {
      auto v = f;
      std::sort(v.begin(), v.end());
      const int a = id(l, v[0]), b = id(l, v[1]), c = id(l, v[2]);
      const int A = id(l + 1, v[0]), B = id(l + 1, v[1]), C = id(l + 1, v[2]);
      push_oriented(tets, p, {a, b, c, A});
      push_oriented(tets, p, {b, c, A, B});
      push_oriented(tets, p, {c, A, B, C});
    }
  return TetMesh(std::move(p), std::move(tets), region);
}

}  // namespace multimag::meshgen
