#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "meshgen.hpp"
#include "multimag/bem.hpp"
#include "multimag/fem.hpp"
#include "multimag/quadrature.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace multimag;

namespace {

struct Brute {
  double single = 0.0, dl = 0.0;
  std::array<double, 3> lin{};
};

// Midpoint-refined 7-point quadrature of the kernels over a triangle.
Brute brute_force(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c, int levels) {
  const Vec3 n = (b - a).cross(c - a).normalized();
  const double area = 0.5 * (b - a).cross(c - a).norm();
  std::vector<std::array<Vec3, 3>> tris{{a, b, c}};
  for (int l = 0; l < levels; ++l) {
    std::vector<std::array<Vec3, 3>> next;
    for (const auto& t : tris) {
      const Vec3 ab = 0.5 * (t[0] + t[1]), bc = 0.5 * (t[1] + t[2]), ca = 0.5 * (t[2] + t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  Brute out;
  const double w0 = area / static_cast<double>(tris.size());
  const Eigen::Matrix3d P = (Eigen::Matrix3d() << a, b, c).finished();
  const Eigen::Matrix3d Pinv = P.inverse();
  for (const auto& t : tris)
    for (const auto& q : quad::triangle7()) {
      const Vec3 y = quad::map_point(q, t[0], t[1], t[2]);
      const double r = (x - y).norm();
      const double w = w0 * q.w;
      out.single += w / r;
      const double k = (x - y).dot(n) / (r * r * r);
      out.dl += w * k;
      // barycentric coordinates of y with respect to (a, b, c): solve via the affine map
      const Vec3 lam = Pinv * y;
      const double s = lam.sum();
      for (int i = 0; i < 3; ++i) out.lin[static_cast<std::size_t>(i)] += w * k * lam[i] / s;
    }
  return out;
}

SurfaceMesh sphere_surface(int subdivisions) { return boundary_faces(meshgen::icosphere_ball(subdivisions, 1)); }

}  // namespace

TEST_CASE("analytic triangle integrals match brute-force quadrature") {
  const Vec3 a(0.1, 0.2, 0.3), b(1.1, 0.0, 0.4), c(0.3, 0.9, 0.8);
  const Vec3 n = (b - a).cross(c - a).normalized();
  const Vec3 cen = (a + b + c) / 3.0;
  const std::vector<Vec3> points{cen + 0.7 * n, cen - 0.4 * n, a + Vec3(-0.5, 0.2, 1.0), Vec3(3, -2, 1),
                                 b + 0.15 * n + 0.1 * (c - b), cen + 2.0 * (b - cen) + 0.05 * n};
  for (const auto& x : points) {
    const auto ti = detail::triangle_integrals(x, a, b, c, n);
    const auto bf = brute_force(x, a, b, c, 6);
    CHECK(ti.single == doctest::Approx(bf.single).epsilon(1e-7));
    CHECK(ti.dl_const == doctest::Approx(bf.dl).epsilon(1e-6));
    for (int k = 0; k < 3; ++k) CHECK(ti.dl_linear[static_cast<std::size_t>(k)] == doctest::Approx(bf.lin[static_cast<std::size_t>(k)]).epsilon(1e-6));
    CHECK(ti.dl_linear[0] + ti.dl_linear[1] + ti.dl_linear[2] == doctest::Approx(ti.dl_const).epsilon(1e-12));
  }
  SUBCASE("in-plane point inside the triangle") {
    const auto ti = detail::triangle_integrals(cen, a, b, c, n);
    CHECK(ti.in_plane_inside);
    CHECK(ti.dl_const == 0.0);
    CHECK(ti.single > 0.0);
  }
}

TEST_CASE("Galerkin identities on closed surfaces") {
  const std::vector<SurfaceMesh> surfaces{sphere_surface(1), sphere_surface(2), boundary_faces(meshgen::kuhn_cube(2)),
                                          boundary_faces(meshgen::icosphere_ball(1, 2, 0.5, Vec3(1, 2, 3)))};
  for (const auto& s : surfaces) {
    const auto ops = assemble_bem(s);
    CHECK(ops.V.rows() == static_cast<Eigen::Index>(s.num_faces()));
    CHECK(ops.K.cols() == static_cast<Eigen::Index>(s.num_nodes()));
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(s.num_nodes()));
    const Vector gauss = ops.K * ones + 0.5 * ops.Mb * ones;
    for (std::size_t f = 0; f < s.num_faces(); ++f) CHECK(std::abs(gauss[static_cast<Eigen::Index>(f)]) / s.areas[f] < 1e-3);
    CHECK((ops.V - ops.V.transpose()).norm() <= 1e-10 * ops.V.norm());
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
      Vector phi(ops.V.rows());
      for (auto& v : phi) v = nd(rng);
      CHECK(phi.dot(ops.V * phi) > 0.0);
    }
  }
}

TEST_CASE("unit sphere shell potential") {
  const auto s = sphere_surface(2);
  REQUIRE(s.num_faces() == 320);
  const auto ops = assemble_bem(s);
  const Vector ones = Vector::Ones(ops.V.rows());
  CHECK(std::abs(ones.dot(ops.V * ones) / s.total_area() - 1.0) < 0.02);

  const Vector zero = eval_single_layer(s, FaceDensity(s.num_faces()), {Vec3::Zero(), Vec3(2, 0, 0)});
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-layer point values on the 1280-face sphere") {
  // 320 faces enclose 1.9% less area than the sphere, so the 1% point check uses one refinement more.
  const auto s = sphere_surface(3);
  const FaceDensity unit(Vector::Ones(static_cast<Eigen::Index>(s.num_faces())));
  const Vector vals = eval_single_layer(s, unit, {Vec3::Zero(), Vec3(2, 0, 0), Vec3(0, 0, -2)});
  CHECK(std::abs(vals[0] - 1.0) < 0.01);
  CHECK(std::abs(vals[1] - 0.5) < 0.005);
  CHECK(std::abs(vals[2] - 0.5) < 0.005);
}

TEST_CASE("constant-trace double-layer potential") {
  for (const auto& s : {sphere_surface(1), boundary_faces(meshgen::kuhn_cube(2))}) {
    const Vector one = Vector::Ones(static_cast<Eigen::Index>(s.num_nodes()));
    const std::vector<Vec3> inside{Vec3(0.5, 0.5, 0.5), Vec3(0.2, 0.3, 0.1), Vec3(0.4, 0.45, 0.6)};
    std::vector<Vec3> outside{Vec3(3, 0, 0), Vec3(0.5, 0.5, 1.3)};
    if (s.num_nodes() <= 30) outside.emplace_back(-0.01, 0.5, 0.5);
    for (double v : eval_double_layer(s, one, inside)) CHECK(std::abs(v + 1.0) < 1e-3);
    for (double v : eval_double_layer(s, one, outside)) CHECK(std::abs(v) < 1e-3);
    if (s.num_nodes() > 30) {
      for (double v : eval_double_layer(s, one, {Vec3(-0.01, 0.5, 0.5)})) CHECK(std::abs(v + 1.0) < 1e-3);
    }
    const Vector none = eval_double_layer(s, Vector::Zero(one.size()), inside);
    CHECK(none.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("double-layer jump across faces") {
  const auto s = sphere_surface(2);
  const Vector one = Vector::Ones(static_cast<Eigen::Index>(s.num_nodes()));
  for (std::size_t f = 0; f < s.num_faces(); f += 37) {
    const double d = s.diameter(f) / 100.0;
    const Vec3 c = s.centroid(f);
    const Vector v = eval_double_layer(s, one, {c + d * s.normals[f], c - d * s.normals[f]});
    CHECK(std::abs((v[0] - v[1]) - 1.0) < 5e-2);
  }
}

TEST_CASE("points on the surface are rejected") {
  const auto s = sphere_surface(1);
  const FaceDensity rho(Vector::Ones(static_cast<Eigen::Index>(s.num_faces())));
  CHECK_THROWS_WITH_AS(eval_single_layer(s, rho, {s.centroid(3)}), doctest::Contains("on the surface"), std::domain_error);
  CHECK_THROWS_AS(eval_double_layer(s, Vector::Ones(static_cast<Eigen::Index>(s.num_nodes())), {s.points[0]}), std::domain_error);
}

TEST_CASE("degenerate faces are rejected") {
  SurfaceMesh s;
  s.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  s.local_faces = {{0, 1, 2}};
  s.faces = s.local_faces;
  s.nodes = {0, 1, 2};
  s.areas = {0.0};
  s.normals = {Vec3(0, 0, 1)};
  s.parent_tet = {0};
  CHECK_THROWS_WITH_AS(assemble_bem(s), doctest::Contains("face 0"), MeshError);
}

TEST_CASE("representation formula error decreases under refinement") {
  // u = 1/|x - x0| with x0 outside the ball is harmonic inside: u = V(du/dn) - K(u).
  // Affine u would be reproduced exactly on any polyhedron.
  const Vec3 x0(1.6, 0.3, -0.2);
  auto u_exact = [&](const Vec3& x) { return 1.0 / (x - x0).norm(); };
  const std::vector<Vec3> pts{Vec3(0.1, 0.2, 0.3), Vec3(-0.3, 0.1, -0.2), Vec3(0.0, 0.0, 0.5)};
  std::vector<double> errors;
  for (int level = 1; level <= 3; ++level) {
    const auto s = sphere_surface(level);
    FaceDensity dn(s.num_faces());
    const auto pq = face_quadrature_points(s);
    Vector samples(static_cast<Eigen::Index>(pq.size()));
    for (std::size_t q = 0; q < pq.size(); ++q) {
      const Vec3 d = pq[q] - x0;
      samples[static_cast<Eigen::Index>(q)] = -d.dot(s.normals[q / 7]) / std::pow(d.norm(), 3);
    }
    const Vector integrals = face_integrals_from_samples(s, samples);
    for (std::size_t f = 0; f < s.num_faces(); ++f) dn[f] = integrals[static_cast<Eigen::Index>(f)] / s.areas[f];
    Vector tr(static_cast<Eigen::Index>(s.num_nodes()));
    for (std::size_t i = 0; i < s.num_nodes(); ++i) tr[static_cast<Eigen::Index>(i)] = u_exact(s.points[i]);
    const Vector u = eval_single_layer(s, dn, pts) - eval_double_layer(s, tr, pts);
    double err = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) err = std::max(err, std::abs(u[static_cast<Eigen::Index>(i)] - u_exact(pts[i])));
    errors.push_back(err);
    MESSAGE("level " << level << " max error " << err);
  }
  CHECK(errors[1] < errors[0]);
  CHECK(errors[2] < errors[1]);
}
