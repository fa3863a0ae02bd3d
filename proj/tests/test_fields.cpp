#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "meshgen.hpp"
#include "multimag/fields.hpp"
#include "support.hpp"

#include <cmath>

using namespace multimag;

TEST_CASE("non-dimensional constants") {
  const double A = 1.3e-11, Ms = 8.0e5, K = 5.0e2;
  const double L = std::sqrt(2.0 * A / (kMu0 * Ms * Ms));
  const auto c = compute_constants(A, K, Ms, 0.1, L, 1e-9);
  CHECK(c.C_exch == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.C_ani == doctest::Approx(K / (kMu0 * Ms)).epsilon(1e-15));
  CHECK(c.T_reduced == doctest::Approx(2.210173e5 * Ms * 1e-9).epsilon(1e-15));
  CHECK(c.alpha == 0.1);
  CHECK(kMu0 == doctest::Approx(4.0 * std::numbers::pi * 1e-7).epsilon(1e-16));
  CHECK(kGamma0 == 2.210173e5);
  CHECK_THROWS_WITH_AS(compute_constants(A, K, -1.0, 0.1, L, 1e-9), doctest::Contains("Ms"), ConfigError);
  CHECK_THROWS_WITH_AS(compute_constants(A, K, Ms, 0.0, L, 1e-9), doctest::Contains("alpha"), ConfigError);
}

TEST_CASE("uniaxial anisotropy") {
  const Vec3 e = Vec3(1, 2, 2).normalized();
  const Vec3 t = e.unitOrthogonal();
  NodalVectorField m(3);
  m[0] = e;
  m[1] = t;
  m[2] = (e + t) / std::sqrt(2.0);
  const auto pi = uniaxial_anisotropy(m, e);
  CHECK((pi[0] + e).norm() < 1e-15);
  CHECK(pi[1].norm() < 1e-15);
  CHECK((pi[2] + e / std::sqrt(2.0)).norm() < 1e-15);
  CHECK_THROWS_AS(uniaxial_anisotropy(m, Vec3(1, 1, 0)), std::invalid_argument);
}

TEST_CASE("cubic anisotropy") {
  NodalVectorField m(2);
  m[0] = Vec3(1, 0, 0);
  m[1] = Vec3(1, 1, 1) / std::sqrt(3.0);
  const auto pi = cubic_anisotropy(m, 1.0, 0.0);
  CHECK(pi[0].norm() == 0.0);
  CHECK((pi[1] - 2.0 / (3.0 * std::sqrt(3.0)) * Vec3(1, 2, 1)).norm() < 1e-15);
  CHECK(cubic_anisotropy(m, 0.0, 0.0)[1].norm() == 0.0);
  // finite-difference check of the gradient including the K2 term
  const Vec3 x(0.3, -0.5, 0.7);
  NodalVectorField one(1, x);
  const Vec3 g = cubic_anisotropy(one, 0.7, 1.3)[0];
  for (int c = 0; c < 3; ++c) {
    Vec3 d = Vec3::Zero();
    d[c] = 1e-6;
    const double fd = (cubic_density(x + d, 0.7, 1.3) - cubic_density(x - d, 0.7, 1.3)) / 2e-6;
    CHECK(g[c] == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("applied field sampling") {
  const auto mesh = meshgen::kuhn_cube(2);
  AppliedField c;
  c.value = Vec3(0.1, 0.2, 0.3);
  for (double t : {0.0, 1.0, 7.5}) {
    const auto f = sample_applied_field(c, mesh, t);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == c.value);
  }
  AppliedField s;
  s.kind = AppliedField::Kind::Sinusoidal;
  s.amplitude = Vec3(0, 0, 1);
  s.omega = 1.0;
  const auto f = sample_applied_field(s, mesh, std::numbers::pi / 2);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK((f[i] - Vec3(0, 0, 1)).norm() < 1e-15);
  const auto z = sample_applied_field(AppliedField{}, mesh, 3.0);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i].norm() == 0.0);
  CHECK_THROWS_WITH(sample_applied_field([](double, const Vec3&) -> Vec3 { throw std::runtime_error("bad"); }, mesh, 0.0),
                    doctest::Contains("node 0"));
}

TEST_CASE("anisotropy operators are pointwise") {
  std::mt19937_64 rng(11);
  auto m = testing::random_unit_field(20, rng);
  const Vec3 e(0, 0, 1);
  const auto a = uniaxial_anisotropy(m, e);
  const auto c = cubic_anisotropy(m, 0.5, 0.25);
  auto perm = m;
  std::shuffle(perm.values.begin() + 1, perm.values.end(), rng);
  CHECK(uniaxial_anisotropy(perm, e)[0] == a[0]);
  CHECK(cubic_anisotropy(perm, 0.5, 0.25)[0] == c[0]);
}

TEST_CASE("uniaxial operator is bounded, linear and self-adjoint") {
  const auto mesh = meshgen::icosphere_ball(1, 2);
  const SparseMatrix M = assemble_mass(mesh).matrix;
  const SparseMatrix K = assemble_stiffness(mesh).matrix;
  std::mt19937_64 rng(5);
  UniaxialContribution uni(1.0, Vec3(0, 1, 0));
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = testing::random_unit_field(mesh.num_nodes(), rng);
    const auto b = testing::random_unit_field(mesh.num_nodes(), rng);
    const auto pa = uni.evaluate(a, {});
    const auto pb = uni.evaluate(b, {});
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].norm() <= 1.0 + 1e-15);
    CHECK(mass_inner(M, pa, b) == doctest::Approx(mass_inner(M, a, pb)).epsilon(1e-12));
    const auto sum = uni.evaluate(a + 2.0 * b, {});
    CHECK((sum - (pa + 2.0 * pb)).packed().norm() < 1e-13);
    CHECK(boundedness_ratio(uni, a, {}, M, K) <= std::sqrt(mesh.total_volume()));
  }
}

TEST_CASE("interaction energies") {
  const auto mesh = meshgen::kuhn_cube(2, 2.0);
  const SparseMatrix M = assemble_mass(mesh).matrix;
  const Vec3 e(0, 0, 1);
  NodalVectorField m(mesh.num_nodes(), e);
  UniaxialContribution uni(1.0, e);
  const auto pi = uni.evaluate(m, {});
  CHECK(*uni.energy(m, pi, M) == doctest::Approx(-mesh.total_volume() / 2.0).epsilon(1e-12));
  CubicContribution cub(mesh, 2.0, 1.0, 0.0);
  NodalVectorField d(mesh.num_nodes(), Vec3(1, 1, 1).normalized());
  CHECK(*cub.energy(d, cub.evaluate(d, {}), M) == doctest::Approx(2.0 * mesh.total_volume() * 2.0 / 9.0).epsilon(1e-12));
}
