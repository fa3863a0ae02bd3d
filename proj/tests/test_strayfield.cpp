#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "meshgen.hpp"
#include "multimag/strayfield.hpp"
#include "support.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <tuple>

using namespace multimag;

namespace {

Vec3 weighted_mean(const StrayfieldWorkspace& ws, const NodalVectorField& f) {
  Vec3 s = Vec3::Zero();
  for (std::size_t i = 0; i < f.size(); ++i) s += ws.lumped()[static_cast<Eigen::Index>(i)] * f[i];
  return s / ws.mesh().total_volume();
}

double l2(const StrayfieldWorkspace& ws, const NodalVectorField& f) { return std::sqrt(mass_inner(ws.mass().matrix, f, f)); }

NodalVectorField evaluate(const StrayfieldWorkspace& ws, const NodalVectorField& m) {
  return ws.method() == StrayfieldMethod::FK ? fk_strayfield(ws, m) : gcr_strayfield(ws, m);
}

double sphere_error(const StrayfieldWorkspace& ws, const Vec3& dir) {
  NodalVectorField m(ws.mesh().num_nodes(), dir);
  return (weighted_mean(ws, evaluate(ws, m)) - dir / 3.0).norm() / (1.0 / 3.0);
}

// Sphere meshes and workspaces are shared between cases; BEM assembly dominates.
const StrayfieldWorkspace& sphere_workspace(int subdivisions, int layers, StrayfieldMethod method) {
  static std::map<std::tuple<int, int, StrayfieldMethod>, std::pair<std::unique_ptr<TetMesh>, std::unique_ptr<StrayfieldWorkspace>>> cache;
  auto& slot = cache[{subdivisions, layers, method}];
  if (!slot.second) {
    slot.first = std::make_unique<TetMesh>(meshgen::icosphere_ball(subdivisions, layers));
    slot.second = std::make_unique<StrayfieldWorkspace>(*slot.first, method);
  }
  return *slot.second;
}

}  // namespace

TEST_CASE("uniformly magnetized sphere, both splittings, under refinement") {
  const Vec3 dir = Vec3(0.3, -0.4, 0.866).normalized();
  double last[2] = {0, 0};
  for (auto [s, l] : {std::pair{2, 2}, std::pair{3, 4}}) {
    for (auto method : {StrayfieldMethod::FK, StrayfieldMethod::GCR}) {
      const auto& ws = sphere_workspace(s, l, method);
      const double err = sphere_error(ws, dir);
      MESSAGE(to_string(method), " tets=", ws.mesh().num_tets(), " relative mean error=", err);
      CHECK(err < 0.10);
      const int k = method == StrayfieldMethod::FK ? 0 : 1;
      if (s == 3) CHECK(err < last[k]);
      last[k] = err;
    }
  }
}

TEST_CASE("FK and GCR agree and converge together") {
  std::mt19937_64 rng(3);
  double previous = 1.0;
  for (auto [s, l] : {std::pair{2, 2}, std::pair{3, 4}}) {
    const auto& fk = sphere_workspace(s, l, StrayfieldMethod::FK);
    const auto& gcr = sphere_workspace(s, l, StrayfieldMethod::GCR);
    const auto& mesh = fk.mesh();
    double worst = 0.0;
    std::mt19937_64 local(rng);
    for (int trial = 0; trial < 5; ++trial) {
      NodalVectorField m(mesh.num_nodes(), testing::random_unit(local));
      const auto a = fk_strayfield(fk, m);
      const auto b = gcr_strayfield(gcr, m);
      worst = std::max(worst, l2(fk, a - b) / l2(fk, a));
    }
    MESSAGE("tets=", mesh.num_tets(), " max relative L2 difference=", worst);
    CHECK(worst <= 0.15);
    CHECK(worst < previous);
    previous = worst;
  }
}

TEST_CASE("zero magnetization gives zero") {
  const auto mesh = meshgen::icosphere_ball(1, 2);
  for (auto method : {StrayfieldMethod::FK, StrayfieldMethod::GCR}) {
    StrayfieldWorkspace ws(mesh, method);
    StrayfieldPotentials parts;
    const auto pi = ws.method() == StrayfieldMethod::FK ? fk_strayfield(ws, NodalVectorField(mesh.num_nodes()), &parts)
                                                        : gcr_strayfield(ws, NodalVectorField(mesh.num_nodes()), &parts);
    for (const auto& v : pi.values) CHECK(v.norm() == 0.0);
    CHECK(parts.u11.values.norm() == 0.0);
  }
}

TEST_CASE("discretely solenoidal field vanishing on the boundary") {
  // P1 fields zero at boundary nodes with <m, grad v> = 0 for every hat v.
  const auto mesh = meshgen::kuhn_cube(6);
  const auto surface = boundary_faces(mesh);
  std::vector<bool> on_boundary(mesh.num_nodes(), false);
  for (int v : surface.nodes) on_boundary[static_cast<std::size_t>(v)] = true;
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i)
    if (!on_boundary[i]) interior.push_back(i);
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  Eigen::MatrixXd B(n, static_cast<Eigen::Index>(3 * interior.size()));
  for (std::size_t j = 0; j < interior.size(); ++j)
    for (int c = 0; c < 3; ++c) {
      NodalVectorField e(mesh.num_nodes());
      e[interior[j]][c] = 1.0;
      B.col(static_cast<Eigen::Index>(3 * j) + c) = divergence_rhs(mesh, e);
    }
  const Eigen::MatrixXd kernel = Eigen::FullPivLU<Eigen::MatrixXd>(B).kernel();
  REQUIRE(kernel.cols() > 0);
  NodalVectorField m(mesh.num_nodes());
  for (std::size_t j = 0; j < interior.size(); ++j)
    for (int c = 0; c < 3; ++c) m[interior[j]][c] = kernel(static_cast<Eigen::Index>(3 * j) + c, 0);
  double peak = 0.0;
  for (const auto& v : m.values) peak = std::max(peak, v.norm());
  m *= 1.0 / peak;
  CHECK(divergence_rhs(mesh, m).norm() < 1e-12);

  for (auto method : {StrayfieldMethod::FK, StrayfieldMethod::GCR}) {
    StrayfieldWorkspace ws(mesh, method);
    const auto pi = evaluate(ws, m);
    MESSAGE(to_string(method), " |pi|_L2 / |m|_L2 = ", l2(ws, pi) / l2(ws, m));
    CHECK(l2(ws, pi) <= 1e-8 * l2(ws, m));
  }
}

TEST_CASE("linearity, self-adjointness and boundedness") {
  const auto mesh = meshgen::icosphere_ball(2, 2);
  std::mt19937_64 rng(17);
  for (auto method : {StrayfieldMethod::FK, StrayfieldMethod::GCR}) {
    StrayfieldWorkspace ws(mesh, method);
    StrayfieldContribution contribution(std::make_shared<StrayfieldWorkspace>(mesh, method));
    double bound = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      const auto a = testing::random_unit_field(mesh.num_nodes(), rng);
      const auto b = testing::random_unit_field(mesh.num_nodes(), rng);
      const auto pa = evaluate(ws, a), pb = evaluate(ws, b);
      const auto psum = evaluate(ws, 0.5 * a + 0.25 * b);
      CHECK(l2(ws, psum - (0.5 * pa + 0.25 * pb)) <= 1e-9 * l2(ws, psum));
      if (method == StrayfieldMethod::FK) {
        // smooth fields: uniform directions plus a gentle linear variation
        NodalVectorField x(mesh.num_nodes()), y(mesh.num_nodes());
        const Vec3 dx = testing::random_unit(rng), dy = testing::random_unit(rng);
        for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
          x[i] = (dx + 0.3 * mesh.node(i)).normalized();
          y[i] = (dy + 0.3 * Vec3(mesh.node(i)[1], mesh.node(i)[2], mesh.node(i)[0])).normalized();
        }
        const auto px = evaluate(ws, x), py = evaluate(ws, y);
        const double lhs = mass_inner(ws.mass().matrix, px, y), rhs = mass_inner(ws.mass().matrix, x, py);
        const double scale = std::sqrt(mass_inner(ws.mass().matrix, px, x) * mass_inner(ws.mass().matrix, py, y));
        CHECK(std::abs(lhs - rhs) <= 0.02 * scale);
      }
      bound = std::max(bound, boundedness_ratio(contribution, a, {}, ws.mass().matrix, ws.stiffness().matrix));
    }
    MESSAGE(to_string(method), " calibrated boundedness constant C = ", bound);
    CHECK(std::isfinite(bound));
    CHECK(bound < 1.0);
  }
}

TEST_CASE("workspace validation") {
  const auto mesh = meshgen::icosphere_ball(1, 1);
  const auto other = meshgen::icosphere_ball(1, 2);
  StrayfieldWorkspace ws(mesh, StrayfieldMethod::FK);
  CHECK_NOTHROW(ws.check_mesh(mesh));
  CHECK_THROWS_AS(ws.check_mesh(other), MeshError);
  NodalVectorField big(mesh.num_nodes(), Vec3(2, 0, 0));
  CHECK_THROWS_AS(fk_strayfield(ws, big), std::invalid_argument);
  CHECK_THROWS_AS(fk_strayfield(ws, NodalVectorField(3)), std::invalid_argument);
  CHECK(parse_strayfield_method("gcr") == StrayfieldMethod::GCR);
  CHECK_THROWS_AS(parse_strayfield_method("fft"), ConfigError);
}
