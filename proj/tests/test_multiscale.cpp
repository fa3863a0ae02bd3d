#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "meshgen.hpp"
#include "multimag/multiscale.hpp"
#include "support.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <tuple>

using namespace multimag;

namespace {

const Vec3 kCenter1(2.5, 0.0, 0.0);

struct Bodies {
  TetMesh omega1;
  TetMesh omega2;
  std::unique_ptr<MultiscaleWorkspace> ws;
};

// Small ball Omega1 next to the unit ball Omega2.
const Bodies& bodies(int s2 = 2, int l2 = 2, NonlinearScheme scheme = NonlinearScheme::Zarantonello) {
  static std::map<std::tuple<int, int, NonlinearScheme>, std::unique_ptr<Bodies>> cache;
  auto& slot = cache[{s2, l2, scheme}];
  if (!slot) {
    slot = std::make_unique<Bodies>(Bodies{meshgen::icosphere_ball(1, 2, 0.5, kCenter1),
                                           meshgen::icosphere_ball(s2, l2, 1.0, Vec3::Zero(), Region::Omega2), nullptr});
    MultiscaleOptions opt;
    opt.scheme = scheme;
    slot->ws = std::make_unique<MultiscaleWorkspace>(slot->omega1, slot->omega2, opt);
  }
  return *slot;
}

double l2(const SparseMatrix& M, const NodalVectorField& f) { return std::sqrt(mass_inner(M, f, f)); }

Vec3 mean_field(const TetMesh& mesh, const NodalScalarField& u) {
  const auto g = element_gradients(mesh, u);
  Vec3 s = Vec3::Zero();
  for (std::size_t t = 0; t < mesh.num_tets(); ++t) s += mesh.volume(t) * g[t];
  return s / mesh.total_volume();
}

}  // namespace

TEST_CASE("material law values") {
  const auto tanh = MaterialLaw::tanh(1.0, 1.0);
  CHECK(material_g(tanh, 0.0) == 0.0);
  CHECK(tanh.chi(0.0) == doctest::Approx(1.0));
  for (int i = 0; i <= 1000; ++i) {
    const double t = 0.1 * i;
    CHECK(tanh.g_prime(t) >= 1.0);
    CHECK(tanh.g_prime(t) <= 2.0);
  }
  CHECK(tanh.gamma() == 1.0);
  CHECK(tanh.lip() == 2.0);
  CHECK(material_g(MaterialLaw::zero(), 3.5) == 3.5);
  CHECK_THROWS_AS(material_g(tanh, -1.0), std::invalid_argument);
  const auto rational = MaterialLaw::rational(2.0, 0.5, 1.0, 0.1);
  CHECK(rational.gamma() > 0.0);
  for (int i = 0; i <= 200; ++i) {
    const double t = std::pow(10.0, -4.0 + 0.04 * i);
    CHECK(rational.g_prime(t) >= rational.gamma());
    CHECK(rational.g_prime(t) <= rational.lip());
  }
}

TEST_CASE("auxiliary potential") {
  const auto cube = meshgen::kuhn_cube(3);
  CHECK(solve_uapp(cube, NodalVectorField(cube.num_nodes())).values.norm() == 0.0);
  const Vec3 c(0.3, -1.2, 0.7);
  const auto u = solve_uapp(cube, NodalVectorField(cube.num_nodes(), c));
  for (const auto& g : element_gradients(cube, u)) CHECK((g + c).norm() < 1e-8);
  const Vector w = lumped_mass(cube);
  CHECK(std::abs(w.dot(u.values)) < 1e-10);
  // f = grad w for affine w: u = -w + const
  for (std::size_t i = 0; i < cube.num_nodes(); ++i) CHECK(u.values[static_cast<Eigen::Index>(i)] + c.dot(cube.node(i)) ==
                                                           doctest::Approx(u.values[0] + c.dot(cube.node(0))).epsilon(1e-8));
}

TEST_CASE("transfer of the microscopic potential") {
  const auto& b = bodies();
  const auto& ws = *b.ws;
  CHECK(transfer_u1_to_omega2(ws, NodalScalarField(b.omega1.num_nodes())).values.norm() == 0.0);
  NodalScalarField one(Vector::Ones(static_cast<Eigen::Index>(b.omega1.num_nodes())));
  CHECK(transfer_u1_to_omega2(ws, one).values.cwiseAbs().maxCoeff() < 1e-3);

  // maximum principle on an angle-condition mesh
  const auto cube1 = meshgen::kuhn_cube(2, 1.0, Vec3(0, 0, 0));
  const auto cube2 = meshgen::kuhn_cube(4, 1.0, Vec3(1.6, 0.2, -0.3), Region::Omega2);
  REQUIRE(check_angle_condition(cube2).empty());
  MultiscaleWorkspace cw(cube1, cube2);
  NodalScalarField u11(cube1.num_nodes());
  for (std::size_t i = 0; i < cube1.num_nodes(); ++i) {
    const Vec3& x = cube1.node(i);
    u11.values[static_cast<Eigen::Index>(i)] = std::sin(2 * x[0]) + x[1] * x[2] - 0.3 * x[2];
  }
  const auto u1h = transfer_u1_to_omega2(cw, u11);
  const Vector tr = trace(cw.gamma2(), u1h);
  CHECK(u1h.values.maxCoeff() <= tr.maxCoeff() + 1e-12);
  CHECK(u1h.values.minCoeff() >= tr.minCoeff() - 1e-12);
}

TEST_CASE("separation is enforced") {
  const auto a = meshgen::icosphere_ball(1, 1);
  const auto b = meshgen::icosphere_ball(1, 1, 1.0, Vec3(0.8, 0, 0), Region::Omega2);
  CHECK_THROWS_AS(MultiscaleWorkspace(a, b), MeshError);
  const auto inner = meshgen::icosphere_ball(1, 1, 0.2, Vec3(0.1, 0, 0), Region::Omega2);
  CHECK_THROWS_WITH_AS(MultiscaleWorkspace(a, inner), doctest::Contains("overlaps"), MeshError);
}

TEST_CASE("coupling solve: trivial data, linear laws, refusal") {
  const auto& b = bodies();
  const auto& ws = *b.ws;
  const std::size_t n2 = b.omega2.num_nodes();
  const CouplingData zero{NodalScalarField(n2), NodalScalarField(n2), NodalVectorField(n2)};
  const auto st = solve_coupling(ws, zero, MaterialLaw::zero());
  CHECK(st.phi.values.norm() == 0.0);
  CHECK(st.u.values.norm() == 0.0);

  const Vec3 f(0, 0, 1);
  const NodalVectorField fn(n2, f);
  const CouplingData data{NodalScalarField(n2), solve_uapp(ws, fn), fn};
  const auto lin = solve_coupling(ws, data, MaterialLaw::linear(2.0));
  CHECK(lin.iterations <= 2);
  CHECK(lin.residual < 1e-10);

  // kacanov on a linear law is also a single solve
  const auto& bk = bodies(2, 2, NonlinearScheme::Kacanov);
  CHECK(solve_coupling(*bk.ws, data, MaterialLaw::linear(2.0)).iterations <= 2);

  CHECK_THROWS_WITH_AS(solve_coupling(ws, data, MaterialLaw::linear(-0.8)), doctest::Contains("gamma > 1/4"),
                       std::invalid_argument);
}

TEST_CASE("stabilized system matches the unstabilized solve") {
  const auto& b = bodies();
  const auto& ws = *b.ws;
  const std::size_t n2 = b.omega2.num_nodes();
  std::mt19937_64 rng(9);
  const NodalVectorField fn(n2, testing::random_unit(rng));
  NodalScalarField u1h(n2);
  for (std::size_t i = 0; i < n2; ++i) u1h.values[static_cast<Eigen::Index>(i)] = 0.2 * b.omega2.node(i)[0];
  const CouplingData data{u1h, solve_uapp(ws, fn), fn};
  const auto law = MaterialLaw::linear(2.0);
  const auto st = solve_coupling(ws, data, law);

  const std::vector<double> w(b.omega2.num_tets(), 3.0);
  const Eigen::MatrixXd At = ws.coupling_matrix(w, false);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(At);
  MESSAGE("unstabilized rank ", lu.rank(), " of ", At.rows());
  const Vector x = lu.solve(ws.coupling_rhs(data));
  const auto nf = static_cast<Eigen::Index>(ws.gamma2().num_faces());
  Vector xs(x.size());
  xs << st.phi.values, st.u.values;
  CHECK((xs - x).norm() <= 1e-8 * x.norm());
  CHECK((At * xs - ws.coupling_rhs(data)).norm() <= 1e-8 * ws.coupling_rhs(data).norm());
  CHECK(nf > 0);
}

TEST_CASE("Zarantonello iteration for the tanh law") {
  const auto& b = bodies();
  const auto& ws = *b.ws;
  const std::size_t n2 = b.omega2.num_nodes();
  const NodalVectorField fn(n2, Vec3(0.0, 0.0, 1.5));
  const CouplingData data{NodalScalarField(n2), solve_uapp(ws, fn), fn};
  const auto law = MaterialLaw::tanh(1.0, 1.0);
  const auto st = solve_coupling(ws, data, law);
  MESSAGE("iterations ", st.iterations, " final residual ", st.residual);
  CHECK(st.monotone);
  CHECK(st.residual <= 1e-8);
  CHECK(st.iterations <= 200);
  for (std::size_t i = 1; i < st.residual_history.size(); ++i) CHECK(st.residual_history[i] < st.residual_history[i - 1]);

  const auto& bk = bodies(2, 2, NonlinearScheme::Kacanov);
  const auto sk = solve_coupling(*bk.ws, data, law);
  MESSAGE("kacanov iterations ", sk.iterations);
  CHECK(sk.residual <= 1e-8);
  CHECK((sk.u.values - st.u.values).norm() <= 1e-6 * st.u.values.norm());
}

TEST_CASE("iteration cap reports the residual history") {
  const auto omega1 = meshgen::icosphere_ball(0, 1, 0.5, kCenter1);
  const auto omega2 = meshgen::icosphere_ball(1, 1, 1.0, Vec3::Zero(), Region::Omega2);
  MultiscaleOptions opt;
  opt.max_iter = 3;
  MultiscaleWorkspace ws(omega1, omega2, opt);
  const NodalVectorField fn(omega2.num_nodes(), Vec3(0, 0, 2));
  const CouplingData data{NodalScalarField(omega2.num_nodes()), solve_uapp(ws, fn), fn};
  CHECK_THROWS_WITH_AS(solve_coupling(ws, data, MaterialLaw::tanh(1.0, 1.0)), doctest::Contains("residual history"), SolverError);
}

TEST_CASE("null material produces no field") {
  const auto& b = bodies();
  const auto& ws = *b.ws;
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = testing::random_unit_field(b.omega1.num_nodes(), rng);
    const NodalVectorField f2(b.omega2.num_nodes(), 2.0 * testing::random_unit(rng));
    const auto pi = multiscale_field(ws, m, f2, MaterialLaw::zero());
    const NodalVectorField f1(b.omega1.num_nodes(), f2[0]);
    const double scale = l2(ws.mass1().matrix, f1) + l2(ws.mass1().matrix, m);
    CHECK(l2(ws.mass1().matrix, pi) <= 1e-6 * scale);
  }
  const auto zero = multiscale_field(ws, NodalVectorField(b.omega1.num_nodes()), NodalVectorField(b.omega2.num_nodes()),
                                     MaterialLaw::linear(2.0));
  for (const auto& v : zero.values) CHECK(v.norm() == 0.0);
}

TEST_CASE("magnetizable sphere in a uniform field") {
  const double chi = 2.0;
  const Vec3 f(0.2, -0.1, 1.0);
  const Vec3 h_in = 3.0 / (3.0 + chi) * f;
  const Vec3 M = chi * h_in;
  double previous = 1.0;
  for (auto [s, l] : {std::pair{1, 2}, std::pair{2, 2}}) {
    const auto& b = bodies(s, l);
    const auto& ws = *b.ws;
    MultiscaleParts parts;
    const auto pi = multiscale_field(ws, NodalVectorField(b.omega1.num_nodes()), NodalVectorField(b.omega2.num_nodes(), f),
                                     MaterialLaw::linear(chi), &parts);
    const Vec3 interior = -mean_field(b.omega2, parts.coupling.u);
    const double err = (interior - h_in).norm() / h_in.norm();
    // grad of the exterior dipole potential |Omega2| M.x / (4 pi r^3) at the centre of Omega1;
    // by the mean-value property it equals the ball average of a harmonic field
    const Vec3& x = kCenter1;
    const double r = x.norm();
    const double moment = b.omega2.total_volume() / (4.0 * std::numbers::pi);
    const Vec3 dipole = moment * (M / std::pow(r, 3) - 3.0 * M.dot(x) * x / std::pow(r, 5));
    Vec3 mean_pi = Vec3::Zero();
    for (std::size_t i = 0; i < pi.size(); ++i) mean_pi += ws.lumped1()[static_cast<Eigen::Index>(i)] * pi[i];
    mean_pi /= b.omega1.total_volume();
    const double dipole_err = (mean_pi - dipole).norm() / dipole.norm();
    MESSAGE("Omega2 tets=", b.omega2.num_tets(), " interior error=", err, " |H_in|/|f|=", interior.norm() / f.norm(),
            " dipole error at Omega1=", dipole_err);
    CHECK(err < 0.10);
    CHECK(err < previous);
    CHECK(dipole_err < 0.15);
    previous = err;
  }
}

TEST_CASE("pipeline linearity and boundedness") {
  const auto& b = bodies();
  const auto& ws = *b.ws;
  const auto law = MaterialLaw::linear(1.5);
  std::mt19937_64 rng(33);
  const NodalVectorField f2(b.omega2.num_nodes(), Vec3(0, 0.5, 0.5));
  const auto ma = testing::random_unit_field(b.omega1.num_nodes(), rng);
  const auto mb = testing::random_unit_field(b.omega1.num_nodes(), rng);
  const NodalVectorField zero(b.omega2.num_nodes());
  const auto pa = multiscale_field(ws, ma, zero, law);
  const auto pb = multiscale_field(ws, mb, zero, law);
  const auto pf = multiscale_field(ws, NodalVectorField(b.omega1.num_nodes()), f2, law);
  const auto sum = multiscale_field(ws, 0.5 * ma + 0.5 * mb, f2, law);
  const auto& M1 = ws.mass1().matrix;
  CHECK(l2(M1, sum - (0.5 * pa + 0.5 * pb + pf)) <= 1e-8 * l2(M1, sum));

  auto contribution = MultiscaleContribution(std::make_shared<MultiscaleWorkspace>(b.omega1, b.omega2), law,
                                             [](double, const Vec3&) { return Vec3(0, 0.5, 0.5); });
  double bound = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const auto m = testing::random_unit_field(b.omega1.num_nodes(), rng);
    bound = std::max(bound, boundedness_ratio(contribution, m, {}, M1, ws.stiffness1().matrix));
  }
  MESSAGE("calibrated boundedness constant C = ", bound);
  CHECK(std::isfinite(bound));
  CHECK_THROWS_AS(MultiscaleContribution(nullptr, MaterialLaw::linear(-0.9), {}), ConfigError);
}
