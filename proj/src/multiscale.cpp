#include "multimag/multiscale.hpp"

#include <fmt/format.h>

#include <cmath>

namespace multimag {

NonlinearScheme parse_scheme(std::string_view name) {
  if (name == "zarantonello") return NonlinearScheme::Zarantonello;
  if (name == "kacanov") return NonlinearScheme::Kacanov;
  throw ConfigError(fmt::format("unknown nonlinear scheme '{}' (expected zarantonello or kacanov)", name));
}

void check_separated(const TetMesh& omega1, const SurfaceMesh& gamma1, const TetMesh& omega2, const SurfaceMesh& gamma2) {
  auto probe = [](const TetMesh& body, const SurfaceMesh& other, const char* body_name, const char* other_name) {
    std::vector<Vec3> points(body.nodes().begin(), body.nodes().end());
    for (std::size_t t = 0; t < body.num_tets(); ++t) points.push_back(body.centroid(t));
    Vector inside;
    try {
      inside = eval_double_layer(other, Vector::Ones(static_cast<Eigen::Index>(other.num_nodes())), points);
    } catch (const std::domain_error& e) {
      throw MeshError(fmt::format("{} touches the boundary of {}: {}", body_name, other_name, e.what()));
    }
    for (Eigen::Index i = 0; i < inside.size(); ++i)
      if (inside[i] < -0.5) {
        const auto idx = static_cast<std::size_t>(i);
        throw MeshError(idx < body.num_nodes()
                            ? fmt::format("{} overlaps {}: node {} lies inside", body_name, other_name, idx)
                            : fmt::format("{} overlaps {}: tet {} lies inside", body_name, other_name, idx - body.num_nodes()));
      }
  };
  probe(omega1, gamma2, "Omega1", "Omega2");
  probe(omega2, gamma1, "Omega2", "Omega1");
}

MultiscaleWorkspace::MultiscaleWorkspace(const TetMesh& omega1, const TetMesh& omega2, MultiscaleOptions options)
    : omega1_(&omega1),
      omega2_(&omega2),
      options_(std::move(options)),
      gamma1_(boundary_faces(omega1)),
      gamma2_(boundary_faces(omega2)),
      stiffness1_(assemble_stiffness(omega1)),
      stiffness2_(assemble_stiffness(omega2)),
      mass1_(assemble_mass(omega1)),
      lumped1_(lumped_mass(omega1)),
      lumped2_(lumped_mass(omega2)) {
  if (!(options_.tol_nl > 0.0)) throw ConfigError("tol_nl must be positive");
  if (options_.max_iter == 0) throw ConfigError("max_iter must be positive");
  check_separated(omega1, gamma1_, omega2, gamma2_);
  bem2_ = assemble_bem(gamma2_, options_.bem);
  D_ = 0.5 * bem2_.Mb - bem2_.K;

  const auto nf = static_cast<Eigen::Index>(gamma2_.num_faces());
  s_ = Vector::Zero(coupling_size());
  s_.head(nf) = bem2_.V.transpose() * Vector::Ones(nf);
  const Vector su = D_.transpose() * Vector::Ones(nf);
  for (std::size_t a = 0; a < gamma2_.num_nodes(); ++a) s_[nf + gamma2_.nodes[a]] = su[static_cast<Eigen::Index>(a)];

  P_ = Eigen::PartialPivLU<Eigen::MatrixXd>(coupling_matrix({}, true));
  k1_at_gamma2_ = potential_matrices(gamma1_, face_quadrature_points(gamma2_)).dbl;
  gamma2_at_gamma1_ = potential_matrices(gamma2_, face_quadrature_points(gamma1_));
}

Eigen::Index MultiscaleWorkspace::coupling_size() const {
  return static_cast<Eigen::Index>(gamma2_.num_faces() + omega2_->num_nodes());
}

Eigen::MatrixXd MultiscaleWorkspace::coupling_matrix(std::span<const double> weights, bool stabilized) const {
  const auto nf = static_cast<Eigen::Index>(gamma2_.num_faces());
  const Eigen::Index N = coupling_size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  A.topLeftCorner(nf, nf) = bem2_.V;
  for (std::size_t a = 0; a < gamma2_.num_nodes(); ++a) {
    const Eigen::Index col = nf + gamma2_.nodes[a];
    const auto la = static_cast<Eigen::Index>(a);
    A.block(0, col, nf, 1) = D_.col(la);
    A.block(col, 0, 1, nf) = -bem2_.Mb.col(la).transpose();
  }
  const SparseMatrix K = weights.empty() ? stiffness2_.matrix : assemble_stiffness(*omega2_, weights).matrix;
  for (Eigen::Index k = 0; k < K.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(K, k); it; ++it) A(nf + it.row(), nf + it.col()) += it.value();
  if (stabilized) A += s_ * s_.transpose();
  return A;
}

Vector MultiscaleWorkspace::apply_coupling(const Vector& x, const MaterialLaw& law) const {
  const auto nf = static_cast<Eigen::Index>(gamma2_.num_faces());
  const Eigen::Index n = static_cast<Eigen::Index>(omega2_->num_nodes());
  const Vector phi = x.head(nf);
  NodalScalarField u(x.tail(n));
  const Vector tr = trace(gamma2_, u);
  Vector y(x.size());
  y.head(nf) = bem2_.V * phi + D_ * tr;
  const Vector flux = bem2_.Mb.transpose() * phi;
  Vector bottom = (law.kind() == LawKind::Zero ? stiffness2_ : assemble_weighted_stiffness(*omega2_, u, law)).matrix * u.values;
  for (std::size_t a = 0; a < gamma2_.num_nodes(); ++a) bottom[gamma2_.nodes[a]] -= flux[static_cast<Eigen::Index>(a)];
  y.tail(n) = bottom;
  return y;
}

Vector MultiscaleWorkspace::coupling_rhs(const CouplingData& data) const {
  const auto nf = static_cast<Eigen::Index>(gamma2_.num_faces());
  const Eigen::Index n = static_cast<Eigen::Index>(omega2_->num_nodes());
  NodalScalarField g = data.u1h;
  g.values += data.uapp.values;
  Vector r(coupling_size());
  r.head(nf) = D_ * trace(gamma2_, g);
  r.tail(n) = stiffness2_.matrix * data.u1h.values - divergence_rhs(*omega2_, data.f);
  return r;
}

Vector MultiscaleWorkspace::stabilize(const Vector& r) const {
  const auto nf = static_cast<Eigen::Index>(gamma2_.num_faces());
  return r + r.head(nf).sum() * s_;
}

NodalScalarField solve_uapp(const TetMesh& omega2, const NodalVectorField& f, const SolveOptions& options) {
  if (f.size() != omega2.num_nodes()) throw std::invalid_argument("applied field size differs from Omega2 node count");
  return solve_spd(assemble_stiffness(omega2), -divergence_rhs(omega2, f), ZeroMean{lumped_mass(omega2)}, options);
}

NodalScalarField solve_uapp(const MultiscaleWorkspace& ws, const NodalVectorField& f) {
  if (f.size() != ws.omega2().num_nodes()) throw std::invalid_argument("applied field size differs from Omega2 node count");
  return solve_spd(ws.stiffness2(), -divergence_rhs(ws.omega2(), f), ZeroMean{ws.lumped2()}, ws.options().solve);
}

NodalScalarField transfer_u1_to_omega2(const MultiscaleWorkspace& ws, const NodalScalarField& u11) {
  const Vector samples = ws.k1_at_gamma2() * trace(ws.gamma1(), u11);
  const Vector g = clement_from_face_integrals(ws.gamma2(), face_integrals_from_samples(ws.gamma2(), samples));
  return solve_spd(ws.stiffness2(), Vector::Zero(static_cast<Eigen::Index>(ws.omega2().num_nodes())),
                   boundary_data(ws.gamma2(), g), ws.options().solve);
}

namespace {

CouplingState unpack(const MultiscaleWorkspace& ws, const Vector& x) {
  const auto nf = static_cast<Eigen::Index>(ws.gamma2().num_faces());
  CouplingState st;
  st.phi = FaceDensity(Vector(x.head(nf)));
  st.u = NodalScalarField(Vector(x.tail(x.size() - nf)));
  return st;
}

std::string history_tail(const std::vector<double>& h) {
  std::string s;
  const std::size_t from = h.size() > 5 ? h.size() - 5 : 0;
  for (std::size_t i = from; i < h.size(); ++i) s += fmt::format("{}{:.3e}", s.empty() ? "" : ", ", h[i]);
  return s;
}

}  // namespace

CouplingState solve_coupling(const MultiscaleWorkspace& ws, const CouplingData& data, const MaterialLaw& law) {
  if (!(law.gamma() > 0.25))
    throw std::invalid_argument(fmt::format(
        "coupling requires a strong monotonicity constant gamma > 1/4 for the stabilized operator; law {} has gamma = {}",
        law.describe(), law.gamma()));
  const Vector b = ws.stabilize(ws.coupling_rhs(data));
  const Vector Pb = ws.precondition(b);
  const double scale = Pb.norm();
  if (scale == 0.0) {
    auto st = unpack(ws, Vector::Zero(ws.coupling_size()));
    st.residual_history = {0.0};
    return st;
  }
  auto residual = [&](const Vector& x) {
    return ws.precondition(ws.stabilize(ws.apply_coupling(x, law)) - b).norm() / scale;
  };

  const auto& opt = ws.options();
  Vector x;
  std::vector<double> history;
  std::size_t iterations = 0;

  if (law.is_linear()) {
    if (law.kind() == LawKind::Zero) {
      x = Pb;
    } else {
      const std::vector<double> w(ws.omega2().num_tets(), 1.0 + law.chi(0.0));
      x = ws.coupling_matrix(w, true).partialPivLu().solve(b);
    }
    iterations = 1;
    history.push_back(residual(x));
  } else if (opt.scheme == NonlinearScheme::Zarantonello) {
    const double delta = law.gamma() / (law.lip() * law.lip());
    x = Pb;
    for (;;) {
      const Vector z = ws.precondition(ws.stabilize(ws.apply_coupling(x, law)) - b);
      history.push_back(z.norm() / scale);
      if (history.back() <= opt.tol_nl) break;
      if (iterations == opt.max_iter)
        throw SolverError(fmt::format("Zarantonello iteration reached the cap of {} (residual history tail: {})", opt.max_iter,
                                      history_tail(history)),
                          history.back(), iterations);
      x -= delta * z;
      ++iterations;
    }
  } else {
    x = Pb;
    for (;;) {
      history.push_back(residual(x));
      if (history.back() <= opt.tol_nl) break;
      if (iterations == opt.max_iter)
        throw SolverError(fmt::format("Kacanov iteration reached the cap of {} (residual history tail: {})", opt.max_iter,
                                      history_tail(history)),
                          history.back(), iterations);
      const NodalScalarField u(Vector(x.tail(static_cast<Eigen::Index>(ws.omega2().num_nodes()))));
      x = ws.coupling_matrix(material_weights(ws.omega2(), u, law), true).partialPivLu().solve(b);
      ++iterations;
    }
  }
  if (!x.allFinite()) throw SolverError("coupling solve produced non-finite values", history.back(), iterations);

  auto st = unpack(ws, x);
  st.iterations = iterations;
  st.residual = history.back();
  for (std::size_t i = 1; i < history.size(); ++i)
    if (!(history[i] < history[i - 1])) st.monotone = false;
  st.residual_history = std::move(history);
  return st;
}

namespace {

template <class F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    throw std::runtime_error(fmt::format("multiscale stage '{}' failed: {}", name, e.what()));
  }
}

}  // namespace

NodalVectorField multiscale_field(const MultiscaleWorkspace& ws, const NodalVectorField& m, const NodalVectorField& f2,
                                  const MaterialLaw& law, MultiscaleParts* parts) {
  const TetMesh& o1 = ws.omega1();
  const TetMesh& o2 = ws.omega2();
  if (m.size() != o1.num_nodes())
    throw std::invalid_argument(fmt::format("magnetization has {} nodes, Omega1 has {}", m.size(), o1.num_nodes()));
  if (f2.size() != o2.num_nodes())
    throw std::invalid_argument(fmt::format("applied field has {} nodes, Omega2 has {}", f2.size(), o2.num_nodes()));

  const auto u11 = stage("u11", [&] {
    return solve_spd(ws.stiffness1(), divergence_rhs(o1, m), ZeroMean{ws.lumped1()}, ws.options().solve);
  });
  const auto u1h = stage("transfer to Omega2", [&] { return transfer_u1_to_omega2(ws, u11); });
  const auto uapp = stage("uapp", [&] { return solve_uapp(ws, f2); });
  auto coupling = stage("coupling", [&] { return solve_coupling(ws, CouplingData{u1h, uapp, f2}, law); });
  const auto u2h = stage("transfer to Omega1", [&] {
    NodalScalarField w = coupling.u;
    w.values -= u1h.values + uapp.values;
    const auto& pm = ws.gamma2_at_gamma1();
    const Vector samples = -(pm.single * coupling.phi.values) + pm.dbl * trace(ws.gamma2(), w);
    const Vector g = clement_from_face_integrals(ws.gamma1(), face_integrals_from_samples(ws.gamma1(), samples));
    return solve_spd(ws.stiffness1(), Vector::Zero(static_cast<Eigen::Index>(o1.num_nodes())), boundary_data(ws.gamma1(), g),
                     ws.options().solve);
  });
  auto pi = nodal_gradient(o1, u2h);
  if (parts) *parts = {u11, u1h, uapp, u2h, std::move(coupling)};
  return pi;
}

MultiscaleContribution::MultiscaleContribution(std::shared_ptr<const MultiscaleWorkspace> ws, MaterialLaw law,
                                               AppliedFieldFunction applied)
    : ws_(std::move(ws)), law_(std::move(law)), applied_(std::move(applied)) {
  if (!(law_.gamma() > 0.25))
    throw ConfigError(fmt::format("multiscale law {} has gamma = {}; the stabilized coupling needs gamma > 1/4",
                                  law_.describe(), law_.gamma()));
}

NodalVectorField MultiscaleContribution::evaluate(const NodalVectorField& m, const FieldContext& ctx) {
  const auto f2 = sample_applied_field(applied_, ws_->omega2(), ctx.time);
  MultiscaleParts parts;
  auto pi = multiscale_field(*ws_, m, f2, law_, &parts);
  last_ = std::move(parts.coupling);
  if (!pi.all_finite()) throw std::runtime_error("multiscale contribution produced a non-finite value");
  return pi;
}

}  // namespace multimag
