#include "multimag/integrator.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>

namespace multimag {

NodalVectorField TangentFrame::expand(const Vector& coeffs) const {
  NodalVectorField v(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto r = static_cast<Eigen::Index>(2 * i);
    v[i] = coeffs[r] * t1[i] + coeffs[r + 1] * t2[i];
  }
  return v;
}

TangentFrame build_tangent_frame(const NodalVectorField& m) {
  TangentFrame fr;
  fr.t1.resize(m.size());
  fr.t2.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vec3& mi = m[i];
    int best = 0;
    for (int c = 1; c < 3; ++c)
      if (std::abs(mi[c]) < std::abs(mi[best])) best = c;
    const Vec3 a = Vec3::Unit(best);
    fr.t1[i] = (a - a.dot(mi) * mi).normalized();
    fr.t2[i] = mi.cross(fr.t1[i]);
  }
  return fr;
}

LlgOperators::LlgOperators(const TetMesh& mesh)
    : mesh_(&mesh), mass_(assemble_mass(mesh)), stiffness_(assemble_stiffness(mesh)) {}

NodalVectorField evaluate_contributions(const ContributionList& contributions, const NodalVectorField& m,
                                        const FieldContext& ctx) {
  NodalVectorField pi(m.size());
  for (const auto& c : contributions) {
    const auto part = c->evaluate(m, ctx);
    if (part.size() != m.size())
      throw std::runtime_error(fmt::format("contribution '{}' returned {} nodes, expected {}", c->name(), part.size(), m.size()));
    if (!part.all_finite()) throw std::runtime_error(fmt::format("contribution '{}' returned a non-finite value", c->name()));
    pi += part;
  }
  return pi;
}

NodalVectorField nodal_update(const NodalVectorField& m, const NodalVectorField& v, double k) {
  NodalVectorField out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vec3 w = m[i] + k * v[i];
    out[i] = w / w.norm();
  }
  return out;
}

namespace {

// int eta_a eta_b eta_c over a tet, divided by the volume
double triple(int a, int b, int c) {
  if (a == b && b == c) return 1.0 / 20.0;
  if (a == b || b == c || a == c) return 1.0 / 60.0;
  return 1.0 / 120.0;
}

}  // namespace

StepResult llg_step(const LlgOperators& ops, const MagnetizationState& state, const ContributionList& contributions,
                    const NodalVectorField& f, const NondimConstants& constants, double theta, double k,
                    const StepOptions& options) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument(fmt::format("theta must lie in [0, 1], got {}", theta));
  if (!(k > 0.0)) throw std::invalid_argument(fmt::format("time step must be positive, got {}", k));
  const TetMesh& mesh = ops.mesh();
  const std::size_t n = mesh.num_nodes();
  const NodalVectorField& m = state.m;
  if (m.size() != n || f.size() != n) throw std::invalid_argument("field sizes differ from the mesh node count");

  FieldContext ctx{state.time, state.step, &f};
  const NodalVectorField pi = evaluate_contributions(contributions, m, ctx);
  const TangentFrame fr = build_tangent_frame(m);
  const double C = constants.C_exch;
  const double alpha = constants.alpha;

  // nodal right-hand side vectors -C K m - M pi + M f
  NodalVectorField load = -C * apply_componentwise(ops.stiffness(), m);
  load += apply_componentwise(ops.mass(), f - pi);
  const auto N = static_cast<Eigen::Index>(2 * n);
  Vector rhs(N);
  for (std::size_t i = 0; i < n; ++i) {
    rhs[static_cast<Eigen::Index>(2 * i)] = load[i].dot(fr.t1[i]);
    rhs[static_cast<Eigen::Index>(2 * i + 1)] = load[i].dot(fr.t2[i]);
  }

  StepResult out;
  Vector x = Vector::Zero(N);
  if (rhs.norm() > 0.0) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.num_tets() * 64);
    const double kt = C * k * theta;
    for (std::size_t t = 0; t < mesh.num_tets(); ++t) {
      const auto& T = mesh.tet(t);
      const double vol = mesh.volume(t);
      std::array<Vec3, 4> g;
      for (int a = 0; a < 4; ++a) g[static_cast<std::size_t>(a)] = mesh.grad_lambda(t, a);
      for (int a = 0; a < 4; ++a) {
        const auto ia = static_cast<std::size_t>(T[static_cast<std::size_t>(a)]);
        const std::array<Vec3, 2> test{fr.t1[ia], fr.t2[ia]};
        for (int b = 0; b < 4; ++b) {
          const auto ib = static_cast<std::size_t>(T[static_cast<std::size_t>(b)]);
          const std::array<Vec3, 2> trial{fr.t1[ib], fr.t2[ib]};
          const double mab = vol * (a == b ? 0.1 : 0.05);
          const double kab = vol * g[static_cast<std::size_t>(a)].dot(g[static_cast<std::size_t>(b)]);
          Vec3 cab = Vec3::Zero();
          for (int c = 0; c < 4; ++c) cab += triple(a, b, c) * m[static_cast<std::size_t>(T[static_cast<std::size_t>(c)])];
          cab *= vol;
          for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) {
              const double dot = test[static_cast<std::size_t>(p)].dot(trial[static_cast<std::size_t>(q)]);
              const double cross = cab.dot(trial[static_cast<std::size_t>(q)].cross(test[static_cast<std::size_t>(p)]));
              trips.emplace_back(static_cast<Eigen::Index>(2 * ia) + p, static_cast<Eigen::Index>(2 * ib) + q,
                                 (alpha * mab + kt * kab) * dot + cross);
            }
        }
      }
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> A(N, N);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::DiagonalPreconditioner<double>> solver;
    solver.setTolerance(options.tol);
    solver.setMaxIterations(options.max_iter ? static_cast<Eigen::Index>(options.max_iter) : 4 * N);
    solver.compute(A);
    x = solver.solve(rhs);
    const double residual = (A * x - rhs).norm() / rhs.norm();
    out.diagnostics.solver_iterations = static_cast<std::size_t>(solver.iterations());
    out.diagnostics.solver_residual = residual;
    if (!x.allFinite() || residual > 10.0 * options.tol)
      throw SolverError(fmt::format("tangent-plane solve did not converge at step {} (relative residual {:.3e} after {} iterations)",
                                    state.step, residual, solver.iterations()),
                        residual, static_cast<std::size_t>(solver.iterations()));
  }

  out.v = fr.expand(x);
  out.next.m = nodal_update(m, out.v, k);
  out.next.step = state.step + 1;
  out.next.time = static_cast<double>(state.step + 1) * k;
  auto& d = out.diagnostics;
  d.step_bound_slack = d.defect_bound_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& v = out.v[i];
    const Vec3& next = out.next.m[i];
    const double speed = v.norm();
    d.max_speed = std::max(d.max_speed, speed);
    d.max_tangency = std::max(d.max_tangency, std::abs(v.dot(m[i])));
    d.max_norm_defect = std::max(d.max_norm_defect, std::abs(next.norm() - 1.0));
    d.step_bound_slack = std::min(d.step_bound_slack, k * speed - (next - m[i]).norm());
    d.defect_bound_slack = std::min(d.defect_bound_slack, 0.5 * k * k * speed * speed - (next - m[i] - k * v).norm());
  }
  constexpr double kRoundoff = -1e-14;
  if (d.step_bound_slack < kRoundoff || d.defect_bound_slack < kRoundoff)
    throw std::logic_error(fmt::format("nodal update bounds violated at step {} (slacks {:.3e}, {:.3e})", state.step,
                                       d.step_bound_slack, d.defect_bound_slack));
  return out;
}

NodalVectorField normalize_initial(const NodalVectorField& m) {
  NodalVectorField out(m.size());
  double worst = 0.0;
  std::size_t worst_node = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double len = m[i].norm();
    if (!(len > 0.0) || !std::isfinite(len)) throw ConfigError(fmt::format("initial magnetization vanishes at node {}", i));
    if (std::abs(len - 1.0) > worst) {
      worst = std::abs(len - 1.0);
      worst_node = i;
    }
    out[i] = m[i] / len;
  }
  if (worst > 1e-6)
    spdlog::warn("initial magnetization renormalized; largest deviation |m| - 1 = {:.3e} at node {}", worst, worst_node);
  return out;
}

Trajectory run(const RunSetup& setup, const NodalVectorField& m0, const StepObserver& observer) {
  if (!setup.ops) throw std::invalid_argument("run setup has no operators");
  if (setup.theta <= 0.5)
    spdlog::warn("theta = {} <= 1/2: convergence then needs k/h -> 0; the scheme is not unconditionally stable", setup.theta);
  const TetMesh& mesh = setup.ops->mesh();
  Trajectory traj;
  MagnetizationState state{normalize_initial(m0), 0, 0.0};
  traj.states.push_back(state);
  if (observer) observer(state, nullptr, nullptr);
  const AppliedFieldFunction zero = [](double, const Vec3&) { return Vec3::Zero(); };
  const AppliedFieldFunction& applied = setup.applied ? setup.applied : zero;
  for (std::size_t i = 0; i < setup.steps; ++i) {
    StepResult r;
    try {
      const auto f = sample_applied_field(applied, mesh, state.time);
      r = llg_step(*setup.ops, state, setup.contributions, f, setup.constants, setup.theta, setup.k, setup.step);
    } catch (const std::exception& e) {
      if (!setup.keep_states && traj.states.back().step != state.step) traj.states.push_back(state);
      throw RunError(fmt::format("step {} failed: {}", i, e.what()), i, std::move(traj));
    }
    state = std::move(r.next);
    if (setup.keep_states) traj.states.push_back(state);
    traj.velocities.push_back(std::move(r.v));
    traj.diagnostics.push_back(r.diagnostics);
    if (observer) observer(state, &traj.velocities.back(), &traj.diagnostics.back());
  }
  if (!setup.keep_states && traj.states.back().step != state.step) traj.states.push_back(state);
  return traj;
}

NodalVectorField uniform_magnetization(const TetMesh& mesh, const Vec3& direction) {
  if (!(direction.norm() > 0.0)) throw ConfigError("uniform magnetization direction is zero");
  return NodalVectorField(mesh.num_nodes(), direction.normalized());
}

NodalVectorField vortex_magnetization(const TetMesh& mesh, const Vec3& center, const Vec3& axis, double core) {
  if (!(axis.norm() > 0.0) || !(core > 0.0)) throw ConfigError("vortex needs a nonzero axis and a positive core radius");
  const Vec3 e = axis.normalized();
  NodalVectorField m(mesh.num_nodes());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const Vec3 r = mesh.node(i) - center;
    const Vec3 p = r - r.dot(e) * e;
    const double rho = p.norm();
    const double den = rho * rho + core * core;
    const Vec3 phi = rho > 0.0 ? Vec3(e.cross(p) / rho) : Vec3::Zero();
    m[i] = (2.0 * rho * core / den) * phi + ((core * core - rho * rho) / den) * e;
  }
  return m;
}

}  // namespace multimag
