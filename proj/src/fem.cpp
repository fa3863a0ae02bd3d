#include "multimag/fem.hpp"

#include "multimag/quadrature.hpp"

#include <fmt/format.h>

#include <cmath>

namespace multimag {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseMatrix from_triplets(std::size_t n, const std::vector<Triplet>& trips) {
  SparseMatrix A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

// Preconditioned CG. `project` maps a vector onto the admissible subspace.
std::size_t pcg(const SparseMatrix& A, const Vector& b, Vector& x, const Vector& inv_diag, double tol,
                std::size_t max_iter, const std::function<void(Vector&)>& project, double& rel_res) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    rel_res = 0.0;
    return 0;
  }
  std::size_t it = 0;
  // Restart from the true residual until it meets the tolerance; guards
  // against drift of the recursive residual.
  while (true) {
    Vector r = b - A * x;
    project(r);
    rel_res = r.norm() / bnorm;
    if (rel_res <= tol || it >= max_iter) return it;
    Vector z = inv_diag.cwiseProduct(r);
    project(z);
    Vector p = z;
    double rz = r.dot(z);
    while (it < max_iter) {
      ++it;
      const Vector Ap = A * p;
      const double pAp = p.dot(Ap);
      if (!(pAp > 0.0)) {
        Vector rt = b - A * x;
        project(rt);
        rel_res = rt.norm() / bnorm;
        return it;
      }
      const double alpha = rz / pAp;
      x += alpha * p;
      r -= alpha * Ap;
      project(r);
      if (r.norm() <= 0.5 * tol * bnorm) break;
      z = inv_diag.cwiseProduct(r);
      project(z);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    if (it >= max_iter) {
      Vector rt = b - A * x;
      project(rt);
      rel_res = rt.norm() / bnorm;
      return it;
    }
  }
}

Vector inverse_diagonal(const SparseMatrix& A) {
  Vector d = A.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = d[i] > 0.0 ? 1.0 / d[i] : 1.0;
  return d;
}

}  // namespace

SparseOperator assemble_stiffness(const TetMesh& mesh, std::span<const double> coeff) {
  if (!coeff.empty() && coeff.size() != mesh.num_tets())
    throw std::invalid_argument(fmt::format("stiffness coefficient count {} != tet count {}", coeff.size(), mesh.num_tets()));
  std::vector<Triplet> trips;
  trips.reserve(16 * mesh.num_tets());
  for (std::size_t t = 0; t < mesh.num_tets(); ++t) {
    const double c = coeff.empty() ? 1.0 : coeff[t];
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument(fmt::format("stiffness coefficient on tet {} is {}", t, c));
    const auto& T = mesh.tet(t);
    const double w = c * mesh.volume(t);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        trips.emplace_back(T[static_cast<std::size_t>(a)], T[static_cast<std::size_t>(b)],
                           w * mesh.grad_lambda(t, a).dot(mesh.grad_lambda(t, b)));
  }
  return {from_triplets(mesh.num_nodes(), trips), true};
}

SparseOperator assemble_mass(const TetMesh& mesh) {
  std::vector<Triplet> trips;
  trips.reserve(16 * mesh.num_tets());
  for (std::size_t t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tet(t);
    const double v = mesh.volume(t) / 20.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        trips.emplace_back(T[static_cast<std::size_t>(a)], T[static_cast<std::size_t>(b)], a == b ? 2.0 * v : v);
  }
  return {from_triplets(mesh.num_nodes(), trips), true};
}

std::vector<double> material_weights(const TetMesh& mesh, const NodalScalarField& u, const MaterialLaw& law) {
  const auto grads = element_gradients(mesh, u);
  std::vector<double> w(grads.size());
  for (std::size_t t = 0; t < grads.size(); ++t) w[t] = 1.0 + law.chi(grads[t].norm());
  return w;
}

SparseOperator assemble_weighted_stiffness(const TetMesh& mesh, const NodalScalarField& u, const MaterialLaw& law) {
  const auto w = material_weights(mesh, u, law);
  return assemble_stiffness(mesh, w);
}

Vector lumped_mass(const TetMesh& mesh) {
  Vector m = Vector::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
  for (std::size_t t = 0; t < mesh.num_tets(); ++t)
    for (int v : mesh.tet(t)) m[v] += mesh.volume(t) / 4.0;
  return m;
}

NodalScalarField solve_spd(const SparseOperator& op, const Vector& rhs, const Constraint& constraint,
                           const SolveOptions& options, SolveReport* report) {
  const SparseMatrix& A = op.matrix;
  const Eigen::Index n = A.rows();
  if (rhs.size() != n) throw std::invalid_argument(fmt::format("rhs size {} != operator size {}", rhs.size(), n));
  SolveReport rep;
  Vector x = Vector::Zero(n);

  auto cap = [&](std::size_t unknowns) {
    return options.max_iter != 0 ? options.max_iter : 10 * std::max<std::size_t>(unknowns, 1);
  };

  if (std::holds_alternative<Dirichlet>(constraint)) {
    const auto& dc = std::get<Dirichlet>(constraint);
    if (static_cast<Eigen::Index>(dc.nodes.size()) != dc.values.size())
      throw std::invalid_argument("Dirichlet node and value counts differ");
    std::vector<int> map(static_cast<std::size_t>(n), 0);
    Vector g = Vector::Zero(n);
    for (std::size_t k = 0; k < dc.nodes.size(); ++k) {
      const int z = dc.nodes[k];
      if (z < 0 || z >= n) throw std::invalid_argument(fmt::format("Dirichlet node {} out of range", z));
      map[static_cast<std::size_t>(z)] = -1;
      g[z] = dc.values[static_cast<Eigen::Index>(k)];
    }
    int nf = 0;
    for (auto& v : map) v = (v == -1) ? -1 : nf++;
    x = g;
    if (nf > 0) {
      const Vector bfull = rhs - A * g;
      Vector bf(nf);
      std::vector<Triplet> trips;
      for (Eigen::Index k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator itA(A, k); itA; ++itA) {
          const int i = map[static_cast<std::size_t>(itA.row())];
          const int j = map[static_cast<std::size_t>(itA.col())];
          if (i >= 0 && j >= 0) trips.emplace_back(i, j, itA.value());
        }
      for (Eigen::Index z = 0; z < n; ++z)
        if (const int i = map[static_cast<std::size_t>(z)]; i >= 0) bf[i] = bfull[z];
      const SparseMatrix Aff = from_triplets(static_cast<std::size_t>(nf), trips);
      Vector xf = Vector::Zero(nf);
      rep.iterations = pcg(Aff, bf, xf, inverse_diagonal(Aff), options.tol, cap(static_cast<std::size_t>(nf)),
                           [](Vector&) {}, rep.residual);
      for (Eigen::Index z = 0; z < n; ++z)
        if (const int i = map[static_cast<std::size_t>(z)]; i >= 0) x[z] = xf[i];
    }
  } else if (std::holds_alternative<ZeroMean>(constraint)) {
    const auto& zm = std::get<ZeroMean>(constraint);
    auto project = [](Vector& v) { v.array() -= v.mean(); };
    Vector b = rhs;
    project(b);
    rep.iterations = pcg(A, b, x, inverse_diagonal(A), options.tol, cap(static_cast<std::size_t>(n)), project, rep.residual);
    if (zm.weights.size() == 0) {
      x.array() -= x.mean();
    } else {
      if (zm.weights.size() != n) throw std::invalid_argument("zero-mean weight count differs from operator size");
      x.array() -= zm.weights.dot(x) / zm.weights.sum();
    }
  } else {
    rep.iterations = pcg(A, rhs, x, inverse_diagonal(A), options.tol, cap(static_cast<std::size_t>(n)), [](Vector&) {},
                         rep.residual);
  }

  if (report) *report = rep;
  if (!(rep.residual <= options.tol))
    throw SolverError(fmt::format("CG did not converge: relative residual {:.3e} after {} iterations", rep.residual,
                                  rep.iterations),
                      rep.residual, rep.iterations);
  return NodalScalarField(std::move(x));
}

std::vector<Vec3> face_quadrature_points(const SurfaceMesh& surface) {
  const auto& rule = quad::triangle7();
  std::vector<Vec3> pts;
  pts.reserve(rule.size() * surface.num_faces());
  for (std::size_t f = 0; f < surface.num_faces(); ++f) {
    const auto v = surface.vertices(f);
    for (const auto& q : rule) pts.push_back(quad::map_point(q, v[0], v[1], v[2]));
  }
  return pts;
}

Vector face_integrals_from_samples(const SurfaceMesh& surface, const Vector& samples) {
  const auto& rule = quad::triangle7();
  if (samples.size() != static_cast<Eigen::Index>(rule.size() * surface.num_faces()))
    throw std::invalid_argument("sample count does not match face quadrature points");
  Vector out(static_cast<Eigen::Index>(surface.num_faces()));
  for (std::size_t f = 0; f < surface.num_faces(); ++f) {
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) s += rule[q].w * samples[static_cast<Eigen::Index>(rule.size() * f + q)];
    out[static_cast<Eigen::Index>(f)] = surface.areas[f] * s;
  }
  return out;
}

Vector clement_from_face_integrals(const SurfaceMesh& surface, const Vector& integrals) {
  Vector num = Vector::Zero(static_cast<Eigen::Index>(surface.num_nodes()));
  Vector den = Vector::Zero(num.size());
  for (std::size_t f = 0; f < surface.num_faces(); ++f)
    for (int v : surface.local_faces[f]) {
      num[v] += integrals[static_cast<Eigen::Index>(f)];
      den[v] += surface.areas[f];
    }
  return num.cwiseQuotient(den);
}

namespace {
Vector sample(const SurfaceMesh& surface, const std::function<double(const Vec3&)>& g) {
  const auto pts = face_quadrature_points(surface);
  const std::size_t per_face = quad::triangle7().size();
  Vector s(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    try {
      s[static_cast<Eigen::Index>(i)] = g(pts[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("evaluation failed on face {}: {}", i / per_face, e.what()));
    }
  }
  return s;
}
}  // namespace

Vector clement_boundary_interpolation(const SurfaceMesh& surface, const std::function<double(const Vec3&)>& g) {
  return clement_from_face_integrals(surface, face_integrals_from_samples(surface, sample(surface, g)));
}

FaceDensity l2_projection_faces(const SurfaceMesh& surface, const std::function<double(const Vec3&)>& g) {
  Vector v = face_integrals_from_samples(surface, sample(surface, g));
  for (std::size_t f = 0; f < surface.num_faces(); ++f) v[static_cast<Eigen::Index>(f)] /= surface.areas[f];
  return FaceDensity(std::move(v));
}

std::vector<Vec3> element_gradients(const TetMesh& mesh, const NodalScalarField& u) {
  if (u.size() != mesh.num_nodes()) throw std::invalid_argument("field size differs from mesh node count");
  std::vector<Vec3> g(mesh.num_tets());
  for (std::size_t t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tet(t);
    Vec3 s = Vec3::Zero();
    for (int a = 0; a < 4; ++a) s += u[static_cast<std::size_t>(T[static_cast<std::size_t>(a)])] * mesh.grad_lambda(t, a);
    g[t] = s;
  }
  return g;
}

FaceDensity normal_derivative(const TetMesh& mesh, const NodalScalarField& u, const SurfaceMesh& surface) {
  const auto g = element_gradients(mesh, u);
  FaceDensity out(surface.num_faces());
  for (std::size_t f = 0; f < surface.num_faces(); ++f)
    out[f] = g[static_cast<std::size_t>(surface.parent_tet[f])].dot(surface.normals[f]);
  return out;
}

NodalVectorField nodal_lift(const TetMesh& mesh, const std::vector<Vec3>& element_values) {
  NodalVectorField out(mesh.num_nodes());
  std::vector<double> w(mesh.num_nodes(), 0.0);
  for (std::size_t t = 0; t < mesh.num_tets(); ++t)
    for (int v : mesh.tet(t)) {
      out[static_cast<std::size_t>(v)] += mesh.volume(t) * element_values[t];
      w[static_cast<std::size_t>(v)] += mesh.volume(t);
    }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= w[i];
  return out;
}

NodalVectorField nodal_gradient(const TetMesh& mesh, const NodalScalarField& u) {
  return nodal_lift(mesh, element_gradients(mesh, u));
}

Vector divergence_rhs(const TetMesh& mesh, const NodalVectorField& m) {
  if (m.size() != mesh.num_nodes()) throw std::invalid_argument("field size differs from mesh node count");
  Vector b = Vector::Zero(static_cast<Eigen::Index>(mesh.num_nodes()));
  for (std::size_t t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tet(t);
    Vec3 mean = Vec3::Zero();
    for (int v : T) mean += m[static_cast<std::size_t>(v)];
    mean *= mesh.volume(t) / 4.0;
    for (int a = 0; a < 4; ++a) b[T[static_cast<std::size_t>(a)]] += mean.dot(mesh.grad_lambda(t, a));
  }
  return b;
}

FaceDensity normal_trace_projection(const SurfaceMesh& surface, const NodalVectorField& m) {
  FaceDensity out(surface.num_faces());
  for (std::size_t f = 0; f < surface.num_faces(); ++f) {
    Vec3 mean = Vec3::Zero();
    for (int v : surface.faces[f]) mean += m[static_cast<std::size_t>(v)];
    out[f] = mean.dot(surface.normals[f]) / 3.0;
  }
  return out;
}

NodalVectorField apply_componentwise(const SparseMatrix& A, const NodalVectorField& m) {
  const Eigen::Index n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixX3d X(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = m[static_cast<std::size_t>(i)].transpose();
  const Eigen::MatrixX3d Y = A * X;
  NodalVectorField out(m.size());
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = Y.row(i).transpose();
  return out;
}

double mass_inner(const SparseMatrix& M, const NodalVectorField& a, const NodalVectorField& b) {
  const auto Mb = apply_componentwise(M, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(Mb[i]);
  return s;
}

double stiffness_inner(const SparseMatrix& K, const NodalVectorField& a, const NodalVectorField& b) {
  return mass_inner(K, a, b);
}

Dirichlet boundary_data(const SurfaceMesh& surface, const Vector& local_values) {
  if (local_values.size() != static_cast<Eigen::Index>(surface.num_nodes()))
    throw std::invalid_argument("boundary value count differs from boundary node count");
  return Dirichlet{surface.nodes, local_values};
}

Vector trace(const SurfaceMesh& surface, const NodalScalarField& u) {
  Vector out(static_cast<Eigen::Index>(surface.num_nodes()));
  for (std::size_t i = 0; i < surface.num_nodes(); ++i) out[static_cast<Eigen::Index>(i)] = u[static_cast<std::size_t>(surface.nodes[i])];
  return out;
}

}  // namespace multimag
