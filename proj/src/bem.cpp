#include "multimag/bem.hpp"

#include "multimag/parallel.hpp"
#include "multimag/quadrature.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace multimag {

namespace detail {

TriangleIntegrals triangle_integrals(const Vec3& x, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& n) {
  TriangleIntegrals out;
  const std::array<const Vec3*, 3> y{&a, &b, &c};
  const double scale = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
  const double h = (x - a).dot(n);
  const Vec3 p = x - h * n;
  const bool in_plane = std::abs(h) <= 1e-12 * scale;

  const double area2 = (b - a).cross(c - a).dot(n);
  std::array<Vec3, 3> grad;
  std::array<double, 3> lam;
  for (int k = 0; k < 3; ++k) {
    const Vec3& yb = *y[static_cast<std::size_t>((k + 1) % 3)];
    const Vec3& yc = *y[static_cast<std::size_t>((k + 2) % 3)];
    grad[static_cast<std::size_t>(k)] = n.cross(yc - yb) / area2;
    lam[static_cast<std::size_t>(k)] = (yb - p).cross(yc - p).dot(n) / area2;
  }
  out.in_plane_inside = in_plane && lam[0] >= -1e-12 && lam[1] >= -1e-12 && lam[2] >= -1e-12;

  std::array<double, 3> edge_int{};
  std::array<Vec3, 3> edge_normal;
  for (int e = 0; e < 3; ++e) {
    const Vec3& y0 = *y[static_cast<std::size_t>(e)];
    const Vec3& y1 = *y[static_cast<std::size_t>((e + 1) % 3)];
    const Vec3 s = (y1 - y0).normalized();
    const Vec3 u = s.cross(n);
    edge_normal[static_cast<std::size_t>(e)] = u;
    const double t = (y0 - p).dot(u);
    const double lm = (y0 - p).dot(s);
    const double lp = (y1 - p).dot(s);
    const double r0 = std::sqrt(t * t + h * h);
    double I = 0.0;
    if (r0 > 1e-14 * scale) I = std::asinh(lp / r0) - std::asinh(lm / r0);
    edge_int[static_cast<std::size_t>(e)] = I;
    out.single += t * I;
  }

  double omega = 0.0;
  if (!in_plane) {
    const Vec3 ra = a - x, rb = b - x, rc = c - x;
    const double la = ra.norm(), lb = rb.norm(), lc = rc.norm();
    const double num = ra.dot(rb.cross(rc));
    const double den = la * lb * lc + ra.dot(rb) * lc + ra.dot(rc) * lb + rb.dot(rc) * la;
    omega = 2.0 * std::atan2(num, den);
  }
  out.single += h * omega;
  out.dl_const = -omega;
  for (int k = 0; k < 3; ++k) {
    double s = 0.0;
    for (int e = 0; e < 3; ++e)
      s += grad[static_cast<std::size_t>(k)].dot(edge_normal[static_cast<std::size_t>(e)]) * edge_int[static_cast<std::size_t>(e)];
    out.dl_linear[static_cast<std::size_t>(k)] = lam[static_cast<std::size_t>(k)] * (-omega) - h * s;
  }
  return out;
}

}  // namespace detail

namespace {

constexpr double kInv4Pi = 0.25 / std::numbers::pi;

struct OuterRule {
  std::vector<Vec3> points;
  std::vector<double> weights;  // absolute, summing to the face area
};

OuterRule subdivided_rule(const Vec3& a, const Vec3& b, const Vec3& c, double area, int levels) {
  std::vector<std::array<Vec3, 3>> tris{{a, b, c}};
  for (int l = 0; l < levels; ++l) {
    std::vector<std::array<Vec3, 3>> next;
    next.reserve(4 * tris.size());
    for (const auto& t : tris) {
      const Vec3 ab = 0.5 * (t[0] + t[1]), bc = 0.5 * (t[1] + t[2]), ca = 0.5 * (t[2] + t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  OuterRule r;
  const double sub_area = area / static_cast<double>(tris.size());
  for (const auto& t : tris)
    for (const auto& q : quad::triangle7()) {
      r.points.push_back(quad::map_point(q, t[0], t[1], t[2]));
      r.weights.push_back(q.w * sub_area);
    }
  return r;
}

void check_point(const detail::TriangleIntegrals& ti, std::size_t point, std::size_t face) {
  if (ti.in_plane_inside)
    throw std::domain_error(fmt::format("evaluation point {} lies on the surface (face {})", point, face));
}

}  // namespace

BemOperatorSet assemble_bem(const SurfaceMesh& surface, const BemOptions& options) {
  const std::size_t nf = surface.num_faces();
  const std::size_t nn = surface.num_nodes();
  for (std::size_t f = 0; f < nf; ++f)
    if (!(surface.areas[f] >= 1e-14)) throw MeshError(fmt::format("degenerate boundary face {} (area {:.3e})", f, surface.areas[f]));

  BemOperatorSet ops;
  ops.surface = &surface;
  ops.V = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(nf));
  ops.K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(nn));
  ops.Mb = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nf), static_cast<Eigen::Index>(nn));

  std::vector<Vec3> centroid(nf);
  std::vector<double> diam(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    centroid[f] = surface.centroid(f);
    diam[f] = surface.diameter(f);
  }

  parallel_for(nf, [&](std::size_t i) {
    const auto vi = surface.vertices(i);
    const OuterRule far = subdivided_rule(vi[0], vi[1], vi[2], surface.areas[i], 0);
    const OuterRule near = subdivided_rule(vi[0], vi[1], vi[2], surface.areas[i], options.near_levels);
    const OuterRule self = subdivided_rule(vi[0], vi[1], vi[2], surface.areas[i], options.self_levels);
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < nf; ++j) {
      const OuterRule* rule = &far;
      if (j == i)
        rule = &self;
      else if ((centroid[i] - centroid[j]).norm() < options.near_factor * std::max(diam[i], diam[j]))
        rule = &near;
      const auto vj = surface.vertices(j);
      const auto& Fj = surface.local_faces[j];
      double v = 0.0;
      std::array<double, 3> k{};
      for (std::size_t q = 0; q < rule->points.size(); ++q) {
        const auto ti = detail::triangle_integrals(rule->points[q], vj[0], vj[1], vj[2], surface.normals[j]);
        v += rule->weights[q] * ti.single;
        for (int a = 0; a < 3; ++a) k[static_cast<std::size_t>(a)] += rule->weights[q] * ti.dl_linear[static_cast<std::size_t>(a)];
      }
      ops.V(row, static_cast<Eigen::Index>(j)) = kInv4Pi * v;
      for (int a = 0; a < 3; ++a) ops.K(row, Fj[static_cast<std::size_t>(a)]) += kInv4Pi * k[static_cast<std::size_t>(a)];
    }
    for (int v : surface.local_faces[i]) ops.Mb(row, v) = surface.areas[i] / 3.0;
  });
  if (options.symmetrize) {
    const Eigen::MatrixXd Vt = ops.V.transpose();
    ops.V = 0.5 * (ops.V + Vt);
  }
  return ops;
}

Vector eval_single_layer(const SurfaceMesh& surface, const FaceDensity& density, const std::vector<Vec3>& points) {
  if (density.size() != surface.num_faces()) throw std::invalid_argument("density size differs from face count");
  Vector out(static_cast<Eigen::Index>(points.size()));
  parallel_for(points.size(), [&](std::size_t p) {
    double s = 0.0;
    for (std::size_t f = 0; f < surface.num_faces(); ++f) {
      const auto v = surface.vertices(f);
      const auto ti = detail::triangle_integrals(points[p], v[0], v[1], v[2], surface.normals[f]);
      check_point(ti, p, f);
      s += density[f] * ti.single;
    }
    out[static_cast<Eigen::Index>(p)] = kInv4Pi * s;
  });
  return out;
}

Vector eval_double_layer(const SurfaceMesh& surface, const Vector& trace, const std::vector<Vec3>& points) {
  if (trace.size() != static_cast<Eigen::Index>(surface.num_nodes()))
    throw std::invalid_argument("trace size differs from boundary node count");
  Vector out(static_cast<Eigen::Index>(points.size()));
  parallel_for(points.size(), [&](std::size_t p) {
    double s = 0.0;
    for (std::size_t f = 0; f < surface.num_faces(); ++f) {
      const auto v = surface.vertices(f);
      const auto& F = surface.local_faces[f];
      const auto ti = detail::triangle_integrals(points[p], v[0], v[1], v[2], surface.normals[f]);
      check_point(ti, p, f);
      for (int a = 0; a < 3; ++a) s += trace[F[static_cast<std::size_t>(a)]] * ti.dl_linear[static_cast<std::size_t>(a)];
    }
    out[static_cast<Eigen::Index>(p)] = kInv4Pi * s;
  });
  return out;
}

PotentialMatrices potential_matrices(const SurfaceMesh& surface, const std::vector<Vec3>& points) {
  PotentialMatrices pm;
  const auto np = static_cast<Eigen::Index>(points.size());
  pm.single = Eigen::MatrixXd::Zero(np, static_cast<Eigen::Index>(surface.num_faces()));
  pm.dbl = Eigen::MatrixXd::Zero(np, static_cast<Eigen::Index>(surface.num_nodes()));
  parallel_for(points.size(), [&](std::size_t p) {
    const auto row = static_cast<Eigen::Index>(p);
    for (std::size_t f = 0; f < surface.num_faces(); ++f) {
      const auto v = surface.vertices(f);
      const auto& F = surface.local_faces[f];
      const auto ti = detail::triangle_integrals(points[p], v[0], v[1], v[2], surface.normals[f]);
      check_point(ti, p, f);
      pm.single(row, static_cast<Eigen::Index>(f)) = kInv4Pi * ti.single;
      for (int a = 0; a < 3; ++a) pm.dbl(row, F[static_cast<std::size_t>(a)]) += kInv4Pi * ti.dl_linear[static_cast<std::size_t>(a)];
    }
  });
  return pm;
}

}  // namespace multimag
