#include "multimag/fields.hpp"

#include "multimag/quadrature.hpp"

#include <fmt/format.h>

#include <cmath>

namespace multimag {

NondimConstants compute_constants(double A, double K, double Ms, double alpha, double L_char, double T_physical) {
  const std::pair<const char*, double> inputs[] = {{"A", A},         {"K", K},         {"Ms", Ms},
                                                   {"alpha", alpha}, {"L", L_char}, {"T", T_physical}};
  for (const auto& [name, value] : inputs)
    if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError(fmt::format("parameter {} must be positive, got {}", name, value));
  NondimConstants c;
  c.C_exch = 2.0 * A / (kMu0 * Ms * Ms * L_char * L_char);
  c.C_ani = K / (kMu0 * Ms);
  c.alpha = alpha;
  c.T_reduced = kGamma0 * Ms * T_physical;
  return c;
}

NodalVectorField uniaxial_anisotropy(const NodalVectorField& m, const Vec3& easy_axis) {
  if (std::abs(easy_axis.norm() - 1.0) > 1e-12)
    throw std::invalid_argument(fmt::format("easy axis must be a unit vector, |e| = {:.17g}", easy_axis.norm()));
  NodalVectorField out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = -m[i].dot(easy_axis) * easy_axis;
  return out;
}

double cubic_density(const Vec3& x, double K1, double K2) {
  const double a = x[0] * x[0], b = x[1] * x[1], c = x[2] * x[2];
  return K1 * (a * b + b * c) + K2 * a * b * c;
}

NodalVectorField cubic_anisotropy(const NodalVectorField& m, double K1, double K2) {
  if (K1 < 0.0 || K2 < 0.0) throw std::invalid_argument("cubic anisotropy constants must be non-negative");
  NodalVectorField out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vec3& x = m[i];
    const double a = x[0] * x[0], b = x[1] * x[1], c = x[2] * x[2];
    out[i] = Vec3(2.0 * K1 * x[0] * b + 2.0 * K2 * x[0] * b * c,
                  2.0 * K1 * x[1] * (a + c) + 2.0 * K2 * a * x[1] * c,
                  2.0 * K1 * x[2] * b + 2.0 * K2 * a * b * x[2]);
  }
  return out;
}

Vec3 AppliedField::operator()(double t, const Vec3&) const {
  if (kind == Kind::Constant) return value;
  return value + std::sin(omega * t + phase) * amplitude;
}

NodalVectorField sample_applied_field(const AppliedFieldFunction& f, const TetMesh& mesh, double t) {
  NodalVectorField out(mesh.num_nodes());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    try {
      out[i] = f(t, mesh.node(i));
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("applied field evaluation failed at node {}: {}", i, e.what()));
    }
  }
  return out;
}

std::optional<double> FieldContribution::energy(const NodalVectorField& m, const NodalVectorField& pi,
                                                const SparseMatrix& mass) const {
  if (!linear_self_adjoint()) return std::nullopt;
  return 0.5 * mass_inner(mass, pi, m);
}

UniaxialContribution::UniaxialContribution(double scale, const Vec3& easy_axis) : scale_(scale), axis_(easy_axis) {
  if (std::abs(easy_axis.norm() - 1.0) > 1e-12) throw ConfigError("uniaxial easy axis must be a unit vector");
}

NodalVectorField UniaxialContribution::evaluate(const NodalVectorField& m, const FieldContext&) {
  return scale_ * uniaxial_anisotropy(m, axis_);
}

CubicContribution::CubicContribution(const TetMesh& mesh, double scale, double K1, double K2)
    : mesh_(&mesh), scale_(scale), K1_(K1), K2_(K2) {
  if (K1 < 0.0 || K2 < 0.0) throw ConfigError("cubic anisotropy constants must be non-negative");
}

NodalVectorField CubicContribution::evaluate(const NodalVectorField& m, const FieldContext&) {
  return scale_ * cubic_anisotropy(m, K1_, K2_);
}

std::optional<double> CubicContribution::energy(const NodalVectorField& m, const NodalVectorField&,
                                                const SparseMatrix&) const {
  double e = 0.0;
  for (std::size_t t = 0; t < mesh_->num_tets(); ++t) {
    const auto& T = mesh_->tet(t);
    for (const auto& q : quad::tet4()) {
      Vec3 x = Vec3::Zero();
      for (int a = 0; a < 4; ++a) x += q.l[static_cast<std::size_t>(a)] * m[static_cast<std::size_t>(T[static_cast<std::size_t>(a)])];
      e += q.w * mesh_->volume(t) * cubic_density(x, K1_, K2_);
    }
  }
  return scale_ * e;
}

double boundedness_ratio(FieldContribution& c, const NodalVectorField& m, const FieldContext& ctx, const SparseMatrix& mass,
                         const SparseMatrix& stiffness) {
  const auto pi = c.evaluate(m, ctx);
  return std::sqrt(mass_inner(mass, pi, pi)) / (1.0 + std::sqrt(stiffness_inner(stiffness, m, m)));
}

}  // namespace multimag
