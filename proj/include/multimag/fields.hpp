#pragma once

#include "multimag/fem.hpp"
#include "multimag/mesh.hpp"
#include "multimag/types.hpp"

#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>

namespace multimag {

inline constexpr double kMu0 = 4.0 * std::numbers::pi * 1e-7;
inline constexpr double kGamma0 = 2.210173e5;

struct NondimConstants {
  double C_exch = 1.0;
  double C_ani = 0.0;
  double alpha = 1.0;
  double T_reduced = 0.0;  ///< gamma0 * Ms * T
};

/// C_exch = 2A/(mu0 Ms^2 L^2), C_ani = K/(mu0 Ms), T' = gamma0 Ms T.
NondimConstants compute_constants(double A, double K, double Ms, double alpha, double L_char, double T_physical);

/// Nodewise D phi for phi(x) = -(x.e)^2 / 2, i.e. -(m.e) e.
NodalVectorField uniaxial_anisotropy(const NodalVectorField& m, const Vec3& easy_axis);
/// Nodewise gradient of phi(x) = K1 (x1^2 x2^2 + x2^2 x3^2) + K2 x1^2 x2^2 x3^2.
NodalVectorField cubic_anisotropy(const NodalVectorField& m, double K1, double K2);
double cubic_density(const Vec3& x, double K1, double K2);

using AppliedFieldFunction = std::function<Vec3(double t, const Vec3& x)>;

/// Spatially uniform presets: constant, and offset + amplitude * sin(omega t + phase).
struct AppliedField {
  enum class Kind { Constant, Sinusoidal } kind = Kind::Constant;
  Vec3 value = Vec3::Zero();  ///< constant value or sinusoid offset
  Vec3 amplitude = Vec3::Zero();
  double omega = 0.0;
  double phase = 0.0;

  [[nodiscard]] Vec3 operator()(double t, const Vec3& x) const;
  [[nodiscard]] bool time_independent() const { return kind == Kind::Constant || amplitude.isZero(0.0); }
};

/// Nodal interpolant f_h(z) = f(t, z).
NodalVectorField sample_applied_field(const AppliedFieldFunction& f, const TetMesh& mesh, double t);

struct FieldContext {
  double time = 0.0;
  std::size_t step = 0;
  /// Auxiliary datum zeta; the applied field on the macroscopic body for the
  /// multiscale contribution, ignored by local contributions.
  const NodalVectorField* zeta = nullptr;
};

/// A term pi_h(m, zeta) of h_eff = C_exch Lap m - pi + f, already scaled.
class FieldContribution {
 public:
  virtual ~FieldContribution() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  virtual NodalVectorField evaluate(const NodalVectorField& m, const FieldContext& ctx) = 0;
  /// True when pi is linear in m and self-adjoint in the mass inner product.
  [[nodiscard]] virtual bool linear_self_adjoint() const { return false; }
  /// Whether energy() yields a value, and whether it reads its pi argument.
  [[nodiscard]] virtual bool has_energy() const { return linear_self_adjoint(); }
  [[nodiscard]] virtual bool energy_uses_field() const { return linear_self_adjoint(); }
  /// Interaction energy given pi = evaluate(m); nullopt excludes the term.
  [[nodiscard]] virtual std::optional<double> energy(const NodalVectorField& m, const NodalVectorField& pi,
                                                     const SparseMatrix& mass) const;
};

using ContributionList = std::vector<std::shared_ptr<FieldContribution>>;

class UniaxialContribution final : public FieldContribution {
 public:
  UniaxialContribution(double scale, const Vec3& easy_axis);
  [[nodiscard]] std::string name() const override { return "uniaxial"; }
  NodalVectorField evaluate(const NodalVectorField& m, const FieldContext& ctx) override;
  [[nodiscard]] bool linear_self_adjoint() const override { return true; }

 private:
  double scale_;
  Vec3 axis_;
};

class CubicContribution final : public FieldContribution {
 public:
  CubicContribution(const TetMesh& mesh, double scale, double K1, double K2);
  [[nodiscard]] std::string name() const override { return "cubic"; }
  NodalVectorField evaluate(const NodalVectorField& m, const FieldContext& ctx) override;
  [[nodiscard]] bool has_energy() const override { return true; }
  [[nodiscard]] bool energy_uses_field() const override { return false; }
  /// scale * int phi(m_h) by the 4-point tet rule.
  [[nodiscard]] std::optional<double> energy(const NodalVectorField& m, const NodalVectorField& pi,
                                             const SparseMatrix& mass) const override;

 private:
  const TetMesh* mesh_;
  double scale_, K1_, K2_;
};

/// ||pi_h(m)||_L2 / (1 + ||grad m||_L2), the quantity bounded by C_bounded.
double boundedness_ratio(FieldContribution& c, const NodalVectorField& m, const FieldContext& ctx, const SparseMatrix& mass,
                         const SparseMatrix& stiffness);

}  // namespace multimag
