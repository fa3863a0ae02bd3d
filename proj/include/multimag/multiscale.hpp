#pragma once

#include "multimag/bem.hpp"
#include "multimag/fem.hpp"
#include "multimag/fields.hpp"
#include "multimag/material.hpp"
#include "multimag/mesh.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <optional>
#include <string_view>

namespace multimag {

enum class NonlinearScheme { Zarantonello, Kacanov };

NonlinearScheme parse_scheme(std::string_view name);

struct MultiscaleOptions {
  NonlinearScheme scheme = NonlinearScheme::Zarantonello;
  double tol_nl = 1e-8;
  std::size_t max_iter = 200;
  BemOptions bem;
  SolveOptions solve;
};

/// Coupling solution: phi = exterior normal derivative of u2 on Gamma2 and the
/// total potential u on Omega2.
struct CouplingState {
  FaceDensity phi;
  NodalScalarField u;
  double residual = 0.0;
  std::size_t iterations = 0;
  std::vector<double> residual_history;
  bool monotone = true;  ///< every recorded residual below its predecessor
};

/// Data of the coupling right-hand side.
struct CouplingData {
  NodalScalarField u1h;   ///< potential of the microscopic body on Omega2
  NodalScalarField uapp;  ///< auxiliary potential of f on Omega2
  NodalVectorField f;     ///< applied field on Omega2
};

/// Geometry and law-independent operators for the macroscopic contribution:
/// Omega1 (microscopic body) and Omega2 (macroscopic body) with their
/// boundaries, FEM operators, BEM matrices on Gamma2, the cross-body potential
/// matrices and the factored chi~ = 0 stabilized coupling matrix.
class MultiscaleWorkspace {
 public:
  MultiscaleWorkspace(const TetMesh& omega1, const TetMesh& omega2, MultiscaleOptions options = {});

  [[nodiscard]] const TetMesh& omega1() const { return *omega1_; }
  [[nodiscard]] const TetMesh& omega2() const { return *omega2_; }
  [[nodiscard]] const SurfaceMesh& gamma1() const { return gamma1_; }
  [[nodiscard]] const SurfaceMesh& gamma2() const { return gamma2_; }
  [[nodiscard]] const BemOperatorSet& bem2() const { return bem2_; }
  [[nodiscard]] const MultiscaleOptions& options() const { return options_; }
  [[nodiscard]] const SparseOperator& stiffness1() const { return stiffness1_; }
  [[nodiscard]] const SparseOperator& stiffness2() const { return stiffness2_; }
  [[nodiscard]] const SparseOperator& mass1() const { return mass1_; }
  [[nodiscard]] const Vector& lumped1() const { return lumped1_; }
  [[nodiscard]] const Vector& lumped2() const { return lumped2_; }

  /// Unknown count of the coupling system: faces of Gamma2 plus nodes of Omega2.
  [[nodiscard]] Eigen::Index coupling_size() const;
  /// Stabilization vector s: the Gamma2 row of the coupling operator tested with 1.
  [[nodiscard]] const Vector& stabilization() const { return s_; }
  /// Dense coupling matrix with per-element material weights (1 + chi~);
  /// stabilized adds s s^T.
  [[nodiscard]] Eigen::MatrixXd coupling_matrix(std::span<const double> weights, bool stabilized) const;
  /// Unstabilized coupling operator applied to x with the chi~ of the law frozen at x.
  [[nodiscard]] Vector apply_coupling(const Vector& x, const MaterialLaw& law) const;
  /// Unstabilized right-hand side r.
  [[nodiscard]] Vector coupling_rhs(const CouplingData& data) const;
  [[nodiscard]] Vector stabilize(const Vector& r) const;
  [[nodiscard]] Vector precondition(const Vector& r) const { return P_.solve(r); }

  /// Double layer of Gamma1 at the Gamma2 quadrature points (7 per face).
  [[nodiscard]] const Eigen::MatrixXd& k1_at_gamma2() const { return k1_at_gamma2_; }
  /// Single and double layer of Gamma2 at the Gamma1 quadrature points.
  [[nodiscard]] const PotentialMatrices& gamma2_at_gamma1() const { return gamma2_at_gamma1_; }

 private:
  const TetMesh* omega1_;
  const TetMesh* omega2_;
  MultiscaleOptions options_;
  SurfaceMesh gamma1_, gamma2_;
  SparseOperator stiffness1_, stiffness2_, mass1_;
  Vector lumped1_, lumped2_;
  BemOperatorSet bem2_;
  Eigen::MatrixXd D_;  // (Mb/2 - K) on Gamma2
  Vector s_;
  Eigen::PartialPivLU<Eigen::MatrixXd> P_;
  Eigen::MatrixXd k1_at_gamma2_;
  PotentialMatrices gamma2_at_gamma1_;
};

/// Throws MeshError if the two bodies overlap or touch.
void check_separated(const TetMesh& omega1, const SurfaceMesh& gamma1, const TetMesh& omega2, const SurfaceMesh& gamma2);

/// Zero-mean solution of <grad u, grad v> = -<f, grad v> on Omega2.
NodalScalarField solve_uapp(const TetMesh& omega2, const NodalVectorField& f, const SolveOptions& options = {});
NodalScalarField solve_uapp(const MultiscaleWorkspace& ws, const NodalVectorField& f);

/// u1h on Omega2: Clement interpolant of the Gamma1 double layer of trace(u11)
/// as Dirichlet data, extended harmonically.
NodalScalarField transfer_u1_to_omega2(const MultiscaleWorkspace& ws, const NodalScalarField& u11);

/// Stabilized Johnson-Nedelec solve. Throws std::invalid_argument when
/// law.gamma() <= 1/4 and SolverError when the iteration cap is reached.
CouplingState solve_coupling(const MultiscaleWorkspace& ws, const CouplingData& data, const MaterialLaw& law);

/// Potentials of the last pipeline run.
struct MultiscaleParts {
  NodalScalarField u11, u1h, uapp, u2h;
  CouplingState coupling;
};

/// pi_h(m, f) = grad u2h on Omega1; f2 is the applied field sampled on Omega2.
NodalVectorField multiscale_field(const MultiscaleWorkspace& ws, const NodalVectorField& m, const NodalVectorField& f2,
                                  const MaterialLaw& law, MultiscaleParts* parts = nullptr);

class MultiscaleContribution final : public FieldContribution {
 public:
  MultiscaleContribution(std::shared_ptr<const MultiscaleWorkspace> ws, MaterialLaw law, AppliedFieldFunction applied);
  [[nodiscard]] std::string name() const override { return "multiscale"; }
  NodalVectorField evaluate(const NodalVectorField& m, const FieldContext& ctx) override;
  [[nodiscard]] const CouplingState& last_coupling() const { return last_; }

 private:
  std::shared_ptr<const MultiscaleWorkspace> ws_;
  MaterialLaw law_;
  AppliedFieldFunction applied_;
  CouplingState last_;
};

}  // namespace multimag
