#pragma once

#include "multimag/fem.hpp"
#include "multimag/fields.hpp"
#include "multimag/mesh.hpp"
#include "multimag/types.hpp"

#include <functional>
#include <stdexcept>

namespace multimag {

struct MagnetizationState {
  NodalVectorField m;
  std::size_t step = 0;
  double time = 0.0;
};

/// Per-node orthonormal basis (t1, t2) of the plane orthogonal to m(z).
struct TangentFrame {
  std::vector<Vec3> t1;
  std::vector<Vec3> t2;

  [[nodiscard]] std::size_t size() const { return t1.size(); }
  /// Nodal field from two coefficients per node [a0 b0 a1 b1 ...].
  [[nodiscard]] NodalVectorField expand(const Vector& coeffs) const;
};

/// a = coordinate axis minimizing |m . a| (lowest index on ties),
/// t1 = normalize(a - (a.m) m), t2 = m x t1.
TangentFrame build_tangent_frame(const NodalVectorField& m);

/// Mesh-dependent operators reused by every step.
class LlgOperators {
 public:
  explicit LlgOperators(const TetMesh& mesh);
  [[nodiscard]] const TetMesh& mesh() const { return *mesh_; }
  [[nodiscard]] const SparseMatrix& mass() const { return mass_.matrix; }
  [[nodiscard]] const SparseMatrix& stiffness() const { return stiffness_.matrix; }

 private:
  const TetMesh* mesh_;
  SparseOperator mass_;
  SparseOperator stiffness_;
};

struct StepOptions {
  double tol = 1e-10;        ///< relative residual of the tangent-plane system
  std::size_t max_iter = 0;  ///< 0 selects 4 * unknowns
};

struct StepDiagnostics {
  std::size_t solver_iterations = 0;
  double solver_residual = 0.0;
  double max_tangency = 0.0;      ///< max_z |v(z) . m(z)|
  double max_norm_defect = 0.0;   ///< max_z ||m'(z)| - 1|
  double step_bound_slack = 0.0;  ///< min_z k|v| - |m' - m|
  double defect_bound_slack = 0.0;///< min_z k^2|v|^2/2 - |m' - m - k v|
  double max_speed = 0.0;         ///< max_z |v(z)|
};

struct StepResult {
  NodalVectorField v;
  MagnetizationState next;
  StepDiagnostics diagnostics;
};

/// One linear-implicit tangent-plane step: solve for v in the discrete tangent
/// space at m, then m' = (m + k v) / |m + k v| nodewise. Contributions are
/// evaluated at m in list order with zeta = f.
StepResult llg_step(const LlgOperators& ops, const MagnetizationState& state, const ContributionList& contributions,
                    const NodalVectorField& f, const NondimConstants& constants, double theta, double k,
                    const StepOptions& options = {});

/// (m + k v) / |m + k v| nodewise.
NodalVectorField nodal_update(const NodalVectorField& m, const NodalVectorField& v, double k);

/// The explicit part pi_h(m) summed over the list; throws naming a contribution
/// that returns non-finite values.
NodalVectorField evaluate_contributions(const ContributionList& contributions, const NodalVectorField& m,
                                        const FieldContext& ctx);

struct Trajectory {
  std::vector<MagnetizationState> states;      ///< states[0] is the initial state
  std::vector<NodalVectorField> velocities;    ///< velocities[i] moves states[i] to states[i+1]
  std::vector<StepDiagnostics> diagnostics;
};

struct RunSetup {
  const LlgOperators* ops = nullptr;
  ContributionList contributions;
  AppliedFieldFunction applied;  ///< empty means f = 0
  NondimConstants constants;
  double theta = 1.0;
  double k = 1e-3;
  std::size_t steps = 0;
  StepOptions step;
  bool keep_states = true;  ///< store every state in the trajectory (the last is always kept)
};

/// Called with the initial state (v == nullptr) and after every step with the
/// velocity that produced it.
using StepObserver = std::function<void(const MagnetizationState& state, const NodalVectorField* v, const StepDiagnostics* diag)>;

class RunError : public std::runtime_error {
 public:
  RunError(const std::string& what, std::size_t step, Trajectory partial)
      : std::runtime_error(what), step_(step), partial_(std::move(partial)) {}
  [[nodiscard]] std::size_t step() const { return step_; }
  [[nodiscard]] const Trajectory& partial() const { return partial_; }

 private:
  std::size_t step_;
  Trajectory partial_;
};

/// Normalizes m nodewise; warns when a node deviates from unit length by more
/// than 1e-6 and throws for zero vectors.
NodalVectorField normalize_initial(const NodalVectorField& m);

/// Time loop over setup.steps steps.
Trajectory run(const RunSetup& setup, const NodalVectorField& m0, const StepObserver& observer = {});

NodalVectorField uniform_magnetization(const TetMesh& mesh, const Vec3& direction);
/// Vortex around `axis` through `center`: tangential far from the core,
/// aligned with the axis at the core of radius `core`.
NodalVectorField vortex_magnetization(const TetMesh& mesh, const Vec3& center, const Vec3& axis, double core);

}  // namespace multimag
