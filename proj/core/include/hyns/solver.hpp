// Global assembly of the discrete problem, Crank-Nicolson time stepping,
// Newton iteration, and the structural runtime diagnostics.
//
// The unknown vector is laid out by DofMap: element velocity blocks,
// interior-face velocity blocks, element pressure, face pressure, one scalar
// zero-mean multiplier. The multiplier column enters the mass-balance rows
// and its row pins the mean of the element pressure, which keeps the saddle
// point nonsingular without pinning a pressure DOF.
//
// The Jacobian is exact in the velocity unknowns with the stabilization
// weights beta_T recomputed from the latest iterate at the start of every
// Newton iteration and then frozen (a Picard treatment of beta inside
// Newton). The sparsity pattern is built once; subsequent assemblies write
// through a cached scatter table and only the numerical factorization is
// redone.

#ifndef HYNS_SOLVER_HPP
#define HYNS_SOLVER_HPP

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Sparse>

#include "hyns/local_ops.hpp"

namespace hyns {

using TimeVectorField = std::function<Vec2(double, const Vec2&)>;

/// Evaluation of the nonlinear terms inside the Crank-Nicolson step:
/// trapezoidal averages ½[t+j](u^{n+1}) + ½[t+j](u^n), or the implicit
/// midpoint value [t+j]((u^{n+1}+u^n)/2). The linear terms coincide for the
/// two choices; the midpoint form conserves discrete energy exactly when the
/// forcing vanishes.
enum class ConvectionScheme { Midpoint, Trapezoid };

struct SchemeConfig {
  int k = 1;
  double nu = 1.0;
  double t_final = 1.0;
  double c_s = 1e-4;
  StabilizationVariant stabilization = StabilizationVariant::Hho;
  ConvectionScheme convection = ConvectionScheme::Midpoint;
  int n_steps_override = -1;  // -1: automatic rule max{10, ceil(1/h^{(k+1)/2})}
  double newton_tol = 1e-8;
  int newton_max_iter = 25;
  bool enable_convection = true;  // off: Stokes limit
  bool enable_viscosity = true;   // off: pure transport (energy diagnostics)
};

/// N_tF = max{10, ceil(1/h^{(k+1)/2})}.
int automatic_step_count(int k, double h);

struct TransientState {
  double t = 0.0;
  HybridVelocity u;
  HybridPressure p;
  std::vector<double> beta;  // per-element snapshot used at this state
  int newton_iters = 0;
  double newton_residual = 0.0;
};

struct DivergenceReport {
  double max_element_div = 0.0;   // max_T L²(T) norm of div u_T
  double max_interior_jump = 0.0; // max_F L²(F) norm of the normal jump
  double max_boundary_trace = 0.0;
  double scale = 0.0;             // ||u||_{0,h}

  double worst_relative() const {
    const double s = scale > 1e-30 ? scale : 1.0;
    return std::max({max_element_div, max_interior_jump, max_boundary_trace}) / s;
  }
  bool pass(double tol = 1e-10) const { return worst_relative() <= tol; }
};

struct StepDiagnostics {
  double t = 0.0;
  int newton_iters = 0;
  double newton_residual = 0.0;
  double energy = 0.0;  // ||u||²_{0,h}
  DivergenceReport divergence;
  double max_re = 0.0;
  double chi = 0.0;
};

struct RunResult {
  TransientState final_state;
  std::vector<StepDiagnostics> log;  // entry 0 is the initial state
  int n_steps = 0;
  double dt = 0.0;
};

/// Frozen per-step data shared across Newton iterations, exposed so tests
/// can evaluate the residual and Jacobian at arbitrary states with a fixed
/// beta snapshot.
struct StepData {
  double dt = 0.0;
  Eigen::VectorXd u_prev;        // previous velocity in solvable layout
  Eigen::VectorXd forcing;       // ½(F^n + F^{n+1}) momentum load
  Eigen::VectorXd conv_prev;     // trapezoid: [t+j](u^n) momentum vector
  std::vector<double> beta;      // frozen snapshot for the current iteration
  std::vector<double> beta_prev; // snapshot attached to u^n
};

class NavierStokesSolver {
 public:
  NavierStokesSolver(const Spaces& spaces, const std::vector<LocalKit>& kits, SchemeConfig config);

  const SchemeConfig& config() const { return config_; }
  const Spaces& spaces() const { return *spaces_; }

  TransientState initial_state(const VectorField& u0) const;

  /// One Crank-Nicolson step of size dt. Throws std::runtime_error when the
  /// Newton iteration exceeds the allowed count, with the residual history
  /// in the message.
  TransientState step(const TransientState& prev, double dt, const TimeVectorField& f) const;

  using StepObserver = std::function<void(const TransientState&, const StepDiagnostics&, int, int)>;

  RunResult run_transient(const VectorField& u0, const TimeVectorField& f,
                          const StepObserver& observer = {}) const;

  DivergenceReport check_divergence_free(const HybridVelocity& u) const;

  StepDiagnostics diagnostics(const TransientState& state) const;

  //--- verification surface -------------------------------------------------

  StepData make_step_data(const TransientState& prev, double dt, const TimeVectorField& f) const;

  /// Beta snapshot the scheme would use at iterate X (midpoint: from the
  /// midpoint velocity; trapezoid: from X itself).
  std::vector<double> beta_snapshot(const StepData& sd, const Eigen::VectorXd& X) const;

  Eigen::VectorXd assemble_residual(const StepData& sd, const Eigen::VectorXd& X) const;
  const Eigen::SparseMatrix<double>& assemble_system(const StepData& sd, const Eigen::VectorXd& X,
                                                     Eigen::VectorXd& residual) const;

  /// Velocity part of the solvable vector as a hybrid field (boundary faces
  /// zero), and the converse gather.
  HybridVelocity extract_velocity(const Eigen::VectorXd& X) const;
  HybridPressure extract_pressure(const Eigen::VectorXd& X) const;
  Eigen::VectorXd pack(const HybridVelocity& u, const HybridPressure& p) const;

 private:
  const Spaces* spaces_;
  const std::vector<LocalKit>* kits_;
  SchemeConfig config_;

  std::vector<std::vector<int>> gidx_u_;  // per element: local velocity -> global (-1 boundary)
  std::vector<std::vector<int>> gidx_p_;  // per element: local pressure -> global
  QuadRule forcing_quad_ref_;             // unused placeholder (per-element rules built lazily)

  // forcing integration caches: over-integration nodes and RTN values there
  std::vector<QuadRule> oquad_;
  std::vector<std::vector<Eigen::Matrix2Xd>> orval_;

  mutable Eigen::SparseMatrix<double> J_;
  std::vector<std::vector<int>> scatter_uu_;  // per element, n_u*n_u entry slots (-1 outside)
  std::vector<std::vector<int>> scatter_up_;  // element velocity rows x pressure cols
  std::vector<std::vector<int>> scatter_pu_;  // pressure rows x element velocity cols
  std::vector<int> scatter_pmu_, scatter_mup_;
  mutable std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>> lu_;
  mutable bool analyzed_ = false;

  void build_pattern();
  Eigen::VectorXd momentum_forcing(double t, const TimeVectorField& f) const;
  Eigen::VectorXd convective_momentum(const Eigen::VectorXd& X, const std::vector<double>& beta) const;
  std::vector<double> beta_of_vector(const Eigen::VectorXd& X) const;
};

}  // namespace hyns

#endif
