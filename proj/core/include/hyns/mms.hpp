// Manufactured solution for convergence studies: a time-modulated vortex
// with closed-form derivatives, the forcing that makes it solve the
// momentum balance, time-discrete error norms, and the refinement-study
// harness with CSV emission.

#ifndef HYNS_MMS_HPP
#define HYNS_MMS_HPP

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hyns/solver.hpp"

namespace hyns {

/// u(t,x,y) = (3+2cos(4t))/5 * (16 y(1-y)(1-2y) sin²(pi x),
///                              -8 pi y²(1-y)² sin(2 pi x)),
/// p(t,x,y) = (3+2cos(4t))/5 * sin(pi x) cos(pi y).
/// Divergence-free, zero velocity trace and zero pressure mean on the unit
/// square at every time.
struct MmsSolution {
  double nu = 1.0;

  Vec2 velocity(double t, const Vec2& x) const;
  Mat2 velocity_gradient(double t, const Vec2& x) const;  // (r,c) = d u_r / d x_c
  Vec2 velocity_dt(double t, const Vec2& x) const;
  Vec2 velocity_laplacian(double t, const Vec2& x) const;
  double pressure(double t, const Vec2& x) const;
  Vec2 pressure_gradient(double t, const Vec2& x) const;

  /// f = du/dt - nu Laplacian(u) + (u·grad)u + grad p.
  Vec2 forcing(double t, const Vec2& x) const;

  VectorField velocity_at(double t) const;
  ScalarField pressure_at(double t) const;
  TimeVectorField forcing_field() const;
};

/// Divergence-free polynomial field with zero boundary trace on the unit
/// square: the curl of [x(1-x)y(1-y)]² psi with a seeded random psi of
/// degree <= 2. Total degree 9; interpolate with exactness >= 9 + k to land
/// in Z_{h,0} at machine precision.
VectorField solenoidal_polynomial_field(std::uint64_t seed);
constexpr int solenoidal_field_degree = 9;

//------------------------------------------------------------------------------
// Time-discrete norms, accumulated on the fly (one state in memory)
//------------------------------------------------------------------------------

/// |||v|||² = max_m ||v(t_m)||²_{0,h} + trapz(nu ||v||²_{1,h} + |v|²_{beta,h}).
/// With an exact solution attached, v is the interpolation error
/// u_h - I_U u(t_m); otherwise v is the discrete trajectory itself.
class TnormAccumulator {
 public:
  TnormAccumulator(const Spaces& spaces, const std::vector<LocalKit>& kits, double nu,
                   const MmsSolution* exact = nullptr);
  void feed(const TransientState& state, int step, int n_steps, double dt);
  double value() const;

 private:
  const Spaces* spaces_;
  const std::vector<LocalKit>* kits_;
  double nu_;
  const MmsSolution* exact_;
  double max0_sq_ = 0.0, integral_ = 0.0;
};

/// E(u_h,u)² = max_m ||R_h u_h - u||²_{L²} + trapz nu ||grad_h R_h u_h - grad u||².
class ReconstructionErrorAccumulator {
 public:
  ReconstructionErrorAccumulator(const Spaces& spaces, const std::vector<LocalKit>& kits,
                                 double nu, const MmsSolution& exact);
  void feed(const TransientState& state, int step, int n_steps, double dt);
  double value() const;

 private:
  const Spaces* spaces_;
  const std::vector<LocalKit>* kits_;
  double nu_;
  const MmsSolution* exact_;
  double max0_sq_ = 0.0, integral_ = 0.0;
};

//------------------------------------------------------------------------------
// Refinement studies
//------------------------------------------------------------------------------

struct LevelResult {
  int n = 0;
  double h = 0.0;
  int n_steps = 0;
  double tnorm_err = 0.0;
  double reconstruction_err = 0.0;
  double max_re = 0.0;
  double chi_max = 0.0;
  double newton_avg_iters = 0.0;
};

struct ConvergenceReport {
  int k = 0;
  double nu = 0.0;
  std::vector<LevelResult> levels;               // sorted by decreasing h
  std::vector<double> tnorm_eoc;                 // size levels-1
  std::vector<double> reconstruction_eoc;

  void compute_eocs();
};

/// Runs the transient problem with the manufactured solution on structured
/// meshes n in `levels` and reports errors and EOCs. Throws on solver
/// failure, after which the report holds the completed levels.
ConvergenceReport eoc_study(const SchemeConfig& config, const std::vector<int>& levels,
                            MeshPattern pattern = MeshPattern::Diagonal);

/// CSV schema, one row per level:
/// k,nu,n,h,Ntf,tnorm_err,tnorm_eoc,E_err,E_eoc,max_ReT,newton_avg_iters
/// EOC fields are empty on the coarsest row; floats in full-precision
/// scientific notation.
void write_csv(const ConvergenceReport& report, std::ostream& out);

/// log(e_i/e_{i+1}) / log(h_i/h_{i+1}).
double estimated_order(double e_coarse, double e_fine, double h_coarse, double h_fine);

/// e^{t_F} (int ||f||² dt + ||u0||²_{H¹}) for the energy-bound diagnostic.
double apriori_bound(const Spaces& spaces, const MmsSolution& exact, double t_final, int n_steps);

}  // namespace hyns

#endif
