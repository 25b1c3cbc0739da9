// Per-element operators and forms of the scheme: the velocity reconstruction
// R_T^{k+1}, the two stabilization variants s_T, the pressure gradient G_T^k,
// the viscous form a_T, the velocity-pressure coupling b_T, the convective
// trilinear form t_T with its exact directional derivatives, the convective
// stabilization j_{beta,T}, the discrete L² product, and the local norms.
//
// Everything acts on local hybrid coefficient blocks
//   v_loc = [element RTN^{k+1} coeffs; face 0; face 1; face 2]
// with each face block laid out as [x-component P^k coeffs; y-component].
//
// LocalKit construction is element-independent; kits are immutable after
// build and shared read-only by concurrent assembly loops.

#ifndef HYNS_LOCAL_OPS_HPP
#define HYNS_LOCAL_OPS_HPP

#include <array>
#include <vector>

#include "hyns/spaces.hpp"

namespace hyns {

enum class StabilizationVariant { Hho, Dofi };

struct LocalKit {
  int T = -1;
  int k = 0;
  double h = 0.0, area = 0.0;
  double lambda = 0.0;  // card(F_T) h_T^d / |T|

  int n_rtn = 0;   // dim RTN^{k+1}
  int n_u = 0;     // hybrid velocity block size
  int n_p = 0;     // hybrid pressure block size
  int n_rec = 0;   // 2 dim P^{k+1}

  QuadRule equad;
  std::array<QuadRule, 3> fquad;

  // cached basis values at quadrature nodes
  std::vector<Eigen::Matrix2Xd> rtn_val;             // per element node, 2 x n_rtn
  std::vector<Eigen::Matrix2Xd> rtn_dx, rtn_dy;      // d/dx, d/dy of members
  std::array<std::vector<Eigen::Matrix2Xd>, 3> trace_val;    // per face node, 2 x n_rtn
  std::array<std::vector<Eigen::VectorXd>, 3> trace_normal;  // z·n_TF per member
  std::array<std::vector<Eigen::VectorXd>, 3> fb_val;        // face basis values
  std::array<Eigen::MatrixXd, 3> jump;               // per face node rows: (v_F - v_T), 2nq x n_u

  // operator matrices
  Eigen::MatrixXd R;          // n_rec x n_u, reconstruction coefficients in P^{k+1}(T)^2
  Eigen::MatrixXd stiff_rec;  // n_rec x n_rec, int_T grad w_i : grad w_j
  Eigen::MatrixXd icompose;   // n_u x n_rec, I_{U,T} of a P^{k+1} vector polynomial
  Eigen::MatrixXd delta;      // n_u x n_u, I_{U,T} R_T - Id
  Eigen::MatrixXd sT;         // n_u x n_u
  Eigen::MatrixXd aT;         // Rᵀ stiff_rec R + sT
  Eigen::MatrixXd M_rtn;      // RTN Gram
  Eigen::MatrixXd stiff_rtn;  // int_T grad z_i : grad z_j
  Eigen::MatrixXd M0;         // (·,·)_{0,T} quadratic form
  Eigen::MatrixXd Jsum;       // sum_F int_F (v_F - v_T)(w_F - w_T); j_{beta,T} = beta_T Jsum
  Eigen::MatrixXd norm1_form; // ||·||_{1,T}² quadratic form
  Eigen::MatrixXd Bg;         // n_rtn x n_p: b_T(v,q) = v_elemᵀ Bg q_loc
  Eigen::MatrixXd Gt;         // n_rtn x n_p: pressure gradient coefficients in RTN
  Eigen::MatrixXd Div;        // dim P^k x n_rtn: coefficients of div v_T

  // L-infinity sample points: element quad nodes, vertices, face midpoints
  std::vector<Vec2> linf_points;
};

LocalKit build_local_kit(const Spaces& spaces, int T,
                         StabilizationVariant variant = StabilizationVariant::Hho);

std::vector<LocalKit> build_kits(const Spaces& spaces,
                                 StabilizationVariant variant = StabilizationVariant::Hho);

//------------------------------------------------------------------------------
// Convective trilinear form
//------------------------------------------------------------------------------

/// t_T(w,v,z) = int_T (w_T·grad) v_T · z_T
///            + ½ sum_F int_F (w_T·n_TF) (v_F - v_T)·(z_F + z_T).
double convective_form(const LocalKit& kit, const Eigen::VectorXd& w_loc,
                       const Eigen::VectorXd& v_loc, const Eigen::VectorXd& z_loc);

/// Exact directional derivative in the second slot: matrix M with
/// zᵀ M v = t_T(w, v, z) for the given frozen w.
Eigen::MatrixXd convective_dv(const LocalKit& kit, const Eigen::VectorXd& w_loc);

/// Exact directional derivative in the first slot: matrix M with
/// zᵀ M w = t_T(w, v, z) for the given frozen v.
Eigen::MatrixXd convective_dw(const LocalKit& kit, const Eigen::VectorXd& v_loc);

//------------------------------------------------------------------------------
// Scalar local forms
//------------------------------------------------------------------------------

inline double coupling_form(const LocalKit& kit, const Eigen::VectorXd& v_loc,
                            const Eigen::VectorXd& q_loc) {
  return v_loc.head(kit.n_rtn).dot(kit.Bg * q_loc);
}

inline double convective_stabilization(const LocalKit& kit, double beta,
                                       const Eigen::VectorXd& w_loc,
                                       const Eigen::VectorXd& v_loc) {
  return beta * w_loc.dot(kit.Jsum * v_loc);
}

inline double discrete_l2_product(const LocalKit& kit, const Eigen::VectorXd& w_loc,
                                  const Eigen::VectorXd& v_loc) {
  return w_loc.dot(kit.M0 * v_loc);
}

struct LocalNorms {
  double norm0 = 0.0;      // ||v||_{0,T}
  double norm1 = 0.0;      // ||v||_{1,T}
  double beta_semi = 0.0;  // |v|_{beta,T}
  double norm1_infty = 0.0;  // sampled estimate
};

LocalNorms local_norms(const LocalKit& kit, const Eigen::VectorXd& v_loc, double beta);

/// Sampled sup |v_T| over quad nodes, vertices and face midpoints.
double sampled_linf(const LocalKit& kit, const Spaces& spaces, const Eigen::VectorXd& elem_coeffs);

/// beta_T = max(c_s, ||u_T||_{L∞(T)}) with the sampled sup estimate.
double beta_parameter(const LocalKit& kit, const Spaces& spaces,
                      const Eigen::VectorXd& u_elem, double c_s);

/// Re_T = (beta_T + ||u_T||_{L∞(T)}) h_T / nu, discrete velocity in place of
/// the exact one.
double local_reynolds(const LocalKit& kit, const Spaces& spaces,
                      const Eigen::VectorXd& u_elem, double beta, double nu);

//------------------------------------------------------------------------------
// Global reductions
//------------------------------------------------------------------------------

double norm_0h(const Spaces& spaces, const std::vector<LocalKit>& kits, const HybridVelocity& v);
double norm_1h(const Spaces& spaces, const std::vector<LocalKit>& kits, const HybridVelocity& v);
double seminorm_beta(const Spaces& spaces, const std::vector<LocalKit>& kits,
                     const HybridVelocity& v, const std::vector<double>& beta);

/// b_h(v,q) = sum_T int_T v_T · G_T q.
double coupling_global(const Spaces& spaces, const std::vector<LocalKit>& kits,
                       const HybridVelocity& v, const HybridPressure& q);

/// t_h as a sum of local contributions; also returns sum_T |t_T| for
/// cancellation diagnostics when requested.
double convective_global(const Spaces& spaces, const std::vector<LocalKit>& kits,
                         const HybridVelocity& w, const HybridVelocity& v,
                         const HybridVelocity& z, double* abs_sum = nullptr);

/// chi = max over elements with Re_T > 1 of ||u_T||_inf / beta_T; zero when
/// no element is convection-dominated.
double chi_indicator(const Spaces& spaces, const std::vector<LocalKit>& kits,
                     const HybridVelocity& u, const std::vector<double>& beta, double nu,
                     double* max_re = nullptr);

}  // namespace hyns

#endif
