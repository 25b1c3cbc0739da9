// Local Raviart-Thomas-Nédélec velocity spaces with their canonical
// interpolator, the global hybrid velocity/pressure spaces (element plus
// face unknowns), and the global interpolators.
//
// RTN^l(T) = P^{l-1}(T)^2 + x P^{l-1}(T), dim l(l+2) in 2D. The basis is
// dual to the canonical degrees of freedom (interior moments against
// P^{l-2}(T)^2 and face normal moments against P^{l-1}(F)), so interpolation
// coefficients are exactly the DOF moments. Members have polynomial
// divergence in P^{l-1}(T) and face normal traces in P^{l-1}(F), and the
// interpolator commutes with the divergence through the L² projector.

#ifndef HYNS_SPACES_HPP
#define HYNS_SPACES_HPP

#include <vector>

#include "hyns/mesh.hpp"
#include "hyns/polyquad.hpp"

namespace hyns {

class RTNSpace {
 public:
  /// Builds RTN^l on element T of the mesh; face_bases are the global P^{l-1}
  /// bases of the three faces of T (in local face order).
  RTNSpace(const Mesh& mesh, int T, int l, const std::vector<const PolyBasis*>& face_bases);

  int degree() const { return ell_; }
  int dim() const { return dim_; }
  double dof_condition() const { return dof_condition_; }

  Vec2 eval(int i, const Vec2& x) const;
  /// Jacobian of member i: row r, column c holds d(v_r)/d(x_c).
  Mat2 grad(int i, const Vec2& x) const;
  double div(int i, const Vec2& x) const;

  /// Values of all members at x as a 2 x dim matrix (column i = member i).
  Eigen::Matrix2Xd eval_all(const Vec2& x) const;
  Eigen::VectorXd div_all(const Vec2& x) const;

  /// Canonical interpolation: coefficients are the DOF moments of v, with
  /// moments integrated at the given exactness.
  Eigen::VectorXd interpolate(const VectorField& v, int exactness) const;

  /// Interpolation of a field given by values at arbitrary points is not
  /// enough: moments need the element/face quadratures, kept internally.
  const QuadRule& interior_quad() const { return iquad_; }

 private:
  int ell_;
  int dim_;
  std::array<Vec2, 3> verts_;
  std::array<std::array<Vec2, 2>, 3> face_verts_;
  Vec2 center_;
  double scale_;
  int n_scalar_;                                // dim P^{l-1}
  std::vector<std::array<int, 2>> sc_exp_;      // scalar monomial exponents
  std::vector<std::array<int, 2>> hom_exp_;     // homogeneous degree l-1
  Eigen::MatrixXd dual_;                        // column m: generator coeffs of member m
  double dof_condition_;

  // interpolation data
  PolyBasis interior_test_;                     // P^{l-2}(T), empty for l = 1
  std::vector<const PolyBasis*> face_bases_;
  QuadRule iquad_;
  std::array<QuadRule, 3> fquads_;
  std::array<Vec2, 3> face_normals_;            // outward n_TF

  int n_gen() const { return 2 * n_scalar_ + ell_; }
  Vec2 gen_eval(int j, const Vec2& x) const;
  Mat2 gen_grad(int j, const Vec2& x) const;
  double gen_div(int j, const Vec2& x) const;
};

/// Hybrid velocity unknown: per-element RTN^{k+1} coefficients plus per-face
/// P^k(F)² coefficients (x-component block then y-component block).
struct HybridVelocity {
  int k = 0;
  std::vector<Eigen::VectorXd> elem;
  std::vector<Eigen::VectorXd> face;

  HybridVelocity() = default;
  HybridVelocity(int k_, int n_elements, int n_faces);

  HybridVelocity& operator+=(const HybridVelocity& o);
  HybridVelocity& operator-=(const HybridVelocity& o);
  HybridVelocity& operator*=(double a);
  friend HybridVelocity operator-(HybridVelocity a, const HybridVelocity& b) { return a -= b; }
  friend HybridVelocity operator+(HybridVelocity a, const HybridVelocity& b) { return a += b; }
  friend HybridVelocity operator*(double s, HybridVelocity a) { return a *= s; }
};

/// Hybrid pressure unknown: per-element P^k(T) plus per-face P^k(F)
/// coefficients.
struct HybridPressure {
  int k = 0;
  std::vector<Eigen::VectorXd> elem;
  std::vector<Eigen::VectorXd> face;

  HybridPressure() = default;
  HybridPressure(int k_, int n_elements, int n_faces);
};

/// Global index layout: element velocity blocks, interior-face velocity
/// blocks (boundary faces are constrained to zero and excluded), element
/// pressure blocks, all face pressure blocks, one zero-mean multiplier.
struct DofMap {
  int k = 0;
  int rtn_dim = 0, vface_dim = 0, pel_dim = 0, pface_dim = 0;
  int n_elements = 0, n_faces = 0;
  std::vector<int> vface_offset;  // -1 for boundary faces
  int n_velocity = 0;             // element + interior face velocity dofs
  int p_elem_start = 0, p_face_start = 0;
  int mu_index = 0;
  int total = 0;

  int u_elem(int T) const { return T * rtn_dim; }
  int u_face(int F) const { return vface_offset[F]; }
  int p_elem(int T) const { return p_elem_start + T * pel_dim; }
  int p_face(int F) const { return p_face_start + F * pface_dim; }
};

/// All per-element and per-face bases for a given mesh and degree k, the RTN
/// spaces, and the global DOF layout. Immutable after construction; element
/// constructions run concurrently.
struct Spaces {
  const Mesh* mesh = nullptr;
  int k = 0;
  std::vector<PolyBasis> face_basis;   // P^k(F), global orientation
  std::vector<RTNSpace> rtn;           // RTN^{k+1}(T)
  std::vector<PolyBasis> elem_pk;      // P^k(T)
  std::vector<PolyBasis> elem_pk1;     // P^{k+1}(T)
  DofMap dofs;

  Spaces(const Mesh& mesh, int k);

  /// Element/face interpolator: RTN moments in elements, componentwise face
  /// L² projections. Default exactness is the over-integration rule.
  HybridVelocity interpolate_velocity(const VectorField& v, int exactness = -1) const;
  HybridPressure interpolate_pressure(const ScalarField& q, int exactness = -1) const;

  /// Integral of the element piecewise pressure over the domain.
  double pressure_mean_integral(const HybridPressure& p) const;

  /// Local hybrid velocity block [elem; face0; face1; face2] of element T.
  Eigen::VectorXd local_velocity(const HybridVelocity& v, int T) const;
  Eigen::VectorXd local_pressure(const HybridPressure& p, int T) const;

  int n_local_velocity() const { return dofs.rtn_dim + 3 * dofs.vface_dim; }
  int n_local_pressure() const { return dofs.pel_dim + 3 * dofs.pface_dim; }
};

}  // namespace hyns

#endif
