// Polynomial bases on triangles and edges, quadrature rules, and
// L²-orthogonal projections.
//
// Bases are scaled monomials centered at the domain centroid with diameter
// scaling, orthonormalized by modified Gram-Schmidt so that the Gram matrix
// under the domain's L² product is the identity. Orthonormality keeps the
// conditioning h-independent and turns every L² projection into a plain
// moment evaluation (no Gram solve).
//
// All objects are immutable after construction; per-element construction is
// independent and callable concurrently for distinct elements.

#ifndef HYNS_POLYQUAD_HPP
#define HYNS_POLYQUAD_HPP

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hyns/mesh.hpp"

namespace hyns {

using Mat2 = Eigen::Matrix2d;

/// dim P^l on a triangle: (l+1)(l+2)/2; zero for l = -1.
inline int dim_poly_tri(int l) { return l < 0 ? 0 : (l + 1) * (l + 2) / 2; }
/// dim P^l on an edge: l+1; zero for l = -1.
inline int dim_poly_edge(int l) { return l < 0 ? 0 : l + 1; }

struct QuadRule {
  std::vector<Vec2> nodes;  // physical coordinates
  Eigen::VectorXd weights;  // sum to |T| (or |F|)
  int exactness = 0;

  int size() const { return static_cast<int>(nodes.size()); }
};

/// Quadrature on the triangle (v0,v1,v2), exact for polynomials of total
/// degree <= exactness. Tabulated symmetric rules for low degrees, a
/// collapsed-coordinate Gauss product rule beyond; weights always positive.
QuadRule make_triangle_quadrature(const std::array<Vec2, 3>& verts, int exactness);

/// Gauss-Legendre rule on the segment [a,b] with ceil((exactness+1)/2) points.
QuadRule make_edge_quadrature(const Vec2& a, const Vec2& b, int exactness);

/// Orthonormal polynomial basis on a triangle or an edge.
///
/// Functions are linear combinations of scaled monomials
///   ((x - x_c) / h_c)^alpha
/// centered at the domain centroid x_c with diameter h_c. On edges the
/// monomials are powers of the scaled tangential coordinate, so the basis is
/// single-valued when shared by the two elements adjacent to a face.
class PolyBasis {
 public:
  PolyBasis() = default;

  int degree() const { return degree_; }
  int dim() const { return static_cast<int>(coeff_.rows()); }

  double eval(int i, const Vec2& x) const;
  Vec2 grad(int i, const Vec2& x) const;
  double laplacian(int i, const Vec2& x) const;

  /// Values of every basis function at x (column i = function i reversed:
  /// entry i = phi_i(x)).
  Eigen::VectorXd eval_all(const Vec2& x) const;
  Eigen::MatrixXd grad_all(const Vec2& x) const;  // dim x 2

  /// Gram matrix under the quadrature used at construction (identity after
  /// orthonormalization; exposed for verification).
  Eigen::MatrixXd gram(const QuadRule& quad) const;

  static PolyBasis element(const std::array<Vec2, 3>& verts, int degree);
  static PolyBasis edge(const Vec2& a, const Vec2& b, int degree);

 private:
  int degree_ = -1;
  bool on_edge_ = false;
  Vec2 center_ = Vec2::Zero();
  Vec2 tangent_ = Vec2::Zero();  // edge domains only
  double scale_ = 1.0;           // diameter
  std::vector<std::array<int, 2>> exponents_;  // on edges the second entry is 0
  Eigen::MatrixXd coeff_;  // row i = expansion of phi_i over scaled monomials

  Eigen::VectorXd monomials_at(const Vec2& x) const;
};

/// Field types used throughout: scalar and 2-vector functions of space.
using ScalarField = std::function<double(const Vec2&)>;
using VectorField = std::function<Vec2(const Vec2&)>;

/// Coefficients of the L²-orthogonal projection of f onto the basis,
/// computed with the given quadrature.
Eigen::VectorXd l2_project(const ScalarField& f, const PolyBasis& basis, const QuadRule& quad);

/// Componentwise vector projection; returns [coeffs of f_x; coeffs of f_y].
Eigen::VectorXd l2_project_vector(const VectorField& f, const PolyBasis& basis,
                                  const QuadRule& quad);

/// Default element quadrature exactness: integrates the convective trilinear
/// form and every bilinear form exactly.
inline int element_exactness(int k) { return std::max(3 * (k + 1), 2 * (k + 2)); }

/// Face exactness: the convective face terms carry products of one degree-k
/// normal trace and two degree-(k+1) traces, hence 3k+2; the HHO-type terms
/// need 2k+3.
inline int face_exactness(int k) { return std::max(2 * k + 3, 3 * k + 2); }

/// Over-integration rule for nonpolynomial data (interpolation moments and
/// error integrals).
inline int overintegration_exactness(int k) { return 2 * k + 8; }

}  // namespace hyns

#endif
