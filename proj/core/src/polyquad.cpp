#include "hyns/polyquad.hpp"

#include <cmath>
#include <stdexcept>

namespace hyns {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Golub-Welsch: eigenvalues of the
// symmetric tridiagonal Jacobi matrix, weights from the first eigenvector
// components.
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (n == 1) {
    nodes = Eigen::VectorXd::Zero(1);
    weights = Eigen::VectorXd::Constant(1, 2.0);
    return;
  }
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    J(i - 1, i) = b;
    J(i, i - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = es.eigenvalues();
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = 2.0 * v0 * v0;
  }
}

struct SymmetricOrbit {
  double a, b, c;  // barycentric coordinates; permutations are added
  double w;        // weight, normalized so all weights sum to 1
};

// Classic positive-weight symmetric rules (barycentric form).
const std::vector<SymmetricOrbit>& tabulated_orbits(int exactness) {
  static const std::vector<SymmetricOrbit> deg1 = {{1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0}};
  static const std::vector<SymmetricOrbit> deg2 = {
      {2.0 / 3, 1.0 / 6, 1.0 / 6, 1.0 / 3}};
  static const std::vector<SymmetricOrbit> deg4 = {
      {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
      {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322}};
  static const std::vector<SymmetricOrbit> deg5 = {
      {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.225},
      {0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506},
      {0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827}};
  switch (exactness) {
    case 0:
    case 1: return deg1;
    case 2: return deg2;
    case 3:
    case 4: return deg4;
    default: return deg5;
  }
}

void append_orbit(std::vector<std::array<double, 3>>& pts, std::vector<double>& w,
                  const SymmetricOrbit& o) {
  if (o.a == o.b && o.b == o.c) {
    pts.push_back({o.a, o.b, o.c});
    w.push_back(o.w);
    return;
  }
  pts.push_back({o.a, o.b, o.c});
  pts.push_back({o.b, o.a, o.c});
  pts.push_back({o.c, o.b, o.a});
  for (int i = 0; i < 3; ++i) w.push_back(o.w);
}

}  // namespace

QuadRule make_triangle_quadrature(const std::array<Vec2, 3>& verts, int exactness) {
  if (exactness < 0) throw std::invalid_argument("make_triangle_quadrature: exactness < 0");

  const Vec2 e1 = verts[1] - verts[0];
  const Vec2 e2 = verts[2] - verts[0];
  const double two_area = e1.x() * e2.y() - e2.x() * e1.y();
  if (two_area <= 0.0)
    throw std::invalid_argument("make_triangle_quadrature: degenerate or misoriented triangle");
  const double area = 0.5 * two_area;

  QuadRule rule;
  rule.exactness = exactness;

  if (exactness <= 5) {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> w;
    for (const auto& orbit : tabulated_orbits(exactness)) append_orbit(bary, w, orbit);
    rule.weights.resize(static_cast<int>(w.size()));
    for (size_t q = 0; q < bary.size(); ++q) {
      rule.nodes.push_back(bary[q][0] * verts[0] + bary[q][1] * verts[1] + bary[q][2] * verts[2]);
      rule.weights[static_cast<int>(q)] = w[q] * area;
    }
    return rule;
  }

  // Collapsed-coordinate Gauss product: x = u, y = v(1-u) on the reference
  // triangle, Jacobian (1-u). A degree-p integrand has degree p+1 in u after
  // the Jacobian and p in v.
  const int nu = (exactness + 3) / 2;  // ceil((p+2)/2)
  const int nv = (exactness + 2) / 2;  // ceil((p+1)/2)
  Eigen::VectorXd xu, wu, xv, wv;
  gauss_legendre(nu, xu, wu);
  gauss_legendre(nv, xv, wv);

  rule.weights.resize(nu * nv);
  int idx = 0;
  for (int i = 0; i < nu; ++i) {
    const double u = 0.5 * (xu[i] + 1.0);
    for (int j = 0; j < nv; ++j) {
      const double v = 0.5 * (xv[j] + 1.0);
      const double xr = u, yr = v * (1.0 - u);
      rule.nodes.push_back(verts[0] + xr * e1 + yr * e2);
      rule.weights[idx++] = 0.25 * wu[i] * wv[j] * (1.0 - u) * two_area;
    }
  }
  return rule;
}

QuadRule make_edge_quadrature(const Vec2& a, const Vec2& b, int exactness) {
  if (exactness < 0) throw std::invalid_argument("make_edge_quadrature: exactness < 0");
  const int n = (exactness + 2) / 2;  // 2n-1 >= exactness
  Eigen::VectorXd x, w;
  gauss_legendre(n, x, w);

  QuadRule rule;
  rule.exactness = exactness;
  rule.weights.resize(n);
  const double len = (b - a).norm();
  for (int i = 0; i < n; ++i) {
    const double s = 0.5 * (x[i] + 1.0);
    rule.nodes.push_back(a + s * (b - a));
    rule.weights[i] = 0.5 * w[i] * len;
  }
  return rule;
}

//------------------------------------------------------------------------------
// PolyBasis
//------------------------------------------------------------------------------

Eigen::VectorXd PolyBasis::monomials_at(const Vec2& x) const {
  const int n = static_cast<int>(exponents_.size());
  Eigen::VectorXd m(n);
  const double xi = on_edge_ ? (x - center_).dot(tangent_) / scale_ : (x.x() - center_.x()) / scale_;
  const double eta = on_edge_ ? 0.0 : (x.y() - center_.y()) / scale_;
  for (int j = 0; j < n; ++j) {
    double v = 1.0;
    for (int p = 0; p < exponents_[j][0]; ++p) v *= xi;
    for (int p = 0; p < exponents_[j][1]; ++p) v *= eta;
    m[j] = v;
  }
  return m;
}

double PolyBasis::eval(int i, const Vec2& x) const {
  return coeff_.row(i).dot(monomials_at(x));
}

Eigen::VectorXd PolyBasis::eval_all(const Vec2& x) const {
  if (dim() == 0) return Eigen::VectorXd();
  return coeff_ * monomials_at(x);
}

Vec2 PolyBasis::grad(int i, const Vec2& x) const {
  const int n = static_cast<int>(exponents_.size());
  const double xi = on_edge_ ? (x - center_).dot(tangent_) / scale_ : (x.x() - center_.x()) / scale_;
  const double eta = on_edge_ ? 0.0 : (x.y() - center_.y()) / scale_;
  Vec2 g = Vec2::Zero();
  for (int j = 0; j < n; ++j) {
    const int ax = exponents_[j][0], ay = exponents_[j][1];
    const double c = coeff_(i, j);
    if (c == 0.0) continue;
    double dxd = 0.0, dyd = 0.0;
    if (ax > 0) dxd = ax * std::pow(xi, ax - 1) * std::pow(eta, ay) / scale_;
    if (ay > 0) dyd = ay * std::pow(xi, ax) * std::pow(eta, ay - 1) / scale_;
    g.x() += c * dxd;
    g.y() += c * dyd;
  }
  if (on_edge_) return g.x() * tangent_;  // xi is the tangential coordinate
  return g;
}

Eigen::MatrixXd PolyBasis::grad_all(const Vec2& x) const {
  Eigen::MatrixXd G(dim(), 2);
  for (int i = 0; i < dim(); ++i) G.row(i) = grad(i, x).transpose();
  return G;
}

double PolyBasis::laplacian(int i, const Vec2& x) const {
  const int n = static_cast<int>(exponents_.size());
  const double xi = on_edge_ ? (x - center_).dot(tangent_) / scale_ : (x.x() - center_.x()) / scale_;
  const double eta = on_edge_ ? 0.0 : (x.y() - center_.y()) / scale_;
  const double s2 = scale_ * scale_;
  double lap = 0.0;
  for (int j = 0; j < n; ++j) {
    const int ax = exponents_[j][0], ay = exponents_[j][1];
    const double c = coeff_(i, j);
    if (c == 0.0) continue;
    if (ax > 1) lap += c * ax * (ax - 1) * std::pow(xi, ax - 2) * std::pow(eta, ay) / s2;
    if (ay > 1) lap += c * ay * (ay - 1) * std::pow(xi, ax) * std::pow(eta, ay - 2) / s2;
  }
  return lap;
}

Eigen::MatrixXd PolyBasis::gram(const QuadRule& quad) const {
  Eigen::MatrixXd V(dim(), quad.size());
  for (int q = 0; q < quad.size(); ++q) V.col(q) = eval_all(quad.nodes[q]);
  return V * quad.weights.asDiagonal() * V.transpose();
}

namespace {

// Orthonormalization shared by element and edge constructors: modified
// Gram-Schmidt on values-at-quadrature-nodes, with one reorthogonalization
// pass. Returns the coefficient matrix over the raw monomials.
Eigen::MatrixXd orthonormalize(Eigen::MatrixXd values, const Eigen::VectorXd& weights) {
  const int n = static_cast<int>(values.rows());
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
  auto dot = [&](int i, int j) {
    return (values.row(i).array() * values.row(j).array() * weights.transpose().array()).sum();
  };
  for (int i = 0; i < n; ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < i; ++j) {
        const double r = dot(i, j);
        values.row(i) -= r * values.row(j);
        C.row(i) -= r * C.row(j);
      }
    }
    const double norm = std::sqrt(dot(i, i));
    if (!(norm > 0.0))
      throw std::runtime_error("PolyBasis: degenerate domain (zero-measure Gram)");
    values.row(i) /= norm;
    C.row(i) /= norm;
  }
  return C;
}

}  // namespace

PolyBasis PolyBasis::element(const std::array<Vec2, 3>& verts, int degree) {
  PolyBasis basis;
  basis.degree_ = degree;
  basis.on_edge_ = false;
  basis.center_ = (verts[0] + verts[1] + verts[2]) / 3.0;
  basis.scale_ = std::max(
      {(verts[1] - verts[0]).norm(), (verts[2] - verts[1]).norm(), (verts[0] - verts[2]).norm()});
  if (degree < 0) {
    basis.coeff_.resize(0, 0);
    return basis;
  }
  for (int d = 0; d <= degree; ++d)
    for (int ax = d; ax >= 0; --ax) basis.exponents_.push_back({ax, d - ax});

  const QuadRule quad = make_triangle_quadrature(verts, std::max(2 * degree, 1));
  const int n = static_cast<int>(basis.exponents_.size());
  basis.coeff_ = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd values(n, quad.size());
  for (int q = 0; q < quad.size(); ++q) values.col(q) = basis.monomials_at(quad.nodes[q]);
  basis.coeff_ = orthonormalize(values, quad.weights);
  return basis;
}

PolyBasis PolyBasis::edge(const Vec2& a, const Vec2& b, int degree) {
  PolyBasis basis;
  basis.degree_ = degree;
  basis.on_edge_ = true;
  basis.center_ = 0.5 * (a + b);
  basis.scale_ = (b - a).norm();
  if (basis.scale_ <= 0.0) throw std::runtime_error("PolyBasis::edge: degenerate edge");
  basis.tangent_ = (b - a) / basis.scale_;
  if (degree < 0) {
    basis.coeff_.resize(0, 0);
    return basis;
  }
  for (int d = 0; d <= degree; ++d) basis.exponents_.push_back({d, 0});

  const QuadRule quad = make_edge_quadrature(a, b, std::max(2 * degree, 1));
  const int n = static_cast<int>(basis.exponents_.size());
  Eigen::MatrixXd values(n, quad.size());
  for (int q = 0; q < quad.size(); ++q) values.col(q) = basis.monomials_at(quad.nodes[q]);
  basis.coeff_ = orthonormalize(values, quad.weights);
  return basis;
}

Eigen::VectorXd l2_project(const ScalarField& f, const PolyBasis& basis, const QuadRule& quad) {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(basis.dim());
  for (int q = 0; q < quad.size(); ++q)
    coeffs += quad.weights[q] * f(quad.nodes[q]) * basis.eval_all(quad.nodes[q]);
  return coeffs;
}

Eigen::VectorXd l2_project_vector(const VectorField& f, const PolyBasis& basis,
                                  const QuadRule& quad) {
  const int n = basis.dim();
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(2 * n);
  for (int q = 0; q < quad.size(); ++q) {
    const Vec2 v = f(quad.nodes[q]);
    const Eigen::VectorXd phi = basis.eval_all(quad.nodes[q]);
    coeffs.head(n) += quad.weights[q] * v.x() * phi;
    coeffs.tail(n) += quad.weights[q] * v.y() * phi;
  }
  return coeffs;
}

}  // namespace hyns
