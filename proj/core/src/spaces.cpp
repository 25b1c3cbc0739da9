#include "hyns/spaces.hpp"

#include <cmath>
#include <stdexcept>

#include "hyns/parallel.hpp"

namespace hyns {

//------------------------------------------------------------------------------
// RTNSpace
//------------------------------------------------------------------------------

RTNSpace::RTNSpace(const Mesh& mesh, int T, int l,
                   const std::vector<const PolyBasis*>& face_bases)
    : ell_(l), dim_(l * (l + 2)), face_bases_(face_bases) {
  if (l < 1) throw std::invalid_argument("RTNSpace: degree must be >= 1");

  verts_ = mesh.element_vertices(T);
  const auto& verts = verts_;
  center_ = mesh.centroid[T];
  scale_ = mesh.h_elem[T];
  n_scalar_ = dim_poly_tri(l - 1);
  for (int d = 0; d <= l - 1; ++d)
    for (int ax = d; ax >= 0; --ax) sc_exp_.push_back({ax, d - ax});
  for (int ax = l - 1; ax >= 0; --ax) hom_exp_.push_back({ax, l - 1 - ax});

  interior_test_ = PolyBasis::element(verts, l - 2);
  iquad_ = make_triangle_quadrature(verts, std::max(2 * l, 1));
  for (int f = 0; f < 3; ++f) {
    const auto& ef = mesh.element_faces[T][f];
    face_verts_[f] = mesh.face_vertices(ef.face);
    fquads_[f] = make_edge_quadrature(face_verts_[f][0], face_verts_[f][1], 2 * l + 1);
    face_normals_[f] = ef.normal;
  }

  // DOF matrix D(i,j) = dof_i(generator j); basis members are its dual.
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim_, dim_);
  const int n_int = 2 * interior_test_.dim();
  for (int j = 0; j < n_gen(); ++j) {
    // interior moments against P^{l-2}(T)^2
    for (int q = 0; q < iquad_.size(); ++q) {
      const Vec2 g = gen_eval(j, iquad_.nodes[q]);
      const Eigen::VectorXd phi = interior_test_.eval_all(iquad_.nodes[q]);
      for (int i = 0; i < interior_test_.dim(); ++i) {
        D(2 * i, j) += iquad_.weights[q] * g.x() * phi[i];
        D(2 * i + 1, j) += iquad_.weights[q] * g.y() * phi[i];
      }
    }
    // face normal moments against P^{l-1}(F)
    for (int f = 0; f < 3; ++f) {
      const auto& fq = fquads_[f];
      for (int q = 0; q < fq.size(); ++q) {
        const double gn = gen_eval(j, fq.nodes[q]).dot(face_normals_[f]);
        const Eigen::VectorXd psi = face_bases_[f]->eval_all(fq.nodes[q]);
        for (int m = 0; m < l; ++m) D(n_int + f * l + m, j) += fq.weights[q] * gn * psi[m];
      }
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
  dof_condition_ = svd.singularValues()(0) / svd.singularValues()(dim_ - 1);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(D);
  dual_ = lu.inverse();
  if (!dual_.allFinite()) throw std::runtime_error("RTNSpace: singular DOF matrix");
}

Vec2 RTNSpace::gen_eval(int j, const Vec2& x) const {
  const Vec2 xi = (x - center_) / scale_;
  auto mono = [&](const std::array<int, 2>& e) {
    return std::pow(xi.x(), e[0]) * std::pow(xi.y(), e[1]);
  };
  if (j < n_scalar_) return {mono(sc_exp_[j]), 0.0};
  if (j < 2 * n_scalar_) return {0.0, mono(sc_exp_[j - n_scalar_])};
  return xi * mono(hom_exp_[j - 2 * n_scalar_]);
}

Mat2 RTNSpace::gen_grad(int j, const Vec2& x) const {
  const Vec2 xi = (x - center_) / scale_;
  auto mono = [&](int ax, int ay) {
    return std::pow(xi.x(), ax) * std::pow(xi.y(), ay);
  };
  auto dmono = [&](const std::array<int, 2>& e) {
    Vec2 d = Vec2::Zero();
    if (e[0] > 0) d.x() = e[0] * mono(e[0] - 1, e[1]) / scale_;
    if (e[1] > 0) d.y() = e[1] * mono(e[0], e[1] - 1) / scale_;
    return d;
  };
  Mat2 G = Mat2::Zero();
  if (j < n_scalar_) {
    G.row(0) = dmono(sc_exp_[j]).transpose();
  } else if (j < 2 * n_scalar_) {
    G.row(1) = dmono(sc_exp_[j - n_scalar_]).transpose();
  } else {
    const auto& e = hom_exp_[j - 2 * n_scalar_];
    const double m = mono(e[0], e[1]);
    const Vec2 dm = dmono(e);
    // d/dx (xi_r m) = delta_{rc} m / scale + xi_r dm_c
    G(0, 0) = m / scale_ + xi.x() * dm.x();
    G(0, 1) = xi.x() * dm.y();
    G(1, 0) = xi.y() * dm.x();
    G(1, 1) = m / scale_ + xi.y() * dm.y();
  }
  return G;
}

double RTNSpace::gen_div(int j, const Vec2& x) const {
  const Vec2 xi = (x - center_) / scale_;
  auto mono = [&](int ax, int ay) {
    return std::pow(xi.x(), ax) * std::pow(xi.y(), ay);
  };
  if (j < n_scalar_) {
    const auto& e = sc_exp_[j];
    return e[0] > 0 ? e[0] * mono(e[0] - 1, e[1]) / scale_ : 0.0;
  }
  if (j < 2 * n_scalar_) {
    const auto& e = sc_exp_[j - n_scalar_];
    return e[1] > 0 ? e[1] * mono(e[0], e[1] - 1) / scale_ : 0.0;
  }
  // div(xi m) = (2 + deg m) m / scale by Euler's identity
  const auto& e = hom_exp_[j - 2 * n_scalar_];
  return (ell_ + 1) * mono(e[0], e[1]) / scale_;
}

Vec2 RTNSpace::eval(int i, const Vec2& x) const {
  Vec2 v = Vec2::Zero();
  for (int j = 0; j < n_gen(); ++j)
    if (dual_(j, i) != 0.0) v += dual_(j, i) * gen_eval(j, x);
  return v;
}

Mat2 RTNSpace::grad(int i, const Vec2& x) const {
  Mat2 G = Mat2::Zero();
  for (int j = 0; j < n_gen(); ++j)
    if (dual_(j, i) != 0.0) G += dual_(j, i) * gen_grad(j, x);
  return G;
}

double RTNSpace::div(int i, const Vec2& x) const {
  double d = 0.0;
  for (int j = 0; j < n_gen(); ++j)
    if (dual_(j, i) != 0.0) d += dual_(j, i) * gen_div(j, x);
  return d;
}

Eigen::Matrix2Xd RTNSpace::eval_all(const Vec2& x) const {
  Eigen::Matrix2Xd G(2, n_gen());
  for (int j = 0; j < n_gen(); ++j) G.col(j) = gen_eval(j, x);
  return G * dual_;
}

Eigen::VectorXd RTNSpace::div_all(const Vec2& x) const {
  Eigen::VectorXd d(n_gen());
  for (int j = 0; j < n_gen(); ++j) d[j] = gen_div(j, x);
  return dual_.transpose() * d;
}

Eigen::VectorXd RTNSpace::interpolate(const VectorField& v, int exactness) const {
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(dim_);
  const int n_int = 2 * interior_test_.dim();

  QuadRule hi_interior;
  const QuadRule* interior = &iquad_;
  if (exactness > iquad_.exactness) {
    hi_interior = make_triangle_quadrature(verts_, exactness);
    interior = &hi_interior;
  }

  for (int q = 0; q < interior->size(); ++q) {
    const Vec2 val = v(interior->nodes[q]);
    const Eigen::VectorXd phi = interior_test_.eval_all(interior->nodes[q]);
    for (int i = 0; i < interior_test_.dim(); ++i) {
      moments[2 * i] += interior->weights[q] * val.x() * phi[i];
      moments[2 * i + 1] += interior->weights[q] * val.y() * phi[i];
    }
  }
  for (int f = 0; f < 3; ++f) {
    QuadRule hi_face;
    const QuadRule* fq = &fquads_[f];
    if (exactness > fquads_[f].exactness) {
      hi_face = make_edge_quadrature(face_verts_[f][0], face_verts_[f][1], exactness);
      fq = &hi_face;
    }
    for (int q = 0; q < fq->size(); ++q) {
      const double vn = v(fq->nodes[q]).dot(face_normals_[f]);
      const Eigen::VectorXd psi = face_bases_[f]->eval_all(fq->nodes[q]);
      for (int m = 0; m < ell_; ++m) moments[n_int + f * ell_ + m] += fq->weights[q] * vn * psi[m];
    }
  }
  return moments;
}

//------------------------------------------------------------------------------
// Hybrid coefficient vectors
//------------------------------------------------------------------------------

HybridVelocity::HybridVelocity(int k_, int n_elements, int n_faces) : k(k_) {
  const int l = k + 1;
  elem.assign(n_elements, Eigen::VectorXd::Zero(l * (l + 2)));
  face.assign(n_faces, Eigen::VectorXd::Zero(2 * (k + 1)));
}

HybridVelocity& HybridVelocity::operator+=(const HybridVelocity& o) {
  for (size_t i = 0; i < elem.size(); ++i) elem[i] += o.elem[i];
  for (size_t i = 0; i < face.size(); ++i) face[i] += o.face[i];
  return *this;
}

HybridVelocity& HybridVelocity::operator-=(const HybridVelocity& o) {
  for (size_t i = 0; i < elem.size(); ++i) elem[i] -= o.elem[i];
  for (size_t i = 0; i < face.size(); ++i) face[i] -= o.face[i];
  return *this;
}

HybridVelocity& HybridVelocity::operator*=(double a) {
  for (auto& e : elem) e *= a;
  for (auto& f : face) f *= a;
  return *this;
}

HybridPressure::HybridPressure(int k_, int n_elements, int n_faces) : k(k_) {
  elem.assign(n_elements, Eigen::VectorXd::Zero(dim_poly_tri(k)));
  face.assign(n_faces, Eigen::VectorXd::Zero(k + 1));
}

//------------------------------------------------------------------------------
// Spaces
//------------------------------------------------------------------------------

Spaces::Spaces(const Mesh& m, int k_) : mesh(&m), k(k_) {
  if (k < 0) throw std::invalid_argument("Spaces: k must be >= 0");
  const int nT = m.n_elements();
  const int nF = m.n_faces();
  const int l = k + 1;

  face_basis.resize(nF);
  parallel_for(nF, [&](int F) {
    const auto fv = m.face_vertices(F);
    face_basis[F] = PolyBasis::edge(fv[0], fv[1], k);
  });

  elem_pk.resize(nT);
  elem_pk1.resize(nT);
  rtn.reserve(nT);
  for (int T = 0; T < nT; ++T) {
    std::vector<const PolyBasis*> fb;
    for (int f = 0; f < 3; ++f) fb.push_back(&face_basis[m.element_faces[T][f].face]);
    rtn.emplace_back(m, T, l, fb);
  }
  parallel_for(nT, [&](int T) {
    const auto verts = m.element_vertices(T);
    elem_pk[T] = PolyBasis::element(verts, k);
    elem_pk1[T] = PolyBasis::element(verts, k + 1);
  });

  dofs.k = k;
  dofs.n_elements = nT;
  dofs.n_faces = nF;
  dofs.rtn_dim = l * (l + 2);
  dofs.vface_dim = 2 * (k + 1);
  dofs.pel_dim = dim_poly_tri(k);
  dofs.pface_dim = k + 1;
  dofs.vface_offset.assign(nF, -1);
  int offset = nT * dofs.rtn_dim;
  for (int F = 0; F < nF; ++F) {
    if (!m.boundary_face[F]) {
      dofs.vface_offset[F] = offset;
      offset += dofs.vface_dim;
    }
  }
  dofs.n_velocity = offset;
  dofs.p_elem_start = offset;
  dofs.p_face_start = offset + nT * dofs.pel_dim;
  dofs.mu_index = dofs.p_face_start + nF * dofs.pface_dim;
  dofs.total = dofs.mu_index + 1;
}

HybridVelocity Spaces::interpolate_velocity(const VectorField& v, int exactness) const {
  const int ex = exactness < 0 ? overintegration_exactness(k) : exactness;
  const int l = k + 1;
  HybridVelocity out(k, mesh->n_elements(), mesh->n_faces());

  parallel_for(mesh->n_faces(), [&](int F) {
    const auto fv = mesh->face_vertices(F);
    const QuadRule fq = make_edge_quadrature(fv[0], fv[1], ex);
    out.face[F] = l2_project_vector(v, face_basis[F], fq);
  });

  parallel_for(mesh->n_elements(), [&](int T) {
    const auto verts = mesh->element_vertices(T);
    const QuadRule iq = make_triangle_quadrature(verts, ex);
    const PolyBasis interior_test = PolyBasis::element(verts, l - 2);
    Eigen::VectorXd moments = Eigen::VectorXd::Zero(dofs.rtn_dim);
    const int n_int = 2 * interior_test.dim();
    for (int q = 0; q < iq.size(); ++q) {
      const Vec2 val = v(iq.nodes[q]);
      const Eigen::VectorXd phi = interior_test.eval_all(iq.nodes[q]);
      for (int i = 0; i < interior_test.dim(); ++i) {
        moments[2 * i] += iq.weights[q] * val.x() * phi[i];
        moments[2 * i + 1] += iq.weights[q] * val.y() * phi[i];
      }
    }
    for (int f = 0; f < 3; ++f) {
      const auto& ef = mesh->element_faces[T][f];
      const auto fv = mesh->face_vertices(ef.face);
      const QuadRule fq = make_edge_quadrature(fv[0], fv[1], ex);
      const PolyBasis& fb = face_basis[ef.face];
      for (int q = 0; q < fq.size(); ++q) {
        const double vn = v(fq.nodes[q]).dot(ef.normal);
        const Eigen::VectorXd psi = fb.eval_all(fq.nodes[q]);
        for (int m = 0; m < l; ++m) moments[n_int + f * l + m] += fq.weights[q] * vn * psi[m];
      }
    }
    out.elem[T] = moments;
  });
  return out;
}

HybridPressure Spaces::interpolate_pressure(const ScalarField& q, int exactness) const {
  const int ex = exactness < 0 ? overintegration_exactness(k) : exactness;
  HybridPressure out(k, mesh->n_elements(), mesh->n_faces());
  parallel_for(mesh->n_elements(), [&](int T) {
    const QuadRule iq = make_triangle_quadrature(mesh->element_vertices(T), ex);
    out.elem[T] = l2_project(q, elem_pk[T], iq);
  });
  parallel_for(mesh->n_faces(), [&](int F) {
    const auto fv = mesh->face_vertices(F);
    const QuadRule fq = make_edge_quadrature(fv[0], fv[1], ex);
    out.face[F] = l2_project(q, face_basis[F], fq);
  });
  return out;
}

double Spaces::pressure_mean_integral(const HybridPressure& p) const {
  // First basis function of each element block is the constant 1/sqrt(|T|).
  double integral = 0.0;
  for (int T = 0; T < mesh->n_elements(); ++T)
    integral += p.elem[T][0] * std::sqrt(mesh->area[T]);
  return integral;
}

Eigen::VectorXd Spaces::local_velocity(const HybridVelocity& v, int T) const {
  Eigen::VectorXd loc(n_local_velocity());
  loc.head(dofs.rtn_dim) = v.elem[T];
  for (int f = 0; f < 3; ++f)
    loc.segment(dofs.rtn_dim + f * dofs.vface_dim, dofs.vface_dim) =
        v.face[mesh->element_faces[T][f].face];
  return loc;
}

Eigen::VectorXd Spaces::local_pressure(const HybridPressure& p, int T) const {
  Eigen::VectorXd loc(n_local_pressure());
  loc.head(dofs.pel_dim) = p.elem[T];
  for (int f = 0; f < 3; ++f)
    loc.segment(dofs.pel_dim + f * dofs.pface_dim, dofs.pface_dim) =
        p.face[mesh->element_faces[T][f].face];
  return loc;
}

}  // namespace hyns
