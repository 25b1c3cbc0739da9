#include "hyns/local_ops.hpp"

#include <cmath>

#include "hyns/parallel.hpp"

namespace hyns {

LocalKit build_local_kit(const Spaces& sp, int T, StabilizationVariant variant) {
  const Mesh& mesh = *sp.mesh;
  const int k = sp.k;
  const RTNSpace& rtn = sp.rtn[T];
  const PolyBasis& pk1 = sp.elem_pk1[T];
  const PolyBasis& pk = sp.elem_pk[T];

  LocalKit kit;
  kit.T = T;
  kit.k = k;
  kit.h = mesh.h_elem[T];
  kit.area = mesh.area[T];
  kit.lambda = 3.0 * kit.h * kit.h / kit.area;
  kit.n_rtn = rtn.dim();
  kit.n_u = kit.n_rtn + 3 * sp.dofs.vface_dim;
  kit.n_p = sp.dofs.pel_dim + 3 * sp.dofs.pface_dim;
  const int N1 = pk1.dim();
  kit.n_rec = 2 * N1;

  const auto verts = mesh.element_vertices(T);
  kit.equad = make_triangle_quadrature(verts, element_exactness(k));
  const int nq = kit.equad.size();

  kit.rtn_val.resize(nq);
  kit.rtn_dx.resize(nq);
  kit.rtn_dy.resize(nq);
  for (int q = 0; q < nq; ++q) {
    const Vec2& x = kit.equad.nodes[q];
    kit.rtn_val[q] = rtn.eval_all(x);
    Eigen::Matrix2Xd dx(2, kit.n_rtn), dy(2, kit.n_rtn);
    for (int m = 0; m < kit.n_rtn; ++m) {
      const Mat2 G = rtn.grad(m, x);
      dx.col(m) = G.col(0);
      dy.col(m) = G.col(1);
    }
    kit.rtn_dx[q] = dx;
    kit.rtn_dy[q] = dy;
  }

  const int nfc = k + 1;        // scalar face modes
  const int vfd = 2 * nfc;      // face velocity block
  for (int f = 0; f < 3; ++f) {
    const auto& ef = mesh.element_faces[T][f];
    const auto fv = mesh.face_vertices(ef.face);
    kit.fquad[f] = make_edge_quadrature(fv[0], fv[1], face_exactness(k));
    const int nfq = kit.fquad[f].size();
    const PolyBasis& fb = sp.face_basis[ef.face];

    kit.trace_val[f].resize(nfq);
    kit.trace_normal[f].resize(nfq);
    kit.fb_val[f].resize(nfq);
    kit.jump[f] = Eigen::MatrixXd::Zero(2 * nfq, kit.n_u);
    for (int q = 0; q < nfq; ++q) {
      const Vec2& x = kit.fquad[f].nodes[q];
      kit.trace_val[f][q] = rtn.eval_all(x);
      kit.trace_normal[f][q] = kit.trace_val[f][q].transpose() * ef.normal;
      kit.fb_val[f][q] = fb.eval_all(x);

      auto rows = kit.jump[f].middleRows(2 * q, 2);
      rows.leftCols(kit.n_rtn) = -kit.trace_val[f][q];
      for (int m = 0; m < nfc; ++m) {
        rows(0, kit.n_rtn + f * vfd + m) = kit.fb_val[f][q][m];
        rows(1, kit.n_rtn + f * vfd + nfc + m) = kit.fb_val[f][q][m];
      }
    }
  }

  //--- RTN Gram, stiffness, divergence representation
  kit.M_rtn.setZero(kit.n_rtn, kit.n_rtn);
  kit.stiff_rtn.setZero(kit.n_rtn, kit.n_rtn);
  kit.Div.setZero(pk.dim(), kit.n_rtn);
  for (int q = 0; q < nq; ++q) {
    const double w = kit.equad.weights[q];
    kit.M_rtn += w * kit.rtn_val[q].transpose() * kit.rtn_val[q];
    kit.stiff_rtn += w * (kit.rtn_dx[q].transpose() * kit.rtn_dx[q] +
                          kit.rtn_dy[q].transpose() * kit.rtn_dy[q]);
    const Eigen::VectorXd div = sp.rtn[T].div_all(kit.equad.nodes[q]);
    kit.Div += w * pk.eval_all(kit.equad.nodes[q]) * div.transpose();
  }

  //--- scalar P^{k+1} stiffness and the reconstruction right-hand side
  Eigen::MatrixXd Ks = Eigen::MatrixXd::Zero(N1, N1);
  Eigen::MatrixXd Brhs = Eigen::MatrixXd::Zero(kit.n_rec, kit.n_u);
  for (int q = 0; q < nq; ++q) {
    const double w = kit.equad.weights[q];
    const Eigen::MatrixXd G = pk1.grad_all(kit.equad.nodes[q]);  // N1 x 2
    Ks += w * G * G.transpose();
    // element columns: -int_T v_T · Δw
    Eigen::VectorXd lap(N1);
    for (int i = 0; i < N1; ++i) lap[i] = pk1.laplacian(i, kit.equad.nodes[q]);
    Brhs.topLeftCorner(N1, kit.n_rtn) -= w * lap * kit.rtn_val[q].row(0);
    Brhs.block(N1, 0, N1, kit.n_rtn) -= w * lap * kit.rtn_val[q].row(1);
  }
  for (int f = 0; f < 3; ++f) {
    const auto& ef = mesh.element_faces[T][f];
    for (int q = 0; q < kit.fquad[f].size(); ++q) {
      const double w = kit.fquad[f].weights[q];
      const Vec2& x = kit.fquad[f].nodes[q];
      Eigen::VectorXd gn(N1);  // grad(phi_i)·n_TF
      for (int i = 0; i < N1; ++i) gn[i] = pk1.grad(i, x).dot(ef.normal);
      for (int m = 0; m < nfc; ++m) {
        const double psi = kit.fb_val[f][q][m];
        Brhs.block(0, kit.n_rtn + f * vfd + m, N1, 1) += w * psi * gn;
        Brhs.block(N1, kit.n_rtn + f * vfd + nfc + m, N1, 1) += w * psi * gn;
      }
    }
  }

  kit.stiff_rec.setZero(kit.n_rec, kit.n_rec);
  kit.stiff_rec.topLeftCorner(N1, N1) = Ks;
  kit.stiff_rec.bottomRightCorner(N1, N1) = Ks;

  // Closure: mean of the reconstruction per component.
  Eigen::VectorXd cx = Eigen::VectorXd::Zero(kit.n_u);
  Eigen::VectorXd cy = Eigen::VectorXd::Zero(kit.n_u);
  if (k >= 1) {
    for (int q = 0; q < nq; ++q) {
      cx.head(kit.n_rtn) += kit.equad.weights[q] * kit.rtn_val[q].row(0).transpose();
      cy.head(kit.n_rtn) += kit.equad.weights[q] * kit.rtn_val[q].row(1).transpose();
    }
  } else {
    for (int f = 0; f < 3; ++f) {
      const auto& ef = mesh.element_faces[T][f];
      for (int q = 0; q < kit.fquad[f].size(); ++q) {
        const double w = 0.5 * ef.d_tf * kit.fquad[f].weights[q];
        for (int m = 0; m < nfc; ++m) {
          cx[kit.n_rtn + f * vfd + m] += w * kit.fb_val[f][q][m];
          cy[kit.n_rtn + f * vfd + nfc + m] += w * kit.fb_val[f][q][m];
        }
      }
    }
  }

  // First basis function is 1/sqrt(|T|); constant coefficients come from the
  // closure, the rest from the reduced Neumann solve.
  kit.R.setZero(kit.n_rec, kit.n_u);
  const double sq_area = std::sqrt(kit.area);
  kit.R.row(0) = cx.transpose() / sq_area;
  kit.R.row(N1) = cy.transpose() / sq_area;
  {
    const int nred = kit.n_rec - 2;
    Eigen::MatrixXd Kred(nred, nred);
    Eigen::MatrixXd Bred(nred, kit.n_u);
    std::vector<int> map;
    map.reserve(nred);
    for (int i = 0; i < kit.n_rec; ++i)
      if (i != 0 && i != N1) map.push_back(i);
    for (int a = 0; a < nred; ++a) {
      Bred.row(a) = Brhs.row(map[a]);
      for (int b = 0; b < nred; ++b) Kred(a, b) = kit.stiff_rec(map[a], map[b]);
    }
    const Eigen::MatrixXd Rred = Kred.llt().solve(Bred);
    for (int a = 0; a < nred; ++a) kit.R.row(map[a]) = Rred.row(a);
  }

  //--- I_{U,T} of a P^{k+1} vector polynomial (for the delta operators)
  kit.icompose.setZero(kit.n_u, kit.n_rec);
  {
    const PolyBasis interior_test = PolyBasis::element(verts, k - 1);
    const int nit = interior_test.dim();
    for (int q = 0; q < nq; ++q) {
      const double w = kit.equad.weights[q];
      const Eigen::VectorXd phi1 = pk1.eval_all(kit.equad.nodes[q]);
      if (nit > 0) {
        const Eigen::VectorXd it = interior_test.eval_all(kit.equad.nodes[q]);
        for (int i = 0; i < nit; ++i) {
          kit.icompose.block(2 * i, 0, 1, N1) += w * it[i] * phi1.transpose();
          kit.icompose.block(2 * i + 1, N1, 1, N1) += w * it[i] * phi1.transpose();
        }
      }
    }
    const int n_int = 2 * nit;
    const int l = k + 1;
    for (int f = 0; f < 3; ++f) {
      const auto& ef = mesh.element_faces[T][f];
      for (int q = 0; q < kit.fquad[f].size(); ++q) {
        const double w = kit.fquad[f].weights[q];
        const Vec2& x = kit.fquad[f].nodes[q];
        const Eigen::VectorXd phi1 = pk1.eval_all(x);
        const Eigen::VectorXd& psi = kit.fb_val[f][q];
        // RTN face-normal moments of (phi,0) and (0,phi)
        for (int m = 0; m < l; ++m) {
          kit.icompose.block(n_int + f * l + m, 0, 1, N1) +=
              w * psi[m] * ef.normal.x() * phi1.transpose();
          kit.icompose.block(n_int + f * l + m, N1, 1, N1) +=
              w * psi[m] * ef.normal.y() * phi1.transpose();
        }
        // face component projections
        for (int m = 0; m < nfc; ++m) {
          kit.icompose.block(kit.n_rtn + f * vfd + m, 0, 1, N1) +=
              w * psi[m] * phi1.transpose();
          kit.icompose.block(kit.n_rtn + f * vfd + nfc + m, N1, 1, N1) +=
              w * psi[m] * phi1.transpose();
        }
      }
    }
  }

  kit.delta = kit.icompose * kit.R - Eigen::MatrixXd::Identity(kit.n_u, kit.n_u);

  //--- stabilization
  kit.sT.setZero(kit.n_u, kit.n_u);
  if (variant == StabilizationVariant::Dofi) {
    // lambda h^{-2} int_T delta_T·delta_T + h^{-1} sum_F int_F delta_TF·delta_TF
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(kit.n_u, kit.n_u);
    Q.topLeftCorner(kit.n_rtn, kit.n_rtn) = kit.lambda / (kit.h * kit.h) * kit.M_rtn;
    // face blocks: orthonormal face bases make the face Gram the identity
    for (int f = 0; f < 3; ++f)
      for (int c = 0; c < vfd; ++c) {
        const int idx = kit.n_rtn + f * vfd + c;
        Q(idx, idx) += 1.0 / kit.h;
      }
    kit.sT = kit.delta.transpose() * Q * kit.delta;
  } else {
    // h^{-1} sum_F int_F (delta_T - delta_TF)·(delta_T - delta_TF); the jump
    // matrices evaluate exactly (v_F - v_T), which is -(delta_T - delta_TF)
    // applied to the delta image.
    for (int f = 0; f < 3; ++f) {
      const Eigen::MatrixXd JD = kit.jump[f] * kit.delta;
      const int nfq = kit.fquad[f].size();
      for (int q = 0; q < nfq; ++q)
        kit.sT += (kit.fquad[f].weights[q] / kit.h) * JD.middleRows(2 * q, 2).transpose() *
                  JD.middleRows(2 * q, 2);
    }
  }

  kit.aT = kit.R.transpose() * kit.stiff_rec * kit.R + kit.sT;

  //--- jump Gram, discrete L² product, H¹-seminorm form
  kit.Jsum.setZero(kit.n_u, kit.n_u);
  for (int f = 0; f < 3; ++f) {
    const int nfq = kit.fquad[f].size();
    for (int q = 0; q < nfq; ++q)
      kit.Jsum += kit.fquad[f].weights[q] * kit.jump[f].middleRows(2 * q, 2).transpose() *
                  kit.jump[f].middleRows(2 * q, 2);
  }
  kit.M0 = kit.h * kit.Jsum;
  kit.M0.topLeftCorner(kit.n_rtn, kit.n_rtn) += kit.M_rtn;
  kit.norm1_form = kit.Jsum / kit.h;
  kit.norm1_form.topLeftCorner(kit.n_rtn, kit.n_rtn) += kit.stiff_rtn;

  //--- pressure coupling and gradient
  kit.Bg.setZero(kit.n_rtn, kit.n_p);
  const int pel = sp.dofs.pel_dim;
  const int pfd = sp.dofs.pface_dim;
  for (int q = 0; q < nq; ++q) {
    const double w = kit.equad.weights[q];
    const Eigen::VectorXd div = sp.rtn[T].div_all(kit.equad.nodes[q]);
    const Eigen::VectorXd phik = pk.eval_all(kit.equad.nodes[q]);
    kit.Bg.leftCols(pel) -= w * div * phik.transpose();
  }
  for (int f = 0; f < 3; ++f) {
    const int nfq = kit.fquad[f].size();
    for (int q = 0; q < nfq; ++q) {
      const double w = kit.fquad[f].weights[q];
      kit.Bg.middleCols(pel + f * pfd, pfd) +=
          w * kit.trace_normal[f][q] * kit.fb_val[f][q].transpose();
    }
  }
  kit.Gt = kit.M_rtn.llt().solve(kit.Bg);

  //--- L-infinity sample set
  kit.linf_points = kit.equad.nodes;
  for (const auto& v : verts) kit.linf_points.push_back(v);
  for (int f = 0; f < 3; ++f)
    kit.linf_points.push_back(mesh.face_midpoint[mesh.element_faces[T][f].face]);

  return kit;
}

std::vector<LocalKit> build_kits(const Spaces& spaces, StabilizationVariant variant) {
  std::vector<LocalKit> kits(spaces.mesh->n_elements());
  parallel_for(spaces.mesh->n_elements(),
               [&](int T) { kits[T] = build_local_kit(spaces, T, variant); });
  return kits;
}

//------------------------------------------------------------------------------
// Convective form
//------------------------------------------------------------------------------

namespace {

// (v_F + v_T) evaluation rows at a face quadrature node, 2 x n_u. The jump
// rows hold [-trace | +psi]; flipping the element columns gives the sum.
Eigen::MatrixXd plus_rows(const LocalKit& kit, int f, int q) {
  Eigen::MatrixXd P = kit.jump[f].middleRows(2 * q, 2);
  P.leftCols(kit.n_rtn) = kit.trace_val[f][q];
  return P;
}

}  // namespace

double convective_form(const LocalKit& kit, const Eigen::VectorXd& w_loc,
                       const Eigen::VectorXd& v_loc, const Eigen::VectorXd& z_loc) {
  const auto we = w_loc.head(kit.n_rtn);
  const auto ve = v_loc.head(kit.n_rtn);
  const auto ze = z_loc.head(kit.n_rtn);

  double t = 0.0;
  for (int q = 0; q < kit.equad.size(); ++q) {
    const Vec2 w = kit.rtn_val[q] * we;
    const Vec2 conv = w.x() * (kit.rtn_dx[q] * ve) + w.y() * (kit.rtn_dy[q] * ve);
    t += kit.equad.weights[q] * conv.dot(kit.rtn_val[q] * ze);
  }
  for (int f = 0; f < 3; ++f) {
    for (int q = 0; q < kit.fquad[f].size(); ++q) {
      const double wn = kit.trace_normal[f][q].dot(we);
      const Vec2 dv = kit.jump[f].middleRows(2 * q, 2) * v_loc;
      const Vec2 sz = plus_rows(kit, f, q) * z_loc;
      t += 0.5 * kit.fquad[f].weights[q] * wn * dv.dot(sz);
    }
  }
  return t;
}

Eigen::MatrixXd convective_dv(const LocalKit& kit, const Eigen::VectorXd& w_loc) {
  const auto we = w_loc.head(kit.n_rtn);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(kit.n_u, kit.n_u);
  for (int q = 0; q < kit.equad.size(); ++q) {
    const Vec2 w = kit.rtn_val[q] * we;
    const Eigen::Matrix2Xd D = w.x() * kit.rtn_dx[q] + w.y() * kit.rtn_dy[q];
    M.topLeftCorner(kit.n_rtn, kit.n_rtn) +=
        kit.equad.weights[q] * kit.rtn_val[q].transpose() * D;
  }
  for (int f = 0; f < 3; ++f) {
    for (int q = 0; q < kit.fquad[f].size(); ++q) {
      const double wn = kit.trace_normal[f][q].dot(we);
      if (wn == 0.0) continue;
      M += 0.5 * kit.fquad[f].weights[q] * wn * plus_rows(kit, f, q).transpose() *
           kit.jump[f].middleRows(2 * q, 2);
    }
  }
  return M;
}

Eigen::MatrixXd convective_dw(const LocalKit& kit, const Eigen::VectorXd& v_loc) {
  const auto ve = v_loc.head(kit.n_rtn);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(kit.n_u, kit.n_u);
  for (int q = 0; q < kit.equad.size(); ++q) {
    const Vec2 dvx = kit.rtn_dx[q] * ve;
    const Vec2 dvy = kit.rtn_dy[q] * ve;
    Mat2 Gv;
    Gv.col(0) = dvx;
    Gv.col(1) = dvy;
    M.topLeftCorner(kit.n_rtn, kit.n_rtn) += kit.equad.weights[q] *
                                             kit.rtn_val[q].transpose() *
                                             (Gv * kit.rtn_val[q]);
  }
  for (int f = 0; f < 3; ++f) {
    for (int q = 0; q < kit.fquad[f].size(); ++q) {
      const Vec2 dv = kit.jump[f].middleRows(2 * q, 2) * v_loc;
      const Eigen::VectorXd pz = plus_rows(kit, f, q).transpose() * dv;
      M.leftCols(kit.n_rtn) +=
          0.5 * kit.fquad[f].weights[q] * pz * kit.trace_normal[f][q].transpose();
    }
  }
  return M;
}

//------------------------------------------------------------------------------
// Norms and regime diagnostics
//------------------------------------------------------------------------------

LocalNorms local_norms(const LocalKit& kit, const Eigen::VectorXd& v_loc, double beta) {
  LocalNorms out;
  out.norm0 = std::sqrt(std::max(0.0, v_loc.dot(kit.M0 * v_loc)));
  out.norm1 = std::sqrt(std::max(0.0, v_loc.dot(kit.norm1_form * v_loc)));
  out.beta_semi = std::sqrt(std::max(0.0, beta * v_loc.dot(kit.Jsum * v_loc)));

  // Sampled sup of |grad v_T| (Frobenius) and of the face differences.
  double gmax = 0.0;
  const auto ve = v_loc.head(kit.n_rtn);
  for (int q = 0; q < kit.equad.size(); ++q) {
    Mat2 G;
    G.col(0) = kit.rtn_dx[q] * ve;
    G.col(1) = kit.rtn_dy[q] * ve;
    gmax = std::max(gmax, G.norm());
  }
  double jmax = 0.0;
  for (int f = 0; f < 3; ++f)
    for (int q = 0; q < kit.fquad[f].size(); ++q)
      jmax = std::max(jmax, (kit.jump[f].middleRows(2 * q, 2) * v_loc).norm());
  out.norm1_infty = gmax + jmax / kit.h;
  return out;
}

double sampled_linf(const LocalKit& kit, const Spaces& spaces,
                    const Eigen::VectorXd& elem_coeffs) {
  const RTNSpace& rtn = spaces.rtn[kit.T];
  double sup = 0.0;
  for (const auto& x : kit.linf_points) {
    Vec2 v = Vec2::Zero();
    for (int m = 0; m < kit.n_rtn; ++m)
      if (elem_coeffs[m] != 0.0) v += elem_coeffs[m] * rtn.eval(m, x);
    sup = std::max(sup, v.norm());
  }
  return sup;
}

double beta_parameter(const LocalKit& kit, const Spaces& spaces,
                      const Eigen::VectorXd& u_elem, double c_s) {
  if (!(c_s > 0.0)) throw std::invalid_argument("beta_parameter: c_s must be positive");
  return std::max(c_s, sampled_linf(kit, spaces, u_elem));
}

double local_reynolds(const LocalKit& kit, const Spaces& spaces,
                      const Eigen::VectorXd& u_elem, double beta, double nu) {
  return (beta + sampled_linf(kit, spaces, u_elem)) * kit.h / nu;
}

//------------------------------------------------------------------------------
// Global reductions
//------------------------------------------------------------------------------

double norm_0h(const Spaces& sp, const std::vector<LocalKit>& kits, const HybridVelocity& v) {
  double s = 0.0;
  for (int T = 0; T < sp.mesh->n_elements(); ++T) {
    const Eigen::VectorXd loc = sp.local_velocity(v, T);
    s += loc.dot(kits[T].M0 * loc);
  }
  return std::sqrt(std::max(0.0, s));
}

double norm_1h(const Spaces& sp, const std::vector<LocalKit>& kits, const HybridVelocity& v) {
  double s = 0.0;
  for (int T = 0; T < sp.mesh->n_elements(); ++T) {
    const Eigen::VectorXd loc = sp.local_velocity(v, T);
    s += loc.dot(kits[T].norm1_form * loc);
  }
  return std::sqrt(std::max(0.0, s));
}

double seminorm_beta(const Spaces& sp, const std::vector<LocalKit>& kits, const HybridVelocity& v,
                     const std::vector<double>& beta) {
  double s = 0.0;
  for (int T = 0; T < sp.mesh->n_elements(); ++T) {
    const Eigen::VectorXd loc = sp.local_velocity(v, T);
    s += beta[T] * loc.dot(kits[T].Jsum * loc);
  }
  return std::sqrt(std::max(0.0, s));
}

double coupling_global(const Spaces& sp, const std::vector<LocalKit>& kits,
                       const HybridVelocity& v, const HybridPressure& q) {
  double s = 0.0;
  for (int T = 0; T < sp.mesh->n_elements(); ++T)
    s += v.elem[T].dot(kits[T].Bg * sp.local_pressure(q, T));
  return s;
}

double convective_global(const Spaces& sp, const std::vector<LocalKit>& kits,
                         const HybridVelocity& w, const HybridVelocity& v,
                         const HybridVelocity& z, double* abs_sum) {
  double s = 0.0, a = 0.0;
  for (int T = 0; T < sp.mesh->n_elements(); ++T) {
    const double tT = convective_form(kits[T], sp.local_velocity(w, T), sp.local_velocity(v, T),
                                      sp.local_velocity(z, T));
    s += tT;
    a += std::abs(tT);
  }
  if (abs_sum) *abs_sum = a;
  return s;
}

double chi_indicator(const Spaces& sp, const std::vector<LocalKit>& kits, const HybridVelocity& u,
                     const std::vector<double>& beta, double nu, double* max_re) {
  double chi = 0.0, re_max = 0.0;
  for (int T = 0; T < sp.mesh->n_elements(); ++T) {
    const double sup = sampled_linf(kits[T], sp, u.elem[T]);
    const double re = (beta[T] + sup) * kits[T].h / nu;
    re_max = std::max(re_max, re);
    if (re > 1.0) chi = std::max(chi, sup / beta[T]);
  }
  if (max_re) *max_re = re_max;
  return chi;
}

}  // namespace hyns
