#include "hyns/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hyns/parallel.hpp"

namespace hyns {

int automatic_step_count(int k, double h) {
  const double steps = std::pow(h, -0.5 * (k + 1));
  return std::max(10, static_cast<int>(std::ceil(steps - 1e-12)));
}

namespace {

int find_slot(const Eigen::SparseMatrix<double>& A, int row, int col) {
  const int* outer = A.outerIndexPtr();
  const int* inner = A.innerIndexPtr();
  const int* begin = inner + outer[col];
  const int* end = inner + outer[col + 1];
  const int* it = std::lower_bound(begin, end, row);
  if (it == end || *it != row) return -1;
  return static_cast<int>(it - inner);
}

}  // namespace

NavierStokesSolver::NavierStokesSolver(const Spaces& spaces, const std::vector<LocalKit>& kits,
                                       SchemeConfig config)
    : spaces_(&spaces), kits_(&kits), config_(config) {
  const Mesh& mesh = *spaces.mesh;
  const DofMap& dm = spaces.dofs;
  const int nT = mesh.n_elements();

  gidx_u_.resize(nT);
  gidx_p_.resize(nT);
  for (int T = 0; T < nT; ++T) {
    auto& gu = gidx_u_[T];
    gu.resize(spaces.n_local_velocity(), -1);
    for (int m = 0; m < dm.rtn_dim; ++m) gu[m] = dm.u_elem(T) + m;
    for (int f = 0; f < 3; ++f) {
      const int F = mesh.element_faces[T][f].face;
      const int off = dm.u_face(F);
      if (off >= 0)
        for (int m = 0; m < dm.vface_dim; ++m) gu[dm.rtn_dim + f * dm.vface_dim + m] = off + m;
    }
    auto& gp = gidx_p_[T];
    gp.resize(spaces.n_local_pressure());
    for (int m = 0; m < dm.pel_dim; ++m) gp[m] = dm.p_elem(T) + m;
    for (int f = 0; f < 3; ++f) {
      const int F = mesh.element_faces[T][f].face;
      for (int m = 0; m < dm.pface_dim; ++m)
        gp[dm.pel_dim + f * dm.pface_dim + m] = dm.p_face(F) + m;
    }
  }

  // over-integration caches for the forcing term
  oquad_.resize(nT);
  orval_.resize(nT);
  parallel_for(nT, [&](int T) {
    oquad_[T] = make_triangle_quadrature(mesh.element_vertices(T),
                                         overintegration_exactness(config_.k));
    orval_[T].resize(oquad_[T].size());
    for (int q = 0; q < oquad_[T].size(); ++q)
      orval_[T][q] = spaces.rtn[T].eval_all(oquad_[T].nodes[q]);
  });

  build_pattern();
}

void NavierStokesSolver::build_pattern() {
  const Spaces& sp = *spaces_;
  const DofMap& dm = sp.dofs;
  const int nT = sp.mesh->n_elements();
  const int n_u = sp.n_local_velocity();
  const int n_p = sp.n_local_pressure();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(nT) * (n_u * n_u + 2 * dm.rtn_dim * n_p + 2));
  for (int T = 0; T < nT; ++T) {
    const auto& gu = gidx_u_[T];
    const auto& gp = gidx_p_[T];
    for (int i = 0; i < n_u; ++i) {
      if (gu[i] < 0) continue;
      for (int j = 0; j < n_u; ++j)
        if (gu[j] >= 0) trip.emplace_back(gu[i], gu[j], 0.0);
    }
    for (int i = 0; i < dm.rtn_dim; ++i)
      for (int j = 0; j < n_p; ++j) {
        trip.emplace_back(gu[i], gp[j], 0.0);
        trip.emplace_back(gp[j], gu[i], 0.0);
      }
    trip.emplace_back(dm.p_elem(T), dm.mu_index, 0.0);
    trip.emplace_back(dm.mu_index, dm.p_elem(T), 0.0);
  }
  J_.resize(dm.total, dm.total);
  J_.setFromTriplets(trip.begin(), trip.end());
  J_.makeCompressed();

  scatter_uu_.resize(nT);
  scatter_up_.resize(nT);
  scatter_pu_.resize(nT);
  scatter_pmu_.resize(nT);
  scatter_mup_.resize(nT);
  parallel_for(nT, [&](int T) {
    const auto& gu = gidx_u_[T];
    const auto& gp = gidx_p_[T];
    auto& suu = scatter_uu_[T];
    suu.assign(static_cast<size_t>(n_u) * n_u, -1);
    for (int i = 0; i < n_u; ++i) {
      if (gu[i] < 0) continue;
      for (int j = 0; j < n_u; ++j)
        if (gu[j] >= 0) suu[i * n_u + j] = find_slot(J_, gu[i], gu[j]);
    }
    auto& sup = scatter_up_[T];
    auto& spu = scatter_pu_[T];
    sup.assign(static_cast<size_t>(dm.rtn_dim) * n_p, -1);
    spu.assign(static_cast<size_t>(n_p) * dm.rtn_dim, -1);
    for (int i = 0; i < dm.rtn_dim; ++i)
      for (int j = 0; j < n_p; ++j) {
        sup[i * n_p + j] = find_slot(J_, gu[i], gp[j]);
        spu[j * dm.rtn_dim + i] = find_slot(J_, gp[j], gu[i]);
      }
    scatter_pmu_[T] = find_slot(J_, dm.p_elem(T), dm.mu_index);
    scatter_mup_[T] = find_slot(J_, dm.mu_index, dm.p_elem(T));
  });
}

//------------------------------------------------------------------------------
// Gather / scatter helpers
//------------------------------------------------------------------------------

namespace {

Eigen::VectorXd local_velocity_from(const Eigen::VectorXd& X, const std::vector<int>& gidx) {
  Eigen::VectorXd loc(gidx.size());
  for (size_t i = 0; i < gidx.size(); ++i) loc[i] = gidx[i] >= 0 ? X[gidx[i]] : 0.0;
  return loc;
}

Eigen::VectorXd local_pressure_from(const Eigen::VectorXd& X, const std::vector<int>& gidx) {
  Eigen::VectorXd loc(gidx.size());
  for (size_t i = 0; i < gidx.size(); ++i) loc[i] = X[gidx[i]];
  return loc;
}

}  // namespace

HybridVelocity NavierStokesSolver::extract_velocity(const Eigen::VectorXd& X) const {
  const DofMap& dm = spaces_->dofs;
  HybridVelocity u(dm.k, dm.n_elements, dm.n_faces);
  for (int T = 0; T < dm.n_elements; ++T) u.elem[T] = X.segment(dm.u_elem(T), dm.rtn_dim);
  for (int F = 0; F < dm.n_faces; ++F)
    if (dm.u_face(F) >= 0) u.face[F] = X.segment(dm.u_face(F), dm.vface_dim);
  return u;
}

HybridPressure NavierStokesSolver::extract_pressure(const Eigen::VectorXd& X) const {
  const DofMap& dm = spaces_->dofs;
  HybridPressure p(dm.k, dm.n_elements, dm.n_faces);
  for (int T = 0; T < dm.n_elements; ++T) p.elem[T] = X.segment(dm.p_elem(T), dm.pel_dim);
  for (int F = 0; F < dm.n_faces; ++F) p.face[F] = X.segment(dm.p_face(F), dm.pface_dim);
  return p;
}

Eigen::VectorXd NavierStokesSolver::pack(const HybridVelocity& u, const HybridPressure& p) const {
  const DofMap& dm = spaces_->dofs;
  Eigen::VectorXd X = Eigen::VectorXd::Zero(dm.total);
  for (int T = 0; T < dm.n_elements; ++T) X.segment(dm.u_elem(T), dm.rtn_dim) = u.elem[T];
  for (int F = 0; F < dm.n_faces; ++F)
    if (dm.u_face(F) >= 0) X.segment(dm.u_face(F), dm.vface_dim) = u.face[F];
  for (int T = 0; T < dm.n_elements; ++T) X.segment(dm.p_elem(T), dm.pel_dim) = p.elem[T];
  for (int F = 0; F < dm.n_faces; ++F) X.segment(dm.p_face(F), dm.pface_dim) = p.face[F];
  return X;
}

std::vector<double> NavierStokesSolver::beta_of_vector(const Eigen::VectorXd& X) const {
  const DofMap& dm = spaces_->dofs;
  std::vector<double> beta(dm.n_elements);
  parallel_for(dm.n_elements, [&](int T) {
    beta[T] = beta_parameter((*kits_)[T], *spaces_, X.segment(dm.u_elem(T), dm.rtn_dim),
                             config_.c_s);
  });
  return beta;
}

Eigen::VectorXd NavierStokesSolver::momentum_forcing(double t, const TimeVectorField& f) const {
  const DofMap& dm = spaces_->dofs;
  Eigen::VectorXd F = Eigen::VectorXd::Zero(dm.total);
  for (int T = 0; T < dm.n_elements; ++T) {
    Eigen::VectorXd load = Eigen::VectorXd::Zero(dm.rtn_dim);
    const auto& quad = oquad_[T];
    for (int q = 0; q < quad.size(); ++q) {
      const Vec2 fv = f(t, quad.nodes[q]);
      load += quad.weights[q] * (orval_[T][q].transpose() * fv);
    }
    F.segment(dm.u_elem(T), dm.rtn_dim) = load;
  }
  return F;
}

Eigen::VectorXd NavierStokesSolver::convective_momentum(const Eigen::VectorXd& X,
                                                        const std::vector<double>& beta) const {
  const DofMap& dm = spaces_->dofs;
  Eigen::VectorXd R = Eigen::VectorXd::Zero(dm.total);
  for (int T = 0; T < dm.n_elements; ++T) {
    const LocalKit& kit = (*kits_)[T];
    const Eigen::VectorXd vloc = local_velocity_from(X, gidx_u_[T]);
    Eigen::VectorXd r = convective_dv(kit, vloc) * vloc;
    r.noalias() += beta[T] * (kit.Jsum * vloc);
    const auto& gu = gidx_u_[T];
    for (size_t i = 0; i < gu.size(); ++i)
      if (gu[i] >= 0) R[gu[i]] += r[i];
  }
  return R;
}

//------------------------------------------------------------------------------
// Step data and assembly
//------------------------------------------------------------------------------

StepData NavierStokesSolver::make_step_data(const TransientState& prev, double dt,
                                            const TimeVectorField& f) const {
  StepData sd;
  sd.dt = dt;
  sd.u_prev = pack(prev.u, prev.p);
  sd.forcing = 0.5 * (momentum_forcing(prev.t, f) + momentum_forcing(prev.t + dt, f));
  sd.beta_prev = prev.beta;
  if (config_.convection == ConvectionScheme::Trapezoid && config_.enable_convection)
    sd.conv_prev = convective_momentum(sd.u_prev, prev.beta);
  else
    sd.conv_prev = Eigen::VectorXd::Zero(spaces_->dofs.total);
  sd.beta = prev.beta;
  return sd;
}

std::vector<double> NavierStokesSolver::beta_snapshot(const StepData& sd,
                                                      const Eigen::VectorXd& X) const {
  if (config_.convection == ConvectionScheme::Midpoint) {
    const Eigen::VectorXd mid = 0.5 * (X + sd.u_prev);
    return beta_of_vector(mid);
  }
  return beta_of_vector(X);
}

const Eigen::SparseMatrix<double>& NavierStokesSolver::assemble_system(
    const StepData& sd, const Eigen::VectorXd& X, Eigen::VectorXd& R) const {
  const Spaces& sp = *spaces_;
  const DofMap& dm = sp.dofs;
  const int nT = dm.n_elements;
  const int n_u = sp.n_local_velocity();
  const int n_p = sp.n_local_pressure();
  const bool midpoint = config_.convection == ConvectionScheme::Midpoint;
  const double nu = config_.nu;

  std::fill(J_.valuePtr(), J_.valuePtr() + J_.nonZeros(), 0.0);
  R.setZero(dm.total);

  std::vector<Eigen::MatrixXd> Aloc(nT);
  std::vector<Eigen::VectorXd> rloc(nT);
  std::vector<Eigen::VectorXd> rp(nT);

  parallel_for(nT, [&](int T) {
    const LocalKit& kit = (*kits_)[T];
    const Eigen::VectorXd now = local_velocity_from(X, gidx_u_[T]);
    const Eigen::VectorXd prev = local_velocity_from(sd.u_prev, gidx_u_[T]);
    const Eigen::VectorXd ploc = local_pressure_from(X, gidx_p_[T]);

    Eigen::MatrixXd A = kit.M0 / sd.dt;
    Eigen::VectorXd r = kit.M0 * ((now - prev) / sd.dt);
    if (config_.enable_viscosity) {
      A.noalias() += 0.5 * nu * kit.aT;
      r.noalias() += 0.5 * nu * (kit.aT * (now + prev));
    }
    if (config_.enable_convection) {
      if (midpoint) {
        const Eigen::VectorXd mid = 0.5 * (now + prev);
        const Eigen::MatrixXd Mdv = convective_dv(kit, mid);
        const Eigen::MatrixXd Mdw = convective_dw(kit, mid);
        r.noalias() += Mdv * mid;
        r.noalias() += sd.beta[T] * (kit.Jsum * mid);
        A.noalias() += 0.5 * (Mdv + Mdw);
        A.noalias() += (0.5 * sd.beta[T]) * kit.Jsum;
      } else {
        const Eigen::MatrixXd Mdv = convective_dv(kit, now);
        const Eigen::MatrixXd Mdw = convective_dw(kit, now);
        r.noalias() += 0.5 * (Mdv * now);
        r.noalias() += (0.5 * sd.beta[T]) * (kit.Jsum * now);
        A.noalias() += 0.5 * (Mdv + Mdw);
        A.noalias() += (0.5 * sd.beta[T]) * kit.Jsum;
      }
    }
    // pressure coupling in the momentum rows
    r.head(dm.rtn_dim).noalias() += kit.Bg * ploc;

    Aloc[T] = std::move(A);
    rloc[T] = std::move(r);
    // mass rows: -b_T(u, q) (the mu column is added at scatter time)
    rp[T] = -kit.Bg.transpose() * now.head(dm.rtn_dim);
  });

  double* vals = J_.valuePtr();
  for (int T = 0; T < nT; ++T) {
    const LocalKit& kit = (*kits_)[T];
    const auto& gu = gidx_u_[T];
    const auto& gp = gidx_p_[T];
    const auto& suu = scatter_uu_[T];
    const auto& sup = scatter_up_[T];
    const auto& spu = scatter_pu_[T];
    const Eigen::MatrixXd& A = Aloc[T];

    for (int i = 0; i < n_u; ++i) {
      if (gu[i] < 0) continue;
      R[gu[i]] += rloc[T][i];
      const int row = i * n_u;
      for (int j = 0; j < n_u; ++j) {
        const int slot = suu[row + j];
        if (slot >= 0) vals[slot] += A(i, j);
      }
    }
    for (int i = 0; i < dm.rtn_dim; ++i)
      for (int j = 0; j < n_p; ++j) {
        vals[sup[i * n_p + j]] += kit.Bg(i, j);
        vals[spu[j * dm.rtn_dim + i]] -= kit.Bg(i, j);
      }
    for (int j = 0; j < n_p; ++j) R[gp[j]] += rp[T][j];

    const double sq_area = std::sqrt(kit.area);
    vals[scatter_pmu_[T]] += sq_area;
    vals[scatter_mup_[T]] += sq_area;
    R[dm.p_elem(T)] += sq_area * X[dm.mu_index];
    R[dm.mu_index] += sq_area * X[dm.p_elem(T)];
  }

  R -= sd.forcing;
  if (config_.convection == ConvectionScheme::Trapezoid && config_.enable_convection)
    R += 0.5 * sd.conv_prev;
  return J_;
}

Eigen::VectorXd NavierStokesSolver::assemble_residual(const StepData& sd,
                                                      const Eigen::VectorXd& X) const {
  // Residual-only path used by verification; reuses the full assembly.
  Eigen::VectorXd R;
  assemble_system(sd, X, R);
  return R;
}

//------------------------------------------------------------------------------
// Newton / stepping
//------------------------------------------------------------------------------

TransientState NavierStokesSolver::initial_state(const VectorField& u0) const {
  TransientState st;
  st.t = 0.0;
  st.u = spaces_->interpolate_velocity(u0);
  // Boundary face unknowns live in U_{h,0}: clamp the (numerically ~0)
  // projected traces of the zero boundary datum.
  for (int F = 0; F < spaces_->mesh->n_faces(); ++F)
    if (spaces_->mesh->boundary_face[F]) st.u.face[F].setZero();
  st.p = HybridPressure(spaces_->k, spaces_->mesh->n_elements(), spaces_->mesh->n_faces());
  st.beta.resize(spaces_->mesh->n_elements());
  for (int T = 0; T < spaces_->mesh->n_elements(); ++T)
    st.beta[T] = beta_parameter((*kits_)[T], *spaces_, st.u.elem[T], config_.c_s);
  return st;
}

TransientState NavierStokesSolver::step(const TransientState& prev, double dt,
                                        const TimeVectorField& f) const {
  StepData sd = make_step_data(prev, dt, f);
  Eigen::VectorXd X = sd.u_prev;
  Eigen::VectorXd R;

  double r0 = 0.0, r = 0.0;
  int iters = 0;
  std::vector<double> history;
  bool converged = false;

  for (int iter = 1; iter <= config_.newton_max_iter + 1; ++iter) {
    sd.beta = beta_snapshot(sd, X);
    assemble_system(sd, X, R);
    r = R.norm();
    history.push_back(r);
    if (iter == 1) r0 = r;
    if (iter > 1 && r <= std::max(config_.newton_tol * r0, 1e-14)) {
      iters = iter - 1;
      converged = true;
      break;
    }
    if (iter > config_.newton_max_iter) break;

    if (!lu_) {
      lu_ = std::make_unique<
          Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>();
    }
    if (!analyzed_) {
      lu_->analyzePattern(J_);
      analyzed_ = true;
    }
    lu_->factorize(J_);
    if (lu_->info() != Eigen::Success)
      throw std::runtime_error("NavierStokesSolver::step: singular linearized system");
    X += lu_->solve(-R);
  }

  if (!converged) {
    std::ostringstream msg;
    msg << "NavierStokesSolver::step: Newton did not converge at t = " << prev.t + dt
        << "; residual history:";
    for (double v : history) msg << " " << v;
    throw std::runtime_error(msg.str());
  }

  TransientState next;
  next.t = prev.t + dt;
  next.u = extract_velocity(X);
  next.p = extract_pressure(X);
  next.beta = sd.beta;
  next.newton_iters = iters;
  next.newton_residual = r0 > 0.0 ? r / r0 : r;
  return next;
}

StepDiagnostics NavierStokesSolver::diagnostics(const TransientState& state) const {
  StepDiagnostics d;
  d.t = state.t;
  d.newton_iters = state.newton_iters;
  d.newton_residual = state.newton_residual;
  const double n0 = norm_0h(*spaces_, *kits_, state.u);
  d.energy = n0 * n0;
  d.divergence = check_divergence_free(state.u);
  d.chi = chi_indicator(*spaces_, *kits_, state.u, state.beta, config_.nu, &d.max_re);
  return d;
}

RunResult NavierStokesSolver::run_transient(const VectorField& u0, const TimeVectorField& f,
                                            const StepObserver& observer) const {
  RunResult result;
  result.n_steps = config_.n_steps_override > 0 ? config_.n_steps_override
                                                : automatic_step_count(config_.k, spaces_->mesh->h());
  result.dt = config_.t_final / result.n_steps;

  TransientState state = initial_state(u0);
  StepDiagnostics d0 = diagnostics(state);
  result.log.push_back(d0);
  if (observer) observer(state, d0, 0, result.n_steps);

  for (int n = 1; n <= result.n_steps; ++n) {
    state = step(state, result.dt, f);
    StepDiagnostics d = diagnostics(state);
    result.log.push_back(d);
    if (observer) observer(state, d, n, result.n_steps);
  }
  result.final_state = std::move(state);
  return result;
}

DivergenceReport NavierStokesSolver::check_divergence_free(const HybridVelocity& u) const {
  const Spaces& sp = *spaces_;
  const Mesh& mesh = *sp.mesh;
  DivergenceReport rep;
  rep.scale = norm_0h(sp, *kits_, u);

  for (int T = 0; T < mesh.n_elements(); ++T) {
    // Orthonormal P^k basis: the coefficient 2-norm is the L²(T) norm.
    rep.max_element_div =
        std::max(rep.max_element_div, ((*kits_)[T].Div * u.elem[T]).norm());
  }

  auto local_face_index = [&](int T, int F) {
    for (int f = 0; f < 3; ++f)
      if (mesh.element_faces[T][f].face == F) return f;
    return -1;
  };

  for (int F = 0; F < mesh.n_faces(); ++F) {
    const int T1 = mesh.face_elements[F][0];
    const int f1 = local_face_index(T1, F);
    const LocalKit& k1 = (*kits_)[T1];
    if (mesh.boundary_face[F]) {
      double sq = 0.0;
      for (int q = 0; q < k1.fquad[f1].size(); ++q) {
        const double tn = k1.trace_normal[f1][q].dot(u.elem[T1]);
        sq += k1.fquad[f1].weights[q] * tn * tn;
      }
      rep.max_boundary_trace = std::max(rep.max_boundary_trace, std::sqrt(sq));
    } else {
      const int T2 = mesh.face_elements[F][1];
      const int f2 = local_face_index(T2, F);
      const LocalKit& k2 = (*kits_)[T2];
      double sq = 0.0;
      for (int q = 0; q < k1.fquad[f1].size(); ++q) {
        const double jump =
            k1.trace_normal[f1][q].dot(u.elem[T1]) + k2.trace_normal[f2][q].dot(u.elem[T2]);
        sq += k1.fquad[f1].weights[q] * jump * jump;
      }
      rep.max_interior_jump = std::max(rep.max_interior_jump, std::sqrt(sq));
    }
  }
  return rep;
}

}  // namespace hyns
