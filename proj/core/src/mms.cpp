#include "hyns/mms.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "hyns/parallel.hpp"

namespace hyns {

namespace {
constexpr double kPi = 3.14159265358979323846;

inline double gmod(double t) { return (3.0 + 2.0 * std::cos(4.0 * t)) / 5.0; }
inline double gmod_dt(double t) { return -8.0 * std::sin(4.0 * t) / 5.0; }

// y-profiles of the two components and their derivatives
inline double psi(double y) { return 16.0 * y * (1.0 - y) * (1.0 - 2.0 * y); }
inline double psi_d(double y) { return 16.0 * (1.0 - 6.0 * y + 6.0 * y * y); }
inline double psi_dd(double y) { return 16.0 * (12.0 * y - 6.0); }
inline double chi_fn(double y) {
  const double b = y * (1.0 - y);
  return b * b;
}
inline double chi_d(double y) { return 2.0 * y * (1.0 - y) * (1.0 - 2.0 * y); }
inline double chi_dd(double y) {
  const double a = 1.0 - 2.0 * y;
  return 2.0 * a * a - 4.0 * y * (1.0 - y);
}
}  // namespace

Vec2 MmsSolution::velocity(double t, const Vec2& x) const {
  const double s = std::sin(kPi * x.x());
  return gmod(t) * Vec2(psi(x.y()) * s * s,
                        -8.0 * kPi * chi_fn(x.y()) * std::sin(2.0 * kPi * x.x()));
}

Mat2 MmsSolution::velocity_gradient(double t, const Vec2& x) const {
  const double g = gmod(t);
  const double s = std::sin(kPi * x.x());
  const double s2 = std::sin(2.0 * kPi * x.x());
  const double c2 = std::cos(2.0 * kPi * x.x());
  Mat2 G;
  G(0, 0) = g * psi(x.y()) * kPi * s2;          // d(u1)/dx
  G(0, 1) = g * psi_d(x.y()) * s * s;           // d(u1)/dy
  G(1, 0) = -16.0 * kPi * kPi * g * chi_fn(x.y()) * c2;
  G(1, 1) = -8.0 * kPi * g * chi_d(x.y()) * s2;
  return G;
}

Vec2 MmsSolution::velocity_dt(double t, const Vec2& x) const {
  const double s = std::sin(kPi * x.x());
  return gmod_dt(t) * Vec2(psi(x.y()) * s * s,
                           -8.0 * kPi * chi_fn(x.y()) * std::sin(2.0 * kPi * x.x()));
}

Vec2 MmsSolution::velocity_laplacian(double t, const Vec2& x) const {
  const double g = gmod(t);
  const double s = std::sin(kPi * x.x());
  const double s2 = std::sin(2.0 * kPi * x.x());
  const double c2 = std::cos(2.0 * kPi * x.x());
  Vec2 lap;
  lap.x() = g * (psi(x.y()) * 2.0 * kPi * kPi * c2 + psi_dd(x.y()) * s * s);
  lap.y() = g * (32.0 * kPi * kPi * kPi * chi_fn(x.y()) * s2 - 8.0 * kPi * chi_dd(x.y()) * s2);
  return lap;
}

double MmsSolution::pressure(double t, const Vec2& x) const {
  return gmod(t) * std::sin(kPi * x.x()) * std::cos(kPi * x.y());
}

Vec2 MmsSolution::pressure_gradient(double t, const Vec2& x) const {
  const double g = gmod(t);
  return g * Vec2(kPi * std::cos(kPi * x.x()) * std::cos(kPi * x.y()),
                  -kPi * std::sin(kPi * x.x()) * std::sin(kPi * x.y()));
}

Vec2 MmsSolution::forcing(double t, const Vec2& x) const {
  const Vec2 u = velocity(t, x);
  const Mat2 G = velocity_gradient(t, x);
  return velocity_dt(t, x) - nu * velocity_laplacian(t, x) + G * u + pressure_gradient(t, x);
}

VectorField MmsSolution::velocity_at(double t) const {
  return [this, t](const Vec2& x) { return velocity(t, x); };
}

ScalarField MmsSolution::pressure_at(double t) const {
  return [this, t](const Vec2& x) { return pressure(t, x); };
}

TimeVectorField MmsSolution::forcing_field() const {
  return [this](double t, const Vec2& x) { return forcing(t, x); };
}

VectorField solenoidal_polynomial_field(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::array<double, 6> c;  // psi = c0 + c1 x + c2 y + c3 x² + c4 xy + c5 y²
  for (auto& v : c) v = unif(rng);
  return [c](const Vec2& p) {
    const double x = p.x(), y = p.y();
    const double B = x * (1.0 - x) * y * (1.0 - y);
    const double Bx = (1.0 - 2.0 * x) * y * (1.0 - y);
    const double By = x * (1.0 - x) * (1.0 - 2.0 * y);
    const double psi_v = c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
    const double psi_x = c[1] + 2.0 * c[3] * x + c[4] * y;
    const double psi_y = c[2] + c[4] * x + 2.0 * c[5] * y;
    // phi = B² psi; w = (d phi / dy, -d phi / dx)
    const double phi_x = 2.0 * B * Bx * psi_v + B * B * psi_x;
    const double phi_y = 2.0 * B * By * psi_v + B * B * psi_y;
    return Vec2(phi_y, -phi_x);
  };
}

//------------------------------------------------------------------------------
// Error accumulators
//------------------------------------------------------------------------------

TnormAccumulator::TnormAccumulator(const Spaces& spaces, const std::vector<LocalKit>& kits,
                                   double nu, const MmsSolution* exact)
    : spaces_(&spaces), kits_(&kits), nu_(nu), exact_(exact) {}

void TnormAccumulator::feed(const TransientState& state, int step, int n_steps, double dt) {
  HybridVelocity v = state.u;
  if (exact_) v -= spaces_->interpolate_velocity(exact_->velocity_at(state.t));
  const double n0 = norm_0h(*spaces_, *kits_, v);
  max0_sq_ = std::max(max0_sq_, n0 * n0);
  const double n1 = norm_1h(*spaces_, *kits_, v);
  const double nb = seminorm_beta(*spaces_, *kits_, v, state.beta);
  const double w = (step == 0 || step == n_steps) ? 0.5 * dt : dt;
  integral_ += w * (nu_ * n1 * n1 + nb * nb);
}

double TnormAccumulator::value() const { return std::sqrt(max0_sq_ + integral_); }

ReconstructionErrorAccumulator::ReconstructionErrorAccumulator(const Spaces& spaces,
                                                               const std::vector<LocalKit>& kits,
                                                               double nu, const MmsSolution& exact)
    : spaces_(&spaces), kits_(&kits), nu_(nu), exact_(&exact) {}

void ReconstructionErrorAccumulator::feed(const TransientState& state, int step, int n_steps,
                                          double dt) {
  const Mesh& mesh = *spaces_->mesh;
  const int nT = mesh.n_elements();
  const double t = state.t;
  std::vector<double> l2(nT, 0.0), h1(nT, 0.0);

  parallel_for(nT, [&](int T) {
    const LocalKit& kit = (*kits_)[T];
    const PolyBasis& pk1 = spaces_->elem_pk1[T];
    const int N1 = pk1.dim();
    const Eigen::VectorXd rec = kit.R * spaces_->local_velocity(state.u, T);
    const QuadRule quad =
        make_triangle_quadrature(mesh.element_vertices(T), overintegration_exactness(spaces_->k));
    double el2 = 0.0, eh1 = 0.0;
    for (int q = 0; q < quad.size(); ++q) {
      const Vec2& x = quad.nodes[q];
      const Eigen::VectorXd phi = pk1.eval_all(x);
      const Eigen::MatrixXd dphi = pk1.grad_all(x);  // N1 x 2
      const Vec2 uh(rec.head(N1).dot(phi), rec.tail(N1).dot(phi));
      Mat2 Gh;
      Gh.row(0) = rec.head(N1).transpose() * dphi;
      Gh.row(1) = rec.tail(N1).transpose() * dphi;
      const Vec2 du = uh - exact_->velocity(t, x);
      const Mat2 dG = Gh - exact_->velocity_gradient(t, x);
      el2 += quad.weights[q] * du.squaredNorm();
      eh1 += quad.weights[q] * dG.squaredNorm();
    }
    l2[T] = el2;
    h1[T] = eh1;
  });

  double l2_sum = 0.0, h1_sum = 0.0;
  for (int T = 0; T < nT; ++T) {
    l2_sum += l2[T];
    h1_sum += h1[T];
  }
  max0_sq_ = std::max(max0_sq_, l2_sum);
  const double w = (step == 0 || step == n_steps) ? 0.5 * dt : dt;
  integral_ += w * nu_ * h1_sum;
}

double ReconstructionErrorAccumulator::value() const { return std::sqrt(max0_sq_ + integral_); }

//------------------------------------------------------------------------------
// Study harness
//------------------------------------------------------------------------------

double estimated_order(double e_coarse, double e_fine, double h_coarse, double h_fine) {
  return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

void ConvergenceReport::compute_eocs() {
  tnorm_eoc.clear();
  reconstruction_eoc.clear();
  for (size_t i = 0; i + 1 < levels.size(); ++i) {
    tnorm_eoc.push_back(estimated_order(levels[i].tnorm_err, levels[i + 1].tnorm_err,
                                        levels[i].h, levels[i + 1].h));
    reconstruction_eoc.push_back(estimated_order(levels[i].reconstruction_err,
                                                 levels[i + 1].reconstruction_err, levels[i].h,
                                                 levels[i + 1].h));
  }
}

ConvergenceReport eoc_study(const SchemeConfig& config, const std::vector<int>& levels,
                            MeshPattern pattern) {
  ConvergenceReport report;
  report.k = config.k;
  report.nu = config.nu;
  MmsSolution exact{config.nu};

  for (int n : levels) {
    const Mesh mesh = build_structured_mesh(n, pattern);
    const Spaces spaces(mesh, config.k);
    const auto kits = build_kits(spaces, config.stabilization);
    const NavierStokesSolver solver(spaces, kits, config);

    TnormAccumulator tnorm(spaces, kits, config.nu, &exact);
    ReconstructionErrorAccumulator recon(spaces, kits, config.nu, exact);
    LevelResult lvl;
    lvl.n = n;
    lvl.h = mesh.h();

    double iter_sum = 0.0;
    const RunResult run = solver.run_transient(
        exact.velocity_at(0.0), exact.forcing_field(),
        [&](const TransientState& st, const StepDiagnostics& d, int step, int n_steps) {
          const double dt = config.t_final / n_steps;
          tnorm.feed(st, step, n_steps, dt);
          recon.feed(st, step, n_steps, dt);
          lvl.max_re = std::max(lvl.max_re, d.max_re);
          lvl.chi_max = std::max(lvl.chi_max, d.chi);
          if (step > 0) iter_sum += st.newton_iters;
        });

    lvl.n_steps = run.n_steps;
    lvl.tnorm_err = tnorm.value();
    lvl.reconstruction_err = recon.value();
    lvl.newton_avg_iters = iter_sum / run.n_steps;
    report.levels.push_back(lvl);
  }
  report.compute_eocs();
  return report;
}

void write_csv(const ConvergenceReport& report, std::ostream& out) {
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return std::string(buf);
  };
  out << "k,nu,n,h,Ntf,tnorm_err,tnorm_eoc,E_err,E_eoc,max_ReT,newton_avg_iters\n";
  for (size_t i = 0; i < report.levels.size(); ++i) {
    const LevelResult& l = report.levels[i];
    out << report.k << "," << fmt(report.nu) << "," << l.n << "," << fmt(l.h) << "," << l.n_steps
        << "," << fmt(l.tnorm_err) << ",";
    if (i > 0) out << fmt(report.tnorm_eoc[i - 1]);
    out << "," << fmt(l.reconstruction_err) << ",";
    if (i > 0) out << fmt(report.reconstruction_eoc[i - 1]);
    out << "," << fmt(l.max_re) << "," << fmt(l.newton_avg_iters) << "\n";
  }
}

double apriori_bound(const Spaces& spaces, const MmsSolution& exact, double t_final,
                     int n_steps) {
  const Mesh& mesh = *spaces.mesh;
  const int ex = overintegration_exactness(spaces.k);

  auto f_sq = [&](double t) {
    double s = 0.0;
    for (int T = 0; T < mesh.n_elements(); ++T) {
      const QuadRule quad = make_triangle_quadrature(mesh.element_vertices(T), ex);
      for (int q = 0; q < quad.size(); ++q)
        s += quad.weights[q] * exact.forcing(t, quad.nodes[q]).squaredNorm();
    }
    return s;
  };
  double f_int = 0.0;
  const double dt = t_final / n_steps;
  for (int m = 0; m <= n_steps; ++m) {
    const double w = (m == 0 || m == n_steps) ? 0.5 * dt : dt;
    f_int += w * f_sq(m * dt);
  }

  double u0_h1 = 0.0;
  for (int T = 0; T < mesh.n_elements(); ++T) {
    const QuadRule quad = make_triangle_quadrature(mesh.element_vertices(T), ex);
    for (int q = 0; q < quad.size(); ++q) {
      u0_h1 += quad.weights[q] * (exact.velocity(0.0, quad.nodes[q]).squaredNorm() +
                                  exact.velocity_gradient(0.0, quad.nodes[q]).squaredNorm());
    }
  }
  return std::exp(t_final) * (f_int + u0_h1);
}

}  // namespace hyns
