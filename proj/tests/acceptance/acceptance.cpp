// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "../unit/common.hpp"
#include "cellpol/critical_mass.hpp"
#include "cellpol/dynamics.hpp"
#include "cellpol/localization.hpp"
#include "cellpol/obstacle.hpp"
#include "cellpol/spectral.hpp"
#include "cellpol/steady.hpp"
#include "cellpol/zonal.hpp"

using namespace cellpol;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFourPi = 4.0 * kPi;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what, double value, double bound) {
    if (!ok) pass = false;
    detail << (ok ? "" : "!") << what << "=" << value << " (" << bound << ") ";
  }
};

double wl2(const SphereGrid& g, const Eigen::VectorXd& x) {
  double s = 0.0;
  for (int i = 0; i < g.size(); ++i) s += g.weight(i) * x(i) * x(i);
  return std::sqrt(s);
}


void operators(Verdict& v) {
  GridPtr g = SphereGrid::make(16);
  double eig = 0.0, ident = 0.0, adj = 0.0, pos = 0.0;
  auto check_field = [&](const SurfaceField& f) {
    SurfaceField lap = laplace_beltrami(f), n = dtn(f), t = ntd(f);
    for (int l = 0; l <= 16; ++l)
      for (int m = -l; m <= l; ++m) {
        double c = f.coeff(l, m);
        eig = std::max({eig, std::abs(lap.coeff(l, m) + l * (l + 1) * c), std::abs(n.coeff(l, m) - l * c),
                        std::abs(t.coeff(l, m) - (l == 0 ? 0.0 : c / l))});
      }
    SurfaceField lhs = ntd(lap), rhs = -n - f.add_constant(-f.mean());
    ident = std::max(ident, testing::max_abs(lhs, rhs));
  };
  for (int l = 0; l <= 16; ++l)
    for (int m = -l; m <= l; ++m) check_field(SurfaceField::basis(g, l, m));
  for (int s = 0; s < 20; ++s) {
    SurfaceField f = testing::random_field(g, 1000 + s), h = testing::random_field(g, 2000 + s);
    check_field(f);
    adj = std::max(adj, std::abs(inner(dtn(f), h) - inner(f, dtn(h))));
    // int (N f) f = sum l f_lm^2 >= 0, zero only for constants
    double energy = 0.0;
    for (int l = 1; l <= 16; ++l)
      for (int m = -l; m <= l; ++m) energy += l * f.coeff(l, m) * f.coeff(l, m);
    pos = std::max(pos, std::abs(inner(dtn(f), f) - energy));
    if (!(inner(dtn(f), f) > 0)) pos = INFINITY;
  }
  SurfaceField c = SurfaceField::constant(g, 1.7);
  pos = std::max(pos, std::abs(inner(dtn(c), c)));
  v.require(eig < 1e-10, "eigen", eig, 1e-10);
  v.require(ident < 1e-10, "T_Delta_identity", ident, 1e-10);
  v.require(adj < 1e-10, "N_selfadjoint", adj, 1e-10);
  v.require(pos < 1e-10, "N_positivity", pos, 1e-10);
}

void dtn_crosscheck(Verdict& v) {
  GridPtr g = SphereGrid::make(16);
  SurfaceField f = testing::random_field(g, 77, 1.5);
  SurfaceField exact = dtn(f);
  std::vector<double> err;
  for (int nr : {32, 64, 128}) err.push_back((harmonic_normal_derivative(f, nr) - exact).l2_norm());
  double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
  v.require(o1 >= 1.9, "order_32_64", o1, 1.9);
  v.require(o2 >= 1.9, "order_64_128", o2, 1.9);
  v.detail << "err128=" << err[2] << " ";
}

void conservation(Verdict& v) {
  GridPtr g = SphereGrid::make(16);
  ModelParams p;
  p.D = 2.0;
  p.mass = 10.0;
  // generic positive signal without symmetry
  SurfaceField c = SurfaceField::constant(g, 1.0) + testing::random_field(g, 5, 3.0) * 0.1;
  if (c.grid_min() <= 0) throw std::runtime_error("signal not positive");
  SignalField sig = signal_from_c(c, p.a5);
  SurfaceField u = SurfaceField::constant(g, 0.3) + testing::random_field(g, 6, 3.0) * 0.02;
  SurfaceField vv = SurfaceField::constant(g, 0.2) + testing::random_field(g, 7, 3.0) * 0.02;
  TrajectoryState s0 = initial_state(u, vv, 64, p);
  DtPolicy d;
  d.dt = 1e-3;
  d.adaptive = false;
  Trajectory tr = run_to_time(s0, 10.0, d, p, sig);
  v.require(!tr.failed, "completed", tr.final_state.t, 10.0);
  v.require(tr.max_mass_drift < 1e-6, "mass_drift", tr.max_mass_drift, 1e-6);
  v.require(tr.min_value >= -1e-8, "min_uvw", tr.min_value, -1e-8);
  v.detail << "steps=" << tr.accepted << " ";
}

void homogeneous(Verdict& v) {
  GridPtr g = SphereGrid::make(16);
  double err = 0.0;
  for (double D : {kInfinite, 4.0})
    for (double eps : {1.0, 0.05})
      for (double c : {0.3, 1.5}) {
        ModelParams p;
        p.D = D;
        p.eps = eps;
        p.mass = 6.0;
        p.a5 = 0.8;
        testing::Scalar o = testing::scalar_oracle(p, c);
        SteadyState s = solve_steady(p, signal_constant_c(g, c, p.a5));
        if (!s.converged) err = INFINITY;
        err = std::max({err, (s.U.array() - o.U).abs().maxCoeff(), (s.v.array() - o.v).abs().maxCoeff(),
                        (s.w.array() - o.w).abs().maxCoeff()});
      }
  v.require(err < 1e-8, "max_error", err, 1e-8);
}

void manufactured(Verdict& v) {
  GridPtr g = SphereGrid::make(32);
  const double kappa = 0.05;
  SignalField sig = signal_manufactured(g, kappa, 1.0, 0.5);
  CriticalMassReport r = critical_mass(sig);
  const double m_exact = 4 * kPi / 15;
  double rel = std::abs(r.m_star - m_exact) / m_exact;
  double da = std::abs(r.alpha_star - 0.5);
  double linf = 0.0;
  for (int i = 0; i < g->size(); ++i)
    linf = std::max(linf, std::abs(r.u_star.values()[i] - manufactured_u_star(kappa, g->node(i)[2])));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int k = 0; k < 2000; ++k) {
    double x = n(rng), y = n(rng), z = n(rng), s = std::sqrt(x * x + y * y + z * z);
    linf = std::max(linf, std::abs(r.u_star.evaluate(x / s, y / s, z / s) - manufactured_u_star(kappa, z / s)));
  }
  v.require(rel < 1e-3, "m_star_rel", rel, 1e-3);
  v.require(da < 1e-6, "alpha_star", da, 1e-6);
  v.require(linf < 1e-6, "u_star_Linf", linf, 1e-6);
}

// m-dichotomy on the manufactured signal; u* from the critical data
void dichotomy(Verdict& v, double ell, bool finite_checks) {
  GridPtr g = SphereGrid::make(16);
  SignalField sig = signal_manufactured(g, 0.05, 1.0, 0.5);
  ObstacleOperator op(sig, ell);
  const CriticalData& cd = op.critical();

  const double up = ell > 0 ? 1.3 : 1.2;
  ObstacleSolution hi = solve_for_mass(op, up * cd.m_star);
  Eigen::VectorXd d = hi.u - cd.u_star;
  double spread = d.maxCoeff() - d.minCoeff();
  double shift = std::abs(d.mean() - (up - 1) * cd.m_star / kFourPi);
  double xi1 = (hi.xi.array() - 1.0).abs().maxCoeff();
  v.require(spread < 1e-6, "above_u_minus_ustar_spread", spread, 1e-6);
  v.require(shift < 1e-6, "above_shift_vs_(m-m*)/4pi", shift, 1e-6);
  v.require(xi1 < 1e-6, "above_xi_minus_1", xi1, 1e-6);

  ObstacleSolution lo = solve_for_mass(op, 0.5 * cd.m_star);
  v.require(lo.converged, "below_converged", lo.converged, 1);
  v.require(lo.inactive_fraction > 0.05, "below_inactive_fraction", lo.inactive_fraction, 0.05);
  v.require(lo.alpha < cd.alpha_star - 1e-3, "below_alpha_star_gap", cd.alpha_star - lo.alpha, 1e-3);
  if (finite_checks) {
    v.require(lo.kkt_residual < 1e-8, "complementarity", lo.kkt_residual, 1e-8);
    v.require(lo.xi.minCoeff() >= -1e-8, "xi_min", lo.xi.minCoeff(), -1e-8);
    v.require(lo.xi.maxCoeff() <= 1 + 1e-8, "xi_max", lo.xi.maxCoeff(), 1 + 1e-8);
  }

  double prev = -INFINITY;
  bool increasing = true;
  for (double f : {1.0 / 6, 2.0 / 6, 3.0 / 6, 4.0 / 6, 5.0 / 6, 1.0}) {
    ObstacleSolution s = solve_for_mass(op, f * cd.m_star);
    if (!(s.alpha > prev)) increasing = false;
    prev = s.alpha;
  }
  v.require(increasing, "alpha_increasing_6_masses", increasing, 1);
}

void eps_continuation(Verdict& v) {
  GridPtr g = SphereGrid::make(32);
  ModelParams p;
  SignalField sig = signal_manufactured(g, 0.05, p.a5, 0.5);
  p.mass = 0.5 * 4 * kPi / 15;
  auto pts = continuation_eps(p, sig, {0.1, 0.05, 0.025});
  bool conv = pts.size() == 3;
  for (const auto& e : pts) {
    conv = conv && e.state.converged;
    v.detail << "L1(" << e.eps << ")=" << e.l1_error << " ";
  }
  v.require(conv, "converged", conv, 1);
  bool dec = conv && pts[1].l1_error < pts[0].l1_error && pts[2].l1_error < pts[1].l1_error;
  v.require(dec, "strictly_decreasing", dec, 1);
}

void D_continuation(Verdict& v) {
  GridPtr g = SphereGrid::make(16);
  ModelParams p;
  p.mass = 3.0;
  SignalField sig = signal_axisymmetric(g, 0.5, 0.3, p.a5);
  DContinuation dc = continuation_D(p, sig, {10.0, 100.0, 1000.0});
  bool conv = dc.limit.converged && dc.points.size() == 3;
  for (const auto& d : dc.points) {
    conv = conv && d.state.converged;
    v.detail << "D=" << d.D << ":var=" << d.var_w << ",dist=" << d.distance << " ";
  }
  v.require(conv, "converged", conv, 1);
  bool var = conv && dc.points[1].var_w < dc.points[0].var_w && dc.points[2].var_w < dc.points[1].var_w;
  bool dist =
      conv && dc.points[1].distance < dc.points[0].distance && dc.points[2].distance < dc.points[1].distance;
  v.require(var, "w_variation_decreasing", var, 1);
  v.require(dist, "surface_distance_decreasing", dist, 1);
}

void localization(Verdict& v) {
  GridPtr g = SphereGrid::make(16);
  SignalField sig = signal_axisymmetric(g, 0.5, 0.3, 1.0);
  ZonalCapSolver zs(sig.g_of_z);
  double prev = INFINITY, worst = 0.0, gap = 0.0;
  bool decreasing = true;
  for (int k = 1; k <= 5; ++k) {
    ZonalCap cap = zs.for_mass(zs.m_star() * std::ldexp(1.0, -k));
    LocalizationMetrics lm = localization_metrics(cap, zs);
    if (!cap.converged || !lm.defined || !(lm.support_radius < prev)) decreasing = false;
    prev = lm.support_radius;
    worst = std::max(worst, lm.mean_identity_residual);
    gap = lm.alpha_gap;
    v.detail << "k" << k << ":r=" << lm.support_radius << ",gap=" << lm.alpha_gap << " ";
  }
  double bound = 0.05 * (zs.alpha_star() - zs.alpha0());
  v.require(decreasing, "radius_decreasing", decreasing, 1);
  v.require(gap < bound, "final_alpha_gap", gap, bound);
  v.require(worst < 1e-6, "identity_residual", worst, 1e-6);
}

void finite_ell(Verdict& v) {
  GridPtr g = SphereGrid::make(16);
  SignalField sig = signal_manufactured(g, 0.05, 1.0, 0.5);
  CriticalMassReport r = critical_mass(sig, 1.0);
  v.require(r.psi_residual < 1e-9, "psi_residual", r.psi_residual, 1e-9);
  v.require(r.psi_min > 0, "psi_min", r.psi_min, 0);
  double gap = std::abs(alpha_star_finiteD(sig, 1e-4) - alpha_star_Dinf(sig));
  v.require(gap < 1e-4, "alpha_star_gap_ell_1e-4", gap, 1e-4);
  dichotomy(v, 1.0, true);
}

void dense_oracle(Verdict& v) {
  GridPtr g = SphereGrid::make(8);
  Eigen::VectorXd W = Eigen::Map<const Eigen::VectorXd>(g->weights().data(), g->size());
  Eigen::MatrixXd H = W.asDiagonal() * testing::neg_laplacian_by_columns(*g);
  H = 0.5 * (H + H.transpose()).eval();
  SurfaceField c = SurfaceField::constant(g, 1.0) + testing::random_field(g, 9, 2.0) * 0.15;
  std::vector<SignalField> signals = {signal_axisymmetric(g, 0.5, 0.3, 1.0), signal_manufactured(g, 0.05, 1.0, 0.5),
                                      signal_from_c(c, 1.0)};
  double worst = 0.0;
  for (const SignalField& sig : signals) {
    ObstacleOperator op(sig, 0.0);
    const CriticalData& cd = op.critical();
    for (double f : {0.1, 0.3, 0.6, 0.9}) {
      double alpha = cd.alpha0 + f * (cd.alpha_star - cd.alpha0);
      Eigen::VectorXd b = -(W.array() * (1.0 - (1.0 + alpha) * sig.g_nodes.array())).matrix();
      Eigen::VectorXd oracle = testing::active_set_qp(H, b);
      ObstacleSolution s = solve_obstacle_Dinf(alpha, sig);
      worst = std::max(worst, s.converged ? wl2(*g, s.u - oracle) : INFINITY);
    }
  }
  v.require(worst < 1e-6, "L2_vs_oracle", worst, 1e-6);
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0: no runtime bound
  std::function<void(Verdict&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "operator conformance", 5, operators},
      {2, "DtN cross-check", 10, dtn_crosscheck},
      {3, "dynamics conservation", 120, conservation},
      {4, "homogeneous oracle", 0, homogeneous},
      {5, "manufactured critical mass", 30, manufactured},
      {6, "critical-mass dichotomy", 0, [](Verdict& v) { dichotomy(v, 0.0, false); }},
      {7, "eps-continuation", 0, eps_continuation},
      {8, "D-continuation", 0, D_continuation},
      {9, "localization", 0, localization},
      {10, "finite-ell theory", 0, finite_ell},
      {11, "dense-oracle equivalence", 0, dense_oracle},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Verdict v;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0) v.require(secs < c.budget_s, "runtime_s", secs, c.budget_s);
    failed += !v.pass;
    std::printf("%s %2d %-28s %6.1fs  %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
