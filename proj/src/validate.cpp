#include "cellpol/validate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "cellpol/critical_mass.hpp"
#include "cellpol/dynamics.hpp"
#include "cellpol/error.hpp"
#include "cellpol/field_io.hpp"
#include "cellpol/spectral.hpp"
#include "cellpol/steady.hpp"

namespace cellpol {

namespace {

SurfaceField random_field(GridPtr grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> c(grid->ncoeff());
  for (double& x : c) x = U(rng);
  return SurfaceField::from_coeffs(grid, std::move(c));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

struct Suite {
  std::vector<ValidationCheck> checks;

  void add(std::string name, std::string anchor, double value, double tol, std::string detail = {}) {
    checks.push_back({std::move(name), std::move(anchor), value, tol,
                      std::isfinite(value) && value <= tol, std::move(detail)});
  }
  template <class F>
  void guarded(const std::string& name, const std::string& anchor, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      checks.push_back({name, anchor, NAN, 0.0, false, e.what()});
    }
  }
};

}  // namespace

std::vector<ValidationCheck> run_validation(const RunConfig& cfg, const std::string& work_dir) {
  const int L = cfg.get_int("validate.L");
  GridPtr grid = SphereGrid::make(L);
  Suite s;

  s.guarded("transform roundtrip", "analysis after synthesis is the identity on degree <= L", [&] {
    SurfaceField f = random_field(grid, 11);
    std::vector<double> back = grid->analyze(f.values());
    s.add("transform roundtrip", "analysis after synthesis is the identity on degree <= L",
          max_abs_diff(back, f.coeffs()), 1e-12);
  });

  s.guarded("laplacian eigenvalues", "Delta Y_lm = -l(l+1) Y_lm", [&] {
    double e = 0.0;
    for (int l = 0; l <= L; ++l) {
      SurfaceField y = SurfaceField::basis(grid, l, l / 2);
      SurfaceField d = laplace_beltrami(y) + y * double(l * (l + 1));
      e = std::max(e, std::max(std::abs(d.grid_min()), std::abs(d.grid_max())) / std::max(1, l * (l + 1)));
    }
    s.add("laplacian eigenvalues", "Delta Y_lm = -l(l+1) Y_lm", e, 1e-12);
  });

  s.guarded("dtn / ntd inverse", "N T f = f for mean-zero f", [&] {
    SurfaceField f = random_field(grid, 12).add_constant(0.0);
    f = f.add_constant(-f.mean());
    SurfaceField r = dtn(ntd(f)) - f;
    s.add("dtn / ntd inverse", "N T f = f for mean-zero f", r.l2_norm() / f.l2_norm(), 1e-12);
  });

  s.guarded("ntd of laplacian", "T(Delta u) = -N u - (u - mean u)", [&] {
    auto id = ntd_of_laplacian_identity(random_field(grid, 13));
    s.add("ntd of laplacian", "T(Delta u) = -N u - (u - mean u)", id.discrepancy, 1e-10);
  });

  s.guarded("psf1 roundtrip", "write then read reproduces values and coefficients bitwise", [&] {
    SurfaceField f = random_field(grid, 14);
    std::string path = (std::filesystem::path(work_dir) / "roundtrip.psf1").string();
    write_psf1(path, f);
    SurfaceField g = read_psf1(path);
    double e = std::max(max_abs_diff(f.values(), g.values()), max_abs_diff(f.coeffs(), g.coeffs()));
    s.add("psf1 roundtrip", "write then read reproduces values and coefficients bitwise", e, 0.0);
  });

  s.guarded("pbf1 roundtrip", "write then read reproduces radial profiles bitwise", [&] {
    BulkField w = harmonic_extend(random_field(grid, 15), 12);
    std::string path = (std::filesystem::path(work_dir) / "roundtrip.pbf1").string();
    write_pbf1(path, w);
    BulkField r = read_pbf1(path);
    s.add("pbf1 roundtrip", "write then read reproduces radial profiles bitwise",
          max_abs_diff(w.data(), r.data()), 0.0);
  });

  const ModelParams p = cfg.model();

  s.guarded("homogeneous state", "constant c: f_u = 0, a5 v = a6 w, total mass M", [&] {
    ModelParams q = p;
    q.eps = 1.0;
    const double c = 0.7;
    HomogeneousState h = homogeneous_steady(q, c);
    PointKinetics k = kinetics(h.U, c, q);
    double fu = k.K * h.v - k.R;
    double fv = q.a5 * h.v - q.a6 * h.w;
    double vol = q.infinite_D() ? q.bulk_volume : 4.0 * std::numbers::pi / 3.0;
    double mass = 4.0 * std::numbers::pi * (h.U + h.v) + vol * h.w;
    double e = std::max({std::abs(fu), std::abs(fv), std::abs(mass - q.mass) / q.mass});
    s.add("homogeneous state", "constant c: f_u = 0, a5 v = a6 w, total mass M", e, 1e-12);
  });

  for (bool infinite : {true, false}) {
    std::string name = infinite ? "mass conservation, D = infinity" : "mass conservation, finite D";
    s.guarded(name, "d/dt (int u + int v + int w) = 0", [&] {
      ModelParams q;
      q.D = infinite ? kInfinite : 5.0;
      q.mass = 10.0;
      GridPtr g8 = SphereGrid::make(std::min(L, 8));
      SignalField sig = signal_axisymmetric(g8, 0.5, 0.3, q.a5);
      SurfaceField u = SurfaceField::constant(g8, 0.3) + random_field(g8, 16) * 0.02;
      TrajectoryState s0 = initial_state(u, SurfaceField::constant(g8, 0.2), 12, q);
      DtPolicy pol;
      pol.dt = 1e-2;
      pol.adaptive = false;
      Trajectory tr = run_to_time(s0, 0.5, pol, q, sig);
      s.add(name, "d/dt (int u + int v + int w) = 0", tr.failed ? NAN : tr.max_mass_drift, 1e-10);
    });
  }

  s.guarded("manufactured critical state", "alpha* = 0.5 and u* = kappa (1 + z)^2", [&] {
    const double kappa = 0.05;
    SignalField sig = signal_manufactured(grid, kappa, p.a5, 0.5);
    CriticalMassReport r = critical_mass(sig, 0.0);
    SurfaceField exact =
        SurfaceField::from_function(grid, [&](double, double, double z) { return manufactured_u_star(kappa, z); });
    double e = std::max(std::abs(r.alpha_star - 0.5), (r.u_star - exact).l2_norm());
    s.add("manufactured critical state", "alpha* = 0.5 and u* = kappa (1 + z)^2", e, 1e-10);
  });

  s.guarded("obstacle complementarity", "min(u, q(u)) = 0 at half the critical mass", [&] {
    SignalField sig = signal_axisymmetric(grid, 0.5, 0.3, p.a5);
    ObstacleOperator op(sig, 0.0);
    ObstacleSolution sol = solve_for_mass(op, 0.5 * op.critical().m_star);
    s.add("obstacle complementarity", "min(u, q(u)) = 0 at half the critical mass",
          sol.converged ? sol.kkt_residual : NAN, 1e-9);
  });

  s.guarded("adjoint null vector", "psi > 0 spans the kernel of -Delta + ell N~(g .)", [&] {
    SignalField sig = signal_axisymmetric(grid, 0.5, 0.3, p.a5);
    CriticalMassReport r = critical_mass(sig, 1.0);
    double e = r.psi_residual;
    if (!(r.psi_min > 0) || r.degenerate_kernel) e = NAN;
    s.add("adjoint null vector", "psi > 0 spans the kernel of -Delta + ell N~(g .)", e, 1e-9);
  });

  s.guarded("steady residual", "transform-path residual of the stationary equations", [&] {
    ModelParams q = p;
    q.eps = 1.0;
    GridPtr g8 = SphereGrid::make(std::min(L, 8));
    SignalField sig = signal_axisymmetric(g8, 0.5, 0.3, q.a5);
    SteadyState st = solve_steady(q, sig);
    s.add("steady residual", "transform-path residual of the stationary equations",
          st.converged ? st.independent_residual : NAN, 1e-8);
  });

  return s.checks;
}

}  // namespace cellpol
