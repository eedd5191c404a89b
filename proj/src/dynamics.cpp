#include "cellpol/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include "cellpol/error.hpp"
#include "cellpol/spectral.hpp"

namespace cellpol {

namespace {

const double kSqrt4Pi = std::sqrt(4.0 * std::numbers::pi);

using Vec = Eigen::VectorXd;

std::vector<double> to_std(const Vec& x, int off, int n) {
  return std::vector<double>(x.data() + off, x.data() + off + n);
}

// M y' = L y + R(y) on coefficient vectors [u, v, w].
struct FiniteDSystem {
  const ModelParams& p;
  const SignalField& sig;
  GridPtr grid;
  RadialMesh mesh;
  int K, n;
  std::vector<double> ll;                      // l(l+1) per mode
  std::vector<std::vector<double>> ta, tb, tc;  // D * radial operator per degree

  FiniteDSystem(const ModelParams& p_, const SignalField& s, GridPtr g, int nr)
      : p(p_), sig(s), grid(std::move(g)), mesh(RadialMesh::make(nr)), K(grid->ncoeff()), n(nr) {
    ll.resize(K);
    int L = grid->L();
    ta.resize(L + 1);
    tb.resize(L + 1);
    tc.resize(L + 1);
    for (int l = 0; l <= L; ++l) {
      for (int m = -l; m <= l; ++m) ll[sh_index(l, m)] = double(l) * (l + 1);
      auto& a = ta[l];
      auto& b = tb[l];
      auto& c = tc[l];
      a.assign(n, 0.0);
      b.assign(n, -double(l) * (l + 1) * mesh.h);
      c.assign(n, 0.0);
      for (int i = 0; i < n; ++i) {
        if (i > 0) {
          double t = mesh.face[i] * mesh.face[i] / mesh.h;
          a[i] += t, b[i] -= t;
        }
        if (i < n - 1) {
          double t = mesh.face[i + 1] * mesh.face[i + 1] / mesh.h;
          c[i] += t, b[i] -= t;
        }
      }
      for (int i = 0; i < n; ++i) a[i] *= p.D, b[i] *= p.D, c[i] *= p.D;
    }
  }
  int size() const { return 2 * K + K * n; }
  int degree(int k) const { return int(std::sqrt(double(k) + 0.5)); }

  double flux(const Vec& y, int k) const {
    return robin_flux(y(2 * K + k * n + n - 1), y(K + k), p.D, mesh.h, p.a5, p.a6);
  }

  Vec apply_M(const Vec& y) const {
    Vec r = y;
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < n; ++i) r(2 * K + k * n + i) *= mesh.vol[i];
    return r;
  }

  Vec apply_L(const Vec& y) const {
    Vec r(size());
    for (int k = 0; k < K; ++k) {
      int l = degree(k);
      double F = flux(y, k);
      r(k) = -ll[k] * y(k);
      r(K + k) = -ll[k] * y(K + k) - F;
      const double* w = y.data() + 2 * K + k * n;
      double* o = r.data() + 2 * K + k * n;
      for (int i = 0; i < n; ++i) {
        double s = tb[l][i] * w[i];
        if (i > 0) s += ta[l][i] * w[i - 1];
        if (i < n - 1) s += tc[l][i] * w[i + 1];
        o[i] = s;
      }
      o[n - 1] += F;
    }
    return r;
  }

  Vec reaction(const Vec& y) const {
    auto u = SurfaceField::from_coeffs(grid, to_std(y, 0, K));
    auto v = SurfaceField::from_coeffs(grid, to_std(y, K, K));
    auto fu = reaction_fu(u, v, p, sig);
    Vec r = Vec::Zero(size());
    for (int k = 0; k < K; ++k) {
      r(k) = fu.coeffs()[k];
      r(K + k) = -fu.coeffs()[k];
    }
    return r;
  }

  // (M - gdt L) y = rhs
  Vec solve(double gdt, const Vec& rhs) const {
    Vec y(size());
    const double s = p.D / mesh.h, kap = 2.0 * s / (2.0 * s + p.a6);
    std::vector<double> a(n + 1), b(n + 1), c(n + 1), d(n + 1);
    for (int k = 0; k < K; ++k) {
      int l = degree(k);
      y(k) = rhs(k) / (1.0 + gdt * ll[k]);
      for (int i = 0; i < n; ++i) {
        a[i] = -gdt * ta[l][i];
        b[i] = mesh.vol[i] - gdt * tb[l][i];
        c[i] = -gdt * tc[l][i];
        d[i] = rhs(2 * K + k * n + i);
      }
      b[n - 1] += gdt * kap * p.a6;
      c[n - 1] = -gdt * kap * p.a5;
      a[n] = -gdt * kap * p.a6;
      b[n] = 1.0 + gdt * (ll[k] + kap * p.a5);
      c[n] = 0.0;
      d[n] = rhs(K + k);
      solve_tridiagonal(a, b, c, d);
      for (int i = 0; i < n; ++i) y(2 * K + k * n + i) = d[i];
      y(K + k) = d[n];
    }
    return y;
  }

  TrajectoryState unpack(const Vec& y, double t) const {
    TrajectoryState s;
    s.t = t;
    s.u = SurfaceField::from_coeffs(grid, to_std(y, 0, K));
    s.v = SurfaceField::from_coeffs(grid, to_std(y, K, K));
    s.w = BulkField(grid, n, to_std(y, 2 * K, K * n));
    return s;
  }

  static Vec pack(const TrajectoryState& s) {
    int K = s.u.grid()->ncoeff(), n = s.w.nr();
    Vec y(2 * K + K * n);
    for (int k = 0; k < K; ++k) y(k) = s.u.coeffs()[k], y(K + k) = s.v.coeffs()[k];
    for (std::size_t j = 0; j < s.w.data().size(); ++j) y(2 * K + j) = s.w.data()[j];
    return y;
  }

  double mass(const Vec& y) const {
    double s = y(0) + y(K);
    for (int i = 0; i < n; ++i) s += mesh.vol[i] * y(2 * K + i);
    return kSqrt4Pi * s;
  }

  double norm(const Vec& d) const {
    double s = 0.0;
    for (int k = 0; k < 2 * K; ++k) s += d(k) * d(k);
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < n; ++i) s += mesh.vol[i] * d(2 * K + k * n + i) * d(2 * K + k * n + i);
    return std::sqrt(s);
  }
};

struct InfiniteDSystem {
  const ModelParams& p;
  const SignalField& sig;
  GridPtr grid;
  int K;
  std::vector<double> ll;

  InfiniteDSystem(const ModelParams& p_, const SignalField& s, GridPtr g)
      : p(p_), sig(s), grid(std::move(g)), K(grid->ncoeff()) {
    ll.resize(K);
    for (int l = 0; l <= grid->L(); ++l)
      for (int m = -l; m <= l; ++m) ll[sh_index(l, m)] = double(l) * (l + 1);
  }
  int size() const { return 2 * K; }
  double w_of(const Vec& y) const { return (p.mass - kSqrt4Pi * (y(0) + y(K))) / p.bulk_volume; }
  Vec apply_M(const Vec& y) const { return y; }
  Vec apply_L(const Vec& y) const {
    Vec r(size());
    for (int k = 0; k < K; ++k) {
      r(k) = -ll[k] * y(k);
      r(K + k) = -(ll[k] + p.a5) * y(K + k);
    }
    return r;
  }
  Vec reaction(const Vec& y) const {
    auto u = SurfaceField::from_coeffs(grid, to_std(y, 0, K));
    auto v = SurfaceField::from_coeffs(grid, to_std(y, K, K));
    auto fu = reaction_fu(u, v, p, sig);
    Vec r(size());
    for (int k = 0; k < K; ++k) {
      r(k) = fu.coeffs()[k];
      r(K + k) = -fu.coeffs()[k];
    }
    r(K) += p.a6 * w_of(y) * kSqrt4Pi;
    return r;
  }
  Vec solve(double gdt, const Vec& rhs) const {
    Vec y(size());
    for (int k = 0; k < K; ++k) {
      y(k) = rhs(k) / (1.0 + gdt * ll[k]);
      y(K + k) = rhs(K + k) / (1.0 + gdt * (ll[k] + p.a5));
    }
    return y;
  }
  TrajectoryState unpack(const Vec& y, double t) const {
    TrajectoryState s;
    s.t = t;
    s.infinite = true;
    s.u = SurfaceField::from_coeffs(grid, to_std(y, 0, K));
    s.v = SurfaceField::from_coeffs(grid, to_std(y, K, K));
    s.w_scalar = w_of(y);
    return s;
  }
  static Vec pack(const TrajectoryState& s) {
    int K = s.u.grid()->ncoeff();
    Vec y(2 * K);
    for (int k = 0; k < K; ++k) y(k) = s.u.coeffs()[k], y(K + k) = s.v.coeffs()[k];
    return y;
  }
  double mass(const Vec& y) const {
    return kSqrt4Pi * (y(0) + y(K)) + p.bulk_volume * w_of(y);
  }
  double norm(const Vec& d) const {
    double dw = -kSqrt4Pi * (d(0) + d(K)) / p.bulk_volume;
    return std::sqrt(d.squaredNorm() + p.bulk_volume * dw * dw);
  }
};

template <class Sys>
Vec advance(const Sys& sys, const Vec& y, double dt, Scheme scheme) {
  switch (scheme) {
    case Scheme::Euler:
      return sys.solve(dt, sys.apply_M(y) + dt * sys.reaction(y));
    case Scheme::CrankNicolson:
      return sys.solve(0.5 * dt, sys.apply_M(y) + 0.5 * dt * sys.apply_L(y) + dt * sys.reaction(y));
    case Scheme::ARS222:
    default: {
      const double g = 1.0 - 1.0 / std::sqrt(2.0);
      const double d = 1.0 - 1.0 / (2.0 * g);
      Vec My = sys.apply_M(y);
      Vec R1 = sys.reaction(y);
      Vec Y2 = sys.solve(g * dt, My + g * dt * R1);
      Vec R2 = sys.reaction(Y2);
      Vec rhs = My + dt * ((1.0 - g) * sys.apply_L(Y2) + d * R1 + (1.0 - d) * R2);
      return sys.solve(g * dt, rhs);
    }
  }
}

template <class Sys>
StepResult finish(const Sys& sys, const Vec& y0, const Vec& y1, double t, double dt) {
  StepResult r;
  r.state = sys.unpack(y1, t + dt);
  r.mass_change = sys.mass(y1) - sys.mass(y0);
  r.rhs_norm = sys.norm(y1 - y0) / dt;
  r.min_value = std::min({r.state.u.grid_min(), r.state.v.grid_min(), r.state.min_w()});
  r.accepted = y1.allFinite();
  if (!r.accepted) r.reason = "non-finite state";
  return r;
}

}  // namespace

double TrajectoryState::mass(const ModelParams& p) const {
  double s = u.integral() + v.integral();
  return s + (infinite ? p.bulk_volume * w_scalar : w.integral());
}

double TrajectoryState::lyapunov(const ModelParams& p) const {
  double bulk = infinite ? p.bulk_volume * w_scalar * w_scalar : w.integral_sq();
  double surf = 0.0;
  for (std::size_t k = 0; k < u.coeffs().size(); ++k)
    surf += u.coeffs()[k] * u.coeffs()[k] + p.a5 * v.coeffs()[k] * v.coeffs()[k];
  return 0.5 * p.a6 * bulk + 0.5 * surf;
}

SurfaceField TrajectoryState::w_trace(const ModelParams& p) const {
  if (infinite) return SurfaceField::constant(u.grid(), w_scalar);
  std::vector<double> c(u.grid()->ncoeff());
  int n = w.nr();
  for (std::size_t k = 0; k < c.size(); ++k)
    c[k] = robin_trace(w.at(int(k), n - 1), v.coeffs()[k], p.D, w.mesh().h, p.a5, p.a6);
  return SurfaceField::from_coeffs(u.grid(), std::move(c));
}

double TrajectoryState::min_w() const { return infinite ? w_scalar : w.grid_min(); }

TrajectoryState initial_state(GridPtr grid, int nr, double u0, double v0, const ModelParams& p) {
  return initial_state(SurfaceField::constant(grid, u0), SurfaceField::constant(grid, v0), nr, p);
}

TrajectoryState initial_state(const SurfaceField& u, const SurfaceField& v, int nr,
                              const ModelParams& p) {
  TrajectoryState s;
  s.u = u;
  s.v = v;
  double rest = p.mass - u.integral() - v.integral();
  if (rest < 0) throw DomainError("initial state: surface mass exceeds total mass");
  if (p.infinite_D()) {
    s.infinite = true;
    s.w_scalar = rest / p.bulk_volume;
  } else {
    s.w = BulkField::constant(u.grid(), nr, rest / (4.0 * std::numbers::pi / 3.0));
  }
  return s;
}

StepResult step_imex(const TrajectoryState& s, double dt, const ModelParams& p,
                     const SignalField& sig, Scheme scheme) {
  if (!(dt > 0)) throw DomainError("step_imex: dt must be > 0");
  if (s.infinite || p.infinite_D()) throw DomainError("step_imex: finite-D state required");
  FiniteDSystem sys(p, sig, s.u.grid(), s.w.nr());
  Vec y0 = FiniteDSystem::pack(s);
  Vec y1 = advance(sys, y0, dt, scheme);
  return finish(sys, y0, y1, s.t, dt);
}

StepResult step_imex_Dinf(const TrajectoryState& s, double dt, const ModelParams& p,
                          const SignalField& sig, Scheme scheme) {
  if (!(dt > 0)) throw DomainError("step_imex_Dinf: dt must be > 0");
  if (!s.infinite) throw DomainError("step_imex_Dinf: D = infinity state required");
  InfiniteDSystem sys(p, sig, s.u.grid());
  Vec y0 = InfiniteDSystem::pack(s);
  Vec y1 = advance(sys, y0, dt, scheme);
  auto r = finish(sys, y0, y1, s.t, dt);
  if (r.state.w_scalar < 0) r.reason = "mass identity forces w < 0";
  return r;
}

Trajectory run_to_time(const TrajectoryState& s0, double T, const DtPolicy& pol,
                       const ModelParams& p, const SignalField& sig, const RunOptions& opt) {
  Trajectory tr;
  TrajectoryState s = s0;
  tr.mass0 = s.mass(p);
  auto sample = [&](const TrajectoryState& st, double rhs) {
    TimeSample ts{st.t, st.mass(p), st.lyapunov(p), st.u.grid_min(), st.v.grid_min(), st.min_w(), rhs};
    tr.samples.push_back(ts);
    tr.sup_lyapunov = std::max(tr.sup_lyapunov, ts.lyapunov);
    tr.min_value = std::min(tr.min_value, std::min({ts.min_u, ts.min_v, ts.min_w}));
    tr.max_mass_drift =
        std::max(tr.max_mass_drift, std::abs(ts.mass - tr.mass0) / std::max(tr.mass0, 1e-300));
  };
  tr.min_value = INFINITY;
  sample(s, NAN);
  if (T <= 0) {
    tr.final_state = s;
    return tr;
  }

  double dt = std::clamp(pol.dt, pol.dt_min, pol.dt_max);
  const double dt_nominal = dt;
  int clean = 0, quiet = 0;
  double next_sample = opt.sample_dt;
  double last_rhs = NAN;
  long steps = 0;
  while (s.t < T - 1e-12 * T && steps < opt.max_steps) {
    double h = std::min(dt, T - s.t);
    // land on sample times exactly
    if (opt.sample_dt > 0 && s.t + h > next_sample - 1e-12) h = std::max(next_sample - s.t, 1e-15);
    StepResult r = s.infinite ? step_imex_Dinf(s, h, p, sig, pol.scheme)
                              : step_imex(s, h, p, sig, pol.scheme);
    bool bad_mass = std::abs(r.mass_change) > pol.mass_step_tol * std::max(tr.mass0, 1e-300);
    bool ok = r.accepted && r.reason.empty() && r.min_value >= -pol.tol_neg && !bad_mass;
    if (!ok) {
      ++tr.rejected;
      dt = h * 0.5;
      clean = 0;
      if (dt < pol.dt_min) {
        tr.failed = true;
        tr.warnings.push_back("step size fell below dt_min at t=" + std::to_string(s.t) + " (" +
                              (r.reason.empty() ? (bad_mass ? "mass drift" : "negativity")
                                                : r.reason) +
                              ")");
        break;
      }
      continue;
    }
    ++steps;
    ++tr.accepted;
    s = std::move(r.state);
    last_rhs = r.rhs_norm;
    if (++clean >= 10) {
      dt = pol.adaptive ? std::min(2.0 * dt, pol.dt_max) : std::min(2.0 * dt, dt_nominal);
      clean = 0;
    }
    if (opt.sample_dt > 0 && s.t >= next_sample - 1e-12) {
      sample(s, last_rhs);
      next_sample += opt.sample_dt;
      if (opt.stop_at_steady) {
        quiet = last_rhs < opt.tol_ss ? quiet + 1 : 0;
        if (quiet >= opt.steady_samples) {
          tr.reached_steady = true;
          break;
        }
      }
    }
  }
  if (tr.samples.back().t != s.t) sample(s, last_rhs);
  // late-time residual heuristic over the last decade of samples
  std::size_t ns = tr.samples.size();
  if (ns > 12 && !tr.reached_steady) {
    bool mono = true;
    for (std::size_t i = ns - 10; i < ns; ++i)
      if (tr.samples[i].rhs_norm > tr.samples[i - 1].rhs_norm * (1 + 1e-9)) mono = false;
    if (!mono) tr.warnings.push_back("late-time residual not monotonically decreasing");
  }
  tr.final_state = s;
  return tr;
}

void write_time_series_csv(const std::string& path, const Trajectory& tr) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << "t,mass,lyapunov,min_u,min_v,min_w,rhs_norm\n" << std::setprecision(17);
  for (const auto& s : tr.samples)
    os << s.t << ',' << s.mass << ',' << s.lyapunov << ',' << s.min_u << ',' << s.min_v << ','
       << s.min_w << ',' << s.rhs_norm << '\n';
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace cellpol
