#include "cellpol/steady.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cellpol/error.hpp"
#include "cellpol/nodal.hpp"

namespace cellpol {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kBall = kFourPi / 3.0;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

SurfaceField field_of(const GridPtr& g, const Vec& x) {
  return SurfaceField::from_values(g, {x.data(), std::size_t(x.size())});
}

double wnorm(const Vec& W, const Vec& x) { return std::sqrt((W.array() * x.array().square()).sum()); }

// Spectral multiplier applied to nodal values, the complement of the band
// taking the degree-L value.
Vec nodal_multiplier(const SphereGrid& grid, const Vec& x, const std::function<double(int)>& mult) {
  const int n = grid.size();
  std::span<const double> xs(x.data(), n);
  auto c = grid.analyze(xs);
  auto band = grid.synthesize(c);
  for (int l = 0; l <= grid.L(); ++l)
    for (int m = -l; m <= l; ++m) c[sh_index(l, m)] *= mult(l);
  auto out = grid.synthesize(c);
  double top = mult(grid.L());
  Vec r(n);
  for (int k = 0; k < n; ++k) r(k) = out[k] + top * (x(k) - band[k]);
  return r;
}

struct Problem {
  const ModelParams& p;
  const SignalField& sig;
  const SphereGrid& grid;
  const int n;
  const bool finite;
  Vec W;
  const Mat& A;
  Mat Mw;  // v -> w trace, finite D

  Problem(const ModelParams& p_, const SignalField& s)
      : p(p_), sig(s), grid(*s.grid), n(s.grid->size()), finite(!p_.infinite_D()),
        A(s.grid->nodal().neg_laplacian) {
    W = Eigen::Map<const Vec>(grid.weights().data(), n);
    if (finite) {
      const Mat& Y = grid.synthesis_matrix();
      const Mat& P = grid.nodal().projector;
      const int K = grid.ncoeff();
      Vec d(K);
      for (int l = 0; l <= grid.L(); ++l)
        for (int m = -l; m <= l; ++m) d(sh_index(l, m)) = p.a5 / (p.D * l + p.a6);
      double top = p.a5 / (p.D * grid.L() + p.a6);
      Mat YP = Y * P;
      Mw = Y * d.asDiagonal() * P - top * YP;
      Mw.diagonal().array() += top;
    }
  }

  int size() const { return 2 * n + 1; }

  double bulk_mass(const Vec& v, double s) const {
    return finite ? W.dot(Mw * v) / 3.0 : p.bulk_volume * s;
  }

  Vec residual(const Vec& x) const {
    const Vec U = x.head(n), v = x.segment(n, n);
    const double s = x(2 * n);
    Vec F(size());
    Vec AU = A * U, Av = A * v;
    Vec wt = finite ? Vec(Mw * v) : Vec::Constant(n, s);
    for (int i = 0; i < n; ++i) {
      PointKinetics k = kinetics(U(i), sig.c_nodes(i), p);
      double flow = k.K * v(i) - k.R;
      F(i) = -AU(i) + flow;
      F(n + i) = -p.eps * Av(i) - flow - p.a5 * v(i) + p.a6 * wt(i) + (finite ? s : 0.0);
    }
    F(2 * n) = (W.dot(U) + p.eps * W.dot(v) + p.eps * bulk_mass(v, s)) / p.mass - 1.0;
    return F;
  }

  Mat jacobian(const Vec& x) const {
    const Vec U = x.head(n), v = x.segment(n, n);
    Mat J = Mat::Zero(size(), size());
    J.block(0, 0, n, n) = -A;
    J.block(n, n, n, n) = -p.eps * A;
    if (finite) J.block(n, n, n, n) += p.a6 * Mw;
    for (int i = 0; i < n; ++i) {
      PointKinetics k = kinetics(U(i), sig.c_nodes(i), p);
      double dflow = k.dK * v(i) - k.dR;
      J(i, i) += dflow;
      J(i, n + i) += k.K;
      J(n + i, i) -= dflow;
      J(n + i, n + i) -= k.K + p.a5;
      J(n + i, 2 * n) = finite ? 1.0 : p.a6;
    }
    J.block(2 * n, 0, 1, n) = W.transpose() / p.mass;
    Vec mv = p.eps * W;
    if (finite) mv += (p.eps / 3.0) * (Mw.transpose() * W);
    J.block(2 * n, n, 1, n) = mv.transpose() / p.mass;
    J(2 * n, 2 * n) = finite ? 0.0 : p.eps * p.bulk_volume / p.mass;
    return J;
  }

  double norm(const Vec& F) const {
    return std::max({wnorm(W, F.head(n)), wnorm(W, F.segment(n, n)), std::abs(F(2 * n))});
  }
};

void fill_diagnostics(SteadyState& s, const Problem& pr, const Vec& x) {
  const int n = pr.n;
  const ModelParams& p = pr.p;
  Vec F = pr.residual(x);
  s.U = x.head(n);
  s.v = x.segment(n, n);
  if (pr.finite) {
    s.w = pr.Mw * s.v;
    s.lambda = x(2 * n);
    s.w_scalar = s.w.dot(pr.W) / kFourPi;
  } else {
    s.w_scalar = x(2 * n);
    s.w = Vec::Constant(n, s.w_scalar);
  }
  s.res_U = wnorm(pr.W, F.head(n));
  s.res_v = wnorm(pr.W, F.segment(n, n));
  s.res_mass = std::abs(F(2 * n));
  s.residual = pr.norm(F);
  s.mass = pr.W.dot(s.U) + p.eps * pr.W.dot(s.v) + p.eps * pr.bulk_mass(s.v, s.w_scalar);
  s.mass_error = std::abs(s.mass - p.mass) / p.mass;
  s.int_v = pr.W.dot(s.v);
  s.int_v_bound = p.a4 * kFourPi / pr.sig.c0;
  s.w_max = s.w.maxCoeff();
  s.w_bound = p.a4 * p.a5 / (pr.sig.c0 * p.a6);
  const SphereGrid& g = pr.grid;
  std::span<const double> us(s.U.data(), n);
  auto cu = g.analyze(us);
  double h2 = 0;
  for (int l = 0; l <= g.L(); ++l)
    for (int m = -l; m <= l; ++m) h2 += std::pow(1.0 + l * (l + 1.0), 2) * cu[sh_index(l, m)] * cu[sh_index(l, m)];
  s.norm_H2_U = std::sqrt(h2);
  s.norm_L2_v = wnorm(pr.W, s.v);
  if (pr.finite) {
    s.norm_H1_w = std::hypot(s.w_variation(), s.w_gradient(),
                             std::abs(s.w_scalar) * std::sqrt(kBall));
  } else {
    s.norm_H1_w = std::sqrt(p.bulk_volume) * std::abs(s.w_scalar);
  }
  s.independent_residual = steady_residual(s, pr.sig);
}

}  // namespace

SurfaceField SteadyState::U_field() const { return field_of(grid, U); }
SurfaceField SteadyState::v_field() const { return field_of(grid, v); }
SurfaceField SteadyState::w_field() const { return field_of(grid, w); }

BulkField SteadyState::w_bulk(int nr) const {
  if (p.infinite_D()) return BulkField::constant(grid, nr, w_scalar);
  return harmonic_extend(w_field(), nr);
}

double SteadyState::w_variation() const {
  if (p.infinite_D()) return 0.0;
  auto f = w_field();
  double s = 0;
  for (int l = 1; l <= grid->L(); ++l)
    for (int m = -l; m <= l; ++m) s += f.coeff(l, m) * f.coeff(l, m) / (2.0 * l + 3.0);
  return std::sqrt(s);
}

double SteadyState::w_gradient() const {
  if (p.infinite_D()) return 0.0;
  auto f = w_field();
  double s = 0;
  for (int l = 1; l <= grid->L(); ++l)
    for (int m = -l; m <= l; ++m) s += l * f.coeff(l, m) * f.coeff(l, m);
  return std::sqrt(s);
}

HomogeneousState homogeneous_steady(const ModelParams& p, double c) {
  p.validate();
  if (!(c > 0)) throw DomainError("homogeneous state: c must be > 0");
  const double vol = p.infinite_D() ? p.bulk_volume : kBall;
  auto parts = [&](double U) {
    PointKinetics k = kinetics(U, c, p);
    double v = k.R / k.K;
    return std::pair{v, p.a5 * v / p.a6};
  };
  auto mass = [&](double U) {
    auto [v, w] = parts(U);
    return kFourPi * U + p.eps * (kFourPi * v + vol * w);
  };
  double a = 0.0, b = p.mass / kFourPi;
  HomogeneousState h;
  for (int it = 0; it < 200 && b - a > 1e-16 * std::max(1.0, b); ++it) {
    double mid = 0.5 * (a + b);
    (mass(mid) < p.mass ? a : b) = mid;
    h.iterations = it + 1;
  }
  h.U = 0.5 * (a + b);
  std::tie(h.v, h.w) = parts(h.U);
  return h;
}

double steady_residual(const SteadyState& s, const SignalField& sig) {
  const SphereGrid& g = *s.grid;
  const ModelParams& p = s.p;
  const int n = g.size();
  Vec W = Eigen::Map<const Vec>(g.weights().data(), n);
  Vec AU = nodal_neg_laplacian(g, s.U), Av = nodal_neg_laplacian(g, s.v);
  Vec wt;
  if (p.infinite_D()) {
    wt = Vec::Constant(n, s.w_scalar);
  } else {
    wt = nodal_multiplier(g, s.v, [&](int l) { return p.a5 / (p.D * l + p.a6); });
  }
  Vec FU(n), Fv(n);
  for (int i = 0; i < n; ++i) {
    double U = s.U(i), c = sig.c_nodes(i);
    double K = p.eps * p.a1 + p.eps * p.a2 * std::max(U, 0.0) / (p.eps * p.a3 + std::max(U, 0.0)) + c;
    double R = p.a4 * U / (p.eps + U);
    if (U < 0) K = p.eps * p.a1 + p.a2 * U / p.a3 + c, R = p.a4 * U / p.eps;
    FU(i) = -AU(i) + K * s.v(i) - R;
    Fv(i) = -p.eps * Av(i) - K * s.v(i) + R - p.a5 * s.v(i) + p.a6 * wt(i);
  }
  double bulk = p.infinite_D() ? p.bulk_volume * s.w_scalar : g.integrate({wt.data(), std::size_t(n)}) / 3.0;
  double mass = g.integrate({s.U.data(), std::size_t(n)}) + p.eps * g.integrate({s.v.data(), std::size_t(n)}) +
                p.eps * bulk;
  return std::max({wnorm(W, FU), wnorm(W, Fv), std::abs(mass / p.mass - 1.0)});
}

SteadyState solve_steady(const ModelParams& p, const SignalField& sig, const SteadyOptions& opt,
                         const SteadyState* init) {
  p.validate();
  if (std::abs(sig.a5 - p.a5) > 1e-12 * p.a5)
    throw DomainError("steady: signal a5 differs from model a5");
  if (init && init->grid->size() != sig.grid->size())
    throw DomainError("steady: initial state lives on another grid");
  Problem pr(p, sig);
  const int n = pr.n;
  SteadyState s;
  s.p = p;
  s.grid = sig.grid;
  if (p.eps < 1e-3) s.notes.push_back("eps below 1e-3: transition layer likely under-resolved");

  Vec x(pr.size());
  if (init) {
    x.head(n) = init->U;
    x.segment(n, n) = init->v;
    x(2 * n) = pr.finite ? 0.0 : init->w_scalar;
  } else {
    double cbar = sig.c.integral() / kFourPi;
    HomogeneousState h = homogeneous_steady(p, cbar);
    x.head(n).setConstant(h.U);
    x.segment(n, n).setConstant(h.v);
    x(2 * n) = pr.finite ? 0.0 : h.w;
    if (opt.relax && !sig.constant) {
      ModelParams po = p.unscaled();
      SignalField so = sig.scaled(1.0 / p.eps);
      TrajectoryState s0 = initial_state(sig.grid, opt.relax_nr, h.U / p.eps, h.v, po);
      RunOptions ro;
      ro.sample_dt = 0.5;
      ro.stop_at_steady = true;
      ro.tol_ss = opt.relax_tol;
      ro.steady_samples = 3;
      Trajectory tr = run_to_time(s0, opt.relax_T, opt.policy, po, so, ro);
      const TrajectoryState& f = tr.final_state;
      s.relax_time = f.t;
      if (tr.failed) s.notes.push_back("relaxation stopped early: " + tr.warnings.back());
      for (int i = 0; i < n; ++i) {
        x(i) = p.eps * f.u.values()[i];
        x(n + i) = f.v.values()[i];
      }
      if (!pr.finite) x(2 * n) = f.w_scalar;
    }
  }

  Vec F = pr.residual(x);
  double r = pr.norm(F);
  int it = 0;
  for (; it < opt.max_newton && r > opt.tol; ++it) {
    Mat J = pr.jacobian(x);
    Vec dx = J.partialPivLu().solve(-F);
    double t = 1.0;
    Vec xn;
    Vec Fn;
    double rn = INFINITY;
    for (int k = 0; k < 30; ++k) {
      xn = x + t * dx;
      Fn = pr.residual(xn);
      rn = pr.norm(Fn);
      if (rn < (1.0 - 1e-4 * t) * r) break;
      t *= 0.5;
    }
    if (!(rn < r)) {
      s.notes.push_back("Newton line search stalled at residual " + std::to_string(r));
      break;
    }
    x = xn;
    F = Fn;
    r = rn;
  }
  s.newton_iterations = it;
  fill_diagnostics(s, pr, x);
  // roundoff floor of the dense residual
  double floor = 1e3 * std::numeric_limits<double>::epsilon() * pr.grid.nodal().lambda_max *
                 std::max(1.0, x.head(2 * n).cwiseAbs().maxCoeff());
  s.converged = s.residual <= std::max(opt.tol, floor);
  if (!s.converged) s.notes.push_back("steady residual " + std::to_string(s.residual) + " above tolerance");
  if (s.U.minCoeff() < -1e-8 || s.v.minCoeff() < -1e-8 || s.w.minCoeff() < -1e-8)
    s.notes.push_back("negative values in the steady state");
  return s;
}

std::vector<EpsPoint> continuation_eps(const ModelParams& p, const SignalField& sig,
                                       const std::vector<double>& eps_list, const SteadyOptions& opt) {
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0 && eps_list[i] <= 1)) throw DomainError("eps values must lie in (0, 1]");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw DomainError("eps list must be decreasing");
  }
  ObstacleOperator op(sig, p.ell());
  ObstacleSolution lim = rescale_a4(solve_for_mass(op, p.mass / p.a4), p.a4);
  const Vec& W = op.W();
  std::vector<EpsPoint> out;
  const SteadyState* prev = nullptr;
  for (double e : eps_list) {
    ModelParams q = p;
    q.eps = e;
    EpsPoint pt;
    pt.eps = e;
    pt.state = solve_steady(q, sig, opt, prev);
    pt.limit = lim;
    pt.l1_error = (W.array() * (pt.state.U - lim.u).array().abs()).sum();
    Vec xi = pt.state.U.array() / (e + pt.state.U.array());
    pt.xi_min = xi.minCoeff();
    pt.xi_max = xi.maxCoeff();
    out.push_back(std::move(pt));
    prev = &out.back().state;
  }
  return out;
}

DContinuation continuation_D(const ModelParams& p, const SignalField& sig,
                             const std::vector<double>& D_list, const SteadyOptions& opt) {
  for (std::size_t i = 0; i < D_list.size(); ++i) {
    if (!(D_list[i] >= 1) || !std::isfinite(D_list[i])) throw DomainError("D values must be finite and >= 1");
    if (i > 0 && !(D_list[i] > D_list[i - 1])) throw DomainError("D list must be increasing");
  }
  DContinuation dc;
  ModelParams q = p;
  q.D = kInfinite;
  dc.limit = solve_steady(q, sig, opt);
  if (std::abs(p.bulk_volume - kBall) > 1e-12)
    dc.limit.notes.push_back("bulk_volume differs from the ball volume: the D limit is not matched");
  const SteadyState* prev = &dc.limit;
  const Vec W = Eigen::Map<const Vec>(sig.grid->weights().data(), sig.grid->size());
  for (double D : D_list) {
    q.D = D;
    DPoint pt;
    pt.D = D;
    pt.state = solve_steady(q, sig, opt, prev);
    pt.var_w = pt.state.w_variation();
    pt.grad_w = pt.state.w_gradient();
    pt.sqrtD_grad_w = std::sqrt(D) * pt.grad_w;
    pt.distance = std::hypot(wnorm(W, pt.state.U - dc.limit.U), wnorm(W, pt.state.v - dc.limit.v));
    dc.points.push_back(std::move(pt));
    prev = &dc.points.back().state;
  }
  return dc;
}

}  // namespace cellpol
