#include "cellpol/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "cellpol/error.hpp"
#include "cellpol/nodal.hpp"

namespace cellpol {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

double wnorm(const Vec& W, const Vec& x) { return std::sqrt((W.array() * x.array().square()).sum()); }

Vec subvec(const Vec& x, const std::vector<int>& idx) {
  Vec r(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r(i) = x(idx[i]);
  return r;
}

}  // namespace

double alpha0(const SignalField& sig) { return (1.0 - sig.g_max) / sig.g_max; }

double nodal_field_min(const SphereGrid& grid, const Vec& x) {
  double nodal = x.minCoeff();
  double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  if (band_defect(grid, x) > 1e-10 * scale) return nodal;
  GridPtr g = SphereGrid::make(grid.L(), grid.nlat(), grid.nlon());
  auto f = SurfaceField::from_values(g, {x.data(), std::size_t(x.size())});
  return std::min(nodal, field_minimum(f).value);
}

SurfaceField ObstacleSolution::u_field() const {
  return SurfaceField::from_values(grid, {u.data(), std::size_t(u.size())});
}

SurfaceField ObstacleSolution::xi_field() const {
  return SurfaceField::from_values(grid, {xi.data(), std::size_t(xi.size())});
}

ObstacleOperator::ObstacleOperator(const SignalField& sig, double ell) : sig_(sig), ell_(ell) {
  if (ell < 0 || !std::isfinite(ell)) throw DomainError("obstacle: ell must be finite and >= 0");
  const SphereGrid& grid = *sig.grid;
  const NodalOperators& ops = grid.nodal();
  W_ = Eigen::Map<const Vec>(grid.weights().data(), grid.size());
  B_ = ops.neg_laplacian;
  lambda_ = ops.lambda_max;
  if (ell > 0) {
    B_.noalias() += ell * (sig.g_nodes.asDiagonal() * ops.dtn_tilde);
    lambda_ += ell * sig.g_max * (grid.L() + 1.0);
  }
}

Vec ObstacleOperator::q(const Vec& u, double alpha) const {
  Vec r = B_ * u;
  r.array() += (1.0 - g().array()) - alpha * g().array();
  return r;
}

double ObstacleOperator::energy(const Vec& u, double alpha) const {
  Vec Au = B_ * u;
  Vec f = (1.0 - g().array()) - alpha * g().array();
  return 0.5 * (W_.array() * u.array() * Au.array()).sum() + (W_.array() * f.array() * u.array()).sum();
}

const CriticalData& ObstacleOperator::critical() const {
  std::call_once(crit_once_, [this] {
    auto cd = std::make_shared<CriticalData>();
    const SphereGrid& grid = *sig_.grid;
    const int n = grid.size();
    const Vec& gn = g();
    cd->alpha0 = alpha0(sig_);
    Vec psi = Vec::Ones(n);
    if (ell_ > 0) {
      const NodalOperators& ops = grid.nodal();
      Mat Bs = ops.neg_laplacian + ell_ * ops.dtn_tilde * gn.asDiagonal();
      Eigen::BDCSVD<Mat> svd(Bs, Eigen::ComputeFullV);
      const Vec& sv = svd.singularValues();
      psi = svd.matrixV().col(n - 1);
      cd->sigma_min = sv(n - 1);
      cd->sigma_second = sv(n - 2);
      cd->degenerate_kernel = cd->sigma_second < 10.0 * cd->sigma_min;
      double s = W_.dot(psi);
      psi *= kFourPi / s;
      cd->psi_residual = wnorm(W_, Bs * psi) / wnorm(W_, psi);
      cd->psi = psi;
    }
    double num = (W_.array() * psi.array() * (1.0 - gn.array())).sum();
    double den = (W_.array() * psi.array() * gn.array()).sum();
    if (!(den > 0)) throw ConsistencyError("int psi g <= 0: adjoint kernel is not sign-definite");
    cd->alpha_star = num / den;
    Vec r = (cd->alpha_star * gn.array() - (1.0 - gn.array())).matrix();
    cd->balance = (W_.array() * psi.array() * r.array()).sum();

    Vec u;
    if (ell_ == 0) {
      // diagonal inversion on the band, complement eigenvalue L(L+1)
      std::span<const double> rs(r.data(), n);
      auto c = grid.analyze(rs);
      auto band = grid.synthesize(c);
      for (int l = 0; l <= grid.L(); ++l)
        for (int m = -l; m <= l; ++m) c[sh_index(l, m)] *= l == 0 ? 0.0 : 1.0 / (double(l) * (l + 1));
      auto sol = grid.synthesize(c);
      double beta = grid.nodal().lambda_max;
      u.resize(n);
      for (int k = 0; k < n; ++k) u(k) = sol[k] + (r(k) - band[k]) / beta;
    } else {
      double orth = std::abs(cd->balance) / (wnorm(W_, psi) * std::max(wnorm(W_, r), 1e-300));
      if (orth > 1e-9)
        throw ConsistencyError("u*: right-hand side not orthogonal to psi (" + std::to_string(orth) + ")");
      Mat K = Mat::Zero(n + 1, n + 1);
      K.topLeftCorner(n, n) = B_;
      K.block(0, n, n, 1).setOnes();
      K.block(n, 0, 1, n) = W_.transpose();
      Vec rhs(n + 1);
      rhs.head(n) = r;
      rhs(n) = 0.0;
      Vec x = K.partialPivLu().solve(rhs);
      u = x.head(n);
    }
    double mn = nodal_field_min(grid, u);
    u.array() -= mn;
    cd->u_star = u;
    cd->u_star_min = nodal_field_min(grid, u);
    cd->u_star_residual = wnorm(W_, B_ * u - r);
    cd->m_star = W_.dot(u);
    if (sig_.constant) {
      cd->u_star.setZero();
      cd->m_star = 0.0;
    }
    crit_ = cd;
  });
  return *crit_;
}

namespace {

void finalize(const ObstacleOperator& op, ObstacleSolution& s) {
  const Vec& g = op.g();
  const Vec& W = op.W();
  const int n = int(s.u.size());
  Vec q = op.q(s.u, s.alpha);
  s.mass = W.dot(s.u);
  s.tol_active = 1e-7 * std::max(s.u.maxCoeff(), s.mass / kFourPi);
  s.active.assign(n, 0);
  s.xi.resize(n);
  s.xi_multiplier.resize(n);
  Vec Nu;
  if (s.regime == Regime::FiniteEll) Nu = op.signal().grid->nodal().dtn_tilde * s.u;
  double kkt = 0.0, act = 0.0, inactive = 0.0;
  for (int i = 0; i < n; ++i) {
    double mn = std::min(s.u(i), q(i));
    kkt += W(i) * mn * mn;
    bool a = s.u(i) > s.tol_active;
    s.active[i] = a;
    if (a) {
      s.xi(i) = 1.0;
      s.xi_multiplier(i) = 1.0;
      act = std::max(act, std::abs(q(i)));
    } else {
      inactive += W(i);
      double load = s.regime == Regime::FiniteEll ? s.alpha - s.ell * Nu(i) : s.alpha;
      s.xi(i) = g(i) * load / (1.0 - g(i));
      s.xi_multiplier(i) = 1.0 - q(i) / (1.0 - g(i));
    }
  }
  s.kkt_residual = std::sqrt(kkt);
  s.active_residual = act;
  s.min_q = q.minCoeff();
  s.inactive_fraction = inactive / kFourPi;
  s.polarized = inactive > 0 && s.mass > 0;
  s.valid = s.u.minCoeff() >= -1e-10 && s.xi.maxCoeff() <= 1 + 1e-8;
  double xmin = s.xi.minCoeff();
  if (xmin < -1e-8) {
    s.notes.push_back("xi < 0 on the contact set (min " + std::to_string(xmin) + ")");
    if (s.regime == Regime::Dinf || xmin < -1e-6) s.valid = false;
  }
}

ObstacleSolution critical_solution(const ObstacleOperator& op, double shift) {
  const CriticalData& cd = op.critical();
  ObstacleSolution s;
  s.grid = op.signal().grid;
  s.regime = op.regime();
  s.ell = op.ell();
  s.alpha = cd.alpha_star;
  s.u = cd.u_star.array() + shift;
  s.converged = true;
  s.closed_form = true;
  s.method = "closed form u* + constant";
  finalize(op, s);
  return s;
}

}  // namespace

ObstacleSolution solve_obstacle(const ObstacleOperator& op, double alpha, const ObstacleOptions& opt,
                                const ObstacleSolution* warm) {
  const CriticalData& cd = op.critical();
  const int n = int(op.g().size());
  const double scale = std::max(1.0, std::abs(cd.alpha_star));
  if (std::abs(alpha - cd.alpha_star) <= 1e-12 * scale) return critical_solution(op, 0.0);
  if (alpha > cd.alpha_star + 1e-12 * scale) {
    if (op.regime() == Regime::Dinf)
      throw DomainError("alpha exceeds alpha*: the energy is unbounded below");
    ObstacleSolution s;
    s.grid = op.signal().grid;
    s.regime = op.regime();
    s.ell = op.ell();
    s.alpha = alpha;
    s.u = Vec::Zero(n);
    s.converged = false;
    s.valid = false;
    s.method = "rejected";
    s.notes.push_back("alpha exceeds alpha*(ell): no bounded solution");
    finalize(op, s);
    s.converged = false;
    s.valid = false;
    return s;
  }

  const Vec& W = op.W();
  const Mat& B = op.B();
  const double lam = op.step_bound();
  Vec f = (1.0 - op.g().array()) - alpha * op.g().array();

  ObstacleSolution s;
  s.grid = op.signal().grid;
  s.regime = op.regime();
  s.ell = op.ell();
  s.alpha = alpha;

  // projected (accelerated) gradient warm-up
  Vec u = warm ? warm->u : Vec::Zero(n);
  u = u.cwiseMax(0.0);
  auto projected_gradient = [&](Vec& x, int iters) {
    Vec prev = x, y = x;
    double t = 1.0;
    for (int it = 0; it < iters; ++it) {
      Vec xn = (y - (B * y + f) / lam).cwiseMax(0.0);
      if (op.regime() == Regime::Dinf) {
        double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = xn + ((t - 1.0) / tn) * (xn - x);
        t = tn;
      } else {
        y = xn;
      }
      prev = x;
      x = xn;
    }
  };
  if (!warm) projected_gradient(u, opt.pg_iterations);

  std::set<std::vector<char>> seen;
  std::vector<char> contact(n);
  auto select = [&](const Vec& x) {
    Vec q = B * x + f;
    for (int i = 0; i < n; ++i) contact[i] = (x(i) - q(i) / lam) <= 0.0;
  };
  select(u);
  const bool spd = op.regime() == Regime::Dinf;
  int it = 0, restarts = 0;
  bool done = false;
  for (; it < opt.max_newton; ++it) {
    std::vector<int> I;
    for (int i = 0; i < n; ++i)
      if (!contact[i]) I.push_back(i);
    Vec un = Vec::Zero(n);
    if (!I.empty()) {
      const int m = int(I.size());
      Mat BI(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) BI(a, b) = B(I[a], I[b]);
      Vec rhs = -subvec(f, I);
      Vec x;
      if (spd) {
        // W A is symmetric; positive definite once a contact node exists
        Vec wI = subvec(W, I);
        Mat S = wI.asDiagonal() * BI;
        S = 0.5 * (S + S.transpose()).eval();
        Eigen::LLT<Mat> llt(S);
        if (llt.info() == Eigen::Success)
          x = llt.solve((wI.array() * rhs.array()).matrix());
        else
          x = BI.partialPivLu().solve(rhs);
      } else {
        x = BI.partialPivLu().solve(rhs);
      }
      for (int a = 0; a < m; ++a) un(I[a]) = x(a);
    }
    std::vector<char> old = contact;
    select(un);
    u = un;
    if (contact == old) {
      done = true;
      break;
    }
    if (!seen.insert(old).second) {
      // cycling: fall back to projected iterations from the feasible part
      if (++restarts > 5) break;
      u = u.cwiseMax(0.0);
      projected_gradient(u, opt.pg_iterations);
      select(u);
      seen.clear();
    }
  }
  s.u = u;
  s.iterations = it + 1;
  s.method = "projected gradient + primal-dual active set";
  finalize(op, s);
  s.converged = done && s.kkt_residual < std::max(opt.tol_kkt, 1e-9 * std::max(1.0, s.u.cwiseAbs().maxCoeff()));
  if (!s.converged) s.notes.push_back("active-set iteration did not settle");
  return s;
}

ObstacleSolution solve_for_mass(const ObstacleOperator& op, double m, const ObstacleOptions& opt,
                                const CriticalData* crit) {
  if (!(m > 0)) throw DomainError("solve_for_mass: m must be > 0");
  const CriticalData& cd = crit ? *crit : op.critical();
  if (m >= cd.m_star * (1.0 - 1e-12)) {
    auto s = critical_solution(op, (m - cd.m_star) / kFourPi);
    if (op.signal().constant) s.method = "constant signal: u = m/|Gamma|";
    return s;
  }
  double a = cd.alpha0, b = cd.alpha_star;
  double fa = -m, fb = cd.m_star - m;
  ObstacleSolution best;
  bool have = false;
  int side = 0;
  for (int it = 0; it < opt.max_bisection; ++it) {
    double x = (a * fb - b * fa) / (fb - fa);
    if (!(x > a && x < b)) x = 0.5 * (a + b);
    const ObstacleSolution* warm = have ? &best : nullptr;
    ObstacleSolution s = solve_obstacle(op, x, opt, warm);
    double fx = s.mass - m;
    if (!have || std::abs(fx) < std::abs(best.mass - m)) {
      best = s;
      have = true;
    }
    best.iterations = it + 1;
    if (std::abs(fx) < opt.tol_mass * m) {
      best = s;
      best.iterations = it + 1;
      best.method += "; Illinois bisection on alpha";
      return best;
    }
    if (fx < 0) {
      a = x, fa = fx;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = x, fb = fx;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
    if (b - a < 1e-15 * std::max(1.0, b)) break;
  }
  best.converged = false;
  best.notes.push_back("bisection on alpha did not meet the mass tolerance");
  return best;
}

ObstacleSolution solve_obstacle_Dinf(double alpha, const SignalField& sig, const ObstacleOptions& opt) {
  return solve_obstacle(ObstacleOperator(sig, 0.0), alpha, opt);
}
ObstacleSolution solve_for_mass_Dinf(double m, const SignalField& sig, const ObstacleOptions& opt) {
  return solve_for_mass(ObstacleOperator(sig, 0.0), m, opt);
}
ObstacleSolution solve_obstacle_finiteD(double alpha, const SignalField& sig, double ell,
                                        const ObstacleOptions& opt) {
  if (!(ell > 0)) throw DomainError("finite-D obstacle: ell must be > 0");
  return solve_obstacle(ObstacleOperator(sig, ell), alpha, opt);
}
ObstacleSolution solve_for_mass_finiteD(double m, const SignalField& sig, double ell,
                                        const ObstacleOptions& opt) {
  if (!(ell > 0)) throw DomainError("finite-D obstacle: ell must be > 0");
  return solve_for_mass(ObstacleOperator(sig, ell), m, opt);
}

ObstacleSolution rescale_a4(const ObstacleSolution& s, double a4) {
  ObstacleSolution r = s;
  r.u *= a4;
  r.alpha *= a4;
  r.mass *= a4;
  r.tol_active *= a4;
  r.kkt_residual *= a4;
  r.active_residual *= a4;
  r.min_q *= a4;
  return r;
}

Reconstruction reconstruct_vw_finiteD(const ObstacleSolution& sol, const ModelParams& p,
                                      const SignalField& sig) {
  if (sol.regime != Regime::FiniteEll) throw DomainError("reconstruct_vw_finiteD: finite-ell solution required");
  if (p.infinite_D() || std::abs(p.a6 / p.D - sol.ell) > 1e-12 * std::max(1.0, sol.ell))
    throw DomainError("reconstruct_vw_finiteD: a6/D does not match the solution's ell");
  const SphereGrid& grid = *sol.grid;
  const NodalOperators& ops = grid.nodal();
  const int n = grid.size();
  const Vec& g = sig.g_nodes;
  const Vec W = Eigen::Map<const Vec>(grid.weights().data(), n);
  Reconstruction r;
  Vec Nu = ops.dtn_tilde * sol.u;
  r.w = (sol.alpha - sol.ell * Nu.array()).matrix() / p.a6;
  r.w_bar = W.dot(r.w) / kFourPi;
  // T Delta u through the spectral multipliers -l(l+1) and 1/l
  std::span<const double> us(sol.u.data(), n);
  auto c = grid.analyze(us);
  auto band = grid.synthesize(c);
  for (int l = 0; l <= grid.L(); ++l)
    for (int m = -l; m <= l; ++m) c[sh_index(l, m)] *= l == 0 ? 0.0 : -double(l) * (l + 1) / l;
  auto tl = grid.synthesize(c);
  Vec TLu(n);
  double cmp = -(grid.L() + 1.0);
  for (int k = 0; k < n; ++k) TLu(k) = tl[k] + cmp * (sol.u(k) - band[k]);
  r.w_identity_residual = (r.w - (r.w_bar + TLu.array() / p.D).matrix()).cwiseAbs().maxCoeff();
  const Vec& xi = sol.xi_multiplier;
  r.v = ((1.0 - g.array()) * (p.a6 * r.w.array() + xi.array()) / p.a5).matrix();
  double Sg = W.dot(g);
  r.w_bar_formula =
      (W.array() * ((1.0 - g.array()) * xi.array() - (p.a6 / p.D) * g.array() * TLu.array())).sum() /
      (p.a6 * Sg);
  const Vec& c_n = sig.c_nodes;
  Vec lapu = -(ops.neg_laplacian * sol.u);
  Vec e1 = lapu.array() + c_n.array() * r.v.array() - xi.array();
  Vec e2 = -c_n.array() * r.v.array() + xi.array() - p.a5 * r.v.array() + p.a6 * r.w.array();
  Vec e4 = p.D * (ops.dtn * r.w) - (p.a5 * r.v - p.a6 * r.w);
  r.equation_residuals = {e1.cwiseAbs().maxCoeff(), e2.cwiseAbs().maxCoeff(), 0.0,
                          e4.cwiseAbs().maxCoeff()};
  r.min_v = r.v.minCoeff();
  r.min_w = r.w.minCoeff();
  r.valid = r.min_v >= -1e-8 && r.min_w >= -1e-8;
  return r;
}

}  // namespace cellpol
