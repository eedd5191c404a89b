#include "cellpol/zonal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cellpol/error.hpp"
#include "cellpol/grid.hpp"

namespace cellpol {

ZonalCapSolver::ZonalCapSolver(std::function<double(double)> g_of_z, int panels)
    : g_(std::move(g_of_z)), panels_(panels) {
  if (!g_) throw DomainError("zonal cap solver: g(z) required");
  gauss_legendre(16, x_, w_);
  gmax_ = g_(1.0);
  astar_ = (2.0 - G(-1.0)) / G(-1.0);
  mstar_ = mass_of(-1.0, astar_);
}

double ZonalCapSolver::integrate(const std::function<double(double)>& f, double a, double b) const {
  if (b <= a) return 0.0;
  double h = (b - a) / panels_, s = 0.0;
  for (int p = 0; p < panels_; ++p) {
    double c = a + (p + 0.5) * h;
    for (std::size_t i = 0; i < x_.size(); ++i) s += w_[i] * f(c + 0.5 * h * x_[i]);
  }
  return 0.5 * h * s;
}

double ZonalCapSolver::G(double t) const {
  // four 16-point panels; g is smooth
  double s = 0.0;
  for (int seg = 0; seg < 4; ++seg) {
    double a = t + seg * (1.0 - t) / 4, b = t + (seg + 1) * (1.0 - t) / 4;
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < x_.size(); ++i) s += h * w_[i] * g_(c + h * x_[i]);
  }
  return s;
}

double ZonalCapSolver::mass_of(double zeta, double alpha) const {
  return -2.0 * std::numbers::pi * integrate([&](double t) { return Phi(t, alpha) / (1.0 + t); }, zeta, 1.0);
}

double ZonalCapSolver::identity_lhs(double zeta) const {
  return integrate([&](double z) { return 1.0 - g_(z) / gmax_; }, zeta, 1.0) / (1.0 - zeta);
}

ZonalCap ZonalCapSolver::at_alpha(double alpha) const {
  ZonalCap c;
  c.alpha = alpha;
  c.identity_rhs = (alpha - alpha0()) / (1.0 + alpha);
  if (alpha >= astar_) {
    if (alpha > astar_ * (1 + 1e-14)) throw DomainError("alpha exceeds alpha*");
    c.zeta = -1.0;
    c.full = true;
  } else if (alpha <= alpha0()) {
    c.zeta = 1.0;
  } else {
    // Phi(., alpha) > 0 at -1 and < 0 just below 1; bracket by bisection then secant
    double a = -1.0, b = 1.0 - 1e-15;
    double fa = Phi(a, alpha);
    int it = 0;
    while (b - a > 1e-15 && it < 200) {
      double m = 0.5 * (a + b);
      double fm = Phi(m, alpha);
      if ((fm > 0) == (fa > 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
      ++it;
    }
    c.zeta = 0.5 * (a + b);
    c.iterations = it;
  }
  c.radius = std::acos(std::clamp(c.zeta, -1.0, 1.0));
  if (c.zeta < 1.0) {
    c.mass = mass_of(c.zeta, alpha);
    c.identity_lhs = identity_lhs(c.zeta);
    c.identity_residual = std::abs(c.identity_lhs - c.identity_rhs);
  }
  return c;
}

ZonalCap ZonalCapSolver::for_mass(double m, double tol) const {
  if (!(m > 0)) throw DomainError("zonal cap solver: m must be > 0");
  if (m >= mstar_) {
    ZonalCap c = at_alpha(astar_);
    c.mass = m;
    return c;
  }
  double a = alpha0(), b = astar_, fa = -m, fb = mstar_ - m;
  int side = 0;
  ZonalCap c;
  for (int it = 0; it < 200; ++it) {
    double x = (a * fb - b * fa) / (fb - fa);
    c = at_alpha(x);
    c.iterations = it + 1;
    double fx = c.mass - m;
    if (std::abs(fx) <= tol * m || b - a < 1e-15) return c;
    if (fx < 0) {
      a = x, fa = fx;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = x, fb = fx;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  c.converged = false;
  return c;
}

double ZonalCapSolver::u(const ZonalCap& cap, double z) const {
  if (z <= cap.zeta) return 0.0;
  return integrate([&](double t) { return -Phi(t, cap.alpha) / ((1.0 - t) * (1.0 + t)); }, cap.zeta, z);
}

bool zonal_monotone(const SignalField& sig) {
  if (!sig.zonal()) return false;
  double prev = sig.g_of_z(-1.0);
  for (int i = 1; i <= 2000; ++i) {
    double z = -1.0 + 2.0 * i / 2000;
    double v = sig.g_of_z(z);
    if (v < prev - 1e-14) return false;
    prev = v;
  }
  // g_of_z must agree with the pointwise signal
  for (int k = 0; k < sig.grid->size(); k += 7) {
    const Point& p = sig.grid->node(k);
    if (std::abs(sig.g_of_z(p[2]) - sig.g_at(p)) > 1e-12) return false;
  }
  return true;
}

}  // namespace cellpol
