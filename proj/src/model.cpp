#include "cellpol/model.hpp"

#include <algorithm>
#include <cmath>

#include "cellpol/error.hpp"
#include "cellpol/spectral.hpp"

namespace cellpol {

void ModelParams::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("invalid parameter: ") + what);
  };
  need(std::isfinite(a1) && a1 >= 0, "a1 must be >= 0");
  need(std::isfinite(a2) && a2 >= 0, "a2 must be >= 0");
  need(std::isfinite(a3) && a3 > 0, "a3 must be > 0");
  need(std::isfinite(a4) && a4 > 0, "a4 must be > 0");
  need(std::isfinite(a5) && a5 > 0, "a5 must be > 0");
  need(std::isfinite(a6) && a6 > 0, "a6 must be > 0");
  need(infinite_D() || (std::isfinite(D) && D >= 1.0), "D must be >= 1 or infinite");
  need(std::isfinite(eps) && eps > 0 && eps <= 1, "eps must lie in (0,1]");
  need(std::isfinite(mass) && mass > 0, "mass must be > 0");
  need(std::isfinite(bulk_volume) && bulk_volume > 0, "bulk_volume must be > 0");
}

ModelParams ModelParams::unscaled() const {
  ModelParams q = *this;
  q.a4 = a4 / eps;
  q.a5 = a5 / eps;
  q.a6 = a6 / eps;
  q.D = infinite_D() ? kInfinite : D / eps;
  q.mass = mass / eps;
  q.eps = 1.0;
  return q;
}

SignalField signal_from_g(GridPtr grid, double a5, std::function<double(const Point&)> g,
                          std::function<double(double)> g_of_z, std::string description) {
  SignalField s;
  s.grid = grid;
  s.a5 = a5;
  s.g_at = std::move(g);
  s.g_of_z = std::move(g_of_z);
  s.description = std::move(description);
  const int n = grid->size();
  s.g_nodes.resize(n);
  s.c_nodes.resize(n);
  for (int k = 0; k < n; ++k) {
    double gv = s.g_at(grid->node(k));
    if (!(gv > 0.0 && gv < 1.0))
      throw DomainError("signal: g must lie in (0,1) (1-g vanishes or g <= 0 at a node)");
    s.g_nodes(k) = gv;
    s.c_nodes(k) = a5 * gv / (1.0 - gv);
  }
  s.g = SurfaceField::from_values(grid, {s.g_nodes.data(), std::size_t(n)});
  s.c = SurfaceField::from_values(grid, {s.c_nodes.data(), std::size_t(n)});

  auto gmax = refine_maximum(s.g_at, *grid->refined());
  auto gmin = refine_minimum(s.g_at, *grid->refined());
  s.g_max = std::max(gmax.value, s.g_nodes.maxCoeff());
  s.g_min = std::min(gmin.value, s.g_nodes.minCoeff());
  if (!(s.g_min > 0.0 && s.g_max < 1.0)) throw DomainError("signal: g must lie in (0,1)");
  s.c0 = a5 * s.g_min / (1.0 - s.g_min);
  s.argmax = gmax.point;
  s.constant = (s.g_max - s.g_min) <= 1e-14;
  s.S.push_back(s.argmax);
  double tol = 1e-10 * std::max(1.0, s.g_max);
  for (int k = 0; k < n; ++k)
    if (s.g_nodes(k) >= s.g_max - tol) s.S.push_back(grid->node(k));
  return s;
}

SignalField SignalField::scaled(double f) const {
  SignalField s = *this;
  s.a5 = a5 * f;
  s.c = c * f;
  s.c_nodes = c_nodes * f;
  s.c0 = c0 * f;
  return s;
}

SignalField SignalField::on_grid(GridPtr other) const {
  SignalField s = signal_from_g(other, a5, g_at, g_of_z, description);
  return s;
}

double SignalField::distance_to_S(const Point& p) const {
  double d = INFINITY;
  for (const auto& q : S) d = std::min(d, geodesic_distance(p, q));
  return d;
}

SignalField signal_constant_g(GridPtr grid, double g, double a5) {
  return signal_from_g(
      grid, a5, [g](const Point&) { return g; }, [g](double) { return g; },
      "constant g=" + std::to_string(g));
}

SignalField signal_constant_c(GridPtr grid, double c, double a5) {
  if (!(c > 0)) throw DomainError("signal: c must be > 0");
  auto s = signal_constant_g(grid, c / (c + a5), a5);
  s.description = "constant c=" + std::to_string(c);
  return s;
}

SignalField signal_axisymmetric(GridPtr grid, double g0, double g1, double a5) {
  return signal_from_g(
      grid, a5, [g0, g1](const Point& p) { return g0 + g1 * p[2]; },
      [g0, g1](double z) { return g0 + g1 * z; },
      "axisymmetric g=" + std::to_string(g0) + "+" + std::to_string(g1) + "cos(theta)");
}

SignalField signal_manufactured(GridPtr grid, double kappa, double a5, double alpha_star) {
  auto gz = [kappa, alpha_star](double z) {
    return (1.0 - manufactured_lap_u_star(kappa, z)) / (1.0 + alpha_star);
  };
  return signal_from_g(
      grid, a5, [gz](const Point& p) { return gz(p[2]); }, gz,
      "manufactured kappa=" + std::to_string(kappa));
}

SignalField signal_from_c(const SurfaceField& c_in, double a5, double a7) {
  SurfaceField c = c_in * a7;
  auto cmin = field_minimum(c);
  if (!(cmin.value > 0.0)) throw DomainError("signal: c must be positive everywhere");
  auto gfun = [c, a5](const Point& p) {
    double cv = c.evaluate(p[0], p[1], p[2]);
    return cv / (cv + a5);
  };
  bool zonal = true;
  for (int l = 0; l <= c.L(); ++l)
    for (int m = -l; m <= l; ++m)
      if (m != 0 && std::abs(c.coeff(l, m)) > 1e-13 * std::abs(c.coeff(0, 0))) zonal = false;
  std::function<double(double)> gz;
  if (zonal)
    gz = [gfun](double z) { return gfun({std::sqrt(std::max(0.0, 1 - z * z)), 0.0, z}); };
  auto s = signal_from_g(c.grid(), a5, gfun, gz, "c from field");
  return s;
}

SurfaceField reaction_fu(const SurfaceField& u, const SurfaceField& v, const ModelParams& p,
                         const SignalField& sig) {
  const double a1 = p.a1, a2 = p.a2, a3 = p.a3, a4 = p.a4;
  return pointwise_nonlinear(
      {&u, &v, &sig.c},
      [=](std::span<const double> x) {
        double uu = std::max(x[0], 0.0), vv = std::max(x[1], 0.0);
        return (a1 + a2 * uu / (a3 + uu) + x[2]) * vv - a4 * uu / (1.0 + uu);
      },
      "(a1 + a2 u/(a3+u) + c) v - a4 u/(1+u)");
}

Reaction reaction_rhs(const SurfaceField& u, const SurfaceField& v, const SurfaceField& w_trace,
                      const ModelParams& p, const SignalField& sig) {
  Reaction r;
  r.f_u = reaction_fu(u, v, p, sig);
  r.f_v = -r.f_u - v * p.a5 + w_trace * p.a6;
  return r;
}

PointKinetics kinetics(double U, double c, const ModelParams& p) {
  const double e = p.eps;
  PointKinetics k;
  if (U >= 0) {
    double d2 = e * p.a3 + U;
    k.K = e * p.a1 + e * p.a2 * U / d2 + c;
    k.dK = e * p.a2 * e * p.a3 / (d2 * d2);
    double d4 = e + U;
    k.R = p.a4 * U / d4;
    k.dR = p.a4 * e / (d4 * d4);
  } else {
    k.K = e * p.a1 + p.a2 * U / p.a3 + c;
    k.dK = p.a2 / p.a3;
    k.R = p.a4 * U / e;
    k.dR = p.a4 / e;
  }
  return k;
}

}  // namespace cellpol
