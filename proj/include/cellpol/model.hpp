#pragma once

#include <array>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cellpol/surface_field.hpp"

namespace cellpol {

inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

struct ModelParams {
  double a1 = 0.1, a2 = 0.5, a3 = 1.0, a4 = 1.0, a5 = 1.0, a6 = 1.0;
  double D = kInfinite;
  double eps = 1.0;
  double mass = 1.0;  // M when eps = 1, m otherwise
  double bulk_volume = 4.0 * std::numbers::pi / 3.0;

  bool infinite_D() const { return D == kInfinite; }
  double ell() const { return infinite_D() ? 0.0 : a6 / D; }
  // throws DomainError naming the offending parameter
  void validate() const;
  // Original-variable parameters of the eps-rescaled system:
  // a4, a5, a6, D and M scale by 1/eps, U = eps u.
  ModelParams unscaled() const;
};

using Point = std::array<double, 3>;

// Signal c > 0 and g = c / (c + a5).  g is kept exact at grid nodes when the
// signal comes from a closed-form preset.
struct SignalField {
  GridPtr grid;
  double a5 = 1.0;
  std::function<double(const Point&)> g_at;
  std::function<double(double)> g_of_z;  // set for zonal signals
  SurfaceField c, g;
  Eigen::VectorXd c_nodes, g_nodes;
  double c0 = 0.0, g_min = 0.0, g_max = 0.0;
  Point argmax{0, 0, 1};
  std::vector<Point> S;  // argmax set: refined maximiser plus grid nodes at the max
  bool constant = false;
  std::string description;

  bool zonal() const { return static_cast<bool>(g_of_z); }
  // same g with c and a5 multiplied by s
  SignalField scaled(double s) const;
  // same analytic signal on another grid
  SignalField on_grid(GridPtr other) const;
  double distance_to_S(const Point& p) const;
};

SignalField signal_from_g(GridPtr grid, double a5, std::function<double(const Point&)> g,
                          std::function<double(double)> g_of_z, std::string description);
SignalField signal_constant_c(GridPtr grid, double c, double a5);
SignalField signal_constant_g(GridPtr grid, double g, double a5);
// g = g0 + g1 cos(theta)
SignalField signal_axisymmetric(GridPtr grid, double g0, double g1, double a5);
// g = (1 - Delta u*) / (1 + alpha*) with u* = kappa (1 + z)^2
SignalField signal_manufactured(GridPtr grid, double kappa, double a5, double alpha_star = 0.5);
// c given as a field (a7 absorbed: c multiplied by a7)
SignalField signal_from_c(const SurfaceField& c, double a5, double a7 = 1.0);

// Manufactured critical profile kappa (1 + z)^2 and its Laplace-Beltrami.
inline double manufactured_u_star(double kappa, double z) { return kappa * (1 + z) * (1 + z); }
inline double manufactured_lap_u_star(double kappa, double z) {
  return -2.0 * kappa * (3 * z * z + 2 * z - 1);
}

struct Reaction {
  SurfaceField f_u, f_v;
};

// f_u = (a1 + a2 u/(a3+u) + c) v - a4 u/(1+u), f_v = -f_u - a5 v + a6 w,
// with u, v clipped at 0 inside the nonlinear terms.
Reaction reaction_rhs(const SurfaceField& u, const SurfaceField& v, const SurfaceField& w_trace,
                      const ModelParams& p, const SignalField& sig);
SurfaceField reaction_fu(const SurfaceField& u, const SurfaceField& v, const ModelParams& p,
                         const SignalField& sig);

// Pointwise reaction terms used by the nodal steady-state solver.
struct PointKinetics {
  double K, dK, R, dR;  // K(U) = eps a1 + eps a2 U/(eps a3 + U) + c, R = a4 U/(eps + U)
};
PointKinetics kinetics(double U, double c, const ModelParams& p);

}  // namespace cellpol
