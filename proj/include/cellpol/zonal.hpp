#pragma once

#include <functional>

#include "cellpol/model.hpp"

namespace cellpol {

// Exact free boundary of the D = infinity obstacle problem for a zonal g that
// is nondecreasing in z.  The active set is the cap {z > zeta}; on it
// (1 - z^2) u' = -Phi(z) with Phi(t) = int_t^1 (1 - (1 + alpha) g).
struct ZonalCap {
  double alpha = 0.0;
  double zeta = -1.0;   // cos of the cap radius
  double radius = 0.0;  // geodesic radius around the north pole
  double mass = 0.0;
  double identity_lhs = 0.0;  // mean of 1 - g/gmax over the cap
  double identity_rhs = 0.0;  // (alpha - alpha0) / (1 + alpha)
  double identity_residual = 0.0;
  bool full = false;  // alpha = alpha*: whole sphere
  int iterations = 0;
  bool converged = true;
};

class ZonalCapSolver {
 public:
  ZonalCapSolver(std::function<double(double)> g_of_z, int panels = 64);

  double g_max() const { return gmax_; }
  double alpha0() const { return (1.0 - gmax_) / gmax_; }
  double alpha_star() const { return astar_; }
  double m_star() const { return mstar_; }

  ZonalCap at_alpha(double alpha) const;
  ZonalCap for_mass(double m, double tol = 1e-13) const;
  double u(const ZonalCap& cap, double z) const;

 private:
  double G(double t) const;  // int_t^1 g
  double Phi(double t, double alpha) const { return (1.0 - t) - (1.0 + alpha) * G(t); }
  double integrate(const std::function<double(double)>& f, double a, double b) const;
  double mass_of(double zeta, double alpha) const;
  double identity_lhs(double zeta) const;

  std::function<double(double)> g_;
  int panels_;
  std::vector<double> x_, w_;
  double gmax_, astar_, mstar_;
};

// g zonal and nondecreasing in z (sampled), so that the cap solver applies.
bool zonal_monotone(const SignalField& sig);

}  // namespace cellpol
