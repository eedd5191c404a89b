#include "cellpol/localization.hpp"

#include <algorithm>
#include <cmath>

#include "cellpol/nodal.hpp"

namespace cellpol {

LocalizationMetrics localization_metrics(const ObstacleSolution& sol, const SignalField& sig) {
  LocalizationMetrics r;
  r.route = "grid";
  const SphereGrid& grid = *sol.grid;
  const int n = grid.size();
  const double a0 = alpha0(sig);
  r.alpha_gap = sol.alpha - a0;
  double area = 0, lhs = 0;
  for (int k = 0; k < n; ++k) {
    if (!sol.active[k]) continue;
    area += grid.weight(k);
    lhs += grid.weight(k) * (1.0 - sig.g_nodes(k) / sig.g_max);
    r.support_radius = std::max(r.support_radius, sig.distance_to_S(grid.node(k)));
  }
  if (area == 0) return r;
  r.defined = true;
  r.active_area = area;
  r.mean_lhs = lhs / area;
  // with a4 = 1, a6 w_bar = alpha since N~u has zero mean
  r.mean_rhs = (sol.alpha - a0) / (1.0 + sol.alpha);
  r.mean_identity_residual = std::abs(r.mean_lhs - r.mean_rhs);
  r.corrected_residual = r.mean_identity_residual;
  if (sol.regime == Regime::FiniteEll) {
    Eigen::VectorXd dw = -sol.ell * (grid.nodal().dtn_tilde * sol.u);  // a6 (w - w_bar)
    double corr = 0;
    for (int k = 0; k < n; ++k)
      if (sol.active[k]) corr += grid.weight(k) * sig.g_nodes(k) * dw(k);
    corr /= area * sig.g_max;
    r.corrected_residual = std::abs(r.mean_lhs - (sol.alpha - a0 + corr) / (1.0 + sol.alpha));
  }
  return r;
}

LocalizationMetrics localization_metrics(const ZonalCap& cap, const ZonalCapSolver& solver) {
  LocalizationMetrics r;
  r.route = "zonal";
  r.alpha_gap = cap.alpha - solver.alpha0();
  if (cap.zeta >= 1.0) return r;
  r.defined = true;
  r.support_radius = cap.radius;
  r.active_area = 2.0 * std::numbers::pi * (1.0 - cap.zeta);
  r.mean_lhs = cap.identity_lhs;
  r.mean_rhs = cap.identity_rhs;
  r.mean_identity_residual = cap.identity_residual;
  r.corrected_residual = cap.identity_residual;
  return r;
}

}  // namespace cellpol
