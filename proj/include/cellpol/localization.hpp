#pragma once

#include <string>

#include "cellpol/obstacle.hpp"
#include "cellpol/zonal.hpp"

namespace cellpol {

struct LocalizationMetrics {
  bool defined = false;  // false for an empty active set
  std::string route;     // "grid" or "zonal"
  double support_radius = 0.0;
  double alpha_gap = 0.0;
  double active_area = 0.0;
  double mean_lhs = 0.0;  // mean of 1 - g/gmax over the active set
  double mean_rhs = 0.0;  // (a - alpha0) / (1 + a), a = alpha or a6 w_bar
  double mean_identity_residual = 0.0;
  // finite ell: the same identity including the g (w - w_bar) term
  double corrected_residual = 0.0;
};

// Grid metrics: the active set is resolved to the nodes, so the mean identity
// holds to the mesh size only.
LocalizationMetrics localization_metrics(const ObstacleSolution& sol, const SignalField& sig);
// Exact cap metrics for zonal nondecreasing g (argmax at the north pole).
LocalizationMetrics localization_metrics(const ZonalCap& cap, const ZonalCapSolver& solver);

}  // namespace cellpol
