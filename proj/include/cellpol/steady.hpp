#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cellpol/bulk.hpp"
#include "cellpol/dynamics.hpp"
#include "cellpol/model.hpp"
#include "cellpol/obstacle.hpp"

namespace cellpol {

// Stationary state of the eps-system in nodal values: U = eps u, v, and the
// cytosol as a surface trace (finite D, harmonic in the ball) or a scalar.
struct SteadyState {
  ModelParams p;
  GridPtr grid;
  Eigen::VectorXd U, v, w;  // w: trace on the grid (constant for D = infinity)
  double w_scalar = 0.0;
  double lambda = 0.0;  // bordering multiplier, zero at a solution

  double res_U = 0.0, res_v = 0.0, res_mass = 0.0;  // W-weighted L2, mass relative
  double residual = 0.0;              // Newton residual
  double independent_residual = 0.0;  // transform path
  double mass = 0.0;
  double mass_error = 0.0;  // relative

  double int_v = 0.0, int_v_bound = 0.0;  // a4 |Gamma| / c0
  double w_max = 0.0, w_bound = 0.0;      // a4 a5 / (c0 a6)
  double norm_H2_U = 0.0, norm_L2_v = 0.0, norm_H1_w = 0.0;

  bool converged = false;
  int newton_iterations = 0;
  double relax_time = 0.0;
  std::vector<std::string> notes;

  SurfaceField U_field() const;
  SurfaceField v_field() const;
  SurfaceField w_field() const;
  // harmonic extension of the trace (finite D) or the constant (D = infinity)
  BulkField w_bulk(int nr) const;
  // ||w - mean w||_{L2(ball)} and ||grad w||_{L2(ball)} of the harmonic extension
  double w_variation() const;
  double w_gradient() const;
};

// Spatially constant state for a constant signal value c.
struct HomogeneousState {
  double U = 0.0, v = 0.0, w = 0.0;
  int iterations = 0;
};
HomogeneousState homogeneous_steady(const ModelParams& p, double c);

struct SteadyOptions {
  double tol = 1e-11;
  int max_newton = 60;
  bool relax = true;
  double relax_T = 50.0;
  double relax_tol = 1e-6;
  int relax_nr = 16;
  DtPolicy policy{};
};

SteadyState solve_steady(const ModelParams& p, const SignalField& sig,
                         const SteadyOptions& opt = {}, const SteadyState* init = nullptr);

// Residual of the stationary equations through spectral transforms, without
// the dense matrices used by Newton.
double steady_residual(const SteadyState& s, const SignalField& sig);

struct EpsPoint {
  double eps = 0.0;
  SteadyState state;
  ObstacleSolution limit;  // same mass and regime, a4 restored
  double l1_error = 0.0;
  double xi_min = 0.0, xi_max = 0.0;  // U/(eps + U)
};
std::vector<EpsPoint> continuation_eps(const ModelParams& p, const SignalField& sig,
                                       const std::vector<double>& eps_list,
                                       const SteadyOptions& opt = {});

struct DPoint {
  double D = 0.0;
  SteadyState state;
  double var_w = 0.0;
  double grad_w = 0.0;
  double sqrtD_grad_w = 0.0;
  double distance = 0.0;  // L2 distance of (U, v) to the D = infinity state
};
struct DContinuation {
  SteadyState limit;
  std::vector<DPoint> points;
};
DContinuation continuation_D(const ModelParams& p, const SignalField& sig,
                             const std::vector<double>& D_list, const SteadyOptions& opt = {});

}  // namespace cellpol
