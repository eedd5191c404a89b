#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cellpol/bulk.hpp"
#include "cellpol/model.hpp"

namespace cellpol {

// Original variables (eps = 1).  For D = infinity the cytosol is the scalar
// w with bulk_volume * w = M - int(u + v).
struct TrajectoryState {
  double t = 0.0;
  SurfaceField u, v;
  BulkField w;             // finite D
  double w_scalar = 0.0;   // D = infinity
  bool infinite = false;

  double mass(const ModelParams& p) const;
  double lyapunov(const ModelParams& p) const;
  SurfaceField w_trace(const ModelParams& p) const;
  double min_w() const;
};

// Homogeneous data with the given surface values; the cytosol takes the rest
// of the mass (finite D: spatially constant w).
TrajectoryState initial_state(GridPtr grid, int nr, double u0, double v0, const ModelParams& p);
TrajectoryState initial_state(const SurfaceField& u, const SurfaceField& v, int nr,
                              const ModelParams& p);

// CrankNicolson: trapezoidal diffusion with explicit Euler reactions, first
// order overall.  ARS222 is second order.
enum class Scheme { ARS222, Euler, CrankNicolson };

struct StepResult {
  TrajectoryState state;
  bool accepted = false;
  double mass_change = 0.0;  // audit of this step
  double min_value = 0.0;
  double rhs_norm = 0.0;     // ||(y_new - y)/dt||
  std::string reason;
};

// One step; nothing is accepted or rejected here beyond the diagnostics,
// which run_to_time uses for control.  p must be in original variables.
StepResult step_imex(const TrajectoryState& s, double dt, const ModelParams& p,
                     const SignalField& sig, Scheme scheme = Scheme::ARS222);
StepResult step_imex_Dinf(const TrajectoryState& s, double dt, const ModelParams& p,
                          const SignalField& sig, Scheme scheme = Scheme::ARS222);

struct DtPolicy {
  double dt = 1e-3;
  double dt_min = 1e-6;
  double dt_max = 1e-1;
  bool adaptive = true;  // doubling after 10 clean steps
  double tol_neg = 1e-8;
  double mass_step_tol = 1e-10;  // relative per step
  Scheme scheme = Scheme::ARS222;
};

struct TimeSample {
  double t, mass, lyapunov, min_u, min_v, min_w, rhs_norm;
};

struct RunOptions {
  double sample_dt = 0.1;
  bool stop_at_steady = false;
  double tol_ss = 1e-9;
  int steady_samples = 10;
  long max_steps = 50'000'000;
};

struct Trajectory {
  std::vector<TimeSample> samples;
  TrajectoryState final_state;
  long accepted = 0, rejected = 0;
  double mass0 = 0.0, max_mass_drift = 0.0, sup_lyapunov = 0.0;
  double min_value = 0.0;  // min over u, v, w across samples
  bool reached_steady = false;
  bool failed = false;
  std::vector<std::string> warnings;
};

Trajectory run_to_time(const TrajectoryState& s0, double T, const DtPolicy& policy,
                       const ModelParams& p, const SignalField& sig, const RunOptions& opt = {});

void write_time_series_csv(const std::string& path, const Trajectory& tr);

}  // namespace cellpol
