#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cellpol/model.hpp"

namespace cellpol {

enum class Regime { Dinf, FiniteEll };

struct CriticalData {
  double alpha0 = 0.0, alpha_star = 0.0, m_star = 0.0;
  Eigen::VectorXd u_star;  // nodal, min = 0 by the field-minimum rule
  double u_star_residual = 0.0;
  double u_star_min = 0.0;      // minimum after the shift
  double balance = 0.0;         // int psi (alpha* g - (1-g)), psi = 1 for D = infinity
  Eigen::VectorXd psi;          // finite ell only
  double psi_residual = 0.0;    // ||B* psi|| / ||psi||
  double sigma_min = 0.0, sigma_second = 0.0;
  bool degenerate_kernel = false;
};

// Solution of the limiting obstacle problem on grid values (a4 = 1).
struct ObstacleSolution {
  GridPtr grid;
  Regime regime = Regime::Dinf;
  double ell = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd xi;             // representation formula on the contact set
  Eigen::VectorXd xi_multiplier;  // 1 - q/(1-g) on the contact set
  double alpha = 0.0;
  double mass = 0.0;
  std::vector<char> active;
  double tol_active = 0.0;
  double kkt_residual = 0.0;       // || min(u, q(u)) ||
  double active_residual = 0.0;    // max |q| on the active set
  double min_q = 0.0;
  double inactive_fraction = 0.0;  // area fraction of {u = 0}
  bool polarized = false;
  bool converged = false;
  bool valid = true;
  bool closed_form = false;
  int iterations = 0;
  std::string method;
  std::vector<std::string> notes;

  SurfaceField u_field() const;
  SurfaceField xi_field() const;
};

// Dense operators of one (signal, ell) pair: B = -Delta + ell g N~.
class ObstacleOperator {
 public:
  ObstacleOperator(const SignalField& sig, double ell);
  const SignalField& signal() const { return sig_; }
  double ell() const { return ell_; }
  Regime regime() const { return ell_ > 0 ? Regime::FiniteEll : Regime::Dinf; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::VectorXd& W() const { return W_; }
  const Eigen::VectorXd& g() const { return sig_.g_nodes; }
  Eigen::VectorXd q(const Eigen::VectorXd& u, double alpha) const;
  double step_bound() const { return lambda_; }
  double energy(const Eigen::VectorXd& u, double alpha) const;  // D = infinity only
  // alpha0, alpha*, u*, m*, psi; computed once
  const CriticalData& critical() const;

 private:
  SignalField sig_;
  double ell_;
  Eigen::MatrixXd B_;
  Eigen::VectorXd W_;
  double lambda_;
  mutable std::once_flag crit_once_;
  mutable std::shared_ptr<CriticalData> crit_;
};

struct ObstacleOptions {
  double tol_kkt = 1e-10;
  int max_newton = 200;
  int pg_iterations = 300;
  double tol_mass = 1e-6;
  int max_bisection = 60;
};

double alpha0(const SignalField& sig);


ObstacleSolution solve_obstacle(const ObstacleOperator& op, double alpha,
                                const ObstacleOptions& opt = {},
                                const ObstacleSolution* warm = nullptr);
ObstacleSolution solve_for_mass(const ObstacleOperator& op, double m,
                                const ObstacleOptions& opt = {},
                                const CriticalData* crit = nullptr);

ObstacleSolution solve_obstacle_Dinf(double alpha, const SignalField& sig,
                                     const ObstacleOptions& opt = {});
ObstacleSolution solve_for_mass_Dinf(double m, const SignalField& sig,
                                     const ObstacleOptions& opt = {});
ObstacleSolution solve_obstacle_finiteD(double alpha, const SignalField& sig, double ell,
                                        const ObstacleOptions& opt = {});
ObstacleSolution solve_for_mass_finiteD(double m, const SignalField& sig, double ell,
                                        const ObstacleOptions& opt = {});

// Restore a4 != 1: (u, alpha) -> (a4 u, a4 alpha); xi and the active set stay.
ObstacleSolution rescale_a4(const ObstacleSolution& s, double a4);

// Minimum of a nodal vector: the refined minimum of its spectral interpolant
// when the vector is band-limited to roundoff, otherwise the nodal minimum.
double nodal_field_min(const SphereGrid& grid, const Eigen::VectorXd& x);

struct Reconstruction {
  Eigen::VectorXd v, w;  // surface traces
  double w_bar = 0.0;
  double w_bar_formula = 0.0;   // from the integral formula
  double w_identity_residual = 0.0;  // w - (wbar + T Delta u / D)
  // u equation, v equation, harmonicity (exact here), Robin flux balance
  std::vector<double> equation_residuals;
  double min_v = 0.0, min_w = 0.0;
  bool valid = true;
};
// Finite-ell bulk-surface fields (v, w) of an obstacle solution; a4 = 1.
Reconstruction reconstruct_vw_finiteD(const ObstacleSolution& sol, const ModelParams& p,
                                      const SignalField& sig);

}  // namespace cellpol
