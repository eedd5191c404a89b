#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cellpol/obstacle.hpp"

namespace cellpol {

struct CriticalMassReport {
  int L = 0;
  double ell = 0.0;  // 0 for D = infinity
  double alpha0 = 0.0, alpha_star = 0.0, m_star = 0.0;
  SurfaceField u_star;
  std::optional<SurfaceField> psi;
  double u_star_residual = 0.0;
  double u_star_min = 0.0;
  double balance = 0.0;
  double psi_residual = 0.0;
  double psi_min = 0.0;
  double psi_g = 0.0;  // int psi g
  double sigma_min = 0.0, sigma_second = 0.0;
  bool degenerate_kernel = false;
  std::vector<std::string> warnings;
};

CriticalMassReport critical_mass(const ObstacleOperator& op);
CriticalMassReport critical_mass(const SignalField& sig, double ell = 0.0);

double alpha_star_Dinf(const SignalField& sig);
SurfaceField u_star_Dinf(const SignalField& sig);
// Sign-definite kernel element of -Delta + ell N~(g .), normalised to int = 4 pi.
SurfaceField adjoint_null_psi(const SignalField& sig, double ell);
double alpha_star_finiteD(const SignalField& sig, double ell);
SurfaceField u_star_finiteD(const SignalField& sig, double ell);

}  // namespace cellpol
