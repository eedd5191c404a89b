#include "cellpol/critical_mass.hpp"

#include <cmath>

#include "cellpol/error.hpp"

namespace cellpol {

namespace {

SurfaceField nodal_to_field(const GridPtr& g, const Eigen::VectorXd& x) {
  return SurfaceField::from_values(g, {x.data(), std::size_t(x.size())});
}

void require_ell(double ell) {
  if (!(ell > 0) || !std::isfinite(ell)) throw DomainError("ell must be finite and > 0");
}

}  // namespace

CriticalMassReport critical_mass(const ObstacleOperator& op) {
  const CriticalData& cd = op.critical();
  const GridPtr& grid = op.signal().grid;
  CriticalMassReport r;
  r.L = grid->L();
  r.ell = op.ell();
  r.alpha0 = cd.alpha0;
  r.alpha_star = cd.alpha_star;
  r.m_star = cd.m_star;
  r.u_star = nodal_to_field(grid, cd.u_star);
  r.u_star_residual = cd.u_star_residual;
  r.u_star_min = cd.u_star_min;
  r.balance = cd.balance;
  if (op.regime() == Regime::FiniteEll) {
    r.psi = nodal_to_field(grid, cd.psi);
    r.psi_residual = cd.psi_residual;
    r.psi_min = cd.psi.minCoeff();
    r.psi_g = (op.W().array() * cd.psi.array() * op.g().array()).sum();
    r.sigma_min = cd.sigma_min;
    r.sigma_second = cd.sigma_second;
    r.degenerate_kernel = cd.degenerate_kernel;
    if (cd.degenerate_kernel) r.warnings.push_back("adjoint kernel may be degenerate");
    if (r.psi_min < 0) r.warnings.push_back("psi changes sign");
  }
  if (r.alpha_star < r.alpha0 - 1e-12) r.warnings.push_back("alpha* < alpha0");
  return r;
}

CriticalMassReport critical_mass(const SignalField& sig, double ell) {
  return critical_mass(ObstacleOperator(sig, ell));
}

double alpha_star_Dinf(const SignalField& sig) {
  const SphereGrid& g = *sig.grid;
  double num = 0, den = 0;
  for (int k = 0; k < g.size(); ++k) {
    num += g.weight(k) * (1.0 - sig.g_nodes(k));
    den += g.weight(k) * sig.g_nodes(k);
  }
  return num / den;
}

SurfaceField u_star_Dinf(const SignalField& sig) { return critical_mass(sig, 0.0).u_star; }

SurfaceField adjoint_null_psi(const SignalField& sig, double ell) {
  require_ell(ell);
  return *critical_mass(sig, ell).psi;
}

double alpha_star_finiteD(const SignalField& sig, double ell) {
  require_ell(ell);
  return ObstacleOperator(sig, ell).critical().alpha_star;
}

SurfaceField u_star_finiteD(const SignalField& sig, double ell) {
  require_ell(ell);
  return critical_mass(sig, ell).u_star;
}

}  // namespace cellpol
