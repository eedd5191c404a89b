#pragma once

#include <Eigen/Dense>

#include "cellpol/grid.hpp"

namespace cellpol {

// Dense operators acting on grid values.  On band-limited data they equal
// -Delta, N and N~ exactly.  The orthogonal complement of the band (in the
// quadrature inner product) is treated as one more copy of degree L, so
// N*N~ = -Delta holds on the whole nodal space and the largest eigenvalue of
// -Delta is L(L+1).  All three are self-adjoint for the weighted inner product.
struct NodalOperators {
  Eigen::MatrixXd neg_laplacian;
  Eigen::MatrixXd dtn;
  Eigen::MatrixXd dtn_tilde;
  Eigen::MatrixXd projector;  // ncoeff x size, Y^T W
  double lambda_max = 0.0;
};

// Transform-based application of the same operators, independent of the
// dense matrices.  kind: 0 = -Delta, 1 = N, 2 = N~.
Eigen::VectorXd nodal_apply(const SphereGrid& grid, const Eigen::VectorXd& x, int kind);

inline Eigen::VectorXd nodal_neg_laplacian(const SphereGrid& g, const Eigen::VectorXd& x) {
  return nodal_apply(g, x, 0);
}
inline Eigen::VectorXd nodal_dtn(const SphereGrid& g, const Eigen::VectorXd& x) {
  return nodal_apply(g, x, 1);
}
inline Eigen::VectorXd nodal_dtn_tilde(const SphereGrid& g, const Eigen::VectorXd& x) {
  return nodal_apply(g, x, 2);
}

double nodal_integral(const SphereGrid& g, const Eigen::VectorXd& x);

// Distance of a nodal vector from the band: max |x - S P x|.
double band_defect(const SphereGrid& g, const Eigen::VectorXd& x);

}  // namespace cellpol
