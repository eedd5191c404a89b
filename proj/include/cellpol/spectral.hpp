#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cellpol/surface_field.hpp"

namespace cellpol {

SurfaceField laplace_beltrami(const SurfaceField& f);
// Dirichlet-to-Neumann map: degree l multiplied by l.
SurfaceField dtn(const SurfaceField& f);
// Neumann-to-Dirichlet map on mean-zero data; constants map to 0.
SurfaceField ntd(const SurfaceField& f);
// N~ f = N f + (f - mean f)
SurfaceField dtn_tilde(const SurfaceField& f);

struct NtdLaplacianIdentity {
  SurfaceField via_ntd;  // T(Delta u)
  SurfaceField value;    // -N u - (u - mean u)
  double discrepancy = 0.0;
};
// Throws ConsistencyError when the two forms differ by more than 1e-10.
NtdLaplacianIdentity ntd_of_laplacian_identity(const SurfaceField& u);

// Multiplies coefficient (l,m) by lambda(l).
SurfaceField spectral_multiply(const SurfaceField& f, const std::function<double(int)>& lambda);

// phi evaluated on the dealiasing grid, then projected back to degree L.
// `term` names the expression in domain errors.
SurfaceField pointwise_nonlinear(const std::vector<const SurfaceField*>& fields,
                                 const std::function<double(std::span<const double>)>& phi,
                                 const std::string& term);

// Inner product by quadrature (equal to the coefficient dot product).
double inner(const SurfaceField& a, const SurfaceField& b);

}  // namespace cellpol
