#include "cellpol/spectral.hpp"

#include <cmath>

#include "cellpol/error.hpp"

namespace cellpol {

SurfaceField spectral_multiply(const SurfaceField& f, const std::function<double(int)>& lambda) {
  auto c = f.coeffs();
  for (int l = 0; l <= f.L(); ++l) {
    double s = lambda(l);
    for (int m = -l; m <= l; ++m) c[sh_index(l, m)] *= s;
  }
  return SurfaceField::from_coeffs(f.grid(), std::move(c));
}

SurfaceField laplace_beltrami(const SurfaceField& f) {
  return spectral_multiply(f, [](int l) { return -double(l) * (l + 1); });
}

SurfaceField dtn(const SurfaceField& f) {
  return spectral_multiply(f, [](int l) { return double(l); });
}

SurfaceField ntd(const SurfaceField& f) {
  return spectral_multiply(f, [](int l) { return l == 0 ? 0.0 : 1.0 / l; });
}

SurfaceField dtn_tilde(const SurfaceField& f) {
  return spectral_multiply(f, [](int l) { return l == 0 ? 0.0 : l + 1.0; });
}

NtdLaplacianIdentity ntd_of_laplacian_identity(const SurfaceField& u) {
  NtdLaplacianIdentity r;
  r.via_ntd = ntd(laplace_beltrami(u));
  r.value = -dtn(u) - u.add_constant(-u.mean());
  const auto& a = r.via_ntd.coeffs();
  const auto& b = r.value.coeffs();
  double d = 0.0, s = 1.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d = std::max(d, std::abs(a[k] - b[k]));
    s = std::max(s, std::abs(b[k]));
  }
  r.discrepancy = d;
  if (d > 1e-10 * s)
    throw ConsistencyError("T(Delta u) and -Nu-(u-mean u) disagree by " + std::to_string(d));
  return r;
}

SurfaceField pointwise_nonlinear(const std::vector<const SurfaceField*>& fields,
                                 const std::function<double(std::span<const double>)>& phi,
                                 const std::string& term) {
  if (fields.empty()) throw DomainError("pointwise_nonlinear: no input fields");
  const GridPtr& grid = fields.front()->grid();
  GridPtr fine = grid->dealias();
  std::vector<std::vector<double>> vals;
  vals.reserve(fields.size());
  for (const SurfaceField* f : fields) {
    if (f->grid() != grid) throw DomainError("pointwise_nonlinear: mixed grids");
    vals.push_back(fine->synthesize(f->coeffs()));
  }
  std::vector<double> out(fine->size());
  std::vector<double> args(fields.size());
  for (int k = 0; k < fine->size(); ++k) {
    for (std::size_t i = 0; i < fields.size(); ++i) args[i] = vals[i][k];
    double v = phi(args);
    if (!std::isfinite(v)) throw DomainError("non-finite value in term " + term);
    out[k] = v;
  }
  return SurfaceField::from_coeffs(grid, fine->analyze(out, grid->L()));
}

double inner(const SurfaceField& a, const SurfaceField& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.coeffs().size(); ++k) s += a.coeffs()[k] * b.coeffs()[k];
  return s;
}

}  // namespace cellpol
