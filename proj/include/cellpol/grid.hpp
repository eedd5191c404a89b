#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cellpol {

class SphereGrid;
using GridPtr = std::shared_ptr<const SphereGrid>;

// Real orthonormal spherical harmonics, index l*l + l + m.
inline constexpr int sh_index(int l, int m) { return l * l + l + m; }
inline constexpr int sh_count(int L) { return (L + 1) * (L + 1); }

struct NodalOperators;

// Gauss-Legendre colatitudes x equispaced longitudes.  Rows run north to
// south, values are stored latitude-major.
class SphereGrid {
 public:
  static GridPtr make(int L);
  static GridPtr make(int L, int nlat, int nlon);

  SphereGrid(const SphereGrid&) = delete;
  SphereGrid& operator=(const SphereGrid&) = delete;

  int L() const { return L_; }
  int nlat() const { return nlat_; }
  int nlon() const { return nlon_; }
  int size() const { return nlat_ * nlon_; }
  int ncoeff() const { return sh_count(L_); }

  double cos_theta(int i) const { return z_[i]; }
  double theta(int i) const { return theta_[i]; }
  double phi(int j) const { return phi_[j]; }
  const std::array<double, 3>& node(int k) const { return nodes_[k]; }
  double weight(int k) const { return weights_[k]; }
  const std::vector<double>& weights() const { return weights_; }

  // Projection onto degrees <= lmax (lmax <= L).  Exact for band-limited
  // data whose product with degree lmax stays within the quadrature order.
  std::vector<double> analyze(std::span<const double> values, int lmax) const;
  std::vector<double> analyze(std::span<const double> values) const {
    return analyze(values, L_);
  }
  // Coefficients of any degree <= L (length (lmax+1)^2).
  std::vector<double> synthesize(std::span<const double> coeffs) const;

  double integrate(std::span<const double> values) const;

  // Grid used for pointwise products of degree-L fields.
  GridPtr dealias() const;
  // 2x refined grid for minimum searches.
  GridPtr refined() const;

  // Synthesis matrix Y (size x ncoeff) and dense nodal operators.
  const Eigen::MatrixXd& synthesis_matrix() const;
  const NodalOperators& nodal() const;

 private:
  SphereGrid(int L, int nlat, int nlon);

  double plm(int i, int l, int m) const {
    return plm_[static_cast<std::size_t>(i) * ntri_ + l * (l + 1) / 2 + m];
  }

  int L_, nlat_, nlon_;
  std::size_t ntri_;
  std::vector<double> z_, theta_, glw_, phi_;
  std::vector<double> weights_;
  std::vector<std::array<double, 3>> nodes_;
  std::vector<double> plm_;   // normalized P_l^m(z_i), m >= 0
  std::vector<double> cosm_;  // cos(m phi_j), j-major
  std::vector<double> sinm_;

  mutable std::once_flag dealias_once_, refined_once_, ymat_once_, nodal_once_;
  mutable GridPtr dealias_, refined_;
  mutable Eigen::MatrixXd ymat_;
  mutable std::unique_ptr<NodalOperators> nodal_;
};

// Normalized associated Legendre values P_l^m(x), m >= 0, packed as
// l(l+1)/2 + m, including the 1/sqrt(4pi) factor of the real harmonics.
void legendre_normalized(int L, double x, double* out);

// Real orthonormal harmonic values at a point, length (L+1)^2.
std::vector<double> sh_eval_basis(int L, double x, double y, double z);

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace cellpol
