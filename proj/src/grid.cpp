#include "cellpol/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cellpol/error.hpp"
#include "cellpol/nodal.hpp"

namespace cellpol {

namespace {
constexpr double kPi = std::numbers::pi;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[i] = t;
    x[n - 1 - i] = -t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

void legendre_normalized(int L, double x, double* out) {
  double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  auto at = [&](int l, int m) -> double& { return out[l * (l + 1) / 2 + m]; };
  at(0, 0) = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 1; m <= L; ++m)
    at(m, m) = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * at(m - 1, m - 1);
  for (int m = 0; m < L; ++m) at(m + 1, m) = std::sqrt(2.0 * m + 3.0) * x * at(m, m);
  for (int m = 0; m <= L; ++m) {
    for (int l = m + 2; l <= L; ++l) {
      double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                           (4.0 * double(l - 1) * (l - 1) - 1.0));
      at(l, m) = a * (x * at(l - 1, m) - b * at(l - 2, m));
    }
  }
}

std::vector<double> sh_eval_basis(int L, double x, double y, double z) {
  double r = std::sqrt(x * x + y * y + z * z);
  double ct = z / r;
  double ph = std::atan2(y, x);
  std::vector<double> p((L + 1) * (L + 2) / 2);
  legendre_normalized(L, ct, p.data());
  std::vector<double> out(sh_count(L));
  for (int l = 0; l <= L; ++l) {
    out[sh_index(l, 0)] = p[l * (l + 1) / 2];
    for (int m = 1; m <= l; ++m) {
      double pm = std::sqrt(2.0) * p[l * (l + 1) / 2 + m];
      out[sh_index(l, m)] = pm * std::cos(m * ph);
      out[sh_index(l, -m)] = pm * std::sin(m * ph);
    }
  }
  return out;
}

GridPtr SphereGrid::make(int L) { return make(L, L + 1, 2 * L + 2); }

GridPtr SphereGrid::make(int L, int nlat, int nlon) {
  if (L < 1) throw DomainError("SphereGrid: L must be >= 1");
  if (nlat < L + 1 || nlon < 2 * L + 1)
    throw DomainError("SphereGrid: need nlat >= L+1 and nlon >= 2L+1");
  return GridPtr(new SphereGrid(L, nlat, nlon));
}

SphereGrid::SphereGrid(int L, int nlat, int nlon)
    : L_(L), nlat_(nlat), nlon_(nlon), ntri_(std::size_t(L + 1) * (L + 2) / 2) {
  std::vector<double> x, w;
  gauss_legendre(nlat, x, w);
  z_ = x;  // descending: north to south
  glw_ = w;
  theta_.resize(nlat);
  for (int i = 0; i < nlat; ++i) theta_[i] = std::acos(z_[i]);
  phi_.resize(nlon);
  for (int j = 0; j < nlon; ++j) phi_[j] = 2.0 * kPi * j / nlon;

  double dphi = 2.0 * kPi / nlon;
  weights_.resize(size());
  nodes_.resize(size());
  for (int i = 0; i < nlat; ++i) {
    double s = std::sqrt(std::max(0.0, 1.0 - z_[i] * z_[i]));
    for (int j = 0; j < nlon; ++j) {
      int k = i * nlon + j;
      weights_[k] = glw_[i] * dphi;
      nodes_[k] = {s * std::cos(phi_[j]), s * std::sin(phi_[j]), z_[i]};
    }
  }

  plm_.resize(nlat * ntri_);
  for (int i = 0; i < nlat; ++i) legendre_normalized(L, z_[i], plm_.data() + i * ntri_);

  cosm_.resize(std::size_t(nlon) * (L + 1));
  sinm_.resize(std::size_t(nlon) * (L + 1));
  for (int j = 0; j < nlon; ++j)
    for (int m = 0; m <= L; ++m) {
      // exact index reduction keeps tables symmetric to roundoff
      long long k = (static_cast<long long>(m) * j) % nlon;
      double a = 2.0 * kPi * double(k) / nlon;
      cosm_[std::size_t(j) * (L + 1) + m] = std::cos(a);
      sinm_[std::size_t(j) * (L + 1) + m] = std::sin(a);
    }
}

std::vector<double> SphereGrid::analyze(std::span<const double> values, int lmax) const {
  if (static_cast<int>(values.size()) != size())
    throw DomainError("sh_analyze: value count does not match grid");
  if (lmax > L_) throw DomainError("sh_analyze: degree exceeds grid degree");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("sh_analyze: non-finite sample");

  std::vector<double> out(sh_count(lmax), 0.0);
  std::vector<double> a(lmax + 1), b(lmax + 1);
  const double dphi = 2.0 * kPi / nlon_;
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < nlat_; ++i) {
    std::fill(a.begin(), a.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
    const double* row = values.data() + std::size_t(i) * nlon_;
    for (int j = 0; j < nlon_; ++j) {
      const double* c = &cosm_[std::size_t(j) * (L_ + 1)];
      const double* s = &sinm_[std::size_t(j) * (L_ + 1)];
      double f = row[j];
      for (int m = 0; m <= lmax; ++m) {
        a[m] += f * c[m];
        b[m] += f * s[m];
      }
    }
    double wi = glw_[i] * dphi;
    for (int m = 0; m <= lmax; ++m) {
      double am = a[m] * wi, bm = b[m] * wi;
      if (m > 0) am *= r2, bm *= r2;
      for (int l = m; l <= lmax; ++l) {
        double p = plm(i, l, m);
        out[sh_index(l, m)] += p * am;
        if (m > 0) out[sh_index(l, -m)] += p * bm;
      }
    }
  }
  return out;
}

std::vector<double> SphereGrid::synthesize(std::span<const double> coeffs) const {
  int lmax = static_cast<int>(std::lround(std::sqrt(double(coeffs.size())))) - 1;
  if (sh_count(lmax) != static_cast<int>(coeffs.size()))
    throw DomainError("sh_synthesize: coefficient count is not a square");
  if (lmax > L_) throw DomainError("sh_synthesize: degree exceeds grid degree");
  std::vector<double> out(size(), 0.0);
  std::vector<double> a(lmax + 1), b(lmax + 1);
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < nlat_; ++i) {
    for (int m = 0; m <= lmax; ++m) {
      double sa = 0.0, sb = 0.0;
      for (int l = m; l <= lmax; ++l) {
        double p = plm(i, l, m);
        sa += p * coeffs[sh_index(l, m)];
        if (m > 0) sb += p * coeffs[sh_index(l, -m)];
      }
      a[m] = m > 0 ? r2 * sa : sa;
      b[m] = r2 * sb;
    }
    double* row = out.data() + std::size_t(i) * nlon_;
    for (int j = 0; j < nlon_; ++j) {
      const double* c = &cosm_[std::size_t(j) * (L_ + 1)];
      const double* s = &sinm_[std::size_t(j) * (L_ + 1)];
      double f = a[0];
      for (int m = 1; m <= lmax; ++m) f += a[m] * c[m] + b[m] * s[m];
      row[j] = f;
    }
  }
  return out;
}

double SphereGrid::integrate(std::span<const double> values) const {
  double s = 0.0;
  for (int k = 0; k < size(); ++k) s += weights_[k] * values[k];
  return s;
}

GridPtr SphereGrid::dealias() const {
  std::call_once(dealias_once_, [this] { dealias_ = make((3 * L_ + 1) / 2); });
  return dealias_;
}

GridPtr SphereGrid::refined() const {
  std::call_once(refined_once_, [this] { refined_ = make(2 * L_); });
  return refined_;
}

const Eigen::MatrixXd& SphereGrid::synthesis_matrix() const {
  std::call_once(ymat_once_, [this] {
    int n = size(), K = ncoeff();
    ymat_.resize(n, K);
    std::vector<double> e(K, 0.0);
    for (int k = 0; k < K; ++k) {
      e[k] = 1.0;
      auto col = synthesize(e);
      for (int p = 0; p < n; ++p) ymat_(p, k) = col[p];
      e[k] = 0.0;
    }
  });
  return ymat_;
}

const NodalOperators& SphereGrid::nodal() const {
  std::call_once(nodal_once_, [this] {
    const Eigen::MatrixXd& Y = synthesis_matrix();
    int n = size(), K = ncoeff();
    auto ops = std::make_unique<NodalOperators>();
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights_.data(), n);
    ops->projector = Y.transpose() * w.asDiagonal();
    Eigen::VectorXd lap(K), dtn(K), dtt(K);
    for (int l = 0; l <= L_; ++l)
      for (int m = -l; m <= l; ++m) {
        int k = sh_index(l, m);
        lap(k) = double(l) * (l + 1);
        dtn(k) = l;
        dtt(k) = l == 0 ? 0.0 : l + 1.0;
      }
    // A = c I + Y (lambda - c) P for complement eigenvalue c
    auto build = [&](const Eigen::VectorXd& lam, double c) {
      Eigen::MatrixXd M = Y * (lam.array() - c).matrix().asDiagonal() * ops->projector;
      M.diagonal().array() += c;
      return M;
    };
    ops->neg_laplacian = build(lap, double(L_) * (L_ + 1));
    ops->dtn = build(dtn, L_);
    ops->dtn_tilde = build(dtt, L_ + 1.0);
    ops->lambda_max = double(L_) * (L_ + 1);
    nodal_ = std::move(ops);
  });
  return *nodal_;
}

Eigen::VectorXd nodal_apply(const SphereGrid& grid, const Eigen::VectorXd& x, int kind) {
  const int L = grid.L();
  std::span<const double> xs(x.data(), x.size());
  auto c = grid.analyze(xs);
  auto band = grid.synthesize(c);
  double comp;
  switch (kind) {
    case 0: comp = double(L) * (L + 1); break;
    case 1: comp = L; break;
    default: comp = L + 1.0; break;
  }
  for (int l = 0; l <= L; ++l) {
    double lam = kind == 0 ? double(l) * (l + 1) : kind == 1 ? l : (l == 0 ? 0.0 : l + 1.0);
    for (int m = -l; m <= l; ++m) c[sh_index(l, m)] *= lam;
  }
  auto lb = grid.synthesize(c);
  Eigen::VectorXd out(x.size());
  for (int k = 0; k < x.size(); ++k) out(k) = lb[k] + comp * (x(k) - band[k]);
  return out;
}

double nodal_integral(const SphereGrid& g, const Eigen::VectorXd& x) {
  return g.integrate(std::span<const double>(x.data(), x.size()));
}

double band_defect(const SphereGrid& g, const Eigen::VectorXd& x) {
  std::span<const double> xs(x.data(), x.size());
  auto band = g.synthesize(g.analyze(xs));
  double d = 0.0;
  for (int k = 0; k < x.size(); ++k) d = std::max(d, std::abs(x(k) - band[k]));
  return d;
}

}  // namespace cellpol
