#include "cellpol/bulk.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

#include "cellpol/error.hpp"

namespace cellpol {

RadialMesh RadialMesh::make(int nr) {
  if (nr < 4) throw DomainError("RadialMesh: nr must be >= 4");
  RadialMesh m;
  m.nr = nr;
  m.h = 1.0 / nr;
  m.r.resize(nr);
  m.face.resize(nr + 1);
  m.vol.resize(nr);
  for (int i = 0; i <= nr; ++i) m.face[i] = i * m.h;
  for (int i = 0; i < nr; ++i) {
    m.r[i] = (i + 0.5) * m.h;
    m.vol[i] = (std::pow(m.face[i + 1], 3) - std::pow(m.face[i], 3)) / 3.0;
  }
  return m;
}

BulkField::BulkField(GridPtr grid, int nr)
    : grid_(std::move(grid)), mesh_(std::make_shared<RadialMesh>(RadialMesh::make(nr))) {
  data_.assign(std::size_t(grid_->ncoeff()) * nr, 0.0);
}

BulkField::BulkField(GridPtr grid, int nr, std::vector<double> data)
    : grid_(std::move(grid)),
      mesh_(std::make_shared<RadialMesh>(RadialMesh::make(nr))),
      data_(std::move(data)) {
  if (data_.size() != std::size_t(grid_->ncoeff()) * nr)
    throw DomainError("BulkField: data size does not match modes x nr");
}

BulkField BulkField::constant(GridPtr grid, int nr, double value) {
  BulkField b(std::move(grid), nr);
  double c = value * std::sqrt(4.0 * std::numbers::pi);
  std::fill(b.data_.begin(), b.data_.begin() + nr, c);
  return b;
}

SurfaceField BulkField::trace() const {
  int n = nr();
  std::vector<double> c(grid_->ncoeff());
  for (int k = 0; k < grid_->ncoeff(); ++k) c[k] = 1.5 * at(k, n - 1) - 0.5 * at(k, n - 2);
  return SurfaceField::from_coeffs(grid_, std::move(c));
}

SurfaceField BulkField::shell(int i) const {
  std::vector<double> c(grid_->ncoeff());
  for (int k = 0; k < grid_->ncoeff(); ++k) c[k] = at(k, i);
  return SurfaceField::from_coeffs(grid_, std::move(c));
}

double BulkField::integral() const {
  double s = 0.0;
  for (int i = 0; i < nr(); ++i) s += mesh_->vol[i] * at(0, i);
  return std::sqrt(4.0 * std::numbers::pi) * s;
}

double BulkField::integral_sq() const {
  double s = 0.0;
  for (int k = 0; k < grid_->ncoeff(); ++k)
    for (int i = 0; i < nr(); ++i) s += mesh_->vol[i] * at(k, i) * at(k, i);
  return s;
}

double BulkField::grid_min() const {
  double mn = INFINITY;
  for (int i = 0; i < nr(); ++i) mn = std::min(mn, shell(i).grid_min());
  return mn;
}

void solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                       std::vector<double>& d) {
  const std::size_t n = b.size();
  for (std::size_t i = 1; i < n; ++i) {
    assert(b[i - 1] != 0.0);
    double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  d[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

namespace {

// Rows of sum_faces r_f^2 (w_j - w_i)/h - l(l+1) h w_i, interior part only.
void radial_operator(int l, const RadialMesh& m, std::vector<double>& a, std::vector<double>& b,
                     std::vector<double>& c) {
  int n = m.nr;
  double h = m.h, ll = double(l) * (l + 1);
  a.assign(n, 0.0);
  b.assign(n, 0.0);
  c.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    b[i] = -ll * h;
    if (i > 0) {
      double t = m.face[i] * m.face[i] / h;
      a[i] += t;
      b[i] -= t;
    }
    if (i < n - 1) {
      double t = m.face[i + 1] * m.face[i + 1] / h;
      c[i] += t;
      b[i] -= t;
    }
  }
}

}  // namespace

std::vector<double> harmonic_profile(int l, const RadialMesh& m) {
  int n = m.nr;
  double h = m.h;
  std::vector<double> a, b, c;
  radial_operator(l, m, a, b, c);
  // outer face: quadratic ghost, flux (8 f - 9 w_n + w_{n-1}) / (3h)
  std::vector<double> d(n, 0.0);
  b[n - 1] += -3.0 / h;
  a[n - 1] += 1.0 / (3.0 * h);
  d[n - 1] = -8.0 / (3.0 * h);
  solve_tridiagonal(a, b, c, d);
  return d;
}

BulkField harmonic_extend(const SurfaceField& f, int nr) {
  BulkField out(f.grid(), nr);
  std::vector<double> data(std::size_t(f.grid()->ncoeff()) * nr);
  RadialMesh mesh = RadialMesh::make(nr);
  for (int l = 0; l <= f.L(); ++l) {
    auto p = harmonic_profile(l, mesh);
    for (int m = -l; m <= l; ++m) {
      int k = sh_index(l, m);
      for (int i = 0; i < nr; ++i) data[std::size_t(k) * nr + i] = f.coeffs()[k] * p[i];
    }
  }
  return BulkField(f.grid(), nr, std::move(data));
}

SurfaceField harmonic_normal_derivative(const SurfaceField& f, int nr) {
  RadialMesh mesh = RadialMesh::make(nr);
  auto c = f.coeffs();
  for (int l = 0; l <= f.L(); ++l) {
    auto p = harmonic_profile(l, mesh);
    double d = (8.0 - 9.0 * p[nr - 1] + p[nr - 2]) / (3.0 * mesh.h);
    for (int m = -l; m <= l; ++m) c[sh_index(l, m)] *= d;
  }
  return SurfaceField::from_coeffs(f.grid(), std::move(c));
}

double radial_laplace_truncation(int l, int nr) {
  RadialMesh m = RadialMesh::make(nr);
  std::vector<double> a, b, c;
  radial_operator(l, m, a, b, c);
  std::vector<double> w(nr);
  for (int i = 0; i < nr; ++i) w[i] = std::pow(m.r[i], l);
  double worst = 0.0;
  // interior cells, residual per unit volume
  for (int i = 1; i < nr - 1; ++i) {
    double res = a[i] * w[i - 1] + b[i] * w[i] + c[i] * w[i + 1];
    worst = std::max(worst, std::abs(res) / m.h);
  }
  return worst;
}

HeatStep radial_heat_step(const BulkField& w, const SurfaceField& v, double dt, double D,
                          double a5, double a6) {
  if (!(dt > 0.0) || !(D > 0.0)) throw DomainError("radial_heat_step: need dt > 0 and D > 0");
  if (v.grid() != w.grid()) throw DomainError("radial_heat_step: v and w on different grids");
  const RadialMesh& m = w.mesh();
  const int n = m.nr, K = w.grid()->ncoeff(), L = w.grid()->L();
  const double s = D / m.h, kap = 2.0 * s / (2.0 * s + a6);
  HeatStep out;
  out.flux.assign(K, 0.0);
  std::vector<double> data(w.data().size());
  std::vector<double> a, b, c;
  for (int l = 0; l <= L; ++l) {
    radial_operator(l, m, a, b, c);
    for (int i = 0; i < n; ++i) a[i] *= D, b[i] *= D, c[i] *= D;
    b[n - 1] -= kap * a6;  // linear part of the Robin flux
    for (int mm = -l; mm <= l; ++mm) {
      int k = sh_index(l, mm);
      auto prof = w.profile(l, mm);
      double src = kap * a5 * v.coeffs()[k];
      std::vector<double> rhs(n), la(n), lb(n), lc(n);
      for (int i = 0; i < n; ++i) {
        double Jw = b[i] * prof[i];
        if (i > 0) Jw += a[i] * prof[i - 1];
        if (i < n - 1) Jw += c[i] * prof[i + 1];
        rhs[i] = m.vol[i] * prof[i] + 0.5 * dt * Jw;
        la[i] = -0.5 * dt * a[i];
        lb[i] = m.vol[i] - 0.5 * dt * b[i];
        lc[i] = -0.5 * dt * c[i];
      }
      rhs[n - 1] += dt * src;
      double wn_old = prof[n - 1];
      solve_tridiagonal(la, lb, lc, rhs);
      std::copy(rhs.begin(), rhs.end(), data.begin() + std::size_t(k) * n);
      out.flux[k] = robin_flux(0.5 * (wn_old + rhs[n - 1]), v.coeffs()[k], D, m.h, a5, a6);
    }
  }
  out.w = BulkField(w.grid(), n, std::move(data));
  return out;
}

}  // namespace cellpol
