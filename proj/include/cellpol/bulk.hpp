#pragma once

#include <span>
#include <vector>

#include "cellpol/surface_field.hpp"

namespace cellpol {

// Uniform cell-centred radial mesh on (0,1).
struct RadialMesh {
  int nr = 0;
  double h = 0.0;
  std::vector<double> r;     // centres (i + 1/2) h
  std::vector<double> face;  // faces i h, size nr + 1
  std::vector<double> vol;   // (face[i+1]^3 - face[i]^3) / 3

  static RadialMesh make(int nr);
};

// Field on the unit ball stored as radial profiles per harmonic mode,
// data[k * nr + i] for mode k and cell i.
class BulkField {
 public:
  BulkField() = default;
  BulkField(GridPtr grid, int nr);
  BulkField(GridPtr grid, int nr, std::vector<double> data);

  static BulkField constant(GridPtr grid, int nr, double value);

  const GridPtr& grid() const { return grid_; }
  const RadialMesh& mesh() const { return *mesh_; }
  int nr() const { return mesh_->nr; }
  const std::vector<double>& data() const { return data_; }
  std::span<const double> profile(int l, int m) const {
    return {data_.data() + std::size_t(sh_index(l, m)) * nr(), std::size_t(nr())};
  }
  double at(int k, int i) const { return data_[std::size_t(k) * nr() + i]; }

  // second-order extrapolation of the cell values to r = 1
  SurfaceField trace() const;
  SurfaceField shell(int i) const;
  double integral() const;
  double integral_sq() const;  // int w^2
  double grid_min() const;     // min over all shells at grid nodes

 private:
  GridPtr grid_;
  std::shared_ptr<const RadialMesh> mesh_;
  std::vector<double> data_;
};

// Radial profile of the harmonic extension of a unit degree-l trace.
std::vector<double> harmonic_profile(int l, const RadialMesh& mesh);
BulkField harmonic_extend(const SurfaceField& f, int nr);
// One-sided second-order d/dr at r = 1 of the discrete harmonic extension.
SurfaceField harmonic_normal_derivative(const SurfaceField& f, int nr);
// Truncation residual of the discrete radial Laplacian applied to r^l.
double radial_laplace_truncation(int l, int nr);

// Outward flux D dw/dr at r = 1 under -D dw/dn = -a5 v + a6 w with the ghost
// cell eliminated; wn is the last cell value.  Shared by the bulk step and the
// coupled integrator so both see the same number.
inline double robin_flux(double wn, double v, double D, double h, double a5, double a6) {
  double s = D / h;
  return 2.0 * s / (2.0 * s + a6) * (a5 * v - a6 * wn);
}
inline double robin_trace(double wn, double v, double D, double h, double a5, double a6) {
  double s = D / h;
  return (2.0 * s * wn + a5 * v) / (2.0 * s + a6);
}

struct HeatStep {
  BulkField w;
  std::vector<double> flux;  // time-averaged outward flux per mode
};

// Crank-Nicolson step of bulk diffusion with Robin exchange against v.
HeatStep radial_heat_step(const BulkField& w, const SurfaceField& v, double dt, double D,
                          double a5, double a6);

// Thomas algorithm; sub[0] and sup[n-1] ignored.
void solve_tridiagonal(std::vector<double> sub, std::vector<double> diag,
                       std::vector<double> sup, std::vector<double>& rhs);

}  // namespace cellpol
