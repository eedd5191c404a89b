#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "cellpol/grid.hpp"

namespace cellpol {

// Band-limited scalar field on the unit sphere.  Immutable; coefficients and
// grid values are kept in sync at construction.
class SurfaceField {
 public:
  SurfaceField() = default;

  static SurfaceField zeros(GridPtr grid);
  static SurfaceField constant(GridPtr grid, double value);
  static SurfaceField basis(GridPtr grid, int l, int m);
  static SurfaceField from_coeffs(GridPtr grid, std::vector<double> coeffs);
  // Projects samples onto degrees <= L.
  static SurfaceField from_values(GridPtr grid, std::span<const double> values);
  static SurfaceField from_function(GridPtr grid,
                                    const std::function<double(double, double, double)>& f);

  const GridPtr& grid() const { return grid_; }
  int L() const { return grid_->L(); }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const std::vector<double>& values() const { return values_; }
  double coeff(int l, int m) const { return coeffs_[sh_index(l, m)]; }

  double integral() const;
  double mean() const;
  double l2_norm() const;
  double grid_min() const;
  double grid_max() const;
  double evaluate(double x, double y, double z) const;

  SurfaceField operator+(const SurfaceField& o) const;
  SurfaceField operator-(const SurfaceField& o) const;
  SurfaceField operator*(double s) const;
  SurfaceField operator-() const { return *this * -1.0; }
  SurfaceField add_constant(double c) const;

 private:
  GridPtr grid_;
  std::vector<double> coeffs_;
  std::vector<double> values_;
};

inline SurfaceField operator*(double s, const SurfaceField& f) { return f * s; }

struct Extremum {
  double value = 0.0;
  std::array<double, 3> point{0.0, 0.0, 1.0};
};

// Extremum of a smooth function on the sphere: grid search on `grid`, both
// poles, then local quadratic refinement in a tangent chart.
Extremum refine_minimum(const std::function<double(const std::array<double, 3>&)>& f,
                        const SphereGrid& grid);
Extremum refine_maximum(const std::function<double(const std::array<double, 3>&)>& f,
                        const SphereGrid& grid);

Extremum polish_minimum(const std::function<double(const std::array<double, 3>&)>& f,
                        std::array<double, 3> start, double fstart, double h);

// Minimum of the spectral interpolant on the 2x refined grid.
Extremum field_minimum(const SurfaceField& f);
Extremum field_maximum(const SurfaceField& f);

double geodesic_distance(const std::array<double, 3>& a, const std::array<double, 3>& b);

}  // namespace cellpol
