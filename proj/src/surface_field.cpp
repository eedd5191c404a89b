#include "cellpol/surface_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cellpol/error.hpp"

namespace cellpol {

SurfaceField SurfaceField::zeros(GridPtr grid) {
  return from_coeffs(grid, std::vector<double>(grid->ncoeff(), 0.0));
}

SurfaceField SurfaceField::constant(GridPtr grid, double value) {
  std::vector<double> c(grid->ncoeff(), 0.0);
  c[0] = value * std::sqrt(4.0 * std::numbers::pi);
  return from_coeffs(grid, std::move(c));
}

SurfaceField SurfaceField::basis(GridPtr grid, int l, int m) {
  if (l < 0 || l > grid->L() || std::abs(m) > l) throw DomainError("basis: invalid (l,m)");
  std::vector<double> c(grid->ncoeff(), 0.0);
  c[sh_index(l, m)] = 1.0;
  return from_coeffs(grid, std::move(c));
}

SurfaceField SurfaceField::from_coeffs(GridPtr grid, std::vector<double> coeffs) {
  if (static_cast<int>(coeffs.size()) != grid->ncoeff())
    throw DomainError("SurfaceField: coefficient count does not match grid degree");
  for (double c : coeffs)
    if (!std::isfinite(c)) throw DomainError("SurfaceField: non-finite coefficient");
  SurfaceField f;
  f.values_ = grid->synthesize(coeffs);
  f.coeffs_ = std::move(coeffs);
  f.grid_ = std::move(grid);
  return f;
}

SurfaceField SurfaceField::from_values(GridPtr grid, std::span<const double> values) {
  auto c = grid->analyze(values);
  return from_coeffs(std::move(grid), std::move(c));
}

SurfaceField SurfaceField::from_function(
    GridPtr grid, const std::function<double(double, double, double)>& f) {
  std::vector<double> v(grid->size());
  for (int k = 0; k < grid->size(); ++k) {
    const auto& p = grid->node(k);
    v[k] = f(p[0], p[1], p[2]);
  }
  return from_values(std::move(grid), v);
}

double SurfaceField::integral() const { return std::sqrt(4.0 * std::numbers::pi) * coeffs_[0]; }

double SurfaceField::mean() const { return coeffs_[0] / std::sqrt(4.0 * std::numbers::pi); }

double SurfaceField::l2_norm() const {
  double s = 0.0;
  for (double c : coeffs_) s += c * c;
  return std::sqrt(s);
}

double SurfaceField::grid_min() const { return *std::min_element(values_.begin(), values_.end()); }
double SurfaceField::grid_max() const { return *std::max_element(values_.begin(), values_.end()); }

double SurfaceField::evaluate(double x, double y, double z) const {
  auto b = sh_eval_basis(L(), x, y, z);
  double s = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) s += b[k] * coeffs_[k];
  return s;
}

namespace {
void check_same(const SurfaceField& a, const SurfaceField& b) {
  if (a.grid() != b.grid()) throw DomainError("SurfaceField: fields live on different grids");
}
}  // namespace

SurfaceField SurfaceField::operator+(const SurfaceField& o) const {
  check_same(*this, o);
  auto c = coeffs_;
  for (std::size_t k = 0; k < c.size(); ++k) c[k] += o.coeffs_[k];
  return from_coeffs(grid_, std::move(c));
}

SurfaceField SurfaceField::operator-(const SurfaceField& o) const {
  check_same(*this, o);
  auto c = coeffs_;
  for (std::size_t k = 0; k < c.size(); ++k) c[k] -= o.coeffs_[k];
  return from_coeffs(grid_, std::move(c));
}

SurfaceField SurfaceField::operator*(double s) const {
  auto c = coeffs_;
  for (double& x : c) x *= s;
  return from_coeffs(grid_, std::move(c));
}

SurfaceField SurfaceField::add_constant(double value) const {
  auto c = coeffs_;
  c[0] += value * std::sqrt(4.0 * std::numbers::pi);
  return from_coeffs(grid_, std::move(c));
}

double geodesic_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double cx = a[1] * b[2] - a[2] * b[1];
  double cy = a[2] * b[0] - a[0] * b[2];
  double cz = a[0] * b[1] - a[1] * b[0];
  double d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), d);
}

namespace {

using Point = std::array<double, 3>;

Point normalize(const Point& p) {
  double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  return {p[0] / r, p[1] / r, p[2] / r};
}

// tangent frame at p
void frame(const Point& p, Point& e1, Point& e2) {
  Point a = std::abs(p[2]) < 0.9 ? Point{0, 0, 1} : Point{1, 0, 0};
  double d = a[0] * p[0] + a[1] * p[1] + a[2] * p[2];
  e1 = normalize({a[0] - d * p[0], a[1] - d * p[1], a[2] - d * p[2]});
  e2 = {p[1] * e1[2] - p[2] * e1[1], p[2] * e1[0] - p[0] * e1[2], p[0] * e1[1] - p[1] * e1[0]};
}

}  // namespace

Extremum polish_minimum(const std::function<double(const Point&)>& f, Point p, double fp,
                        double h) {
  for (int it = 0; it < 200 && h > 1e-10; ++it) {
    Point e1, e2;
    frame(p, e1, e2);
    auto at = [&](double s, double t) {
      return normalize({p[0] + s * e1[0] + t * e2[0], p[1] + s * e1[1] + t * e2[1],
                        p[2] + s * e1[2] + t * e2[2]});
    };
    double v[3][3];
    double best = fp;
    int bi = 1, bj = 1;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        v[i][j] = (i == 1 && j == 1) ? fp : f(at((i - 1) * h, (j - 1) * h));
        if (v[i][j] < best) best = v[i][j], bi = i, bj = j;
      }
    double gs = (v[2][1] - v[0][1]) / (2 * h);
    double gt = (v[1][2] - v[1][0]) / (2 * h);
    double hss = (v[2][1] - 2 * v[1][1] + v[0][1]) / (h * h);
    double htt = (v[1][2] - 2 * v[1][1] + v[1][0]) / (h * h);
    double hst = (v[2][2] - v[2][0] - v[0][2] + v[0][0]) / (4 * h * h);
    double det = hss * htt - hst * hst;
    bool moved = false;
    if (hss > 0 && det > 0) {
      double ds = -(htt * gs - hst * gt) / det;
      double dt = -(hss * gt - hst * gs) / det;
      if (std::abs(ds) <= h && std::abs(dt) <= h) {
        Point q = at(ds, dt);
        double fq = f(q);
        if (fq <= best) {
          p = q;
          fp = fq;
          moved = true;
          h *= 0.25;
        }
      }
    }
    if (!moved) {
      if (bi != 1 || bj != 1) {
        p = at((bi - 1) * h, (bj - 1) * h);
        fp = best;
      } else {
        h *= 0.25;
      }
    }
  }
  return {fp, p};
}

Extremum refine_minimum(const std::function<double(const Point&)>& f, const SphereGrid& grid) {
  Extremum best{f({0, 0, 1}), {0, 0, 1}};
  double s = f({0, 0, -1});
  if (s < best.value) best = {s, {0, 0, -1}};
  for (int k = 0; k < grid.size(); ++k) {
    double v = f(grid.node(k));
    if (v < best.value) best = {v, grid.node(k)};
  }
  double h = 3.14159 / (grid.nlat() + 1);
  return polish_minimum(f, best.point, best.value, h);
}

Extremum refine_maximum(const std::function<double(const Point&)>& f, const SphereGrid& grid) {
  auto e = refine_minimum([&](const Point& p) { return -f(p); }, grid);
  return {-e.value, e.point};
}

Extremum field_minimum(const SurfaceField& f) {
  const SphereGrid& fine = *f.grid()->refined();
  auto vals = fine.synthesize(f.coeffs());
  auto eval = [&](const Point& p) { return f.evaluate(p[0], p[1], p[2]); };
  Extremum best{eval({0, 0, 1}), {0, 0, 1}};
  double s = eval({0, 0, -1});
  if (s < best.value) best = {s, {0, 0, -1}};
  for (int k = 0; k < fine.size(); ++k)
    if (vals[k] < best.value) best = {vals[k], fine.node(k)};
  return polish_minimum(eval, best.point, best.value, 3.14159 / (fine.nlat() + 1));
}

Extremum field_maximum(const SurfaceField& f) {
  auto e = field_minimum(-f);
  return {-e.value, e.point};
}

}  // namespace cellpol
