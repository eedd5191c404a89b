#include <doctest.h>

#include <filesystem>
#include <numbers>

#include "cellpol/bulk.hpp"
#include "cellpol/field_io.hpp"
#include "cellpol/spectral.hpp"
#include "common.hpp"

using namespace cellpol;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("radial mesh") {
  RadialMesh m = RadialMesh::make(8);
  CHECK(m.h == doctest::Approx(0.125));
  CHECK(m.r.front() == doctest::Approx(0.0625));
  double v = 0.0;
  for (double x : m.vol) v += x;
  CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("constant bulk field") {
  GridPtr g = SphereGrid::make(6);
  BulkField w = BulkField::constant(g, 16, 1.5);
  CHECK(w.integral() == doctest::Approx(1.5 * 4 * kPi / 3).epsilon(1e-14));
  CHECK(w.integral_sq() == doctest::Approx(2.25 * 4 * kPi / 3).epsilon(1e-14));
  CHECK(w.trace().grid_min() == doctest::Approx(1.5));
  CHECK(w.grid_min() == doctest::Approx(1.5));
  BulkField e = harmonic_extend(SurfaceField::constant(g, 0.7), 16);
  CHECK(e.integral() == doctest::Approx(0.7 * 4 * kPi / 3).epsilon(1e-12));
}

TEST_CASE("tridiagonal solve") {
  const int n = 7;
  std::vector<double> a(n), b(n), c(n), rhs(n);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a[i] = -1.0 - 0.1 * i, b[i] = 4.0 + i, c[i] = -0.5, rhs[i] = std::sin(i + 1.0);
    M(i, i) = b[i];
    if (i > 0) M(i, i - 1) = a[i];
    if (i < n - 1) M(i, i + 1) = c[i];
  }
  Eigen::VectorXd r = Eigen::Map<Eigen::VectorXd>(rhs.data(), n);
  Eigen::VectorXd x = M.partialPivLu().solve(r);
  solve_tridiagonal(a, b, c, rhs);
  for (int i = 0; i < n; ++i) CHECK(rhs[i] == doctest::Approx(x(i)).epsilon(1e-13));
}

TEST_CASE("harmonic profiles converge at second order") {
  for (int l : {0, 1, 3, 6}) {
    double prev = 0.0;
    for (int nr : {32, 64, 128}) {
      RadialMesh m = RadialMesh::make(nr);
      std::vector<double> p = harmonic_profile(l, m);
      double e = 0.0;
      for (int i = 0; i < nr; ++i) e = std::max(e, std::abs(p[i] - std::pow(m.r[i], l)));
      if (l <= 1) {
        CHECK(e < 1e-13);
      } else if (prev > 0) {
        CHECK(std::log2(prev / e) >= 1.9);
      }
      prev = e;
    }
  }
  double t32 = radial_laplace_truncation(3, 32), t64 = radial_laplace_truncation(3, 64);
  CHECK(t64 < t32);
}

TEST_CASE("normal derivative of the extension approaches N") {
  GridPtr g = SphereGrid::make(8);
  SurfaceField f = testing::random_field(g, 3, 1.0);
  SurfaceField exact = dtn(f);
  double prev = 0.0;
  for (int nr : {32, 64, 128}) {
    double e = (harmonic_normal_derivative(f, nr) - exact).l2_norm();
    if (prev > 0) CHECK(std::log2(prev / e) >= 1.9);
    prev = e;
  }
  CHECK(prev < 1e-3 * exact.l2_norm());
}

TEST_CASE("heat step conserves bulk plus exchanged mass") {
  GridPtr g = SphereGrid::make(6);
  SurfaceField v = SurfaceField::constant(g, 0.4) + testing::random_field(g, 4, 2.0) * 0.05;
  BulkField w = harmonic_extend(SurfaceField::constant(g, 0.3) + testing::random_field(g, 5, 2.0) * 0.05, 24);
  const double D = 3.0, a5 = 1.2, a6 = 0.8, dt = 1e-2;
  HeatStep s = radial_heat_step(w, v, dt, D, a5, a6);
  // bulk gains dt * int of the outward normal flux D dw/dr
  double gain = dt * s.flux[0] * std::sqrt(4 * kPi);
  CHECK(s.w.integral() - w.integral() == doctest::Approx(gain).epsilon(1e-12));
  // relaxes toward a5 v = a6 w for a constant v
  SurfaceField vc = SurfaceField::constant(g, 0.4);
  BulkField wc = BulkField::constant(g, 24, 0.1);
  for (int k = 0; k < 2000; ++k) wc = radial_heat_step(wc, vc, 0.05, D, a5, a6).w;
  CHECK(wc.trace().grid_min() == doctest::Approx(a5 * 0.4 / a6).epsilon(1e-8));
}

TEST_CASE("robin ghost elimination") {
  const double wn = 0.3, v = 0.5, D = 2.0, h = 0.01, a5 = 1.0, a6 = 2.0;
  double tr = robin_trace(wn, v, D, h, a5, a6);
  double flux = robin_flux(wn, v, D, h, a5, a6);
  // flux equals both the one-sided difference and the Robin expression
  CHECK(flux == doctest::Approx(2 * D * (tr - wn) / h).epsilon(1e-13));
  CHECK(flux == doctest::Approx(a5 * v - a6 * tr).epsilon(1e-13));
}

TEST_CASE("PBF1 roundtrip") {
  GridPtr g = SphereGrid::make(5);
  BulkField w = harmonic_extend(testing::random_field(g, 8), 10);
  auto dir = std::filesystem::temp_directory_path() / "cellpol_test_bulk";
  std::filesystem::create_directories(dir);
  auto path = (dir / "w.pbf1").string();
  write_pbf1(path, w);
  CHECK(std::filesystem::file_size(path) == 20 + 8 * std::size_t(g->ncoeff()) * 10);
  BulkField r = read_pbf1(path);
  CHECK(r.nr() == 10);
  CHECK(r.data() == w.data());
}
