#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <thread>

#include "cellpol/error.hpp"
#include "cellpol/field_io.hpp"
#include "cellpol/nodal.hpp"
#include "cellpol/spectral.hpp"
#include "common.hpp"

using namespace cellpol;
using testing::random_field;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int L = 16;

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "cellpol_test_spectral";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("grid layout and quadrature") {
  GridPtr g = SphereGrid::make(L);
  CHECK(g->nlat() == L + 1);
  CHECK(g->nlon() == 2 * L + 2);
  double area = 0.0;
  for (double w : g->weights()) area += w;
  CHECK(area == doctest::Approx(4 * kPi).epsilon(1e-14));
  // rows run north to south
  CHECK(g->cos_theta(0) > g->cos_theta(g->nlat() - 1));
  // z^k integrates to 4 pi / (k + 1) for even k up to degree 2L + 1
  for (int k = 0; k <= 2 * L; k += 2) {
    double s = 0.0;
    for (int i = 0; i < g->size(); ++i) s += g->weight(i) * std::pow(g->node(i)[2], k);
    CHECK(s == doctest::Approx(4 * kPi / (k + 1)).epsilon(1e-13));
  }
}

TEST_CASE("harmonics match closed forms") {
  const double x = 0.48, y = 0.6, z = 0.64;
  auto b = sh_eval_basis(2, x, y, z);
  const double k1 = std::sqrt(3 / (4 * kPi));
  CHECK(b[sh_index(0, 0)] == doctest::Approx(1 / std::sqrt(4 * kPi)));
  CHECK(b[sh_index(1, 0)] == doctest::Approx(k1 * z));
  CHECK(b[sh_index(1, 1)] == doctest::Approx(k1 * x));
  CHECK(b[sh_index(1, -1)] == doctest::Approx(k1 * y));
  CHECK(b[sh_index(2, 0)] == doctest::Approx(std::sqrt(5 / (16 * kPi)) * (3 * z * z - 1)));
  CHECK(b[sh_index(2, 2)] == doctest::Approx(std::sqrt(15 / (16 * kPi)) * (x * x - y * y)));
  CHECK(b[sh_index(2, -2)] == doctest::Approx(std::sqrt(15 / (4 * kPi)) * x * y));
}

TEST_CASE("transforms are inverse and orthonormal") {
  GridPtr g = SphereGrid::make(L);
  for (int s = 0; s < 5; ++s) {
    SurfaceField f = random_field(g, 100 + s);
    CHECK(testing::max_abs(g->analyze(f.values()), f.coeffs()) < 1e-12);
    CHECK(f.integral() == doctest::Approx(f.coeff(0, 0) * std::sqrt(4 * kPi)).epsilon(1e-13));
  }
  for (int l = 0; l <= L; l += 3)
    for (int m = -l; m <= l; m += 2) {
      SurfaceField y = SurfaceField::basis(g, l, m);
      CHECK(inner(y, y) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(std::abs(inner(y, SurfaceField::basis(g, L - l / 2, -m / 2))) < 1e-13);
    }
  SurfaceField f = SurfaceField::from_function(g, [](double x, double y, double z) { return x * y + z; });
  CHECK(f.evaluate(0.6, 0.0, 0.8) == doctest::Approx(0.8));
  CHECK(f.evaluate(0.6, 0.8, 0.0) == doctest::Approx(0.48));
}

TEST_CASE("eigenvalue relations on every basis function") {
  GridPtr g = SphereGrid::make(L);
  double e_lap = 0, e_n = 0, e_t = 0, e_nt = 0;
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      SurfaceField y = SurfaceField::basis(g, l, m);
      e_lap = std::max(e_lap, testing::max_abs(laplace_beltrami(y), y * -double(l * (l + 1))));
      e_n = std::max(e_n, testing::max_abs(dtn(y), y * double(l)));
      e_t = std::max(e_t, testing::max_abs(ntd(y), l == 0 ? y * 0.0 : y * (1.0 / l)));
      e_nt = std::max(e_nt, testing::max_abs(dtn_tilde(y), l == 0 ? y * 0.0 : y * double(l + 1)));
    }
  CHECK(e_lap < 1e-10);
  CHECK(e_n < 1e-10);
  CHECK(e_t < 1e-10);
  CHECK(e_nt < 1e-10);
}

TEST_CASE("T of the Laplacian") {
  GridPtr g = SphereGrid::make(L);
  for (int l = 0; l <= L; ++l)
    for (int m = -l; m <= l; ++m)
      CHECK(ntd_of_laplacian_identity(SurfaceField::basis(g, l, m)).discrepancy < 1e-10);
  for (int s = 0; s < 20; ++s) {
    SurfaceField u = random_field(g, 200 + s);
    SurfaceField lhs = ntd(laplace_beltrami(u));
    SurfaceField rhs = -dtn(u) - u.add_constant(-u.mean());
    CHECK(testing::max_abs(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("N is self-adjoint and nonnegative") {
  GridPtr g = SphereGrid::make(L);
  for (int s = 0; s < 20; ++s) {
    SurfaceField f = random_field(g, 300 + s), h = random_field(g, 400 + s);
    CHECK(std::abs(inner(dtn(f), h) - inner(f, dtn(h))) < 1e-10);
    // int (N f) f = sum l f_lm^2, the Dirichlet energy of the harmonic extension
    double energy = 0.0;
    for (int l = 0; l <= L; ++l)
      for (int m = -l; m <= l; ++m) energy += l * f.coeff(l, m) * f.coeff(l, m);
    CHECK(inner(dtn(f), f) == doctest::Approx(energy).epsilon(1e-12));
    CHECK(inner(dtn(f), f) > 0);
    CHECK(inner(dtn_tilde(f), f) >= 0);
  }
  SurfaceField c = SurfaceField::constant(g, 2.5);
  CHECK(std::abs(inner(dtn(c), c)) < 1e-12);
  CHECK(dtn_tilde(c).l2_norm() < 1e-12);
}

TEST_CASE("dense nodal operators agree with transforms") {
  GridPtr g = SphereGrid::make(8);
  const NodalOperators& op = g->nodal();
  CHECK(op.lambda_max == doctest::Approx(8 * 9));
  Eigen::VectorXd W = Eigen::Map<const Eigen::VectorXd>(g->weights().data(), g->size());
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int s = 0; s < 5; ++s) {
    Eigen::VectorXd x(g->size()), y(g->size());
    for (int i = 0; i < g->size(); ++i) x(i) = n(rng), y(i) = n(rng);
    for (int kind = 0; kind < 3; ++kind) {
      const Eigen::MatrixXd& M = kind == 0 ? op.neg_laplacian : kind == 1 ? op.dtn : op.dtn_tilde;
      CHECK((M * x - nodal_apply(*g, x, kind)).norm() < 1e-10 * x.norm() * op.lambda_max);
      // self-adjoint in the weighted inner product
      CHECK(std::abs(y.dot(W.asDiagonal() * (M * x)) - x.dot(W.asDiagonal() * (M * y))) <
            1e-9 * x.norm() * y.norm());
    }
    CHECK((op.dtn * op.dtn_tilde * x - op.neg_laplacian * x).norm() < 1e-9 * x.norm() * op.lambda_max);
  }
  SurfaceField f = random_field(g, 7);
  CHECK((op.neg_laplacian * testing::nodes(f) - testing::nodes(-laplace_beltrami(f))).norm() < 1e-10 * 72);
}

TEST_CASE("pointwise products are dealiased") {
  GridPtr g = SphereGrid::make(L);
  SurfaceField a = SurfaceField::basis(g, 5, 2), b = SurfaceField::basis(g, 6, -3);
  SurfaceField p = pointwise_nonlinear({&a, &b}, [](std::span<const double> v) { return v[0] * v[1]; }, "a b");
  // degree 11 product is inside the band: exact at the nodes
  for (int i = 0; i < g->size(); ++i) CHECK(p.values()[i] == doctest::Approx(a.values()[i] * b.values()[i]).epsilon(1e-11));
  CHECK_THROWS_AS(pointwise_nonlinear({&a}, [](std::span<const double>) { return std::nan(""); }, "nan"),
                  DomainError);
}

TEST_CASE("minimum search") {
  GridPtr g = SphereGrid::make(L);
  SurfaceField y = SurfaceField::basis(g, 1, 0);
  Extremum e = field_minimum(y);
  CHECK(e.value == doctest::Approx(-std::sqrt(3 / (4 * kPi))).epsilon(1e-10));
  CHECK(e.point[2] == doctest::Approx(-1.0).epsilon(1e-6));
  // off-node minimum of a tilted linear function
  const double n0 = 0.3, n1 = -0.5, n2 = std::sqrt(1 - 0.34);
  SurfaceField t = SurfaceField::from_function(g, [&](double x, double yy, double z) { return n0 * x + n1 * yy + n2 * z; });
  Extremum m = field_minimum(t);
  CHECK(m.value == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(geodesic_distance(m.point, {-n0, -n1, -n2}) < 1e-4);
}

TEST_CASE("PSF1 format") {
  GridPtr g = SphereGrid::make(6);
  SurfaceField f = random_field(g, 9);
  auto path = scratch("f.psf1").string();
  write_psf1(path, f);
  CHECK(std::filesystem::file_size(path) == 16 + 8 * (g->size() + g->ncoeff()));
  std::ifstream in(path, std::ios::binary);
  char magic[4];
  std::uint32_t hdr[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(hdr), 12);
  CHECK(std::string(magic, 4) == "PSF1");
  CHECK(hdr[0] == 6);
  CHECK(hdr[1] == std::uint32_t(g->nlat()));
  CHECK(hdr[2] == std::uint32_t(g->nlon()));
  double v0;
  in.read(reinterpret_cast<char*>(&v0), 8);
  CHECK(v0 == f.values()[0]);
  in.close();

  SurfaceField r = read_psf1(path);
  CHECK(r.values() == f.values());
  CHECK(r.coeffs() == f.coeffs());

  auto corrupt = [&](const std::string& name, auto&& edit) {
    std::ifstream src(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(src)), {});
    edit(bytes);
    auto p = scratch(name).string();
    std::ofstream(p, std::ios::binary) << bytes;
    return p;
  };
  CHECK_THROWS_AS(read_psf1(corrupt("magic.psf1", [](std::string& b) { b[0] = 'X'; })), IoError);
  CHECK_THROWS_AS(read_psf1(corrupt("short.psf1", [](std::string& b) { b.resize(b.size() - 8); })), IoError);
  CHECK_THROWS_AS(read_psf1(corrupt("long.psf1", [](std::string& b) { b += "12345678"; })), IoError);
  CHECK_THROWS_AS(read_psf1(corrupt("values.psf1", [](std::string& b) { b[20] ^= 0x40; })), IoError);
  CHECK_THROWS_AS(read_psf1(scratch("missing.psf1").string()), IoError);
}

TEST_CASE("concurrent use of one grid") {
  GridPtr g = SphereGrid::make(12);
  SurfaceField f = random_field(g, 21);
  const std::vector<double> expect = laplace_beltrami(f).coeffs();
  std::vector<int> ok(8, 0);
  std::vector<std::thread> pool;
  for (int t = 0; t < 8; ++t)
    pool.emplace_back([&, t] {
      GridPtr h = SphereGrid::make(12);
      bool good = laplace_beltrami(SurfaceField::from_coeffs(h, f.coeffs())).coeffs() == expect;
      good = good && h->nodal().lambda_max == 12 * 13;
      good = good && h->dealias()->L() >= 12;
      ok[t] = good;
    });
  for (auto& t : pool) t.join();
  for (int v : ok) CHECK(v == 1);
}
