#include <doctest.h>

#include <numbers>

#include "cellpol/error.hpp"
#include "cellpol/model.hpp"
#include "cellpol/spectral.hpp"
#include "common.hpp"

using namespace cellpol;

TEST_CASE("parameter validation names the parameter") {
  ModelParams p;
  p.validate();
  p.a2 = -1.0;
  try {
    p.validate();
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("a2") != std::string::npos);
  }
  ModelParams q;
  q.eps = 0.0;
  CHECK_THROWS_AS(q.validate(), DomainError);
  q = ModelParams{};
  q.D = std::nan("");
  CHECK_THROWS_AS(q.validate(), DomainError);
}

TEST_CASE("eps rescaling") {
  ModelParams p;
  p.eps = 0.1;
  p.D = 20.0;
  p.a4 = 2.0;
  p.mass = 3.0;
  ModelParams o = p.unscaled();
  CHECK(o.eps == 1.0);
  CHECK(o.a4 == doctest::Approx(20.0));
  CHECK(o.a5 == doctest::Approx(10.0));
  CHECK(o.a6 == doctest::Approx(10.0));
  CHECK(o.D == doctest::Approx(200.0));
  CHECK(o.mass == doctest::Approx(30.0));
  CHECK(o.a1 == p.a1);
  CHECK(o.ell() == doctest::Approx(p.ell()));
}

TEST_CASE("signal presets") {
  GridPtr g = SphereGrid::make(12);
  SignalField s = signal_axisymmetric(g, 0.5, 0.3, 2.0);
  for (int i = 0; i < g->size(); i += 7) {
    double z = g->node(i)[2];
    CHECK(s.g_nodes(i) == doctest::Approx(0.5 + 0.3 * z).epsilon(1e-14));
    // g = c / (c + a5)
    CHECK(s.c_nodes(i) / (s.c_nodes(i) + 2.0) == doctest::Approx(s.g_nodes(i)).epsilon(1e-13));
  }
  CHECK(s.g_max == doctest::Approx(0.8));
  CHECK(s.argmax[2] == doctest::Approx(1.0));
  CHECK(s.zonal());
  CHECK_FALSE(s.constant);

  const double kappa = 0.05;
  SignalField m = signal_manufactured(g, kappa, 1.0, 0.5);
  for (int i = 0; i < g->size(); i += 5) {
    double z = g->node(i)[2];
    // -Delta kappa (1+z)^2 = 2 kappa (3z^2 + 2z - 1)
    double expect = (1.0 + 2 * kappa * (3 * z * z + 2 * z - 1)) / 1.5;
    CHECK(m.g_nodes(i) == doctest::Approx(expect).epsilon(1e-14));
  }

  SignalField k = signal_constant_c(g, 0.7, 1.0);
  CHECK(k.constant);
  CHECK(k.g_min == doctest::Approx(0.7 / 1.7));

  SignalField t = s.scaled(3.0);
  CHECK(t.a5 == doctest::Approx(6.0));
  CHECK((t.g_nodes - s.g_nodes).norm() < 1e-14);
  CHECK((t.c_nodes - 3.0 * s.c_nodes).norm() < 1e-12);

  CHECK_THROWS_AS(signal_axisymmetric(g, 0.5, 0.6, 1.0), DomainError);  // g reaches 1.1
}

TEST_CASE("kinetics derivatives") {
  ModelParams p;
  p.eps = 0.2;
  p.a2 = 0.7;
  p.a3 = 1.3;
  p.a4 = 1.6;
  for (double U : {0.0, 0.01, 0.3, 2.0}) {
    const double h = 1e-6;
    PointKinetics k = kinetics(U, 0.4, p), kp = kinetics(U + h, 0.4, p);
    PointKinetics km = kinetics(U == 0 ? U : U - h, 0.4, p);
    double span = U == 0 ? h : 2 * h;
    CHECK((kp.K - km.K) / span == doctest::Approx(k.dK).epsilon(1e-5));
    CHECK((kp.R - km.R) / span == doctest::Approx(k.dR).epsilon(1e-5));
    CHECK(k.K == doctest::Approx(0.2 * 0.1 + 0.2 * 0.7 * U / (0.2 * 1.3 + U) + 0.4));
    CHECK(k.R == doctest::Approx(1.6 * U / (0.2 + U)));
  }
}

TEST_CASE("reaction terms") {
  GridPtr g = SphereGrid::make(10);
  ModelParams p;
  p.a5 = 1.3;
  p.a6 = 0.7;
  SignalField sig = signal_axisymmetric(g, 0.4, 0.2, p.a5);
  SurfaceField u = SurfaceField::constant(g, 0.5) + testing::random_field(g, 1, 3.0) * 0.05;
  SurfaceField v = SurfaceField::constant(g, 0.3) + testing::random_field(g, 2, 3.0) * 0.05;
  SurfaceField w = SurfaceField::constant(g, 0.2) + testing::random_field(g, 3, 3.0) * 0.05;
  Reaction r = reaction_rhs(u, v, w, p, sig);
  // f_u + f_v = -a5 v + a6 w, exactly as evaluated
  SurfaceField sum = r.f_u + r.f_v;
  SurfaceField ex = v * -p.a5 + w * p.a6;
  CHECK(testing::max_abs(sum.values(), ex.values()) < 1e-15);
  // constant fields: f_u by hand
  SurfaceField uc = SurfaceField::constant(g, 0.5), vc = SurfaceField::constant(g, 0.3);
  SignalField cs = signal_constant_c(g, 0.6, p.a5);
  Reaction rc = reaction_rhs(uc, vc, SurfaceField::constant(g, 0.2), p, cs);
  double fu = (p.a1 + p.a2 * 0.5 / (p.a3 + 0.5) + 0.6) * 0.3 - p.a4 * 0.5 / 1.5;
  CHECK(rc.f_u.grid_min() == doctest::Approx(fu).epsilon(1e-13));
  CHECK(rc.f_u.grid_max() == doctest::Approx(fu).epsilon(1e-13));
}
