#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "cellpol/config.hpp"
#include "cellpol/error.hpp"

using namespace cellpol;

TEST_CASE("defaults") {
  RunConfig c;
  c.validate();
  CHECK(c.get_int("grid.L") == 16);
  CHECK(c.get_int("bulk.nr") == 64);
  CHECK(std::isinf(c.get_double("model.D")));
  CHECK(c.get_double("model.bulk_volume") == 4.0 * std::numbers::pi / 3.0);
  CHECK(c.raw("signal.type") == "axisymmetric");
  ModelParams p = c.model();
  CHECK(p.infinite_D());
  CHECK(p.a1 == 0.1);
  for (const std::string& k : config_keys()) CHECK(c.has(k));
}

TEST_CASE("overrides and rejection by name") {
  RunConfig c;
  c.set("model.D", "12.5");
  c.set("sweep.values", "0.1, 0.2,0.4");
  c.set("dynamics.adaptive", "true");
  CHECK(c.get_double("model.D") == 12.5);
  CHECK(c.get_list("sweep.values") == std::vector<double>{0.1, 0.2, 0.4});
  CHECK(c.get_bool("dynamics.adaptive"));
  auto message = [&](const std::string& k, const std::string& v) {
    try {
      RunConfig t;
      t.set(k, v);
      t.validate();
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("model.a9", "1").find("model.a9") != std::string::npos);
  CHECK(message("grid.L", "abc").find("grid.L") != std::string::npos);
  CHECK(message("grid.L", "2.5").find("grid.L") != std::string::npos);
  CHECK(message("dynamics.scheme", "rk4").find("dynamics.scheme") != std::string::npos);
  CHECK(message("model.a1", "-1").find("a1") != std::string::npos);
  CHECK(message("model.eps", "0").find("eps") != std::string::npos);
  CHECK(message("grid.L", "0") != "");
  CHECK(message("model.a1", "nan") != "");
}

TEST_CASE("config text and files") {
  RunConfig c;
  c.merge_text("# comment\nmodel.a1 = 0.2   # trailing\n\n  grid.L=8\n", "inline");
  CHECK(c.get_double("model.a1") == 0.2);
  CHECK(c.get_int("grid.L") == 8);
  CHECK_THROWS_AS(c.merge_text("not a pair\n", "inline"), ConfigError);

  auto path = (std::filesystem::temp_directory_path() / "cellpol_test.cfg").string();
  std::ofstream(path) << "model.D = 4\nsignal.type = manufactured\n";
  RunConfig f = RunConfig::from_file(path);
  CHECK(f.get_double("model.D") == 4.0);
  CHECK(f.raw("signal.type") == "manufactured");
  CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/cellpol.cfg"), IoError);
}

TEST_CASE("canonical form and hash") {
  RunConfig a, b;
  a.set("model.a1", "0.2");
  a.set("grid.L", "8");
  b.set("grid.L", "8");
  b.set("model.a1", "0.2");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.set("model.a1", "0.3");
  CHECK(a.hash() != b.hash());
  std::string can = a.canonical();
  CHECK(can.find("grid.L = 8\n") != std::string::npos);
  CHECK(can.find("grid.L") < can.find("model.a1"));
}

TEST_CASE("signals from config") {
  GridPtr g = SphereGrid::make(8);
  RunConfig c;
  c.set("signal.type", "constant");
  c.set("signal.c", "0.6");
  SignalField s = make_signal(c, g);
  CHECK(s.constant);
  CHECK(s.c_nodes.maxCoeff() == doctest::Approx(0.6));
  c.set("signal.type", "manufactured");
  SignalField m = make_signal(c, g);
  CHECK(m.g_max == doctest::Approx((1 + 2 * 0.05 * 4) / 1.5));
  c.set("signal.type", "file");
  c.set("signal.file", "/nonexistent/c.psf1");
  CHECK_THROWS_AS(make_signal(c, g), IoError);
}
