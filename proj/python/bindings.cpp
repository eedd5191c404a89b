#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cellpol/config.hpp"
#include "cellpol/critical_mass.hpp"
#include "cellpol/error.hpp"
#include "cellpol/experiments.hpp"
#include "cellpol/steady.hpp"

namespace py = pybind11;
using namespace cellpol;

namespace {

RunConfig make_config(const std::map<std::string, std::string>& overrides) {
  RunConfig c;
  for (const auto& [k, v] : overrides) c.set(k, v);
  return c;
}

Eigen::MatrixXd node_matrix(const SphereGrid& g) {
  Eigen::MatrixXd x(g.size(), 3);
  for (int i = 0; i < g.size(); ++i)
    for (int d = 0; d < 3; ++d) x(i, d) = g.node(i)[d];
  return x;
}

py::dict obstacle_dict(const ObstacleSolution& s) {
  py::dict d;
  d["u"] = s.u;
  d["xi"] = s.xi;
  d["alpha"] = s.alpha;
  d["mass"] = s.mass;
  d["kkt_residual"] = s.kkt_residual;
  d["inactive_fraction"] = s.inactive_fraction;
  d["polarized"] = s.polarized;
  d["converged"] = s.converged;
  d["valid"] = s.valid;
  d["method"] = s.method;
  return d;
}

}  // namespace

PYBIND11_MODULE(_cellpol, m) {
  m.doc() = "Bulk-surface cell polarization on the unit sphere";
  m.attr("__version__") = CELLPOL_VERSION;

  // translators are tried newest first: the base class goes first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("config_keys", &config_keys);
  m.def("config_defaults", [] { return RunConfig().values(); });
  m.def("config_hash", [](const std::map<std::string, std::string>& o) { return make_config(o).hash(); },
        py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "run",
      [](const std::string& command, const std::map<std::string, std::string>& overrides, const std::string& out,
         int workers) {
        RunConfig cfg = make_config(overrides);
        CommandResult r;
        {
          py::gil_scoped_release release;
          r = run_command(command, cfg, out, workers);
        }
        return py::make_tuple(r.exit_code, r.summary.dump(), r.outputs, r.message);
      },
      py::arg("command"), py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("out") = "out",
      py::arg("workers") = 1);

  m.def(
      "grid",
      [](int L) {
        GridPtr g = SphereGrid::make(L);
        Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(g->weights().data(), g->size());
        return py::make_tuple(node_matrix(*g), w);
      },
      py::arg("L"));

  m.def(
      "critical_mass",
      [](const std::map<std::string, std::string>& overrides, double ell) {
        RunConfig cfg = make_config(overrides);
        GridPtr g = SphereGrid::make(cfg.get_int("grid.L"));
        CriticalMassReport r = critical_mass(make_signal(cfg, g), ell);
        py::dict d;
        d["alpha0"] = r.alpha0;
        d["alpha_star"] = r.alpha_star;
        d["m_star"] = r.m_star;
        d["u_star"] = Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(r.u_star.values().data(), g->size()));
        d["u_star_residual"] = r.u_star_residual;
        if (r.psi) {
          d["psi"] = Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(r.psi->values().data(), g->size()));
          d["psi_residual"] = r.psi_residual;
        }
        return d;
      },
      py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("ell") = 0.0);

  m.def(
      "obstacle",
      [](const std::map<std::string, std::string>& overrides, double mass, double ell) {
        RunConfig cfg = make_config(overrides);
        GridPtr g = SphereGrid::make(cfg.get_int("grid.L"));
        ObstacleOperator op(make_signal(cfg, g), ell);
        return obstacle_dict(solve_for_mass(op, mass));
      },
      py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("mass") = 1.0, py::arg("ell") = 0.0);

  m.def(
      "steady",
      [](const std::map<std::string, std::string>& overrides) {
        RunConfig cfg = make_config(overrides);
        cfg.validate();
        GridPtr g = SphereGrid::make(cfg.get_int("grid.L"));
        SteadyState s = solve_steady(cfg.model(), make_signal(cfg, g));
        py::dict d;
        d["U"] = s.U;
        d["v"] = s.v;
        d["w"] = s.w;
        d["residual"] = s.residual;
        d["independent_residual"] = s.independent_residual;
        d["mass_error"] = s.mass_error;
        d["converged"] = s.converged;
        return d;
      },
      py::arg("overrides") = std::map<std::string, std::string>{});
}
