#include "cellpol/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "cellpol/critical_mass.hpp"
#include "cellpol/dynamics.hpp"
#include "cellpol/error.hpp"
#include "cellpol/field_io.hpp"
#include "cellpol/localization.hpp"
#include "cellpol/steady.hpp"
#include "cellpol/validate.hpp"
#include "cellpol/zonal.hpp"

namespace cellpol {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

struct Context {
  const RunConfig& cfg;
  fs::path out;
  int workers;
  std::string hash;
  CommandResult result;

  std::string path(const std::string& name) {
    result.outputs.push_back(name);
    return (out / name).string();
  }
};

json num(double x) {
  if (std::isinf(x)) return x > 0 ? "infinite" : "-infinite";
  if (std::isnan(x)) return nullptr;
  return x;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << j.dump(2) << "\n";
  if (!f) throw IoError("write failed for '" + path + "'");
}

json params_json(const ModelParams& p) {
  return {{"a1", p.a1}, {"a2", p.a2}, {"a3", p.a3},   {"a4", p.a4},     {"a5", p.a5},
          {"a6", p.a6}, {"D", num(p.D)}, {"eps", p.eps}, {"mass", p.mass}, {"bulk_volume", p.bulk_volume}};
}

json notes_json(const std::vector<std::string>& v) { return json(v); }

double optional_number(const RunConfig& cfg, const std::string& key, double fallback) {
  const std::string& v = cfg.raw(key);
  if (v.empty() || v == "model") return fallback;
  return cfg.get_double(key);
}

ObstacleOptions obstacle_options(const RunConfig& cfg) {
  ObstacleOptions o;
  o.tol_kkt = cfg.get_double("obstacle.tol_kkt");
  o.tol_mass = cfg.get_double("obstacle.tol_mass");
  o.max_bisection = cfg.get_int("obstacle.max_bisection");
  return o;
}

SteadyOptions steady_options(const RunConfig& cfg) {
  SteadyOptions o;
  o.tol = cfg.get_double("steady.tol");
  o.max_newton = cfg.get_int("steady.max_newton");
  o.relax = cfg.get_bool("steady.relax");
  o.relax_T = cfg.get_double("steady.relax_T");
  o.relax_nr = cfg.get_int("steady.relax_nr");
  return o;
}

DtPolicy dt_policy(const RunConfig& cfg) {
  DtPolicy d;
  d.dt = cfg.get_double("dynamics.dt");
  d.dt_min = cfg.get_double("dynamics.dt_min");
  d.dt_max = cfg.get_double("dynamics.dt_max");
  d.adaptive = cfg.get_bool("dynamics.adaptive");
  d.tol_neg = cfg.get_double("dynamics.tol_neg");
  d.mass_step_tol = cfg.get_double("dynamics.mass_step_tol");
  const std::string s = cfg.raw("dynamics.scheme");
  d.scheme = s == "euler" ? Scheme::Euler : s == "cn" ? Scheme::CrankNicolson : Scheme::ARS222;
  return d;
}

json obstacle_json(const ObstacleSolution& s) {
  return {{"alpha", s.alpha},
          {"mass", s.mass},
          {"kkt_residual", s.kkt_residual},
          {"active_residual", s.active_residual},
          {"min_q", s.min_q},
          {"inactive_fraction", s.inactive_fraction},
          {"polarized", s.polarized},
          {"converged", s.converged},
          {"valid", s.valid},
          {"closed_form", s.closed_form},
          {"xi_min", s.xi.minCoeff()},
          {"xi_max", s.xi.maxCoeff()},
          {"u_min", s.u.minCoeff()},
          {"iterations", s.iterations},
          {"method", s.method},
          {"notes", notes_json(s.notes)}};
}

json localization_json(const LocalizationMetrics& m) {
  if (!m.defined) return {{"route", m.route}, {"defined", false}, {"alpha_gap", m.alpha_gap}};
  return {{"route", m.route},
          {"defined", true},
          {"support_radius", m.support_radius},
          {"alpha_gap", m.alpha_gap},
          {"active_area", m.active_area},
          {"mean_lhs", m.mean_lhs},
          {"mean_rhs", m.mean_rhs},
          {"mean_identity_residual", m.mean_identity_residual},
          {"corrected_residual", m.corrected_residual}};
}

json critical_json(const CriticalMassReport& r, double a4) {
  json j = {{"L", r.L},
            {"ell", r.ell},
            {"alpha0", r.alpha0},
            {"alpha_star", r.alpha_star},
            {"m_star", r.m_star},
            {"residuals",
             {{"u_star", r.u_star_residual}, {"u_star_min", r.u_star_min}, {"balance", r.balance}}},
            {"warnings", notes_json(r.warnings)}};
  if (r.psi) {
    j["residuals"]["psi"] = r.psi_residual;
    j["psi_min"] = r.psi_min;
    j["psi_g"] = r.psi_g;
    j["sigma_min"] = r.sigma_min;
    j["sigma_second"] = r.sigma_second;
    j["degenerate_kernel"] = r.degenerate_kernel;
  }
  if (a4 != 1.0)
    j["restored_a4"] = {{"a4", a4},
                        {"alpha0", a4 * r.alpha0},
                        {"alpha_star", a4 * r.alpha_star},
                        {"m_star", a4 * r.m_star}};
  return j;
}

SurfaceField random_field(GridPtr grid, int lmax, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> c(grid->ncoeff(), 0.0);
  for (int l = 1; l <= std::min(lmax, grid->L()); ++l)
    for (int m = -l; m <= l; ++m) c[sh_index(l, m)] = U(rng) / l;
  return SurfaceField::from_coeffs(grid, std::move(c));
}

void snapshot(Context& ctx, const TrajectoryState& s, int index) {
  std::ostringstream tag;
  tag << std::setw(4) << std::setfill('0') << index;
  write_psf1(ctx.path("u_" + tag.str() + ".psf1"), s.u);
  write_psf1(ctx.path("v_" + tag.str() + ".psf1"), s.v);
  if (!s.infinite) write_pbf1(ctx.path("w_" + tag.str() + ".pbf1"), s.w);
}

void cmd_simulate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  GridPtr grid = SphereGrid::make(cfg.get_int("grid.L"));
  const ModelParams pe = cfg.model();
  const ModelParams p = pe.unscaled();
  SignalField sig = make_signal(cfg, grid).scaled(1.0 / pe.eps);
  const int nr = cfg.get_int("bulk.nr");

  double u0, v0;
  if (cfg.is_set("dynamics.u0") || cfg.is_set("dynamics.v0")) {
    u0 = cfg.is_set("dynamics.u0") ? cfg.get_double("dynamics.u0") : 0.0;
    v0 = cfg.is_set("dynamics.v0") ? cfg.get_double("dynamics.v0") : 0.0;
  } else {
    HomogeneousState h = homogeneous_steady(p, sig.c.integral() / kFourPi);
    u0 = h.U, v0 = h.v;
  }
  SurfaceField u = SurfaceField::constant(grid, u0);
  double pert = cfg.get_double("dynamics.perturbation");
  if (pert > 0) {
    SurfaceField r = random_field(grid, 4, std::uint64_t(cfg.get_int("dynamics.seed")));
    double amp = std::max(std::abs(r.grid_min()), std::abs(r.grid_max()));
    u = u + r * (std::min(pert, 1.0) * u0 / amp);
  }
  TrajectoryState s = initial_state(u, SurfaceField::constant(grid, v0), nr, p);

  const double T = cfg.get_double("dynamics.T");
  int snap = 0;
  snapshot(ctx, s, snap++);
  if (T <= 0) {
    ctx.result.summary = json();
    return;
  }
  DtPolicy pol = dt_policy(cfg);
  RunOptions ro;
  ro.sample_dt = cfg.get_double("dynamics.sample_dt");
  ro.stop_at_steady = cfg.get_bool("dynamics.stop_at_steady");
  ro.tol_ss = cfg.get_double("dynamics.tol_ss");
  const double snap_dt = cfg.get_double("dynamics.snapshot_dt");

  Trajectory total;
  total.mass0 = s.mass(p);
  total.min_value = INFINITY;
  double t_end = snap_dt > 0 ? std::min(snap_dt, T) : T;
  while (true) {
    Trajectory seg = run_to_time(s, t_end, pol, p, sig, ro);
    auto first = seg.samples.begin();
    if (!total.samples.empty() && first != seg.samples.end()) ++first;
    total.samples.insert(total.samples.end(), first, seg.samples.end());
    total.accepted += seg.accepted;
    total.rejected += seg.rejected;
    total.sup_lyapunov = std::max(total.sup_lyapunov, seg.sup_lyapunov);
    total.min_value = std::min(total.min_value, seg.min_value);
    total.warnings.insert(total.warnings.end(), seg.warnings.begin(), seg.warnings.end());
    s = seg.final_state;
    total.failed = seg.failed;
    total.reached_steady = seg.reached_steady;
    if (snap_dt > 0) snapshot(ctx, s, snap++);
    if (seg.failed || seg.reached_steady || t_end >= T - 1e-12 * T) break;
    t_end = std::min(t_end + snap_dt, T);
  }
  for (const auto& ts : total.samples)
    total.max_mass_drift = std::max(total.max_mass_drift, std::abs(ts.mass - total.mass0) / total.mass0);
  if (snap_dt <= 0) snapshot(ctx, s, snap++);
  write_time_series_csv(ctx.path("timeseries.csv"), total);

  json j = {{"regime", p.infinite_D() ? "D = infinity (scalar w)" : "finite D (bulk w)"},
            {"params", params_json(pe)},
            {"signal", sig.description},
            {"L", grid->L()},
            {"nr", p.infinite_D() ? 0 : nr},
            {"T", s.t},
            {"mass0", total.mass0},
            {"mass_final", s.mass(p)},
            {"max_mass_drift", total.max_mass_drift},
            {"min_value", total.min_value},
            {"sup_lyapunov", total.sup_lyapunov},
            {"accepted_steps", total.accepted},
            {"rejected_steps", total.rejected},
            {"reached_steady", total.reached_steady},
            {"failed", total.failed},
            {"warnings", notes_json(total.warnings)}};
  if (p.infinite_D()) j["w_scalar"] = s.w_scalar;
  ctx.result.summary = j;
  if (total.failed) ctx.result.exit_code = kExitNonConvergence;
}

json steady_json(const SteadyState& s) {
  return {{"params", params_json(s.p)},
          {"residual", s.residual},
          {"residual_U", s.res_U},
          {"residual_v", s.res_v},
          {"residual_mass", s.res_mass},
          {"independent_residual", s.independent_residual},
          {"mass", s.mass},
          {"mass_error", s.mass_error},
          {"int_v", s.int_v},
          {"int_v_bound", s.int_v_bound},
          {"w_max", s.w_max},
          {"w_bound", s.w_bound},
          {"w_mean", s.w_scalar},
          {"norm_H2_U", s.norm_H2_U},
          {"norm_L2_v", s.norm_L2_v},
          {"norm_H1_w", s.norm_H1_w},
          {"min_U", s.U.minCoeff()},
          {"min_v", s.v.minCoeff()},
          {"converged", s.converged},
          {"newton_iterations", s.newton_iterations},
          {"relax_time", s.relax_time},
          {"notes", notes_json(s.notes)}};
}

void cmd_steady(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  GridPtr grid = SphereGrid::make(cfg.get_int("grid.L"));
  const ModelParams p = cfg.model();
  SignalField sig = make_signal(cfg, grid);
  SteadyState s = solve_steady(p, sig, steady_options(cfg));
  write_psf1(ctx.path("U.psf1"), s.U_field());
  write_psf1(ctx.path("v.psf1"), s.v_field());
  write_psf1(ctx.path("w_trace.psf1"), s.w_field());
  if (!p.infinite_D()) write_pbf1(ctx.path("w.pbf1"), s.w_bulk(cfg.get_int("bulk.nr")));
  json j = steady_json(s);
  j["signal"] = sig.description;
  j["L"] = grid->L();
  j["regime"] = p.infinite_D() ? "D = infinity (scalar w)" : "finite D (harmonic w)";
  ctx.result.summary = j;
  if (!s.converged) ctx.result.exit_code = kExitNonConvergence;
}

double resolve_ell(const RunConfig& cfg, const ModelParams& p) {
  double ell = optional_number(cfg, "obstacle.ell", p.ell());
  if (ell < 0) throw ConfigError("config key 'obstacle.ell': must be >= 0");
  return ell;
}

void cmd_obstacle(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  GridPtr grid = SphereGrid::make(cfg.get_int("grid.L"));
  const ModelParams p = cfg.model();
  SignalField sig = make_signal(cfg, grid);
  const double ell = resolve_ell(cfg, p);
  const double a4 = p.a4;
  ObstacleOperator op(sig, ell);
  ObstacleOptions opt = obstacle_options(cfg);
  ObstacleSolution unit;
  json j;
  if (cfg.is_set("obstacle.alpha")) {
    unit = solve_obstacle(op, cfg.get_double("obstacle.alpha") / a4, opt);
    j["mode"] = "alpha";
  } else {
    double m = optional_number(cfg, "obstacle.mass", p.mass);
    if (!(m > 0)) throw ConfigError("config key 'obstacle.mass': must be > 0");
    unit = solve_for_mass(op, m / a4, opt);
    j["mode"] = "mass";
  }
  ObstacleSolution sol = rescale_a4(unit, a4);
  write_psf1(ctx.path("u.psf1"), sol.u_field());
  write_psf1(ctx.path("xi.psf1"), sol.xi_field());
  j["regime"] = ell > 0 ? "finite ell" : "D = infinity";
  j["ell"] = ell;
  j["a4"] = a4;
  j["L"] = grid->L();
  j["signal"] = sig.description;
  j["solution"] = obstacle_json(sol);
  j["critical"] = critical_json(critical_mass(op), a4);
  j["localization_grid_a4_unit"] = localization_json(localization_metrics(unit, sig));
  if (ell == 0 && zonal_monotone(sig)) {
    ZonalCapSolver zs(sig.g_of_z);
    ZonalCap cap = zs.for_mass(unit.mass);
    json lz = localization_json(localization_metrics(cap, zs));
    lz["alpha"] = cap.alpha;
    j["localization_zonal_a4_unit"] = lz;
  }
  if (ell > 0 && a4 == 1.0 && !p.infinite_D() && std::abs(p.ell() - ell) <= 1e-12 * ell) {
    Reconstruction r = reconstruct_vw_finiteD(unit, p, sig);
    j["reconstruction"] = {{"w_bar", r.w_bar},
                           {"w_bar_formula", r.w_bar_formula},
                           {"w_identity_residual", r.w_identity_residual},
                           {"equation_residuals", r.equation_residuals},
                           {"min_v", r.min_v},
                           {"min_w", r.min_w},
                           {"valid", r.valid}};
  }
  ctx.result.summary = j;
  if (!sol.converged) ctx.result.exit_code = kExitNonConvergence;
}

void cmd_critical_mass(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  GridPtr grid = SphereGrid::make(cfg.get_int("grid.L"));
  const ModelParams p = cfg.model();
  SignalField sig = make_signal(cfg, grid);
  const double ell = resolve_ell(cfg, p);
  CriticalMassReport r = critical_mass(sig, ell);
  write_psf1(ctx.path("u_star.psf1"), r.u_star);
  if (r.psi) write_psf1(ctx.path("psi.psf1"), *r.psi);
  json j = critical_json(r, p.a4);
  j["signal"] = sig.description;
  write_json(ctx.path("critical_mass.json"), j);
  ctx.result.summary = j;
}

struct SweepRow {
  json line;
  std::vector<double> csv;
  bool converged = true;
  std::string error;
};

void write_sweep(Context& ctx, const std::vector<std::string>& cols, const std::vector<SweepRow>& rows) {
  std::ofstream jl(ctx.path("sweep.jsonl"));
  std::ofstream csv(ctx.path("sweep.csv"));
  if (!jl || !csv) throw IoError("cannot write sweep outputs");
  for (std::size_t c = 0; c < cols.size(); ++c) csv << cols[c] << ",";
  csv << "config_hash\n";
  csv << std::setprecision(17);
  for (const auto& r : rows) {
    json line = r.line;
    line["config_hash"] = ctx.hash;
    jl << line.dump() << "\n";
    for (double v : r.csv) csv << v << ",";
    csv << ctx.hash << "\n";
  }
  if (!jl || !csv) throw IoError("write failed for sweep outputs");
}

void cmd_sweep(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  GridPtr grid = SphereGrid::make(cfg.get_int("grid.L"));
  const ModelParams p = cfg.model();
  SignalField sig = make_signal(cfg, grid);
  const std::string kind = cfg.raw("sweep.kind");
  const bool relative = cfg.get_bool("sweep.relative");
  std::vector<double> values = cfg.get_list("sweep.values");
  json summary = {{"kind", kind}, {"signal", sig.description}, {"L", grid->L()}, {"params", params_json(p)}};
  std::vector<SweepRow> rows;
  bool ok = true;

  if (kind == "mass" || kind == "alpha") {
    const double ell = resolve_ell(cfg, p);
    const double a4 = p.a4;
    ObstacleOperator op(sig, ell);
    const CriticalData& cd = op.critical();
    ObstacleOptions opt = obstacle_options(cfg);
    if (values.empty())
      values = kind == "mass" ? std::vector<double>{0.125, 0.25, 0.5, 0.75, 0.9, 1.1, 1.25, 1.5}
                              : std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    rows.resize(values.size());
    parallel_for(int(values.size()), ctx.workers, [&](int i) {
      SweepRow& row = rows[i];
      double x = values[i];
      try {
        ObstacleSolution unit;
        if (kind == "mass") {
          double m = relative ? x * cd.m_star * a4 : x;
          if (!(m > 0)) throw DomainError("sweep mass must be > 0");
          unit = solve_for_mass(op, m / a4, opt);
        } else {
          double a = relative ? cd.alpha0 + x * (cd.alpha_star - cd.alpha0) : x / a4;
          unit = solve_obstacle(op, a, opt);
        }
        ObstacleSolution s = rescale_a4(unit, a4);
        LocalizationMetrics lm = localization_metrics(unit, sig);
        row.converged = s.converged;
        row.line = obstacle_json(s);
        row.line["index"] = i;
        row.line["value"] = x;
        row.line["localization"] = localization_json(lm);
        row.csv = {double(i), x, s.mass, s.mass / (a4 * cd.m_star), s.alpha, s.kkt_residual,
                   s.inactive_fraction, double(s.polarized), double(s.converged),
                   lm.defined ? lm.support_radius : NAN, unit.alpha - cd.alpha0,
                   lm.defined ? lm.mean_identity_residual : NAN};
      } catch (const Error& e) {
        row.converged = false;
        row.error = e.what();
        row.line = {{"index", i}, {"value", x}, {"error", row.error}};
        row.csv = {double(i), x, NAN, NAN, NAN, NAN, NAN, NAN, 0.0, NAN, NAN, NAN};
      }
    });
    write_sweep(ctx,
                {"index", "value", "mass", "m_over_mstar", "alpha", "kkt_residual", "inactive_fraction",
                 "polarized", "converged", "support_radius", "alpha_gap", "identity_residual_grid"},
                rows);
    // polarization flips along increasing mass
    std::vector<std::pair<double, bool>> pol;
    for (const auto& r : rows)
      if (r.error.empty()) pol.emplace_back(r.line["mass"].get<double>(), r.line["polarized"].get<bool>());
    std::sort(pol.begin(), pol.end());
    int flips = 0;
    json at = nullptr;
    for (std::size_t i = 1; i < pol.size(); ++i)
      if (pol[i].second != pol[i - 1].second) {
        ++flips;
        at = {pol[i - 1].first, pol[i].first};
      }
    bool increasing = true;
    std::vector<std::pair<double, double>> am;
    for (const auto& r : rows)
      if (r.error.empty()) am.emplace_back(r.line["mass"].get<double>(), r.line["alpha"].get<double>());
    std::sort(am.begin(), am.end());
    for (std::size_t i = 1; i < am.size(); ++i)
      if (am[i].first <= a4 * cd.m_star && !(am[i].second > am[i - 1].second)) increasing = false;
    summary["ell"] = ell;
    summary["alpha0"] = a4 * cd.alpha0;
    summary["alpha_star"] = a4 * cd.alpha_star;
    summary["m_star"] = a4 * cd.m_star;
    summary["polarization_flips"] = flips;
    summary["flip_bracket"] = at;
    summary["alpha_increasing_below_mstar"] = increasing;
  } else if (kind == "eps") {
    if (values.empty()) values = {0.1, 0.05, 0.025};
    auto pts = continuation_eps(p, sig, values, steady_options(cfg));
    bool decreasing = true;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const EpsPoint& e = pts[i];
      SweepRow row;
      row.converged = e.state.converged;
      row.line = steady_json(e.state);
      row.line["index"] = i;
      row.line["eps"] = e.eps;
      row.line["l1_error"] = e.l1_error;
      row.line["xi_min"] = e.xi_min;
      row.line["xi_max"] = e.xi_max;
      row.line["limit_alpha"] = e.limit.alpha;
      row.csv = {double(i), e.eps, e.l1_error, e.xi_min, e.xi_max, e.state.residual, e.state.mass_error,
                 double(e.state.converged)};
      if (i > 0 && !(e.l1_error < pts[i - 1].l1_error)) decreasing = false;
      rows.push_back(std::move(row));
    }
    write_sweep(ctx, {"index", "eps", "l1_error", "xi_min", "xi_max", "residual", "mass_error", "converged"},
                rows);
    summary["l1_error_decreasing"] = decreasing;
  } else {
    if (values.empty()) values = {10, 100, 1000};
    DContinuation dc = continuation_D(p, sig, values, steady_options(cfg));
    bool var_dec = true, dist_dec = true;
    for (std::size_t i = 0; i < dc.points.size(); ++i) {
      const DPoint& d = dc.points[i];
      SweepRow row;
      row.converged = d.state.converged;
      row.line = steady_json(d.state);
      row.line["index"] = i;
      row.line["D"] = d.D;
      row.line["var_w"] = d.var_w;
      row.line["grad_w"] = d.grad_w;
      row.line["sqrtD_grad_w"] = d.sqrtD_grad_w;
      row.line["distance"] = d.distance;
      row.csv = {double(i), d.D, d.var_w, d.grad_w, d.sqrtD_grad_w, d.distance, d.state.residual,
                 double(d.state.converged)};
      if (i > 0 && !(d.var_w < dc.points[i - 1].var_w)) var_dec = false;
      if (i > 0 && !(d.distance < dc.points[i - 1].distance)) dist_dec = false;
      rows.push_back(std::move(row));
    }
    write_sweep(ctx, {"index", "D", "var_w", "grad_w", "sqrtD_grad_w", "distance", "residual", "converged"},
                rows);
    summary["limit"] = steady_json(dc.limit);
    summary["var_w_decreasing"] = var_dec;
    summary["distance_decreasing"] = dist_dec;
    ok = ok && dc.limit.converged;
  }
  int failed = 0;
  for (const auto& r : rows) failed += !r.converged;
  summary["points"] = rows.size();
  summary["failed_points"] = failed;
  ctx.result.summary = summary;
  if (failed > 0 || !ok) ctx.result.exit_code = kExitNonConvergence;
}

void cmd_validate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  json checks = json::array();
  int failed = 0;
  if (cfg.is_set("validate.field_file")) {
    // an unreadable or inconsistent field file is an I/O failure
    SurfaceField f = read_psf1(cfg.raw("validate.field_file"));
    checks.push_back({{"name", "field file"},
                      {"anchor", "PSF1 header, size and coefficient/value consistency"},
                      {"value", f.L()},
                      {"pass", true}});
  }
  fs::path work = ctx.out / "validate_scratch";
  fs::create_directories(work);
  for (const ValidationCheck& c : run_validation(cfg, work.string())) {
    checks.push_back({{"name", c.name},
                      {"anchor", c.anchor},
                      {"value", num(c.value)},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass},
                      {"detail", c.detail}});
    failed += !c.pass;
  }
  fs::remove_all(work);
  ctx.result.summary = {{"checks", checks}, {"failed", failed}, {"total", checks.size()}};
  write_json(ctx.path("validate.json"), ctx.result.summary);
  if (failed > 0) ctx.result.exit_code = kExitNonConvergence;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"simulate", "steady", "obstacle", "critical-mass", "sweep",
                                                 "validate"};
  return names;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

CommandResult run_command(const std::string& command, const RunConfig& cfg, const std::string& out_dir,
                          int workers) {
  Context ctx{cfg, fs::path(out_dir), std::max(1, workers), cfg.hash(), {}};
  auto manifest = [&](const std::string& status) {
    json m = {{"artifact", "cellpol"},
              {"version", CELLPOL_VERSION},
              {"command", command},
              {"config", cfg.values()},
              {"config_hash", ctx.hash},
              {"workers", ctx.workers},
              {"status", status},
              {"exit_code", ctx.result.exit_code},
              {"outputs", ctx.result.outputs}};
    if (!ctx.result.message.empty()) m["message"] = ctx.result.message;
    write_json((ctx.out / "manifest.json").string(), m);
  };
  try {
    if (std::find(command_names().begin(), command_names().end(), command) == command_names().end())
      throw ConfigError("unknown command '" + command + "'");
    cfg.validate();
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec || !fs::is_directory(ctx.out)) throw IoError("cannot create output directory '" + out_dir + "'");
    if (command == "simulate") cmd_simulate(ctx);
    else if (command == "steady") cmd_steady(ctx);
    else if (command == "obstacle") cmd_obstacle(ctx);
    else if (command == "critical-mass") cmd_critical_mass(ctx);
    else if (command == "sweep") cmd_sweep(ctx);
    else cmd_validate(ctx);
  } catch (const ConfigError& e) {
    ctx.result.exit_code = kExitInvalidConfig;
    ctx.result.message = e.what();
  } catch (const IoError& e) {
    ctx.result.exit_code = kExitIo;
    ctx.result.message = e.what();
  } catch (const DomainError& e) {
    ctx.result.exit_code = kExitInvalidConfig;
    ctx.result.message = e.what();
  } catch (const Error& e) {
    ctx.result.exit_code = kExitNonConvergence;
    ctx.result.message = e.what();
  }
  if (ctx.result.exit_code == kExitInvalidConfig && !fs::is_directory(ctx.out)) return ctx.result;
  try {
    bool write_summary = !ctx.result.summary.is_null() && command != "validate";
    if (write_summary) {
      ctx.result.summary["config_hash"] = ctx.hash;
      write_json(ctx.path("summary.json"), ctx.result.summary);
    }
    manifest(ctx.result.exit_code == kExitOk ? "ok" : "failed");
  } catch (const IoError& e) {
    ctx.result.exit_code = kExitIo;
    ctx.result.message = e.what();
  }
  return ctx.result;
}

}  // namespace cellpol
