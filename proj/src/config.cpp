#include "cellpol/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cellpol/error.hpp"
#include "cellpol/field_io.hpp"

namespace cellpol {

namespace {

enum class Kind { Double, Int, Bool, String, List, DoubleOrInf, Volume, Choice };

struct KeySpec {
  const char* key;
  const char* def;
  Kind kind;
  const char* choices = "";
};

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = {
      {"model.a1", "0.1", Kind::Double},
      {"model.a2", "0.5", Kind::Double},
      {"model.a3", "1", Kind::Double},
      {"model.a4", "1", Kind::Double},
      {"model.a5", "1", Kind::Double},
      {"model.a6", "1", Kind::Double},
      {"model.D", "infinite", Kind::DoubleOrInf},
      {"model.eps", "1", Kind::Double},
      {"model.mass", "1", Kind::Double},
      {"model.bulk_volume", "ball", Kind::Volume},
      {"signal.type", "axisymmetric", Kind::Choice, "constant,axisymmetric,manufactured,file"},
      {"signal.c", "1", Kind::Double},
      {"signal.g0", "0.5", Kind::Double},
      {"signal.g1", "0.3", Kind::Double},
      {"signal.kappa", "0.05", Kind::Double},
      {"signal.alpha_star", "0.5", Kind::Double},
      {"signal.file", "", Kind::String},
      {"signal.a7", "1", Kind::Double},
      {"grid.L", "16", Kind::Int},
      {"bulk.nr", "64", Kind::Int},
      {"dynamics.T", "10", Kind::Double},
      {"dynamics.dt", "1e-3", Kind::Double},
      {"dynamics.dt_min", "1e-6", Kind::Double},
      {"dynamics.dt_max", "0.1", Kind::Double},
      {"dynamics.adaptive", "false", Kind::Bool},
      {"dynamics.scheme", "ars222", Kind::Choice, "ars222,euler,cn"},
      {"dynamics.sample_dt", "0.1", Kind::Double},
      {"dynamics.snapshot_dt", "0", Kind::Double},
      {"dynamics.tol_neg", "1e-8", Kind::Double},
      {"dynamics.mass_step_tol", "1e-10", Kind::Double},
      {"dynamics.stop_at_steady", "false", Kind::Bool},
      {"dynamics.tol_ss", "1e-9", Kind::Double},
      {"dynamics.u0", "", Kind::String},
      {"dynamics.v0", "", Kind::String},
      {"dynamics.perturbation", "0", Kind::Double},
      {"dynamics.seed", "1", Kind::Int},
      {"steady.tol", "1e-11", Kind::Double},
      {"steady.max_newton", "60", Kind::Int},
      {"steady.relax", "true", Kind::Bool},
      {"steady.relax_T", "50", Kind::Double},
      {"steady.relax_nr", "16", Kind::Int},
      {"obstacle.ell", "", Kind::String},
      {"obstacle.alpha", "", Kind::String},
      {"obstacle.mass", "", Kind::String},
      {"obstacle.tol_kkt", "1e-10", Kind::Double},
      {"obstacle.tol_mass", "1e-6", Kind::Double},
      {"obstacle.max_bisection", "60", Kind::Int},
      {"sweep.kind", "mass", Kind::Choice, "mass,alpha,eps,D"},
      {"sweep.values", "", Kind::List},
      {"sweep.relative", "true", Kind::Bool},
      {"validate.L", "16", Kind::Int},
      {"validate.field_file", "", Kind::String},
  };
  return s;
}

const KeySpec& spec_of(const std::string& key) {
  for (const auto& k : schema())
    if (key == k.key) return k;
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e && std::isfinite(out);
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return out = true, true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return out = false, true;
  return false;
}

void check_value(const KeySpec& k, const std::string& v) {
  double d;
  bool b;
  auto bad = [&](const char* what) {
    return ConfigError("config key '" + std::string(k.key) + "': '" + v + "' is not " + what);
  };
  switch (k.kind) {
    case Kind::Double:
      if (!parse_double(v, d)) throw bad("a finite number");
      break;
    case Kind::Int: {
      int i;
      auto r = std::from_chars(v.data(), v.data() + v.size(), i);
      if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) throw bad("an integer");
      break;
    }
    case Kind::Bool:
      if (!parse_bool(v, b)) throw bad("a boolean");
      break;
    case Kind::DoubleOrInf:
      if (v != "infinite" && v != "inf" && !parse_double(v, d)) throw bad("a number or 'infinite'");
      break;
    case Kind::Volume:
      if (v != "ball" && !parse_double(v, d)) throw bad("a number or 'ball'");
      break;
    case Kind::Choice: {
      std::string list = std::string(",") + k.choices + ",";
      if (v.empty() || list.find("," + v + ",") == std::string::npos)
        throw bad(("one of " + std::string(k.choices)).c_str());
      break;
    }
    case Kind::List: {
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!parse_double(trim(item), d)) throw bad("a comma-separated list of numbers");
      break;
    }
    case Kind::String:
      break;
  }
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> r;
  for (const auto& k : schema()) r.push_back(k.key);
  return r;
}

RunConfig::RunConfig() {
  for (const auto& k : schema()) values_[k.key] = k.def;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c;
  c.merge_text(ss.str(), path);
  return c;
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::stringstream ss(text);
  std::string line;
  int no = 0;
  while (std::getline(ss, line)) {
    ++no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(no) + ": expected 'key = value'");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec& k = spec_of(key);
  check_value(k, value);
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& RunConfig::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = raw(key);
  if (v == "infinite" || v == "inf") return kInfinite;
  if (v == "ball") return 4.0 * std::numbers::pi / 3.0;
  double d;
  if (!parse_double(v, d)) throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  return d;
}

int RunConfig::get_int(const std::string& key) const { return std::stoi(raw(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  bool b = false;
  parse_bool(raw(key), b);
  return b;
}

std::vector<double> RunConfig::get_list(const std::string& key) const {
  std::vector<double> r;
  std::stringstream ss(raw(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    double d;
    item = trim(item);
    if (!parse_double(item, d)) throw ConfigError("config key '" + key + "': bad list entry '" + item + "'");
    r.push_back(d);
  }
  return r;
}

ModelParams RunConfig::model() const {
  ModelParams p;
  p.a1 = get_double("model.a1");
  p.a2 = get_double("model.a2");
  p.a3 = get_double("model.a3");
  p.a4 = get_double("model.a4");
  p.a5 = get_double("model.a5");
  p.a6 = get_double("model.a6");
  p.D = get_double("model.D");
  p.eps = get_double("model.eps");
  p.mass = get_double("model.mass");
  p.bulk_volume = get_double("model.bulk_volume");
  return p;
}

void RunConfig::validate() const {
  try {
    model().validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  int L = get_int("grid.L");
  if (L < 4 || L > 96) throw ConfigError("config key 'grid.L': must lie in [4, 96]");
  if (get_int("validate.L") < 4 || get_int("validate.L") > 64)
    throw ConfigError("config key 'validate.L': must lie in [4, 64]");
  if (get_int("bulk.nr") < 4) throw ConfigError("config key 'bulk.nr': must be >= 4");
  if (get_int("steady.relax_nr") < 4) throw ConfigError("config key 'steady.relax_nr': must be >= 4");
  auto positive = [&](const char* key) {
    if (!(get_double(key) > 0)) throw ConfigError(std::string("config key '") + key + "': must be > 0");
  };
  for (const char* k : {"dynamics.dt", "dynamics.dt_min", "dynamics.dt_max", "dynamics.tol_neg",
                        "dynamics.mass_step_tol", "dynamics.tol_ss", "steady.tol", "obstacle.tol_kkt",
                        "obstacle.tol_mass", "signal.a7"})
    positive(k);
  if (get_double("dynamics.T") < 0) throw ConfigError("config key 'dynamics.T': must be >= 0");
  if (get_double("dynamics.dt_min") > get_double("dynamics.dt_max"))
    throw ConfigError("config key 'dynamics.dt_min': exceeds dynamics.dt_max");
  if (get_double("dynamics.perturbation") < 0)
    throw ConfigError("config key 'dynamics.perturbation': must be >= 0");
  const std::string type = raw("signal.type");
  if (type == "constant") positive("signal.c");
  if (type == "axisymmetric") {
    double g0 = get_double("signal.g0"), g1 = get_double("signal.g1");
    if (!(g0 - std::abs(g1) > 0 && g0 + std::abs(g1) < 1))
      throw ConfigError("config key 'signal.g1': g0 +- g1 must stay in (0, 1)");
  }
  if (type == "manufactured") {
    double k = get_double("signal.kappa"), a = get_double("signal.alpha_star");
    if (!(k >= 0 && 8 * k < 1 && a > 0 && (1 + 8 * k) / (1 + a) < 1))
      throw ConfigError("config key 'signal.kappa': manufactured g must stay in (0, 1)");
  }
  if (type == "file" && raw("signal.file").empty())
    throw ConfigError("config key 'signal.file': required for signal.type = file");
  for (const char* k : {"obstacle.ell", "obstacle.alpha", "obstacle.mass"}) {
    const std::string& v = raw(k);
    double d;
    if (!v.empty() && v != "model" && !parse_double(v, d))
      throw ConfigError(std::string("config key '") + k + "': '" + v + "' is not a number");
  }
  for (const char* k : {"dynamics.u0", "dynamics.v0"}) {
    const std::string& v = raw(k);
    double d;
    if (!v.empty() && (!parse_double(v, d) || d < 0))
      throw ConfigError(std::string("config key '") + k + "': must be a number >= 0");
  }
}

std::string RunConfig::canonical() const {
  std::string s;
  for (const auto& [k, v] : values_) s += k + " = " + v + "\n";
  return s;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SignalField make_signal(const RunConfig& cfg, GridPtr grid) {
  const double a5 = cfg.get_double("model.a5");
  const std::string type = cfg.raw("signal.type");
  if (type == "constant") return signal_constant_c(grid, cfg.get_double("signal.c") * cfg.get_double("signal.a7"), a5);
  if (type == "axisymmetric")
    return signal_axisymmetric(grid, cfg.get_double("signal.g0"), cfg.get_double("signal.g1"), a5);
  if (type == "manufactured")
    return signal_manufactured(grid, cfg.get_double("signal.kappa"), a5, cfg.get_double("signal.alpha_star"));
  SurfaceField c = read_psf1(cfg.raw("signal.file"));
  if (c.L() != grid->L()) {
    std::vector<double> coeffs(grid->ncoeff(), 0.0);
    int L = std::min(c.L(), grid->L());
    for (int l = 0; l <= L; ++l)
      for (int m = -l; m <= l; ++m) coeffs[sh_index(l, m)] = c.coeff(l, m);
    c = SurfaceField::from_coeffs(grid, std::move(coeffs));
  } else {
    c = SurfaceField::from_coeffs(grid, c.coeffs());
  }
  return signal_from_c(c, a5, cfg.get_double("signal.a7"));
}

}  // namespace cellpol
