#pragma once

#include <map>
#include <string>
#include <vector>

#include "cellpol/model.hpp"

namespace cellpol {

// Flat dotted-key configuration.  Every key has a default; unknown keys and
// malformed values are rejected by name.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::string& path);
  // key = value lines, '#' comments
  void merge_text(const std::string& text, const std::string& origin);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  const std::string& raw(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const { return raw(key); }
  std::vector<double> get_list(const std::string& key) const;
  bool is_set(const std::string& key) const { return !raw(key).empty(); }

  // parameter-level checks after parsing
  void validate() const;

  const std::map<std::string, std::string>& values() const { return values_; }
  // sorted "key = value" lines
  std::string canonical() const;
  // FNV-1a 64 of canonical(), hex
  std::string hash() const;

  ModelParams model() const;

 private:
  std::map<std::string, std::string> values_;
};

// Signal on the given grid built from signal.* keys (a5 from model.a5).
SignalField make_signal(const RunConfig& cfg, GridPtr grid);

std::vector<std::string> config_keys();

}  // namespace cellpol
