#pragma once

#include <string>
#include <vector>

#include "cellpol/config.hpp"

namespace cellpol {

struct ValidationCheck {
  std::string name;
  std::string anchor;  // the statement being checked
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

// Invariant suite at resolution validate.L.  Scratch files go to work_dir.
std::vector<ValidationCheck> run_validation(const RunConfig& cfg, const std::string& work_dir);

}  // namespace cellpol
