#pragma once

#include <stdexcept>
#include <string>

namespace cellpol {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// non-finite inputs, vanishing denominators, invalid fields
struct DomainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// internal identities that must hold to roundoff
struct ConsistencyError : Error {
  using Error::Error;
};

}  // namespace cellpol
