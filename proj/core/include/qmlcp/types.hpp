#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qmlcp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter vector of the wrong dimension or with non-finite entries.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Parameter outside the admissible domain (box, variance floor or
// stationarity region).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Inconsistent user configuration (family, penalty, grid, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Information matrix too ill-conditioned to invert.
class DegenerateInformation : public Error {
 public:
  using Error::Error;
};

}  // namespace qmlcp
