#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stogeo {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input lies on a degenerate set (zero vector, r = 0, antipodal projection...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition (bad id, off-circle point...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure (root finder, consistency check) did not succeed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InfeasibleTimeError : public Error {
 public:
  InfeasibleTimeError(const std::string& what, double min_time)
      : Error(what), min_time_(min_time) {}
  double min_time() const { return min_time_; }

 private:
  double min_time_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Fixed-point inner solver of the implicit step failed to contract.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(std::int64_t step, double residual, int iterations,
                      std::int64_t path_id = -1);

  std::int64_t step() const { return step_; }
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }
  std::int64_t path_id() const { return path_id_; }

  // Same failure, re-tagged with the ensemble path that produced it.
  NonConvergenceError with_path(std::int64_t path_id) const {
    return NonConvergenceError(step_, residual_, iterations_, path_id);
  }

 private:
  std::int64_t step_;
  double residual_;
  int iterations_;
  std::int64_t path_id_;
};

}  // namespace stogeo
