#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace obsadj {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode : int {
  invalid_argument = 1,
  dimension_mismatch = 2,
  not_converged = 3,
  separable_data = 4,
  kkt_violation = 5,
  unsupported = 6,
  singular = 7,
  degenerate = 8,
  missing_truth = 9,
  io = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when a KKT certificate fails; carries the worst residual.
class KktViolation : public Error {
 public:
  KktViolation(double residual, const std::string& what)
      : Error(ErrorCode::kkt_violation, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace obsadj
