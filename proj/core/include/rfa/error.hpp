#pragma once

#include <stdexcept>
#include <string>

namespace rfa {

/// Broad failure classes; callers map these onto exit codes and HTTP statuses.
enum class ErrorKind {
  kInvalidArgument,  // precondition / validation failure
  kSolver,           // numerical failure (stalled solve, divergence)
  kFormat,           // malformed container or manifest
  kNotFound,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string stage = {})
      : std::runtime_error(stage.empty() ? message : stage + ": " + message),
        kind_(kind),
        message_(message),
        stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The untagged message, e.g. "empty tumor".
  const std::string& message() const noexcept { return message_; }
  /// Pipeline stage that raised the error, empty outside the simulator.
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const { return Error(kind_, message_, std::move(stage)); }

 private:
  ErrorKind kind_;
  std::string message_;
  std::string stage_;
};

inline Error invalid_argument(const std::string& message) {
  return Error(ErrorKind::kInvalidArgument, message);
}

/// Conjugate gradient failed to reach its tolerance.
class SolverStalled : public Error {
 public:
  SolverStalled(double residual, int iterations)
      : Error(ErrorKind::kSolver, "solver stalled (residual " + std::to_string(residual) + " after " +
                                      std::to_string(iterations) + " iterations)"),
        residual_(residual),
        iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace rfa
