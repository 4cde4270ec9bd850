#ifndef MISTORE_ERROR_HPP
#define MISTORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mistore {

/// Broad failure class. The C API and the CLI map these onto status and
/// exit codes.
enum class ErrorKind {
  InvalidArgument,  ///< caller passed something outside the contract
  Data,             ///< input data unusable (too short, degenerate, ...)
  Numerical,        ///< unstable model or a solver that did not converge
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_invalid(const std::string& message);
[[noreturn]] void throw_data(const std::string& message);
[[noreturn]] void throw_numerical(const std::string& message);

}  // namespace mistore

#endif  // MISTORE_ERROR_HPP
