#include "mistore/error.hpp"

namespace mistore {

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

void throw_invalid(const std::string& message) {
  throw Error(ErrorKind::InvalidArgument, message);
}

void throw_data(const std::string& message) {
  throw Error(ErrorKind::Data, message);
}

void throw_numerical(const std::string& message) {
  throw Error(ErrorKind::Numerical, message);
}

}  // namespace mistore
