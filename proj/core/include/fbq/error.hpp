#pragma once

#include <stdexcept>
#include <string>

namespace fbq {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A design or root-finding problem has no admissible solution.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace fbq
