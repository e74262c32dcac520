#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fwlb {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration or argument is outside its documented range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A state left the domain on which a map is defined (beyond the boundary slack).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The iterate reached the target (x = p within the context threshold).
class Termination : public Error {
 public:
  using Error::Error;
};

/// x and v coincide, so the short step ratio is undefined.
class DegenerateDirection : public Error {
 public:
  using Error::Error;
};

/// Starting point outside the feasible set.
class InfeasibleStart : public Error {
 public:
  using Error::Error;
};

/// The backward construction exited its domain; usually means the precision ran out.
class ConstructionError : public DomainError {
 public:
  ConstructionError(std::size_t step, const std::string& what)
      : DomainError("backward step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace fwlb
