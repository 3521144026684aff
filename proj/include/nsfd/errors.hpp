#pragma once

#include <complex>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nsfd {

/// Raised when a lookup or parse names a denominator function outside the registry.
class UnknownDenominatorError : public std::invalid_argument {
public:
  explicit UnknownDenominatorError(const std::string& tag)
      : std::invalid_argument("unknown denominator function: '" + tag + "'"), tag_(tag) {}

  const std::string& tag() const noexcept { return tag_; }

private:
  std::string tag_;
};

/// A time stepper produced a non-finite (or runaway) value.
class DivergenceError : public std::runtime_error {
public:
  explicit DivergenceError(std::size_t step)
      : std::runtime_error("solution diverged at step " + std::to_string(step)), step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

class SeriesNotConvergedError : public std::runtime_error {
public:
  explicit SeriesNotConvergedError(std::size_t terms)
      : std::runtime_error("series not converged after " + std::to_string(terms) + " terms") {}
};

class StabilityViolationError : public std::runtime_error {
public:
  StabilityViolationError(double lhs, double threshold)
      : std::runtime_error(message(lhs, threshold)) {}

private:
  static std::string message(double lhs, double threshold) {
    std::ostringstream os;
    os << "stability condition violated: " << lhs << " > " << threshold;
    return os.str();
  }
};

class RootFinderError : public std::runtime_error {
public:
  RootFinderError(const std::string& what, std::size_t degree, std::complex<double> tau_hat)
      : std::runtime_error(message(what, degree, tau_hat)) {}

private:
  static std::string message(const std::string& what, std::size_t degree,
                             std::complex<double> tau_hat) {
    std::ostringstream os;
    os << what << " (n=" << degree << ", tau_hat=" << tau_hat.real();
    if (tau_hat.imag() != 0.0) os << (tau_hat.imag() < 0 ? "-" : "+") << std::abs(tau_hat.imag()) << "i";
    os << ")";
    return os.str();
  }
};

}  // namespace nsfd
