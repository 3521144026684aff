#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "nsfd/errors.hpp"

namespace nsfd {

struct MittagLefflerParams {
  double alpha = 1.0;  ///< > 0
  double beta = 1.0;
  double tolerance = 1e-16;
  std::size_t max_terms = 2000;
};

namespace detail {

// 1/Gamma(x), zero at the poles x = 0, -1, -2, ...
inline double reciprocal_gamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) return 0.0;
  if (x < 1.0) return 1.0 / std::tgamma(x);
  return std::exp(-std::lgamma(x));
}

}  // namespace detail

/**
 * Two-parameter Mittag-Leffler function E_{a,b}(z) = sum_j z^j / Gamma(a j + b)
 * for real z, by direct summation of the power series.
 *
 * Summation stops once the next term is smaller than `tolerance` in
 * magnitude. Terms are formed as exp(j log|z| - lgamma(a j + b)) so large
 * j does not overflow Gamma. Intended for moderate |z| (say <= 20); for
 * large negative z the alternating series loses accuracy to cancellation.
 */
inline double mittag_leffler(const MittagLefflerParams& p, double z) {
  if (!(p.alpha > 0.0)) throw std::invalid_argument("mittag_leffler: alpha must be positive");
  if (!(p.tolerance > 0.0)) throw std::invalid_argument("mittag_leffler: tolerance must be positive");
  if (p.max_terms == 0) throw std::invalid_argument("mittag_leffler: max_terms must be positive");

  const double log_abs_z = z == 0.0 ? 0.0 : std::log(std::abs(z));
  auto term = [&](std::size_t j) {
    const double x = p.alpha * static_cast<double>(j) + p.beta;
    if (j == 0) return detail::reciprocal_gamma(x);
    if (z == 0.0) return 0.0;
    double mag;
    if (x <= 0.0 || x < 1.0) {
      mag = std::pow(std::abs(z), static_cast<double>(j)) * detail::reciprocal_gamma(x);
    } else {
      mag = std::exp(static_cast<double>(j) * log_abs_z - std::lgamma(x));
    }
    return (z < 0.0 && (j % 2 == 1)) ? -mag : mag;
  };

  double sum = 0.0;
  double comp = 0.0;  // Kahan compensation
  for (std::size_t j = 0; j < p.max_terms; ++j) {
    const double t = term(j);
    const double y = t - comp;
    const double s = sum + y;
    comp = (s - sum) - y;
    sum = s;
    // Below a pole of Gamma a single term can vanish while later ones do not.
    const bool past_poles = z == 0.0 || p.alpha * static_cast<double>(j + 1) + p.beta > 1.0;
    if (past_poles && std::abs(term(j + 1)) < p.tolerance) return sum;
  }
  throw SeriesNotConvergedError(p.max_terms);
}

}  // namespace nsfd
