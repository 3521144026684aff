#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nsfd {

/**
 * Order alpha of a Caputo derivative, restricted to the open interval (0, 1).
 *
 * Gamma(2 - alpha) enters every scheme coefficient, so it is cached here.
 */
class FractionalOrder {
public:
  explicit FractionalOrder(double alpha) : alpha_(alpha) {
    if (!std::isfinite(alpha) || alpha <= 0.0 || alpha >= 1.0) {
      std::ostringstream os;
      os << "fractional order must lie in (0, 1), got " << alpha;
      throw std::invalid_argument(os.str());
    }
    gamma_2ma_ = std::tgamma(2.0 - alpha);
  }

  double value() const noexcept { return alpha_; }
  /// Gamma(2 - alpha).
  double gamma_two_minus() const noexcept { return gamma_2ma_; }

  friend bool operator==(const FractionalOrder& a, const FractionalOrder& b) noexcept {
    return a.alpha_ == b.alpha_;
  }

private:
  double alpha_;
  double gamma_2ma_;
};

}  // namespace nsfd
