#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsfd/fractional_order.hpp"

namespace nsfd {

/**
 * L1 weights b_k = k^(1-alpha) - (k-1)^(1-alpha), k = 1..n_max.
 *
 * Accessors are 1-based to match the usual indexing of the weights. The
 * first differences c_k = b_k - b_{k+1} (k = 1..n_max-1) are cached since
 * every explicit scheme consumes them as its memory kernel.
 */
class WeightTable {
public:
  WeightTable(FractionalOrder alpha, std::size_t n_max) : alpha_(alpha) {
    if (n_max < 1) throw std::invalid_argument("l1_weights: n_max must be >= 1");
    const double p = 1.0 - alpha.value();
    b_.resize(n_max);
    b_[0] = 1.0;
    for (std::size_t k = 2; k <= n_max; ++k) {
      const double km1 = static_cast<double>(k - 1);
      if (k > kCancellationCutoff) {
        // (k-1)^p * ((k/(k-1))^p - 1) avoids subtracting two nearly equal powers.
        b_[k - 1] = std::pow(km1, p) * std::expm1(p * std::log1p(1.0 / km1));
      } else {
        b_[k - 1] = std::pow(static_cast<double>(k), p) - std::pow(km1, p);
      }
    }
    diff_.resize(n_max);  // diff_[0] unused so diff_[k] = c_k
    diff_[0] = 0.0;
    for (std::size_t k = 1; k < n_max; ++k) diff_[k] = b_[k - 1] - b_[k];
  }

  FractionalOrder alpha() const noexcept { return alpha_; }
  std::size_t size() const noexcept { return b_.size(); }

  /// b_k, 1 <= k <= size().
  double b(std::size_t k) const {
    if (k < 1 || k > b_.size()) throw std::out_of_range("WeightTable::b: index out of range");
    return b_[k - 1];
  }

  /// c_k = b_k - b_{k+1}, 1 <= k < size().
  double difference(std::size_t k) const {
    if (k < 1 || k >= b_.size()) throw std::out_of_range("WeightTable::difference: index out of range");
    return diff_[k];
  }

  /// Zero-based view of b_1..b_n_max.
  std::span<const double> values() const noexcept { return b_; }

  /// View with element k equal to c_k (element 0 is a zero pad).
  std::span<const double> differences() const noexcept { return diff_; }

  static constexpr std::size_t kCancellationCutoff = 1000;

private:
  FractionalOrder alpha_;
  std::vector<double> b_;
  std::vector<double> diff_;
};

inline WeightTable l1_weights(FractionalOrder alpha, std::size_t n_max) {
  return WeightTable(alpha, n_max);
}

}  // namespace nsfd
