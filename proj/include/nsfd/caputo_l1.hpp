#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsfd/denominator.hpp"
#include "nsfd/fractional_order.hpp"
#include "nsfd/weights.hpp"

namespace nsfd {

/// Uniform mesh t_n = n * tau on [0, T], tau = T / N.
class TimeGrid {
public:
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("TimeGrid: T must be positive");
    if (steps < 1) throw std::invalid_argument("TimeGrid: N must be >= 1");
    tau_ = horizon / static_cast<double>(steps);
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  double tau() const noexcept { return tau_; }
  /// t_n, computed multiplicatively so no rounding accumulates along the mesh.
  double node(std::size_t n) const noexcept { return static_cast<double>(n) * tau_; }

private:
  double horizon_;
  std::size_t steps_;
  double tau_;
};

/// Samples y[0..N] of a function on a TimeGrid.
struct SampledFunction {
  SampledFunction(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.steps() + 1)
      throw std::invalid_argument("SampledFunction: expected N+1 values");
  }

  static SampledFunction sample(TimeGrid g, const std::function<double(double)>& fn) {
    std::vector<double> v(g.steps() + 1);
    for (std::size_t n = 0; n <= g.steps(); ++n) v[n] = fn(g.node(n));
    return SampledFunction(g, std::move(v));
  }

  TimeGrid grid;
  std::vector<double> values;
};

namespace detail {

/// Running sum with optional Kahan compensation.
class Accumulator {
public:
  explicit Accumulator(bool compensated) : compensated_(compensated) {}

  void add(double x) noexcept {
    if (!compensated_) {
      sum_ += x;
      return;
    }
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }

  double value() const noexcept { return sum_; }

private:
  bool compensated_;
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline constexpr std::size_t kCompensateAbove = 10000;

}  // namespace detail

/**
 * Nonstandard L1 approximation of the Caputo derivative at t_n:
 *
 *   (1 / (varphi(tau) Gamma(2-a))) [ b_1 y_n + sum_{k=1}^{n-1} (b_{k+1} - b_k) y_{n-k} - b_n y_0 ]
 *
 * `weights` must cover at least n entries. The history sum runs in
 * increasing k and switches to compensated summation beyond 10^4 terms.
 */
inline double nsl1_apply(const SampledFunction& y, const WeightTable& weights,
                         const DenominatorSpec& phi_eff, std::size_t n) {
  if (n < 1 || n > y.grid.steps()) throw std::out_of_range("nsl1_apply: n must lie in 1..N");
  if (weights.size() < n) throw std::invalid_argument("nsl1_apply: weight table too short");
  if (phi_eff.kind() != DfKind::temporal_effective)
    throw std::invalid_argument("nsl1_apply: expected an effective temporal DF");

  const auto& v = y.values;
  const auto b = weights.values();
  detail::Accumulator acc(n > detail::kCompensateAbove);
  acc.add(b[0] * v[n]);
  for (std::size_t k = 1; k < n; ++k) acc.add((b[k] - b[k - 1]) * v[n - k]);
  acc.add(-b[n - 1] * v[0]);
  return acc.value() / (phi_eff(y.grid.tau()) * weights.alpha().gamma_two_minus());
}

inline double nsl1_apply(const SampledFunction& y, FractionalOrder alpha,
                         const DenominatorSpec& phi_eff, std::size_t n) {
  return nsl1_apply(y, l1_weights(alpha, std::max<std::size_t>(n, 1)), phi_eff, n);
}

struct TruncationRow {
  std::size_t N = 0;
  double defect = 0.0;
  std::optional<double> observed_order;  ///< log2(defect(N/2) / defect(N)); empty for the first row
  bool exact = false;                    ///< defect is exactly zero
};

/**
 * Measures |D^a y(T) - NSL1 y(t_N)| on successively doubled meshes and the
 * observed order between consecutive rows. For y in C^2 the order tends to 2 - a.
 */
inline std::vector<TruncationRow> truncation_order_scan(const std::function<double(double)>& exact_fn,
                                                        double exact_caputo_at_T, FractionalOrder alpha,
                                                        const DenominatorSpec& phi_eff,
                                                        std::span<const std::size_t> n_list, double horizon = 1.0) {
  if (n_list.size() < 3) throw std::invalid_argument("truncation_order_scan: need at least 3 mesh sizes");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] != 2 * n_list[i - 1])
      throw std::invalid_argument("truncation_order_scan: mesh sizes must double");

  const auto weights = l1_weights(alpha, n_list.back());
  std::vector<TruncationRow> rows;
  for (std::size_t N : n_list) {
    // Effective DFs depend on tau, so each mesh gets its own evaluation.
    const TimeGrid grid(horizon, N);
    const auto y = SampledFunction::sample(grid, exact_fn);
    TruncationRow row;
    row.N = N;
    row.defect = std::abs(exact_caputo_at_T - nsl1_apply(y, weights, phi_eff, N));
    row.exact = row.defect == 0.0;
    if (!rows.empty() && !row.exact && !rows.back().exact)
      row.observed_order = std::log2(rows.back().defect / row.defect);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace nsfd
