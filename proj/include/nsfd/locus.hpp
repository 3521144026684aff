#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nsfd/errors.hpp"
#include "nsfd/fractional_order.hpp"
#include "nsfd/weights.hpp"

namespace nsfd::locus {

using Complex = std::complex<double>;

/// Largest degree handed to a root finder.
inline constexpr std::size_t kRootFinderCeiling = 2000;
/// Strict root condition is tested as r_max < 1 - kStabilityMargin.
inline constexpr double kStabilityMargin = 1e-9;

/// d_k = b_k / Gamma(2 - a), k = 1..n (returned zero-based).
inline std::vector<double> scaled_weights(FractionalOrder alpha, std::size_t n) {
  const auto w = l1_weights(alpha, n);
  std::vector<double> d(w.values().begin(), w.values().end());
  for (double& v : d) v /= alpha.gamma_two_minus();
  return d;
}

/**
 * Stability polynomial of the NSL1 scheme applied to D^a y = lambda y, with
 * tau_hat = lambda tau^a and the O(tau) correction dropped:
 *
 *   p(r) = (d_1 - tau_hat) r^n + sum_{j=1}^{n-1} (d_{j+1} - d_j) r^{n-j} - d_n.
 *
 * coeffs[0] multiplies r^n, coeffs[n] is the constant term.
 */
struct StabilityPolynomial {
  FractionalOrder alpha;
  std::size_t degree;
  Complex tau_hat;
  std::vector<Complex> coeffs;

  Complex operator()(Complex r) const {
    Complex acc = 0.0;
    for (const auto& c : coeffs) acc = acc * r + c;
    return acc;
  }

  double l1_norm() const {
    double s = 0.0;
    for (const auto& c : coeffs) s += std::abs(c);
    return s;
  }

  bool is_real() const noexcept { return tau_hat.imag() == 0.0; }
};

inline StabilityPolynomial stability_polynomial(FractionalOrder alpha, std::size_t n, Complex tau_hat) {
  if (n < 1) throw std::invalid_argument("stability_polynomial: degree must be >= 1");
  const auto d = scaled_weights(alpha, n);
  std::vector<Complex> c(n + 1);
  c[0] = d[0] - tau_hat;
  for (std::size_t j = 1; j < n; ++j) c[j] = d[j] - d[j - 1];
  c[n] = -d[n - 1];
  return {alpha, n, tau_hat, std::move(c)};
}

// ---------------------------------------------------------------------------
// Boundary locus

enum class LocusVariant {
  as_printed,       ///< x_hat, y_hat exactly as the closed-form expressions are written
  complex_division, ///< tau_hat(s) = p-equation solved for tau_hat at r = e^{is}
};

struct LocusSample {
  double s;
  double x_hat;
  double y_hat;
};

struct LocusCurve {
  FractionalOrder alpha;
  std::size_t degree;
  LocusVariant variant;
  std::vector<LocusSample> samples;
};

namespace detail {

// sum_{j=1}^{n-1} (d_{j+1} - d_j) e^{-i j s}. The phasor is advanced by
// multiplication and re-seeded from sincos every 256 terms.
inline Complex history_transform(std::span<const double> d, double s) {
  const std::size_t n = d.size();
  const Complex step = std::polar(1.0, -s);
  Complex acc = 0.0;
  Complex phase = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    if ((j & 255u) == 1u) phase = std::polar(1.0, -static_cast<double>(j) * s);
    else phase *= step;
    acc += (d[j] - d[j - 1]) * phase;
  }
  return acc;
}

}  // namespace detail

/**
 * Boundary locus traced at s_k = 2 pi k / num_samples, k = 0..num_samples-1.
 *
 * as_printed evaluates
 *   x_hat(s) = d_1 - d_n cos(ns) + sum_j cos(ns) (d_{j+1} - d_j)
 *   y_hat(s) = d_1 sin(2ns) - d_n sin(ns) + sum_j sin((2n-j)s) (d_{j+1} - d_j)
 * which differs from complex_division (the real and imaginary parts of
 * d_1 + sum_j (d_{j+1} - d_j) e^{-ijs} - d_n e^{-ins}). Only the latter puts
 * a root of p on the unit circle.
 */
inline LocusCurve boundary_locus(FractionalOrder alpha, std::size_t n, std::size_t num_samples,
                                 LocusVariant variant) {
  if (num_samples < 16) throw std::invalid_argument("boundary_locus: need at least 16 samples");
  if (n < 2) throw std::invalid_argument("boundary_locus: degree must be >= 2");
  const auto d = scaled_weights(alpha, n);
  const double d1 = d.front();
  const double dn = d.back();
  const double nn = static_cast<double>(n);

  // sum_{j=1}^{n-1} (d_{j+1} - d_j); telescopes to d_n - d_1 but is summed as written.
  double delta_sum = 0.0;
  for (std::size_t j = 1; j < n; ++j) delta_sum += d[j] - d[j - 1];

  LocusCurve curve{alpha, n, variant, {}};
  curve.samples.reserve(num_samples);
  for (std::size_t k = 0; k < num_samples; ++k) {
    const double s = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(num_samples);
    const Complex h = detail::history_transform(d, s);
    LocusSample sample{s, 0.0, 0.0};
    if (variant == LocusVariant::complex_division) {
      const Complex t = d1 + h - dn * std::polar(1.0, -nn * s);
      sample.x_hat = t.real();
      sample.y_hat = t.imag();
    } else {
      // sum_j sin((2n - j)s) delta_j = Im(e^{2ins} h)
      sample.x_hat = d1 - dn * std::cos(nn * s) + std::cos(nn * s) * delta_sum;
      sample.y_hat = d1 * std::sin(2.0 * nn * s) - dn * std::sin(nn * s) +
                     (std::polar(1.0, 2.0 * nn * s) * h).imag();
    }
    curve.samples.push_back(sample);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Roots

enum class RootBackend { companion, aberth };

namespace detail {

inline void check_ceiling(std::size_t n, Complex tau_hat) {
  if (n > kRootFinderCeiling) throw RootFinderError("root-finder ceiling exceeded", n, tau_hat);
}

// Moduli of the roots via the eigenvalues of the (upper Hessenberg) companion matrix.
inline std::vector<double> companion_root_moduli(const StabilityPolynomial& p) {
  const auto n = static_cast<Eigen::Index>(p.degree);
  const Complex lead = p.coeffs[0];
  if (std::abs(lead) == 0.0) return {std::numeric_limits<double>::infinity()};
  std::vector<double> out;
  out.reserve(p.degree);
  if (p.is_real()) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) h(0, j) = -p.coeffs[j + 1].real() / lead.real();
    for (Eigen::Index i = 1; i < n; ++i) h(i, i - 1) = 1.0;
    Eigen::RealSchur<Eigen::MatrixXd> schur(n);
    schur.computeFromHessenberg(h, Eigen::MatrixXd(), false);
    if (schur.info() != Eigen::Success)
      throw RootFinderError("companion eigenvalue iteration did not converge", p.degree, p.tau_hat);
    const auto& t = schur.matrixT();
    for (Eigen::Index i = 0; i < n;) {
      if (i + 1 < n && t(i + 1, i) != 0.0) {
        // 2x2 block holding a complex-conjugate pair: |lambda|^2 = det.
        const double det = t(i, i) * t(i + 1, i + 1) - t(i, i + 1) * t(i + 1, i);
        const double m = std::sqrt(std::abs(det));
        out.push_back(m);
        out.push_back(m);
        i += 2;
      } else {
        out.push_back(std::abs(t(i, i)));
        i += 1;
      }
    }
  } else {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) h(0, j) = -p.coeffs[j + 1] / lead;
    for (Eigen::Index i = 1; i < n; ++i) h(i, i - 1) = 1.0;
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(n);
    schur.computeFromHessenberg(h, Eigen::MatrixXcd(), false);
    if (schur.info() != Eigen::Success)
      throw RootFinderError("companion eigenvalue iteration did not converge", p.degree, p.tau_hat);
    for (Eigen::Index i = 0; i < n; ++i) out.push_back(std::abs(schur.matrixT()(i, i)));
  }
  return out;
}

}  // namespace detail

/**
 * All roots by Aberth-Ehrlich simultaneous iteration. Slower than the
 * companion route (O(n^2) per sweep) and used as its independent check.
 */
inline std::vector<Complex> aberth_roots(const StabilityPolynomial& p, std::size_t max_iter = 2000) {
  const std::size_t n = p.degree;
  detail::check_ceiling(n, p.tau_hat);
  if (std::abs(p.coeffs[0]) == 0.0) throw RootFinderError("leading coefficient vanishes", n, p.tau_hat);

  // Initial guesses on a circle whose radius is the geometric mean of root moduli.
  const double radius = std::pow(std::abs(p.coeffs[n] / p.coeffs[0]), 1.0 / static_cast<double>(n));
  std::vector<Complex> z(n);
  for (std::size_t k = 0; k < n; ++k)
    z[k] = std::polar(radius, 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.25) / static_cast<double>(n) + 0.4);

  auto eval = [&](Complex x, Complex& dp) {
    Complex v = 0.0;
    dp = 0.0;
    for (const auto& c : p.coeffs) {
      dp = dp * x + v;
      v = v * x + c;
    }
    return v;
  };

  std::vector<bool> done(n, false);
  for (std::size_t it = 0; it < max_iter; ++it) {
    bool all_done = true;
    for (std::size_t k = 0; k < n; ++k) {
      if (done[k]) continue;
      Complex dp;
      const Complex v = eval(z[k], dp);
      if (v == 0.0) {
        done[k] = true;
        continue;
      }
      const Complex ratio = v / dp;
      Complex repulsion = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) repulsion += 1.0 / (z[k] - z[j]);
      const Complex w = ratio / (1.0 - ratio * repulsion);
      z[k] -= w;
      if (std::abs(w) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z[k])))
        done[k] = true;
      else
        all_done = false;
    }
    if (all_done) return z;
  }
  throw RootFinderError("Aberth iteration did not converge", n, p.tau_hat);
}

/// Largest root modulus of the stability polynomial.
inline double rmax(FractionalOrder alpha, std::size_t n, Complex tau_hat,
                   RootBackend backend = RootBackend::companion) {
  detail::check_ceiling(n, tau_hat);
  const auto p = stability_polynomial(alpha, n, tau_hat);
  double best = 0.0;
  if (backend == RootBackend::companion) {
    for (double m : detail::companion_root_moduli(p)) best = std::max(best, m);
  } else {
    for (const auto& r : aberth_roots(p)) best = std::max(best, std::abs(r));
  }
  return best;
}

struct RmaxPoint {
  std::size_t n;
  double r_max;
};

struct RmaxSeries {
  Complex tau_hat;
  std::vector<RmaxPoint> points;

  double max() const {
    double m = 0.0;
    for (const auto& p : points) m = std::max(m, p.r_max);
    return m;
  }
};

/// r_max(n) for every n in `degrees`, one series per tau_hat.
inline std::vector<RmaxSeries> rmax_scan(FractionalOrder alpha, std::span<const std::size_t> degrees,
                                         std::span<const Complex> tau_hats) {
  std::vector<RmaxSeries> out;
  for (const auto& th : tau_hats) {
    RmaxSeries series{th, {}};
    series.points.reserve(degrees.size());
    for (std::size_t n : degrees) series.points.push_back({n, rmax(alpha, n, th)});
    out.push_back(std::move(series));
  }
  return out;
}

/// Every degree 1..n_ceiling.
inline std::vector<RmaxSeries> rmax_scan(FractionalOrder alpha, std::size_t n_ceiling,
                                         std::span<const Complex> tau_hats) {
  detail::check_ceiling(n_ceiling, tau_hats.empty() ? Complex{} : tau_hats.front());
  std::vector<std::size_t> degrees(n_ceiling);
  for (std::size_t i = 0; i < n_ceiling; ++i) degrees[i] = i + 1;
  return rmax_scan(alpha, degrees, tau_hats);
}

enum class Stability { stable, unstable };

inline Stability classify(double r_max) {
  return r_max < 1.0 - kStabilityMargin ? Stability::stable : Stability::unstable;
}

inline Stability classify_point(FractionalOrder alpha, std::size_t n, Complex tau_hat) {
  return classify(rmax(alpha, n, tau_hat));
}

}  // namespace nsfd::locus
