#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsfd/caputo_l1.hpp"
#include "nsfd/csv.hpp"
#include "nsfd/denominator.hpp"
#include "nsfd/errors.hpp"
#include "nsfd/fractional_order.hpp"
#include "nsfd/weights.hpp"

namespace nsfd::ivp {

/// Scalar Caputo initial-value problem  D^a y = f(t),  y(0) = y0  on [0, T].
struct IvpProblem {
  IvpProblem(double y0_, std::function<double(double)> forcing_,
             std::optional<std::function<double(double)>> exact_, double horizon_ = 1.0)
      : y0(y0_), forcing(std::move(forcing_)), exact(std::move(exact_)), horizon(horizon_) {
    if (!forcing) throw std::invalid_argument("IvpProblem: forcing is required");
    if (exact && std::abs((*exact)(0.0) - y0) > 1e-14)
      throw std::invalid_argument("IvpProblem: exact(0) must equal y0");
  }

  double y0;
  std::function<double(double)> forcing;
  std::optional<std::function<double(double)>> exact;
  double horizon;
};

struct IvpSolution {
  TimeGrid grid;
  std::vector<double> y;  ///< y[0..N]
};

/**
 * Explicit NSL1 stepping
 *
 *   y^n = b_n y^0 + sum_{j=1}^{n-1} (b_j - b_{j+1}) y^{n-j} + varphi(tau) Gamma(2-a) f(t_n).
 *
 * The forcing is taken at the new level t_n. (The diffusion schemes in
 * tfde.hpp lag it to t_{n-1}.)
 */
inline IvpSolution solve_ivp(const IvpProblem& p, FractionalOrder alpha, std::size_t N,
                             const DenominatorSpec& phi_eff) {
  if (phi_eff.kind() != DfKind::temporal_effective)
    throw std::invalid_argument("solve_ivp: expected an effective temporal DF");
  const TimeGrid grid(p.horizon, N);
  const auto weights = l1_weights(alpha, N + 1);
  const auto b = weights.values();
  const auto c = weights.differences();
  const double scale = phi_eff(grid.tau()) * alpha.gamma_two_minus();

  std::vector<double> y(N + 1);
  y[0] = p.y0;
  for (std::size_t n = 1; n <= N; ++n) {
    double s = b[n - 1] * p.y0;
    for (std::size_t j = 1; j < n; ++j) s += c[j] * y[n - j];
    y[n] = s + scale * p.forcing(grid.node(n));
    if (!std::isfinite(y[n])) throw DivergenceError(n);
  }
  return {grid, std::move(y)};
}

enum class Example { ex1, ex2 };

inline std::string to_string(Example e) { return e == Example::ex1 ? "ex1" : "ex2"; }

/**
 * Manufactured problems on [0, 1]:
 *   ex1: y0 = 0, f = t^2 Gamma(3+a)/2,        y = t^(2+a)
 *   ex2: y0 = 1, f = 2 t^(2-a) / Gamma(3-a),  y = t^2 + 1
 */
inline IvpProblem example_problem(Example id, FractionalOrder alpha) {
  const double a = alpha.value();
  if (id == Example::ex1) {
    const double g = std::tgamma(3.0 + a) / 2.0;
    return IvpProblem(0.0, [g](double t) { return t * t * g; },
                      [a](double t) { return std::pow(t, 2.0 + a); });
  }
  const double g = 2.0 / std::tgamma(3.0 - a);
  return IvpProblem(1.0, [g, a](double t) { return g * std::pow(t, 2.0 - a); },
                    [](double t) { return t * t + 1.0; });
}

struct ErrorRow {
  double alpha = 0.0;
  std::size_t N = 0;
  std::string df;                ///< canonical text of the temporal base DF
  double e_inf = 0.0;            ///< |y(T) - y^N|
  std::optional<double> rate;    ///< log2(E(N/2) / E(N)), empty for the first N of a series
};

/// IVP convergence table, rows grouped by (alpha, df) with N ascending.
struct ErrorTable {
  std::vector<ErrorRow> rows;

  csv::Table to_csv() const {
    csv::Table t{{"alpha", "N", "df", "E_inf", "rate"}, {}};
    for (const auto& r : rows)
      t.rows.push_back({csv::exact(r.alpha), std::to_string(r.N), r.df, csv::sci(r.e_inf),
                        csv::opt_fixed4(r.rate)});
    return t;
  }
};

inline std::optional<double> dyadic_rate(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0)) return std::nullopt;
  return std::log2(coarse / fine);
}

/**
 * E_inf at T = 1 and dyadic rate for every (alpha, phi, N) cell. Each base
 * phi is reduced to varphi with `mode` (ratio by default).
 */
inline ErrorTable ivp_error_table(Example example, std::span<const double> alphas,
                                  std::span<const std::size_t> n_list,
                                  std::span<const DenominatorSpec> phi_bases,
                                  EffectiveMode mode = EffectiveMode::ratio) {
  ErrorTable table;
  for (double a : alphas) {
    const FractionalOrder alpha(a);
    const auto problem = example_problem(example, alpha);
    if (!problem.exact) throw std::invalid_argument("ivp_error_table: problem has no exact solution");
    for (const auto& base : phi_bases) {
      const auto phi_eff = effective_temporal_df(base, alpha, mode);
      std::optional<std::pair<std::size_t, double>> prev;
      for (std::size_t N : n_list) {
        const auto sol = solve_ivp(problem, alpha, N, phi_eff);
        ErrorRow row;
        row.alpha = a;
        row.N = N;
        row.df = base.text();
        row.e_inf = std::abs((*problem.exact)(problem.horizon) - sol.y.back());
        if (prev && prev->first * 2 == N) row.rate = dyadic_rate(prev->second, row.e_inf);
        prev = std::pair{N, row.e_inf};
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

}  // namespace nsfd::ivp
