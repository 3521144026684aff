#pragma once

// Property checks shared by the unit tests and the acceptance runner. Each
// returns whether the property held plus a one-line description of the worst
// case seen.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "nsfd/nsfd.hpp"
#include "oracles.hpp"

namespace props {

struct Check {
  bool ok = true;
  std::string detail;
};

inline std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

inline Check weight_invariants() {
  double worst_sum = 0.0;
  for (int i = 1; i <= 9; ++i) {
    const nsfd::FractionalOrder alpha(0.1 * i);
    const auto w = nsfd::l1_weights(alpha, 10000);
    if (w.b(1) != 1.0) return {false, "b_1 != 1"};
    for (std::size_t k = 1; k <= w.size(); ++k) {
      if (!(w.b(k) > 0.0)) return {false, fmt("b_k not positive at alpha=%.1f, k=%g", alpha.value(), double(k))};
      if (k > 1 && !(w.b(k) < w.b(k - 1))) return {false, fmt("b_k not decreasing at alpha=%.1f, k=%g", alpha.value(), double(k))};
    }
    for (std::size_t n : {2u, 320u, 1000u, 1001u, 10000u}) {
      double s = w.b(n);
      for (std::size_t j = 1; j < n; ++j) s += w.difference(j);
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
    }
  }
  return {worst_sum <= 1e-12, fmt("max |telescoping sum - 1| = %.3e", worst_sum)};
}

inline Check constant_annihilation() {
  double worst = 0.0;
  for (double a : {0.1, 0.5, 0.9}) {
    const nsfd::FractionalOrder alpha(a);
    const auto phi = nsfd::effective_temporal_df(nsfd::DenominatorSpec::make(nsfd::DfForm::sinh), alpha,
                                                 nsfd::EffectiveMode::ratio);
    const nsfd::TimeGrid g(1.0, 500);
    const auto y = nsfd::SampledFunction::sample(g, [](double) { return 3.7; });
    const auto w = nsfd::l1_weights(alpha, 500);
    for (std::size_t n : {1u, 2u, 77u, 500u})
      worst = std::max(worst, std::abs(nsfd::nsl1_apply(y, w, phi, n)) * phi(g.tau()));
  }
  return {worst <= 1e-12, fmt("max |NSL1 const| * varphi = %.3e", worst)};
}

inline Check linearity() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  const nsfd::FractionalOrder alpha(0.4);
  const auto phi = nsfd::effective_temporal_df(nsfd::DenominatorSpec::make(nsfd::DfForm::sin), alpha,
                                               nsfd::EffectiveMode::ratio);
  const nsfd::TimeGrid g(1.0, 200);
  const auto w = nsfd::l1_weights(alpha, 200);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> y(201), z(201), c(201);
    const double a = U(rng), b = U(rng);
    for (std::size_t i = 0; i <= 200; ++i) {
      y[i] = U(rng);
      z[i] = U(rng);
      c[i] = a * y[i] + b * z[i];
    }
    const nsfd::SampledFunction Y(g, y), Z(g, z), C(g, c);
    for (std::size_t n : {1u, 50u, 200u}) {
      const double lhs = nsfd::nsl1_apply(C, w, phi, n);
      const double rhs = a * nsfd::nsl1_apply(Y, w, phi, n) + b * nsfd::nsl1_apply(Z, w, phi, n);
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
  }
  return {worst <= 1e-12, fmt("max relative linearity defect = %.3e", worst)};
}

inline Check standard_l1_equivalence() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  for (double a : {0.2, 0.5, 0.8}) {
    const nsfd::FractionalOrder alpha(a);
    const auto phi = nsfd::DenominatorSpec::standard_effective(alpha);
    const nsfd::TimeGrid g(1.0, 128);
    std::vector<double> y(129);
    for (auto& v : y) v = U(rng);
    const nsfd::SampledFunction Y(g, y);
    const auto w = nsfd::l1_weights(alpha, 128);
    for (std::size_t n = 1; n <= 128; ++n) {
      const double mine = nsfd::nsl1_apply(Y, w, phi, n);
      const double ref = oracle::caputo_l1(y, g.tau(), a, n);
      worst = std::max(worst, std::abs(mine - ref) / std::max(1.0, std::abs(ref)));
    }
  }
  return {worst <= 1e-12, fmt("max relative deviation from integral-form L1 = %.3e", worst)};
}

/// 2 mu + (1 - 2 mu - b_2) + sum_{k=2}^{n-1} (b_k - b_{k+1}) + b_n = 1.
inline Check row_sum_identity() {
  double worst = 0.0;
  for (double a : {0.1, 0.5, 0.9}) {
    const nsfd::FractionalOrder alpha(a);
    const auto w = nsfd::l1_weights(alpha, 5001);
    for (double mu : {0.0, 0.1, 0.3}) {
      for (std::size_t n : {2u, 3u, 100u, 5000u}) {
        double s = 2.0 * mu + (1.0 - 2.0 * mu - w.b(2));
        for (std::size_t k = 2; k < n; ++k) s += w.difference(k);
        s += w.b(n);
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
  }
  return {worst <= 1e-12, fmt("max |row sum - 1| = %.3e", worst)};
}

/**
 * Random nonnegative u0 vanishing on the boundary, f = 0, step sizes chosen
 * to satisfy the sufficient condition: max|u^n| <= max|u^0| at every level.
 */
inline Check max_norm_non_growth(int trials = 100) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<nsfd::DenominatorSpec> spatial;
  for (const auto& s : nsfd::df_registry())
    if (s.kind() == nsfd::DfKind::spatial) spatial.push_back(s);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int dim = t % 2 == 0 ? 1 : 2;
    const nsfd::FractionalOrder alpha(0.1 + 0.8 * U(rng));
    const std::size_t M = dim == 1 ? 4 + static_cast<std::size_t>(28 * U(rng)) : 4 + static_cast<std::size_t>(8 * U(rng));
    const std::size_t N = 20 + static_cast<std::size_t>(100 * U(rng));
    const auto& psi = spatial[static_cast<std::size_t>(U(rng) * spatial.size()) % spatial.size()];
    const nsfd::tfde::SpaceGrid grid(dim, 1.0, M);
    // tau^a <= theta * threshold * psi(h) / dim with theta in [0.3, 1).
    const double target = (0.3 + 0.69 * U(rng)) * nsfd::tfde::stability_threshold(alpha) * psi(grid.h()) / dim;
    const double tau = std::pow(target, 1.0 / alpha.value());
    const double T = tau * static_cast<double>(N);

    std::vector<double> u0(grid.node_count());
    for (std::size_t m = 0; m < u0.size(); ++m) u0[m] = grid.is_boundary(m) ? 0.0 : U(rng);
    nsfd::tfde::TfdeProblem p;
    p.dim = dim;
    p.horizon = T;
    p.initial = [&grid, &u0](nsfd::tfde::Point x) {
      const auto i = static_cast<std::size_t>(std::lround(x[0] / grid.h()));
      const auto j = static_cast<std::size_t>(std::lround(x[1] / grid.h()));
      return u0[grid.dim() == 1 ? i : grid.flatten(i, j)];
    };
    p.forcing = [](nsfd::tfde::Point, double) { return 0.0; };
    nsfd::tfde::SchemeConfig cfg{alpha, N, nsfd::DenominatorSpec::standard_effective(alpha), psi, std::nullopt, true, T};
    const auto field = nsfd::tfde::solve(p, cfg, M);
    const double norm0 = *std::max_element(u0.begin(), u0.end());
    for (std::size_t n = 1; n <= N; ++n)
      for (std::size_t m = 0; m < grid.node_count(); ++m)
        worst = std::max(worst, std::abs(field.at(n, m)) - norm0);
  }
  return {worst <= 1e-13, fmt("max (|u^n| - max|u^0|) over %g trials = %.3e", double(trials), worst)};
}

inline Check symmetry_2d() {
  const nsfd::FractionalOrder alpha(0.9);
  const auto p = nsfd::tfde::example_tfde(nsfd::tfde::Example::ex4, alpha);
  const std::size_t M = 8, N = 2000;
  double worst = 0.0;
  for (auto form : {nsfd::DfForm::h2, nsfd::DfForm::sinh_h2}) {
    nsfd::tfde::SchemeConfig cfg{alpha, N, nsfd::DenominatorSpec::standard_effective(alpha),
                                 nsfd::DenominatorSpec::make(form)};
    const auto f = nsfd::tfde::solve_2d(p, cfg, M);
    const auto& g = f.grid();
    for (std::size_t n = 0; n <= N; ++n)
      for (std::size_t j = 0; j <= M; ++j)
        for (std::size_t i = 0; i < j; ++i)
          worst = std::max(worst, std::abs(f.at(n, g.flatten(i, j)) - f.at(n, g.flatten(j, i))));
  }
  return {worst <= 1e-12, fmt("max |u_ij - u_ji| = %.3e", worst)};
}

inline Check stability_polynomial_at_one() {
  double worst = 0.0;
  for (double a : {0.2, 0.5, 0.8})
    for (std::size_t n : {1u, 2u, 10u, 500u})
      for (double th : {-1.5, -0.5, 0.0, 0.5, 1.5}) {
        const auto p = nsfd::locus::stability_polynomial(nsfd::FractionalOrder(a), n, th);
        worst = std::max(worst, std::abs(p(1.0) - nsfd::locus::Complex(-th)));
      }
  return {worst <= 1e-12, fmt("max |p(1) + tau_hat| = %.3e", worst)};
}

inline Check locus_through_origin() {
  double worst = 0.0;
  for (double a : {0.2, 0.8})
    for (auto v : {nsfd::locus::LocusVariant::as_printed, nsfd::locus::LocusVariant::complex_division}) {
      const auto c = nsfd::locus::boundary_locus(nsfd::FractionalOrder(a), 1000, 64, v);
      worst = std::max({worst, std::abs(c.samples.front().x_hat), std::abs(c.samples.front().y_hat)});
    }
  return {worst <= 1e-12, fmt("max |locus(0)| = %.3e", worst)};
}

/// Every complex-division locus point makes e^{is} a root of p.
inline Check locus_residual() {
  double worst = 0.0;
  for (double a : {0.2, 0.5, 0.8})
    for (std::size_t n : {2u, 17u, 300u}) {
      const nsfd::FractionalOrder alpha(a);
      const auto c = nsfd::locus::boundary_locus(alpha, n, 256, nsfd::locus::LocusVariant::complex_division);
      for (const auto& s : c.samples) {
        const auto p = nsfd::locus::stability_polynomial(alpha, n, {s.x_hat, s.y_hat});
        worst = std::max(worst, std::abs(p(std::polar(1.0, s.s))) / p.l1_norm());
      }
    }
  return {worst <= 1e-10, fmt("max |p(e^is)| / ||p||_1 = %.3e", worst)};
}

inline Check determinism() {
  auto once = [] {
    const nsfd::FractionalOrder alpha(0.7);
    const auto p = nsfd::tfde::example_tfde(nsfd::tfde::Example::ex3, alpha);
    nsfd::tfde::SchemeConfig cfg{alpha, 3000, nsfd::DenominatorSpec::standard_effective(alpha),
                                 nsfd::DenominatorSpec::make(nsfd::DfForm::sin2)};
    const auto f = nsfd::tfde::solve_1d(p, cfg, 8);
    std::string out = nsfd::csv::to_string(f.snapshot_csv(3000));
    const std::vector<double> al{0.3, 0.6};
    const std::vector<std::size_t> Ns{10, 20, 40};
    const std::vector<nsfd::DenominatorSpec> phis{nsfd::DenominatorSpec::make(nsfd::DfForm::sinh)};
    out += nsfd::csv::to_string(nsfd::ivp::ivp_error_table(nsfd::ivp::Example::ex2, al, Ns, phis).to_csv());
    return out;
  };
  const bool same = once() == once();
  return {same, same ? "reruns byte-identical" : "reruns differ"};
}

}  // namespace props
