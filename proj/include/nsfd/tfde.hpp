#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nsfd/caputo_l1.hpp"
#include "nsfd/csv.hpp"
#include "nsfd/denominator.hpp"
#include "nsfd/errors.hpp"
#include "nsfd/fractional_order.hpp"
#include "nsfd/weights.hpp"

namespace nsfd::tfde {

using Point = std::array<double, 2>;

/**
 * Uniform grid on [0, L]^dim with M subintervals per axis. In 2D node (i, j)
 * has flat index m = j (M+1) + i.
 */
class SpaceGrid {
public:
  SpaceGrid(int dim, double length, std::size_t subintervals)
      : dim_(dim), length_(length), m_(subintervals) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("SpaceGrid: dim must be 1 or 2");
    if (!(length > 0.0)) throw std::invalid_argument("SpaceGrid: L must be positive");
    if (subintervals < 2) throw std::invalid_argument("SpaceGrid: M must be >= 2");
    h_ = length / static_cast<double>(subintervals);
  }

  int dim() const noexcept { return dim_; }
  double length() const noexcept { return length_; }
  std::size_t subintervals() const noexcept { return m_; }
  double h() const noexcept { return h_; }
  std::size_t points_per_axis() const noexcept { return m_ + 1; }
  std::size_t node_count() const noexcept { return dim_ == 1 ? m_ + 1 : (m_ + 1) * (m_ + 1); }

  double coord(std::size_t i) const noexcept { return static_cast<double>(i) * h_; }

  std::size_t flatten(std::size_t i, std::size_t j) const noexcept { return j * (m_ + 1) + i; }
  std::pair<std::size_t, std::size_t> unflatten(std::size_t m) const noexcept {
    if (dim_ == 1) return {m, 0};
    return {m % (m_ + 1), m / (m_ + 1)};
  }

  Point point(std::size_t m) const noexcept {
    const auto [i, j] = unflatten(m);
    return {coord(i), dim_ == 1 ? 0.0 : coord(j)};
  }

  bool is_boundary(std::size_t m) const noexcept {
    const auto [i, j] = unflatten(m);
    if (i == 0 || i == m_) return true;
    return dim_ == 2 && (j == 0 || j == m_);
  }

private:
  int dim_;
  double length_;
  std::size_t m_;
  double h_;
};

/// D^a u = Laplacian(u) + f on [0, L]^dim x (0, T], u = u0 at t = 0, u = 0 on the boundary.
struct TfdeProblem {
  int dim = 1;
  double length = 1.0;
  double horizon = 1.0;
  std::function<double(Point)> initial;
  std::function<double(Point, double)> forcing;
  std::optional<std::function<double(Point, double)>> exact;

  /// Throws unless u0 vanishes (to 1e-12) on the boundary nodes of `grid`.
  void validate(const SpaceGrid& grid) const {
    if (grid.dim() != dim) throw std::invalid_argument("TfdeProblem: grid dimension mismatch");
    if (!initial || !forcing) throw std::invalid_argument("TfdeProblem: initial and forcing are required");
    for (std::size_t m = 0; m < grid.node_count(); ++m)
      if (grid.is_boundary(m) && std::abs(initial(grid.point(m))) > 1e-12)
        throw std::invalid_argument("TfdeProblem: initial data must vanish on the boundary");
  }
};

struct SchemeConfig {
  FractionalOrder alpha;
  std::size_t N;               ///< time steps
  DenominatorSpec phi_eff;     ///< temporal effective DF
  DenominatorSpec psi;         ///< spatial DF (x direction in 2D)
  std::optional<DenominatorSpec> psi_y = std::nullopt;  ///< 2D y direction; defaults to psi
  bool enforce_stability = false;
  double horizon = 1.0;

  double tau() const { return horizon / static_cast<double>(N); }
  const DenominatorSpec& psi_second() const { return psi_y ? *psi_y : psi; }
};

/// (1 - 2^-a) / Gamma(2 - a): sufficient bound on varphi/psi (1D) or the sum of both ratios (2D).
inline double stability_threshold(FractionalOrder alpha) {
  return -std::expm1(-alpha.value() * std::numbers::ln2) / alpha.gamma_two_minus();
}

struct StabilityReport {
  bool satisfied = false;
  double lhs = 0.0;
  double threshold = 0.0;
};

inline StabilityReport check_stability(const SchemeConfig& config, const SpaceGrid& grid) {
  const double phi = config.phi_eff(config.tau());
  double lhs = phi / config.psi(grid.h());
  if (grid.dim() == 2) lhs += phi / config.psi_second()(grid.h());
  const double thr = stability_threshold(config.alpha);
  return {lhs <= thr, lhs, thr};
}

/**
 * Full time history of a TFDE solve. Storage is node-major: the N+1 levels
 * of one node are contiguous, which is the layout the memory kernel streams.
 */
class SolutionField {
public:
  SolutionField(SpaceGrid grid, TimeGrid time)
      : grid_(grid), time_(time), levels_(time.steps() + 1), data_(grid.node_count() * levels_, 0.0) {}

  const SpaceGrid& grid() const noexcept { return grid_; }
  const TimeGrid& time() const noexcept { return time_; }
  std::size_t levels() const noexcept { return levels_; }

  double at(std::size_t level, std::size_t node) const { return data_[node * levels_ + level]; }
  double& at(std::size_t level, std::size_t node) { return data_[node * levels_ + level]; }

  /// Time series of one node, levels 0..N.
  std::span<const double> node_series(std::size_t node) const {
    return {data_.data() + node * levels_, levels_};
  }
  std::span<double> node_series(std::size_t node) { return {data_.data() + node * levels_, levels_}; }

  std::vector<double> level(std::size_t n) const {
    std::vector<double> out(grid_.node_count());
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = at(n, m);
    return out;
  }

  /// Snapshot as CSV rows `x,u` (1D) or `x,y,u` (2D).
  csv::Table snapshot_csv(std::size_t n) const {
    csv::Table t;
    t.header = grid_.dim() == 1 ? std::vector<std::string>{"x", "u"} : std::vector<std::string>{"x", "y", "u"};
    for (std::size_t m = 0; m < grid_.node_count(); ++m) {
      const auto p = grid_.point(m);
      if (grid_.dim() == 1) t.rows.push_back({csv::exact(p[0]), csv::exact(at(n, m))});
      else t.rows.push_back({csv::exact(p[0]), csv::exact(p[1]), csv::exact(at(n, m))});
    }
    return t;
  }

  StabilityReport stability;

private:
  SpaceGrid grid_;
  TimeGrid time_;
  std::size_t levels_;
  std::vector<double> data_;
};

/// Runaway bound: stop once max|u^n| exceeds this factor times (max|u^0| + 1).
inline constexpr double kDivergenceFactor = 1e12;

namespace detail {

inline constexpr std::size_t kBlock = 32;

/**
 * acc[j] += sum_{l=1}^{n0-1} c[n0 + j - l] * u[l] for j < kBlock.
 *
 * This is the part of the memory sum for steps n0..n0+kBlock-1 that only
 * touches levels already computed when the block starts; each history value
 * is read once per block instead of once per step.
 */
#if defined(__GNUC__)
// Explicit vector accumulators; the scalar-array form gets spilled by GCC.
using Lane4 = double __attribute__((vector_size(32)));

inline void far_history(const double* __restrict u, const double* __restrict c, std::size_t n0,
                        double* __restrict acc) {
  constexpr std::size_t V = kBlock / 4;
  Lane4 a[V] = {};
  for (std::size_t l = 1; l < n0; ++l) {
    const double ul = u[l];
    const double* cp = c + (n0 - l);
    for (std::size_t j = 0; j < V; ++j) {
      Lane4 cv;
      std::memcpy(&cv, cp + 4 * j, sizeof cv);
      a[j] += cv * ul;
    }
  }
  std::memcpy(acc, a, sizeof a);
}
#else
inline void far_history(const double* u, const double* c, std::size_t n0, double* acc) {
  double a[kBlock] = {};
  for (std::size_t l = 1; l < n0; ++l) {
    const double ul = u[l];
    const double* cp = c + (n0 - l);
    for (std::size_t j = 0; j < kBlock; ++j) a[j] += cp[j] * ul;
  }
  for (std::size_t j = 0; j < kBlock; ++j) acc[j] = a[j];
}
#endif

inline SolutionField solve(const TfdeProblem& p, const SchemeConfig& cfg, std::size_t M) {
  const SpaceGrid grid(p.dim, p.length, M);
  p.validate(grid);
  const TimeGrid time(cfg.horizon, cfg.N);
  if (std::abs(cfg.horizon - p.horizon) > 1e-15 * p.horizon)
    throw std::invalid_argument("solve: scheme horizon differs from problem horizon");
  if (cfg.phi_eff.kind() != DfKind::temporal_effective)
    throw std::invalid_argument("solve: phi_eff must be an effective temporal DF");
  if (cfg.psi.kind() != DfKind::spatial || cfg.psi_second().kind() != DfKind::spatial)
    throw std::invalid_argument("solve: psi must be a spatial DF");

  SolutionField field(grid, time);
  field.stability = check_stability(cfg, grid);
  if (cfg.enforce_stability && !field.stability.satisfied)
    throw StabilityViolationError(field.stability.lhs, field.stability.threshold);

  const std::size_t N = cfg.N;
  const std::size_t nodes = grid.node_count();
  const std::size_t stride = M + 1;
  const double tau = time.tau();
  const double scale = cfg.phi_eff(tau) * cfg.alpha.gamma_two_minus();
  const double mu_x = scale / cfg.psi(grid.h());
  const double mu_y = scale / cfg.psi_second()(grid.h());

  const auto weights = l1_weights(cfg.alpha, N + 1);
  const auto b = weights.values();
  // c[k] = b_k - b_{k+1}, zero-padded so a block may run past step N.
  std::vector<double> c(N + detail::kBlock + 2, 0.0);
  for (std::size_t k = 1; k <= N; ++k) c[k] = weights.difference(k);

  std::vector<std::size_t> interior;
  for (std::size_t m = 0; m < nodes; ++m)
    if (!grid.is_boundary(m)) interior.push_back(m);

  std::vector<double> u0(nodes, 0.0);
  std::vector<Point> points(nodes);
  double u0_norm = 0.0;
  for (std::size_t m = 0; m < nodes; ++m) {
    points[m] = grid.point(m);
    // Dirichlet data wins over round-off in u0 on the boundary.
    u0[m] = grid.is_boundary(m) ? 0.0 : p.initial(points[m]);
    field.at(0, m) = u0[m];
    u0_norm = std::max(u0_norm, std::abs(u0[m]));
  }
  const double runaway = kDivergenceFactor * (u0_norm + 1.0);

  std::vector<double> prev = u0;
  std::vector<double> cur(nodes, 0.0);
  std::vector<double> far(interior.size() * detail::kBlock, 0.0);

  for (std::size_t n0 = 1; n0 <= N; n0 += detail::kBlock) {
    for (std::size_t q = 0; q < interior.size(); ++q)
      far_history(field.node_series(interior[q]).data(), c.data(), n0, far.data() + q * detail::kBlock);

    const std::size_t n_end = std::min(N, n0 + detail::kBlock - 1);
    for (std::size_t n = n0; n <= n_end; ++n) {
      const double t_lag = time.node(n - 1);
      const double bn = b[n - 1];
      double norm = 0.0;
      for (std::size_t q = 0; q < interior.size(); ++q) {
        const std::size_t m = interior[q];
        const double* u = field.node_series(m).data();
        double hist = far[q * detail::kBlock + (n - n0)];
        for (std::size_t l = n0; l < n; ++l) hist += c[n - l] * u[l];

        double lap;
        if (grid.dim() == 1) {
          lap = mu_x * (prev[m + 1] - 2.0 * prev[m] + prev[m - 1]);
        } else {
          lap = mu_x * (prev[m + 1] + prev[m - 1]) + mu_y * (prev[m + stride] + prev[m - stride]) -
                2.0 * prev[m] * (mu_x + mu_y);
        }
        const double v = lap + hist + bn * u0[m] + scale * p.forcing(points[m], t_lag);
        cur[m] = v;
        norm = std::max(norm, std::abs(v));
        if (!std::isfinite(v)) norm = v;
      }
      if (!std::isfinite(norm) || norm > runaway) throw DivergenceError(n);
      for (std::size_t m : interior) field.at(n, m) = cur[m];
      std::swap(prev, cur);
    }
  }
  return field;
}

}  // namespace detail

/**
 * Explicit NSFD scheme for the 1D problem, interior m, n = 1..N:
 *
 *   u_m^n = mu (u_{m+1}^{n-1} - 2 u_m^{n-1} + u_{m-1}^{n-1})
 *         + sum_{k=1}^{n-1} (b_k - b_{k+1}) u_m^{n-k} + b_n u_m^0 + varphi(tau) Gamma(2-a) f_m^{n-1}
 *
 * with mu = varphi(tau) Gamma(2-a) / psi(h). The forcing is lagged to t_{n-1}.
 * Throws DivergenceError once the solution is non-finite or runs away, and
 * StabilityViolationError when enforce_stability is set and the sufficient
 * condition fails.
 */
inline SolutionField solve_1d(const TfdeProblem& p, const SchemeConfig& config, std::size_t M) {
  if (p.dim != 1) throw std::invalid_argument("solve_1d: problem is not one-dimensional");
  return detail::solve(p, config, M);
}

/// 2D counterpart of solve_1d on the square [0, L]^2 with mu_1, mu_2 from psi and psi_y.
inline SolutionField solve_2d(const TfdeProblem& p, const SchemeConfig& config, std::size_t M) {
  if (p.dim != 2) throw std::invalid_argument("solve_2d: problem is not two-dimensional");
  return detail::solve(p, config, M);
}

inline SolutionField solve(const TfdeProblem& p, const SchemeConfig& config, std::size_t M) {
  return p.dim == 1 ? solve_1d(p, config, M) : solve_2d(p, config, M);
}

/// max over all nodes of |u(x, T) - u^N|.
inline double final_error(const TfdeProblem& p, const SolutionField& field) {
  if (!p.exact) throw std::invalid_argument("final_error: problem has no exact solution");
  const std::size_t N = field.levels() - 1;
  const double t = field.time().node(N);
  double e = 0.0;
  for (std::size_t m = 0; m < field.grid().node_count(); ++m)
    e = std::max(e, std::abs((*p.exact)(field.grid().point(m), t) - field.at(N, m)));
  return e;
}

enum class Example { ex3, ex4 };

inline std::string to_string(Example e) { return e == Example::ex3 ? "ex3" : "ex4"; }

/**
 * Manufactured problems with u0 = 0 on [0, L]^dim x [0, 1], k = pi / L:
 *   ex3 (1D): u = t^(3+a) sin(kx),           f = t^3 sin(kx) (Gamma(4+a)/3! + k^2 t^a)
 *   ex4 (2D): u = t^(3+a) sin(kx) sin(ky),   f = t^3 sin(kx) sin(ky) (Gamma(4+a)/3! + 2 k^2 t^a)
 * L = 1 gives the unit-domain problems; other L rescale the mode.
 */
inline TfdeProblem example_tfde(Example id, FractionalOrder alpha, double length = 1.0) {
  const double a = alpha.value();
  const double k = std::numbers::pi / length;
  const double g = std::tgamma(4.0 + a) / 6.0;
  TfdeProblem p;
  p.length = length;
  p.horizon = 1.0;
  p.initial = [](Point) { return 0.0; };
  if (id == Example::ex3) {
    p.dim = 1;
    p.forcing = [=](Point x, double t) { return t * t * t * std::sin(k * x[0]) * (g + k * k * std::pow(t, a)); };
    p.exact = [=](Point x, double t) { return std::pow(t, 3.0 + a) * std::sin(k * x[0]); };
  } else {
    p.dim = 2;
    p.forcing = [=](Point x, double t) {
      return t * t * t * std::sin(k * x[0]) * std::sin(k * x[1]) * (g + 2.0 * k * k * std::pow(t, a));
    };
    p.exact = [=](Point x, double t) { return std::pow(t, 3.0 + a) * std::sin(k * x[0]) * std::sin(k * x[1]); };
  }
  return p;
}

// ---------------------------------------------------------------------------
// Studies

struct StudyCell {
  std::optional<double> e_inf;
  std::optional<double> rate;
  std::optional<std::size_t> diverged_at;
};

/// Spatial convergence table: rows M, one (E_inf, rate) column pair per psi.
struct ConvergenceReport {
  double alpha = 0.0;
  std::size_t N = 0;
  double horizon = 1.0;
  std::string temporal_df;
  std::vector<std::string> psi;
  std::vector<std::size_t> M;
  std::vector<std::vector<StudyCell>> cells;  ///< cells[row][psi column]

  csv::Table to_csv() const {
    csv::Table t;
    t.header.push_back("M");
    for (const auto& s : psi) {
      t.header.push_back("E_inf[" + s + "]");
      t.header.push_back("rate[" + s + "]");
    }
    for (std::size_t r = 0; r < M.size(); ++r) {
      std::vector<std::string> row{std::to_string(M[r])};
      for (const auto& cell : cells[r]) {
        row.push_back(cell.diverged_at ? "diverged" : csv::opt_sci(cell.e_inf));
        row.push_back(csv::opt_fixed4(cell.rate));
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  bool any_diverged() const {
    for (const auto& row : cells)
      for (const auto& c : row)
        if (c.diverged_at) return true;
    return false;
  }
};

/**
 * E_inf at t = T and dyadic S_rate for every (M, psi). Diverged cells are
 * kept and flagged; a rate needs both neighbours finite and M doubling.
 */
inline ConvergenceReport convergence_study(const TfdeProblem& problem, FractionalOrder alpha, std::size_t N,
                                           const DenominatorSpec& phi_eff,
                                           std::span<const DenominatorSpec> psi_list,
                                           std::span<const std::size_t> m_list) {
  if (!problem.exact) throw std::invalid_argument("convergence_study: problem has no exact solution");
  ConvergenceReport rep;
  rep.alpha = alpha.value();
  rep.N = N;
  rep.horizon = problem.horizon;
  rep.temporal_df = phi_eff.text();
  for (const auto& s : psi_list) rep.psi.push_back(s.text());
  rep.M.assign(m_list.begin(), m_list.end());
  rep.cells.assign(m_list.size(), std::vector<StudyCell>(psi_list.size()));

  for (std::size_t col = 0; col < psi_list.size(); ++col) {
    for (std::size_t row = 0; row < m_list.size(); ++row) {
      SchemeConfig cfg{alpha, N, phi_eff, psi_list[col], std::nullopt, false, problem.horizon};
      auto& cell = rep.cells[row][col];
      try {
        cell.e_inf = final_error(problem, solve(problem, cfg, m_list[row]));
      } catch (const DivergenceError& e) {
        cell.diverged_at = e.step();
      }
      if (row > 0 && m_list[row] == 2 * m_list[row - 1]) {
        const auto& prev = rep.cells[row - 1][col];
        if (prev.e_inf && cell.e_inf && *prev.e_inf > 0.0 && *cell.e_inf > 0.0)
          cell.rate = std::log2(*prev.e_inf / *cell.e_inf);
      }
    }
  }
  return rep;
}

inline ConvergenceReport convergence_study(Example example, FractionalOrder alpha, std::size_t N,
                                           const DenominatorSpec& phi_eff,
                                           std::span<const DenominatorSpec> psi_list,
                                           std::span<const std::size_t> m_list) {
  return convergence_study(example_tfde(example, alpha), alpha, N, phi_eff, psi_list, m_list);
}

/// Largest M (scanning up from 2) for which the sufficient 1D condition holds on [0, L].
inline std::size_t analytic_stable_limit(FractionalOrder alpha, double length, std::size_t N, double horizon,
                                         const DenominatorSpec& phi_eff, const DenominatorSpec& psi,
                                         std::size_t m_limit = 100000) {
  std::size_t last = 0;
  for (std::size_t M = 2; M <= m_limit; ++M) {
    SchemeConfig cfg{alpha, N, phi_eff, psi, std::nullopt, false, horizon};
    if (!check_stability(cfg, SpaceGrid(1, length, M)).satisfied) break;
    last = M;
  }
  return last;
}

struct FrontierPoint {
  std::size_t M = 0;
  std::optional<double> e_inf;
  std::optional<std::size_t> diverged_at;
  bool condition_met = false;  ///< sufficient stability condition at this M
};

struct FrontierSeries {
  std::string psi;
  std::size_t analytic_limit = 0;
  std::vector<FrontierPoint> points;

  /// Smallest scanned M whose run diverged.
  std::optional<std::size_t> onset() const {
    for (const auto& p : points)
      if (p.diverged_at) return p.M;
    return std::nullopt;
  }

  const FrontierPoint* find(std::size_t M) const {
    for (const auto& p : points)
      if (p.M == M) return &p;
    return nullptr;
  }

  csv::Table to_csv() const {
    csv::Table t{{"M", "E_inf", "diverged"}, {}};
    for (const auto& p : points)
      t.rows.push_back({std::to_string(p.M), csv::opt_sci(p.e_inf), p.diverged_at ? "1" : "0"});
    return t;
  }
};

/**
 * 1D runs of the rescaled ex3 problem on [0, L] across `m_values`, one
 * series per spatial DF. Divergence is recorded, not raised.
 */
inline std::vector<FrontierSeries> stability_frontier_scan(FractionalOrder alpha, double length, std::size_t N,
                                                           const DenominatorSpec& phi_eff,
                                                           std::span<const DenominatorSpec> psi_list,
                                                           std::span<const std::size_t> m_values) {
  const auto problem = example_tfde(Example::ex3, alpha, length);
  std::vector<FrontierSeries> out;
  for (const auto& psi : psi_list) {
    FrontierSeries series;
    series.psi = psi.text();
    const std::size_t m_max = m_values.empty() ? 2 : *std::max_element(m_values.begin(), m_values.end());
    series.analytic_limit = analytic_stable_limit(alpha, length, N, problem.horizon, phi_eff, psi, 4 * m_max + 16);
    for (std::size_t M : m_values) {
      FrontierPoint pt;
      pt.M = M;
      SchemeConfig cfg{alpha, N, phi_eff, psi, std::nullopt, false, problem.horizon};
      pt.condition_met = check_stability(cfg, SpaceGrid(1, length, M)).satisfied;
      try {
        pt.e_inf = final_error(problem, solve_1d(problem, cfg, M));
      } catch (const DivergenceError& e) {
        pt.diverged_at = e.step();
      }
      series.points.push_back(pt);
    }
    out.push_back(std::move(series));
  }
  return out;
}

}  // namespace nsfd::tfde
