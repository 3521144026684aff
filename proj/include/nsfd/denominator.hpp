#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "nsfd/errors.hpp"
#include "nsfd/fractional_order.hpp"

namespace nsfd {

/**
 * Denominator functions (DFs) for nonstandard finite differences.
 *
 * Three families are modelled:
 *   - temporal base      phi(tau)    = tau   + O(tau^2)
 *   - temporal effective varphi(tau) = tau^a + O(tau^(1+a)), replaces tau^a in the L1 operator
 *   - spatial            psi(h)      = h^2   + O(h^3),       replaces h^2 in the 3-point Laplacian
 *
 * The set of forms is closed so that each one can be order-checked. Every
 * form has a canonical text representation, e.g. `phi=scaled-expm1(c=1000)`,
 * `varphi=pow(exp-decay(lambda=100))`, `psi=sinh-h2`. Parameters are written
 * as key=value inside parentheses; matching is exact and case-sensitive.
 */
enum class DfKind { temporal_base, temporal_effective, spatial };

enum class EffectiveMode {
  power,  ///< varphi = phi(tau)^alpha
  ratio,  ///< varphi = phi(tau) * tau^(alpha-1)
};

enum class DfForm {
  // temporal base
  tau,           ///< tau
  sin,           ///< sin(tau)
  sinh,          ///< sinh(tau)
  scaled_expm1,  ///< c (e^(tau/c) - 1)
  exp_decay,     ///< (1 - e^(-lambda tau)) / lambda
  // temporal effective
  tau_alpha,      ///< tau^alpha
  power_of_base,  ///< phi(tau)^alpha
  ratio_of_base,  ///< phi(tau) tau^(alpha-1)
  // spatial
  h2,              ///< h^2
  four_sin2_half,  ///< 4 sin^2(h/2)
  sin2,            ///< sin^2(h)
  scaled_decay_sq, ///< (c (1 - e^(-h/c)))^2
  sinh2_pi_half,   ///< (4/pi^2) sinh^2(pi h / 2)
  sinh2,           ///< sinh^2(h)
  scaled_exp_sq,   ///< (c (e^(h/c) - 1))^2
  sinh_h2,         ///< sinh(h^2)
};

namespace detail {

struct FormInfo {
  DfForm form;
  DfKind kind;
  std::string_view tag;
  std::string_view param_key;  // empty when the form has no parameter
  double default_param;
  std::string_view formula;
};

inline constexpr double kNoParam = std::numeric_limits<double>::quiet_NaN();

inline constexpr std::array<FormInfo, 16> kForms{{
    {DfForm::tau, DfKind::temporal_base, "tau", "", kNoParam, "tau"},
    {DfForm::sin, DfKind::temporal_base, "sin", "", kNoParam, "sin(tau)"},
    {DfForm::sinh, DfKind::temporal_base, "sinh", "", kNoParam, "sinh(tau)"},
    {DfForm::scaled_expm1, DfKind::temporal_base, "scaled-expm1", "c", 1000.0, "c*(exp(tau/c)-1)"},
    {DfForm::exp_decay, DfKind::temporal_base, "exp-decay", "lambda", 100.0, "(1-exp(-lambda*tau))/lambda"},
    {DfForm::tau_alpha, DfKind::temporal_effective, "tau-alpha", "", kNoParam, "tau^alpha"},
    {DfForm::power_of_base, DfKind::temporal_effective, "pow", "", kNoParam, "phi(tau)^alpha"},
    {DfForm::ratio_of_base, DfKind::temporal_effective, "ratio", "", kNoParam, "phi(tau)*tau^(alpha-1)"},
    {DfForm::h2, DfKind::spatial, "h2", "", kNoParam, "h^2"},
    {DfForm::four_sin2_half, DfKind::spatial, "4sin2-half", "", kNoParam, "4*sin(h/2)^2"},
    {DfForm::sin2, DfKind::spatial, "sin2", "", kNoParam, "sin(h)^2"},
    {DfForm::scaled_decay_sq, DfKind::spatial, "scaled-decay-sq", "c", 100.0, "(c*(1-exp(-h/c)))^2"},
    {DfForm::sinh2_pi_half, DfKind::spatial, "sinh2-pi-half", "", kNoParam, "(4/pi^2)*sinh(pi*h/2)^2"},
    {DfForm::sinh2, DfKind::spatial, "sinh2", "", kNoParam, "sinh(h)^2"},
    {DfForm::scaled_exp_sq, DfKind::spatial, "scaled-exp-sq", "c", 100.0, "(c*(exp(h/c)-1))^2"},
    {DfForm::sinh_h2, DfKind::spatial, "sinh-h2", "", kNoParam, "sinh(h^2)"},
}};

inline const FormInfo& info(DfForm form) {
  for (const auto& f : kForms)
    if (f.form == form) return f;
  throw std::logic_error("unregistered denominator form");
}

inline std::string_view prefix(DfKind kind) {
  switch (kind) {
    case DfKind::temporal_base: return "phi=";
    case DfKind::temporal_effective: return "varphi=";
    case DfKind::spatial: return "psi=";
  }
  return "";
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double eval_base(DfForm form, double param, double tau) {
  switch (form) {
    case DfForm::tau: return tau;
    case DfForm::sin: return std::sin(tau);
    case DfForm::sinh: return std::sinh(tau);
    case DfForm::scaled_expm1: return param * std::expm1(tau / param);
    case DfForm::exp_decay: return -std::expm1(-param * tau) / param;
    default: throw std::logic_error("not a temporal base form");
  }
}

inline double eval_spatial(DfForm form, double param, double h) {
  using std::numbers::pi;
  switch (form) {
    case DfForm::h2: return h * h;
    case DfForm::four_sin2_half: { const double s = std::sin(0.5 * h); return 4.0 * s * s; }
    case DfForm::sin2: { const double s = std::sin(h); return s * s; }
    case DfForm::scaled_decay_sq: { const double v = -param * std::expm1(-h / param); return v * v; }
    case DfForm::sinh2_pi_half: { const double s = std::sinh(0.5 * pi * h); return 4.0 / (pi * pi) * s * s; }
    case DfForm::sinh2: { const double s = std::sinh(h); return s * s; }
    case DfForm::scaled_exp_sq: { const double v = param * std::expm1(h / param); return v * v; }
    case DfForm::sinh_h2: return std::sinh(h * h);
    default: throw std::logic_error("not a spatial form");
  }
}

}  // namespace detail

class DenominatorSpec {
public:
  /// A temporal-base or spatial DF. Parametric forms fall back to their registry default.
  static DenominatorSpec make(DfForm form, std::optional<double> param = std::nullopt) {
    const auto& fi = detail::info(form);
    if (fi.kind == DfKind::temporal_effective)
      throw std::invalid_argument("effective temporal DFs are built with effective_temporal_df");
    DenominatorSpec spec;
    spec.kind_ = fi.kind;
    spec.form_ = form;
    if (!fi.param_key.empty()) {
      const double p = param.value_or(fi.default_param);
      if (!std::isfinite(p) || p <= 0.0)
        throw std::invalid_argument("denominator parameter '" + std::string(fi.param_key) + "' must be positive");
      spec.param_ = p;
    } else if (param) {
      throw std::invalid_argument("denominator form '" + std::string(fi.tag) + "' takes no parameter");
    }
    return spec;
  }

  /// varphi(tau) = tau^alpha, the standard L1 denominator.
  static DenominatorSpec standard_effective(FractionalOrder alpha) {
    DenominatorSpec spec;
    spec.kind_ = DfKind::temporal_effective;
    spec.form_ = DfForm::tau_alpha;
    spec.alpha_ = alpha.value();
    return spec;
  }

  DfKind kind() const noexcept { return kind_; }
  DfForm form() const noexcept { return form_; }

  std::optional<double> parameter() const {
    if (std::isnan(param_)) return std::nullopt;
    return param_;
  }

  /// Fractional order bound into an effective DF.
  std::optional<FractionalOrder> alpha() const {
    if (kind_ != DfKind::temporal_effective) return std::nullopt;
    return FractionalOrder(alpha_);
  }

  /// Base phi of an effective DF built by power/ratio reduction.
  std::optional<DenominatorSpec> base() const {
    if (form_ != DfForm::power_of_base && form_ != DfForm::ratio_of_base) return std::nullopt;
    return make(base_form_, std::isnan(base_param_) ? std::nullopt : std::optional<double>(base_param_));
  }

  /// Evaluate at a positive step size. Throws std::domain_error if the value is not strictly positive.
  double operator()(double step) const {
    if (!(step > 0.0)) throw std::domain_error("denominator function evaluated at non-positive step");
    double v = 0.0;
    switch (kind_) {
      case DfKind::temporal_base: v = detail::eval_base(form_, param_, step); break;
      case DfKind::spatial: v = detail::eval_spatial(form_, param_, step); break;
      case DfKind::temporal_effective:
        switch (form_) {
          case DfForm::tau_alpha: v = std::pow(step, alpha_); break;
          case DfForm::power_of_base: v = std::pow(detail::eval_base(base_form_, base_param_, step), alpha_); break;
          case DfForm::ratio_of_base:
            v = detail::eval_base(base_form_, base_param_, step) * std::pow(step, alpha_ - 1.0);
            break;
          default: throw std::logic_error("bad effective form");
        }
        break;
    }
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "denominator function " << text() << " is not positive at step " << step;
      throw std::domain_error(os.str());
    }
    return v;
  }

  /// Leading-order term the DF must agree with: tau, tau^alpha or h^2.
  double leading_term(double step) const {
    switch (kind_) {
      case DfKind::temporal_base: return step;
      case DfKind::temporal_effective: return std::pow(step, alpha_);
      case DfKind::spatial: return step * step;
    }
    return step;
  }

  /// Canonical text form (the fractional order of effective DFs is not part of it).
  std::string text() const { return std::string(detail::prefix(kind_)) + body(); }

  /// Human-readable formula.
  std::string formula() const {
    std::string f(detail::info(form_).formula);
    if (auto b = base()) {
      const std::string bf(detail::info(b->form_).formula);
      const auto pos = f.find("phi(tau)");
      f.replace(pos, 8, bf);
    }
    return f;
  }

  friend bool operator==(const DenominatorSpec& a, const DenominatorSpec& b) noexcept {
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return a.kind_ == b.kind_ && a.form_ == b.form_ && same(a.param_, b.param_) &&
           a.base_form_ == b.base_form_ && same(a.base_param_, b.base_param_) && same(a.alpha_, b.alpha_);
  }

private:
  friend DenominatorSpec effective_temporal_df(const DenominatorSpec&, FractionalOrder, EffectiveMode);

  DenominatorSpec() = default;

  std::string body() const {
    const auto& fi = detail::info(form_);
    std::string s(fi.tag);
    if (form_ == DfForm::power_of_base || form_ == DfForm::ratio_of_base) {
      s += "(" + base()->body() + ")";
    } else if (!fi.param_key.empty()) {
      s += "(" + std::string(fi.param_key) + "=" + detail::format_number(param_) + ")";
    }
    return s;
  }

  DfKind kind_ = DfKind::temporal_base;
  DfForm form_ = DfForm::tau;
  double param_ = detail::kNoParam;
  DfForm base_form_ = DfForm::tau;
  double base_param_ = detail::kNoParam;
  double alpha_ = detail::kNoParam;
};

/**
 * Reduce a temporal base phi to the effective denominator of the L1 operator.
 *
 * power: varphi = phi^alpha; ratio: varphi = phi * tau^(alpha-1), the exact
 * inverse of tau^(1-alpha)/phi. For phi = tau both collapse to tau^alpha.
 */
inline DenominatorSpec effective_temporal_df(const DenominatorSpec& base, FractionalOrder alpha,
                                             EffectiveMode mode) {
  if (base.kind() != DfKind::temporal_base)
    throw std::invalid_argument("effective_temporal_df: expected a temporal base DF, got " + base.text());
  if (base.form() == DfForm::tau) return DenominatorSpec::standard_effective(alpha);
  DenominatorSpec spec;
  spec.kind_ = DfKind::temporal_effective;
  spec.form_ = mode == EffectiveMode::power ? DfForm::power_of_base : DfForm::ratio_of_base;
  spec.base_form_ = base.form();
  spec.base_param_ = base.parameter().value_or(detail::kNoParam);
  spec.alpha_ = alpha.value();
  return spec;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline double parse_number(std::string_view s, std::string_view context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("invalid number '" + std::string(s) + "' in " + std::string(context));
  return v;
}

// Parses `tag` or `tag(key=value)` for a non-effective form of the given kind.
inline DenominatorSpec parse_simple(std::string_view body, DfKind kind, std::string_view full) {
  std::string_view tag = body;
  std::optional<double> param;
  std::string_view key;
  if (auto open = body.find('('); open != std::string_view::npos) {
    if (body.back() != ')') throw UnknownDenominatorError(std::string(full));
    tag = body.substr(0, open);
    std::string_view inner = body.substr(open + 1, body.size() - open - 2);
    auto eq = inner.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("denominator parameter must be key=value in '" + std::string(full) + "'");
    key = inner.substr(0, eq);
    param = parse_number(inner.substr(eq + 1), full);
  }
  for (const auto& fi : kForms) {
    if (fi.kind != kind || fi.tag != tag) continue;
    if (param && key != fi.param_key)
      throw std::invalid_argument("denominator '" + std::string(tag) + "' has no parameter '" + std::string(key) + "'");
    return DenominatorSpec::make(fi.form, param);
  }
  throw UnknownDenominatorError(std::string(full));
}

}  // namespace detail

/**
 * Parse a canonical DF text form. Effective temporal DFs (`varphi=...`)
 * need the fractional order they are bound to.
 */
inline DenominatorSpec parse_df(std::string_view text, std::optional<FractionalOrder> alpha = std::nullopt) {
  const std::string_view full = detail::trim(text);
  auto eq = full.find('=');
  if (eq == std::string_view::npos) throw UnknownDenominatorError(std::string(full));
  const std::string_view head = full.substr(0, eq + 1);
  const std::string_view body = full.substr(eq + 1);
  if (head == "phi=") return detail::parse_simple(body, DfKind::temporal_base, full);
  if (head == "psi=") return detail::parse_simple(body, DfKind::spatial, full);
  if (head != "varphi=") throw UnknownDenominatorError(std::string(full));
  if (!alpha) throw std::invalid_argument("effective DF '" + std::string(full) + "' requires a fractional order");
  if (body == "tau-alpha") return DenominatorSpec::standard_effective(*alpha);
  for (auto [tag, mode] : {std::pair{std::string_view("pow("), EffectiveMode::power},
                           std::pair{std::string_view("ratio("), EffectiveMode::ratio}}) {
    if (body.starts_with(tag) && body.ends_with(')')) {
      auto inner = body.substr(tag.size(), body.size() - tag.size() - 1);
      return effective_temporal_df(detail::parse_simple(inner, DfKind::temporal_base, full), *alpha, mode);
    }
  }
  throw UnknownDenominatorError(std::string(full));
}

/**
 * Concrete instances of every registered form. Parametric forms use their
 * default parameter; effective forms are bound to `alpha` and include the
 * power and ratio reduction of each non-identity base.
 */
inline std::vector<DenominatorSpec> df_registry(FractionalOrder alpha = FractionalOrder(0.5)) {
  std::vector<DenominatorSpec> out;
  std::vector<DenominatorSpec> bases;
  for (const auto& fi : detail::kForms) {
    if (fi.kind == DfKind::temporal_effective) continue;
    out.push_back(DenominatorSpec::make(fi.form));
    if (fi.kind == DfKind::temporal_base) bases.push_back(out.back());
  }
  out.push_back(DenominatorSpec::standard_effective(alpha));
  for (const auto& b : bases) {
    if (b.form() == DfForm::tau) continue;
    out.push_back(effective_temporal_df(b, alpha, EffectiveMode::power));
    out.push_back(effective_temporal_df(b, alpha, EffectiveMode::ratio));
  }
  return out;
}

/// Text templates of all registered forms, for help output.
inline std::vector<std::string> df_registry_tags() {
  std::vector<std::string> tags;
  for (const auto& fi : detail::kForms) {
    std::string t = std::string(detail::prefix(fi.kind)) + std::string(fi.tag);
    if (fi.form == DfForm::power_of_base || fi.form == DfForm::ratio_of_base) t += "(<phi>)";
    else if (!fi.param_key.empty()) t += "(" + std::string(fi.param_key) + "=" + detail::format_number(fi.default_param) + ")";
    tags.push_back(t + "    " + std::string(fi.formula));
  }
  return tags;
}

/// Result of sampling |DF(s)/leading(s) - 1| / s on s = 2^-k.
struct OrderCheck {
  double constant = 0.0;      ///< sup of the scaled defect; the K in |DF/leading - 1| <= K s
  double first_defect = 0.0;  ///< unscaled defect at the coarsest step
  double last_defect = 0.0;   ///< unscaled defect at the finest step

  bool passes(double k_max) const { return constant <= k_max && last_defect <= first_defect; }
};

inline OrderCheck check_order(const DenominatorSpec& spec, int k_min = 4, int k_max = 20) {
  OrderCheck out;
  for (int k = k_min; k <= k_max; ++k) {
    const double s = std::ldexp(1.0, -k);
    const double defect = std::abs(spec(s) / spec.leading_term(s) - 1.0);
    out.constant = std::max(out.constant, defect / s);
    if (k == k_min) out.first_defect = defect;
    out.last_defect = defect;
  }
  return out;
}

}  // namespace nsfd
