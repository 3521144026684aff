#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nsfd/nsfd.hpp"
#include "support/properties.hpp"

using namespace nsfd;

TEST(FractionalOrder, RejectsOutsideOpenUnitInterval) {
  EXPECT_THROW(FractionalOrder(0.0), std::invalid_argument);
  EXPECT_THROW(FractionalOrder(1.0), std::invalid_argument);
  EXPECT_THROW(FractionalOrder(-0.2), std::invalid_argument);
  EXPECT_THROW(FractionalOrder(std::nan("")), std::invalid_argument);
  EXPECT_NEAR(FractionalOrder(0.5).gamma_two_minus(), std::sqrt(std::numbers::pi) / 2.0, 1e-15);
}

TEST(Weights, FirstValues) {
  EXPECT_EQ(l1_weights(FractionalOrder(0.37), 4).b(1), 1.0);
  EXPECT_NEAR(l1_weights(FractionalOrder(0.5), 2).b(2), std::sqrt(2.0) - 1.0, 1e-15);
}

TEST(Weights, TelescopingAt320) {
  const auto w = l1_weights(FractionalOrder(0.3), 320);
  double s = w.b(320);
  for (std::size_t j = 1; j < 320; ++j) s += w.b(j) - w.b(j + 1);
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Weights, StableFormAgreesWithDirectFormNearCutoff) {
  const FractionalOrder alpha(0.6);
  const auto w = l1_weights(alpha, 1002);
  const double direct = std::pow(1001.0, 0.4) - std::pow(1000.0, 0.4);
  EXPECT_NEAR(w.b(1001) / direct, 1.0, 1e-9);
}

TEST(Weights, Invariants) {
  const auto c = props::weight_invariants();
  EXPECT_TRUE(c.ok) << c.detail;
}

TEST(Weights, IndexChecks) {
  const auto w = l1_weights(FractionalOrder(0.5), 5);
  EXPECT_THROW(w.b(0), std::out_of_range);
  EXPECT_THROW(w.b(6), std::out_of_range);
  EXPECT_THROW(w.difference(5), std::out_of_range);
  EXPECT_THROW(l1_weights(FractionalOrder(0.5), 0), std::invalid_argument);
}

TEST(Denominators, DirectValues) {
  EXPECT_NEAR(parse_df("phi=sin")(0.1), std::sin(0.1), 1e-16);
  EXPECT_DOUBLE_EQ(parse_df("psi=h2")(0.5), 0.25);
  const FractionalOrder a(0.9);
  const double expect = std::pow((1.0 - std::exp(-0.01)) / 100.0, 0.9);
  EXPECT_NEAR(parse_df("varphi=pow(exp-decay(lambda=100))", a)(1e-4) / expect, 1.0, 1e-14);
}

TEST(Denominators, EffectiveReduction) {
  const FractionalOrder a9(0.9);
  for (auto mode : {EffectiveMode::power, EffectiveMode::ratio}) {
    const auto e = effective_temporal_df(DenominatorSpec::make(DfForm::tau), a9, mode);
    EXPECT_EQ(e.form(), DfForm::tau_alpha);
    EXPECT_NEAR(e(0.01), std::pow(0.01, 0.9), 1e-16);
  }
  const auto r = effective_temporal_df(DenominatorSpec::make(DfForm::sin), FractionalOrder(0.5), EffectiveMode::ratio);
  EXPECT_NEAR(r(0.1), std::sin(0.1) / std::sqrt(0.1), 1e-15);
  EXPECT_NEAR(r(0.1), 0.3157, 5e-5);

  const auto p = effective_temporal_df(DenominatorSpec::make(DfForm::exp_decay, 100.0), a9, EffectiveMode::power);
  EXPECT_NEAR(p(1e-4), std::pow((1.0 - std::exp(-100.0 * 1e-4)) / 100.0, 0.9), 1e-14 * p(1e-4));
  EXPECT_THROW(effective_temporal_df(DenominatorSpec::make(DfForm::h2), a9, EffectiveMode::power),
               std::invalid_argument);
}

TEST(Denominators, ModesAgreeToOrderTauOnePlusAlpha) {
  for (double av : {0.3, 0.7}) {
    const FractionalOrder a(av);
    for (auto form : {DfForm::sin, DfForm::sinh, DfForm::scaled_expm1, DfForm::exp_decay}) {
      const auto base = DenominatorSpec::make(form);
      const auto pw = effective_temporal_df(base, a, EffectiveMode::power);
      const auto rt = effective_temporal_df(base, a, EffectiveMode::ratio);
      double worst = 0.0;
      for (int k = 8; k <= 24; ++k) {
        const double t = std::ldexp(1.0, -k);
        worst = std::max(worst, std::abs(pw(t) - rt(t)) / std::pow(t, 1.0 + av));
      }
      EXPECT_LT(worst, 1e3) << base.text();
    }
  }
}

TEST(Denominators, RegistryPassesOrderCheck) {
  for (const auto& spec : df_registry(FractionalOrder(0.9))) {
    const auto c = check_order(spec);
    EXPECT_TRUE(c.passes(100.0)) << spec.text() << " K=" << c.constant;
  }
}

TEST(Denominators, TextRoundTrip) {
  const FractionalOrder a(0.4);
  for (const auto& spec : df_registry(a)) {
    const auto back = parse_df(spec.text(), a);
    EXPECT_TRUE(back == spec) << spec.text();
    EXPECT_EQ(back.text(), spec.text());
  }
}

TEST(Denominators, Errors) {
  EXPECT_THROW(parse_df("psi=cosh"), UnknownDenominatorError);
  EXPECT_THROW(parse_df("theta=tau"), UnknownDenominatorError);
  EXPECT_THROW(parse_df("varphi=tau-alpha"), std::invalid_argument);
  EXPECT_THROW(parse_df("phi=scaled-expm1(c=-3)"), std::invalid_argument);
  EXPECT_THROW(parse_df("phi=sin")(0.0), std::domain_error);
  EXPECT_THROW(parse_df("phi=sin")(4.0), std::domain_error);
  EXPECT_NEAR(parse_df("phi=scaled-expm1(c=1000)")(0.5), 1000.0 * std::expm1(0.5 / 1000.0), 1e-15);
}

TEST(MittagLeffler, ReducesToExponential) {
  // The alternating series for z < 0 carries an absolute error of order eps * e^|z|.
  for (double z = -5.0; z <= 5.0; z += 0.25)
    EXPECT_NEAR(mittag_leffler({}, z), std::exp(z), 1e-14 * std::exp(std::abs(z))) << z;
  EXPECT_NEAR(mittag_leffler({}, 1.0), std::numbers::e, 1e-15);
}

TEST(MittagLeffler, HalfOrderMatchesErfc) {
  for (double x : {0.25, 1.0, 2.0}) {
    const double oracle = std::exp(x * x) * std::erfc(x);
    EXPECT_NEAR(mittag_leffler({0.5, 1.0}, -x), oracle, 1e-12) << x;
  }
  EXPECT_NEAR(mittag_leffler({0.5, 1.0}, -1.0), 0.427584, 1e-6);
}

TEST(MittagLeffler, BetaTwoIsShiftedExponential) {
  // E_{1,2}(z) = (e^z - 1) / z
  for (double z : {-3.0, -0.5, 0.7, 2.0}) EXPECT_NEAR(mittag_leffler({1.0, 2.0}, z), std::expm1(z) / z, 1e-14);
}

TEST(MittagLeffler, ReportsNonConvergence) {
  EXPECT_THROW(mittag_leffler({0.5, 1.0, 1e-16, 5}, 3.0), SeriesNotConvergedError);
}
