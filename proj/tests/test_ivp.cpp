#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nsfd/nsfd.hpp"
#include "support/oracles.hpp"

using namespace nsfd;

namespace {

double final_error(ivp::Example ex, double a, std::size_t N, const DenominatorSpec& base) {
  const FractionalOrder alpha(a);
  const auto p = ivp::example_problem(ex, alpha);
  const auto sol = ivp::solve_ivp(p, alpha, N, effective_temporal_df(base, alpha, EffectiveMode::ratio));
  return std::abs((*p.exact)(1.0) - sol.y.back());
}

}  // namespace

TEST(Ivp, ExampleProblems) {
  EXPECT_DOUBLE_EQ((*ivp::example_problem(ivp::Example::ex1, FractionalOrder(0.5)).exact)(1.0), 1.0);
  EXPECT_DOUBLE_EQ((*ivp::example_problem(ivp::Example::ex2, FractionalOrder(0.5)).exact)(1.0), 2.0);
  EXPECT_NEAR(ivp::example_problem(ivp::Example::ex1, FractionalOrder(0.3)).forcing(1.0), std::tgamma(3.3) / 2.0,
              1e-15);
  EXPECT_NEAR(std::tgamma(3.3) / 2.0, 1.3417, 5e-5);
  EXPECT_THROW(ivp::IvpProblem(1.0, [](double) { return 0.0; }, [](double) { return 0.0; }), std::invalid_argument);
}

TEST(Ivp, ConstantPreserved) {
  for (const auto& spec : df_registry(FractionalOrder(0.6))) {
    if (spec.kind() != DfKind::temporal_effective) continue;
    const ivp::IvpProblem p(2.5, [](double) { return 0.0; }, std::nullopt);
    const auto sol = ivp::solve_ivp(p, FractionalOrder(0.6), 300, spec);
    for (double v : sol.y) EXPECT_NEAR(v, 2.5, 1e-13) << spec.text();
  }
}

TEST(Ivp, MatchesIndependentL1OnRandomForcing) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (double a : {0.25, 0.75}) {
    const double c0 = U(rng), c1 = U(rng), c2 = U(rng);
    auto f = [=](double t) { return c0 + c1 * std::sin(5.0 * t) + c2 * t * t; };
    const ivp::IvpProblem p(0.3, f, std::nullopt);
    const auto mine = ivp::solve_ivp(p, FractionalOrder(a), 200, DenominatorSpec::standard_effective(FractionalOrder(a)));
    const auto ref = oracle::l1_ivp(0.3, f, a, 200);
    for (std::size_t n = 0; n <= 200; ++n) EXPECT_NEAR(mine.y[n], ref[n], 1e-12) << n;
  }
}

TEST(Ivp, ReferenceCells) {
  EXPECT_NEAR(final_error(ivp::Example::ex1, 0.3, 10, parse_df("phi=tau")) / 7.1e-3, 1.0, 0.01);
  EXPECT_NEAR(final_error(ivp::Example::ex2, 0.5, 20, parse_df("phi=sinh")) / 5.9e-3, 1.0, 0.01);
}

TEST(Ivp, ErrorTableRows) {
  const std::vector<double> al{0.7};
  const std::vector<std::size_t> Ns{10, 20, 40, 80, 160, 320};
  const std::vector<DenominatorSpec> bases{parse_df("phi=tau")};
  const auto t = ivp::ivp_error_table(ivp::Example::ex1, al, Ns, bases);
  ASSERT_EQ(t.rows.size(), 6u);
  EXPECT_FALSE(t.rows[0].rate);
  EXPECT_NEAR(t.rows[5].e_inf / 6.0468e-4, 1.0, 0.01);
  EXPECT_NEAR(*t.rows[5].rate, 1.3107, 0.05);

  const std::vector<double> a3{0.3};
  const std::vector<DenominatorSpec> sh{parse_df("phi=sinh")};
  const auto t2 = ivp::ivp_error_table(ivp::Example::ex2, a3, Ns, sh);
  EXPECT_NEAR(t2.rows[5].e_inf / 1.9764e-5, 1.0, 0.01);
  EXPECT_NEAR(*t2.rows[5].rate, 1.6998, 0.05);

  const auto csv_text = csv::to_string(t2.to_csv());
  EXPECT_EQ(csv_text.substr(0, csv_text.find('\n')), "alpha,N,df,E_inf,rate");
  EXPECT_NE(csv_text.find("\n0.3,10,phi=sinh,"), std::string::npos);
}

TEST(Ivp, RatesApproachTwoMinusAlpha) {
  // tau, sin and sinh agree with tau through second order, so the L1 rate survives.
  for (auto ex : {ivp::Example::ex1, ivp::Example::ex2})
    for (double a : {0.3, 0.5, 0.7})
      for (const char* text : {"phi=tau", "phi=sin", "phi=sinh"}) {
        const auto spec = parse_df(text);
        const double e1 = final_error(ex, a, 1280, spec), e2 = final_error(ex, a, 2560, spec);
        EXPECT_NEAR(std::log2(e1 / e2), 2.0 - a, 0.1) << ivp::to_string(ex) << " " << a << " " << text;
      }
}

TEST(Ivp, FirstOrderDenominatorLimitsRate) {
  // (1 - e^{-100 tau})/100 = tau - 50 tau^2 + ..., an O(tau) consistency term.
  const auto spec = parse_df("phi=exp-decay(lambda=100)");
  for (double a : {0.3, 0.5, 0.7}) {
    const double e1 = final_error(ivp::Example::ex1, a, 1280, spec), e2 = final_error(ivp::Example::ex1, a, 2560, spec);
    EXPECT_NEAR(std::log2(e1 / e2), 1.0, 0.1) << a;
  }
}

TEST(Ivp, ErrorDecreasesMonotonically) {
  for (auto ex : {ivp::Example::ex1, ivp::Example::ex2})
    for (double a : {0.3, 0.5, 0.7}) {
      double prev = final_error(ex, a, 20, parse_df("phi=sin"));
      for (std::size_t N = 40; N <= 640; N *= 2) {
        const double e = final_error(ex, a, N, parse_df("phi=sin"));
        EXPECT_LT(e, prev);
        prev = e;
      }
    }
}

TEST(Ivp, RejectsBaseDf) {
  const auto p = ivp::example_problem(ivp::Example::ex1, FractionalOrder(0.5));
  EXPECT_THROW(ivp::solve_ivp(p, FractionalOrder(0.5), 10, parse_df("phi=tau")), std::invalid_argument);
}
