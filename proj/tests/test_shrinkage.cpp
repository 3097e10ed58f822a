#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "warpshrink/shrinkage.hpp"

using namespace warpshrink;

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double log_normal_pdf(double x, double var) { return -0.5 * std::log(2.0 * M_PI * var) - x * x / (2.0 * var); }

// Median of the posterior written out from Bayes' rule: spike weight from
// the two marginal densities, slab posterior N(mu, s^2), CDF inverted by
// bisection.
double oracle_median(double b, double gamma_sq, double tau_sq, double pi) {
  const double log_spike = std::log1p(-pi) + log_normal_pdf(b, gamma_sq);
  const double log_slab = std::log(pi) + log_normal_pdf(b, tau_sq + gamma_sq);
  const double w0 = 1.0 / (1.0 + std::exp(log_slab - log_spike));
  const double mu = tau_sq * b / (tau_sq + gamma_sq);
  const double s = std::sqrt(tau_sq * gamma_sq / (tau_sq + gamma_sq));
  auto cdf = [&](double t) { return (t >= 0.0 ? w0 : 0.0) + (1.0 - w0) * normal_cdf((t - mu) / s); };
  if (cdf(-0.0) >= 0.5 && (1.0 - w0) * normal_cdf(-mu / s) < 0.5) return 0.0;
  double lo = mu - 40.0 * s - 1.0, hi = mu + 40.0 * s + 1.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) >= 0.5 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

struct Tuple {
  double b, gamma_sq, tau_sq, pi;
};

std::vector<Tuple> random_tuples(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> b(-5.0, 5.0), logv(std::log(1e-4), std::log(10.0)), p(0.0, 1.0);
  std::vector<Tuple> out;
  while (out.size() < count) {
    const double pi = p(rng);
    if (pi <= 0.0) continue;
    out.push_back({b(rng), std::exp(logv(rng)), std::exp(logv(rng)), pi});
  }
  return out;
}

}  // namespace

TEST(PosteriorMedian, Examples) {
  EXPECT_EQ(posterior_median(0.0, 0.3, 2.0, 0.4), 0.0);
  EXPECT_DOUBLE_EQ(posterior_median(2.0, 1.0, 1.0, 1.0), 1.0);
  EXPECT_NEAR(posterior_median(0.5, 0.01, 1.0, 0.5), oracle_median(0.5, 0.01, 1.0, 0.5), 1e-8);
  EXPECT_GT(posterior_median(0.5, 0.01, 1.0, 0.5), 0.0);
  EXPECT_EQ(posterior_median(3.0, 0.1, 1.0, 0.0), 0.0);
}

TEST(PosteriorMedian, RejectsInvalidParameters) {
  EXPECT_THROW(posterior_median(1.0, 0.0, 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(posterior_median(1.0, 1.0, -1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(posterior_median(1.0, 1.0, 1.0, 1.5), std::invalid_argument);
}

TEST(PosteriorMedian, MatchesPosteriorCdfInversion) {
  for (const auto& t : random_tuples(10000, 1)) {
    ASSERT_NEAR(posterior_median(t.b, t.gamma_sq, t.tau_sq, t.pi), oracle_median(t.b, t.gamma_sq, t.tau_sq, t.pi),
                1e-8)
        << t.b << " " << t.gamma_sq << " " << t.tau_sq << " " << t.pi;
  }
}

TEST(PosteriorMedian, ShrinksAndKeepsSign) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> b(-20.0, 20.0), logv(std::log(1e-6), std::log(100.0)), p(1e-9, 1.0);
  for (int i = 0; i < 100000; ++i) {
    const double bh = b(rng);
    const double m = posterior_median(bh, std::exp(logv(rng)), std::exp(logv(rng)), p(rng));
    ASSERT_LE(std::abs(m), std::abs(bh));
    ASSERT_TRUE(m == 0.0 || std::signbit(m) == std::signbit(bh));
  }
}

TEST(PosteriorMedian, MonotoneInBetaHat) {
  for (const auto& t : random_tuples(200, 9)) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 400; ++i) {
      const double b = -6.0 + 12.0 * i / 400.0;
      const double m = posterior_median(b, t.gamma_sq, t.tau_sq, t.pi);
      ASSERT_GE(m, prev);
      prev = m;
    }
  }
}

TEST(PosteriorMedian, LinearShrinkageAtPiOne) {
  for (const auto& t : random_tuples(1000, 3)) {
    const double linear = t.tau_sq / (t.tau_sq + t.gamma_sq) * t.b;
    EXPECT_NEAR(posterior_median(t.b, t.gamma_sq, t.tau_sq, 1.0), linear, 1e-10);
    EXPECT_NEAR(posterior_median(t.b, t.gamma_sq, t.tau_sq, 1.0 - 1e-12), linear, 1e-6);
  }
}

TEST(HyperSmall, Examples) {
  const SmallVarianceHyper d;
  EXPECT_DOUBLE_EQ(hyper_small(0, d).tau_sq, 1.0);
  EXPECT_DOUBLE_EQ(hyper_small(0, d).pi, 1.0);
  EXPECT_DOUBLE_EQ(hyper_small(4, d).tau_sq, 0.25);
  EXPECT_DOUBLE_EQ(hyper_small(4, d).pi, 0.125);
  EXPECT_DOUBLE_EQ(hyper_small(-1, d).tau_sq, hyper_small(0, d).tau_sq);
  SmallVarianceHyper flat{1.0, 0.5, 0.5, 0.0};
  for (int j = 0; j < 10; ++j) EXPECT_DOUBLE_EQ(hyper_small(j, flat).pi, 0.5);
  EXPECT_THROW(hyper_small(-2, d), std::invalid_argument);
}

TEST(HyperLarge, Examples) {
  LargeVarianceHyper unit{1.0, 1.0, 1.0, TauMode::theory};
  const PriorParams p = hyper_large(1024, unit);
  EXPECT_NEAR(p.tau_sq, 1.0 / std::sqrt(1024.0 * std::log(1024.0)), 1e-15);
  EXPECT_NEAR(p.tau_sq, 0.011864, 1e-5);
  EXPECT_NEAR(p.pi, 1.0 / 33.0, 1e-15);
  LargeVarianceHyper huge{1.0, 1e300, 1.0, TauMode::theory};
  EXPECT_NEAR(hyper_large(1024, huge).pi, 1.0, 1e-15);
  const PriorParams small = hyper_large(3, LargeVarianceHyper{});
  EXPECT_GT(small.tau_sq, 0.0);
  EXPECT_GT(small.pi, 0.0);
  EXPECT_LT(small.pi, 1.0);
  EXPECT_THROW(hyper_large(2, LargeVarianceHyper{}), std::invalid_argument);
}

TEST(HyperLarge, NoiseScaledModes) {
  const double nln = 1024.0 * std::log(1024.0);
  LargeVarianceHyper sd{1.0, 20.0, 20.0, TauMode::noise_sd};
  LargeVarianceHyper var{1.0, 20.0, 20.0, TauMode::noise_var};
  EXPECT_NEAR(hyper_large(1024, sd, 0.5).tau_sq, std::pow(20.0 * 0.25 / nln, 2), 1e-20);
  EXPECT_NEAR(hyper_large(1024, var, 0.5).tau_sq, 20.0 * 0.25 / nln, 1e-18);
}

TEST(HardThreshold, Examples) {
  const double lambda = std::sqrt(2.0 * std::log(1024.0)) / 32.0;
  EXPECT_NEAR(universal_threshold(1.0, 1024), lambda, 1e-15);
  EXPECT_NEAR(universal_threshold(1.0, 1024), 0.11637, 3e-5);
  EXPECT_EQ(hard_threshold(0.2, 1.0, 1024), 0.2);
  EXPECT_EQ(hard_threshold(-0.2, 1.0, 1024), -0.2);
  EXPECT_EQ(hard_threshold(0.0, 1.0, 1024), 0.0);
  EXPECT_EQ(hard_threshold_at(lambda, lambda), 0.0);
  EXPECT_EQ(hard_threshold_at(std::nextafter(lambda, 1.0), lambda), std::nextafter(lambda, 1.0));
}

TEST(LocateThreshold, SelfConsistentOnRandomGrid) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> logv(std::log(1e-4), std::log(10.0)), p(0.01, 0.99);
  for (int i = 0; i < 100; ++i) {
    const double tau_sq = std::exp(logv(rng)), gamma_sq = std::exp(logv(rng)), pi = p(rng);
    const double lambda = locate_threshold(tau_sq, pi, gamma_sq);
    EXPECT_EQ(posterior_median(lambda * 0.999, gamma_sq, tau_sq, pi), 0.0);
    EXPECT_EQ(posterior_median(lambda, gamma_sq, tau_sq, pi), 0.0);
    EXPECT_GT(posterior_median(lambda * 1.001, gamma_sq, tau_sq, pi), 0.0);
    EXPECT_GT(posterior_median(std::nextafter(lambda, 1e300), gamma_sq, tau_sq, pi), 0.0);
    EXPECT_EQ(posterior_median(-lambda, gamma_sq, tau_sq, pi), 0.0);
  }
  EXPECT_THROW(locate_threshold(1.0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(locate_threshold(1.0, 0.0, 1.0), std::invalid_argument);
}

TEST(LocateThreshold, ScalesLikeRootLogNOverN) {
  const SmallVarianceHyper d;
  for (int e = 8; e <= 16; ++e) {
    const double n = std::exp2(e);
    for (int j : {1, 3, 5}) {
      const PriorParams p = hyper_small(j, d);
      if (p.pi >= 1.0) continue;
      const double ratio = locate_threshold(p.tau_sq, p.pi, 1.0 / n) / std::sqrt(std::log(n) / n);
      EXPECT_GE(ratio, 0.2) << "n=2^" << e << " j=" << j;
      EXPECT_LE(ratio, 5.0) << "n=2^" << e << " j=" << j;
    }
  }
}

namespace {

CoefficientSet synthetic(int J, std::size_t n, double sigma, std::uint64_t seed) {
  CoefficientSet c(J, n, sigma);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> e(0.5, 1.5);
  for (std::size_t i = 0; i < c.size(); ++i) {
    c.design_energy()[i] = e(rng);
    c.gamma_sq()[i] = sigma * sigma / static_cast<double>(n) * c.design_energy()[i];
    c.beta_hat()[i] = 0.1 * z(rng);
  }
  return c;
}

}  // namespace

TEST(ApplyRule, AllZeroInputGivesZeroOutput) {
  const std::size_t n = 1024;
  for (const RuleSpec& rule : {RuleSpec{LargeVarianceHyper{}}, RuleSpec{SmallVarianceHyper{}}, RuleSpec{HardThreshold{}}}) {
    CoefficientSet c = synthetic(rule_cutoff(rule, n), n, 1.0, 1);
    std::fill(c.beta_hat().begin(), c.beta_hat().end(), 0.0);
    const auto out = apply_rule(c, rule);
    for (double b : out.coefficients.beta_hat()) EXPECT_EQ(b, 0.0);
  }
}

TEST(ApplyRule, HardRuleSelects) {
  const std::size_t n = 1024;
  for (HardScale scale : {HardScale::nominal, HardScale::stochastic, HardScale::literal}) {
    const RuleSpec rule = HardThreshold{scale, 1.0};
    const CoefficientSet c = synthetic(cutoff_large(n), n, 1.0, 2);
    const auto out = apply_rule(c, rule);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double b = out.coefficients.beta_hat()[i];
      EXPECT_TRUE(b == 0.0 || b == c.beta_hat()[i]);
      kept += b != 0.0;
    }
    EXPECT_GE(kept, 1u);
  }
}

TEST(ApplyRule, ScalingAtomPassesThroughAndCutoffIsChecked) {
  const std::size_t n = 1024;
  CoefficientSet c = synthetic(7, n, 1.0, 3);
  c.beta_hat()[0] = 1e-9;
  for (const RuleSpec& rule : {RuleSpec{LargeVarianceHyper{}}, RuleSpec{HardThreshold{}}}) {
    EXPECT_EQ(apply_rule(c, rule).coefficients.beta_hat()[0], 1e-9);
  }
  EXPECT_THROW(apply_rule(c, SmallVarianceHyper{}), std::invalid_argument);
  EXPECT_EQ(rule_cutoff(SmallVarianceHyper{}, n), 9);
  EXPECT_EQ(rule_cutoff(SmallVarianceHyper{1, 2, 2.0, 1}, n), 4);
  EXPECT_EQ(rule_cutoff(LargeVarianceHyper{}, n), 7);
}

TEST(ApplyRule, LargeCoefficientNearlyUnshrunk) {
  const std::size_t n = 1024;
  CoefficientSet c(cutoff_large(n), n, 1.0);
  std::fill(c.design_energy().begin(), c.design_energy().end(), 1.0);
  std::fill(c.gamma_sq().begin(), c.gamma_sq().end(), 1.0 / n);
  c.beta_hat()[flat_index(3, 4)] = 10.0;
  c.beta_hat()[flat_index(5, 1)] = -10.0;
  const auto out = apply_rule(c, LargeVarianceHyper{}).coefficients;
  EXPECT_NEAR(out.beta(3, 4), 10.0, 0.1);
  EXPECT_NEAR(out.beta(5, 1), -10.0, 0.1);
  EXPECT_EQ(out.beta(2, 0), 0.0);
}

TEST(ApplyRule, EmptyAtomsAreZeroedAndFlagged) {
  const std::size_t n = 1024;
  CoefficientSet c = synthetic(7, n, 1.0, 4);
  const std::size_t idx = flat_index(6, 9);
  c.design_energy()[idx] = 0.0;
  c.gamma_sq()[idx] = 0.0;
  c.beta_hat()[idx] = 3.0;
  const auto out = apply_rule(c, LargeVarianceHyper{});
  EXPECT_EQ(out.coefficients.beta_hat()[idx], 0.0);
  ASSERT_EQ(out.empty_atoms.size(), 1u);
  EXPECT_EQ(out.empty_atoms[0], idx);
}

TEST(ApplyRule, ZeroNoiseKeepsCoefficients) {
  const std::size_t n = 1024;
  CoefficientSet c = synthetic(7, n, 0.0, 5);
  const auto out = apply_rule(c, LargeVarianceHyper{});
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(out.coefficients.beta_hat()[i], c.beta_hat()[i]);
}

TEST(ApplyRule, ThresholdConsistencyWithinTheRule) {
  const std::size_t n = 1024;
  const CoefficientSet c = synthetic(9, n, 1.0, 6);
  const auto out = apply_rule(c, SmallVarianceHyper{}).coefficients;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const AtomIndex a = atom_at(i);
    const PriorParams p = hyper_small(a.j, SmallVarianceHyper{});
    if (p.pi >= 1.0) continue;
    const double lambda = locate_threshold(p.tau_sq, p.pi, c.gamma_sq()[i]);
    EXPECT_EQ(out.beta_hat()[i] == 0.0, std::abs(c.beta_hat()[i]) <= lambda);
  }
}

TEST(WeightAudit, HardRuleWeightsAreZeroOrOne) {
  const std::size_t n = 1024;
  const CoefficientSet c = synthetic(cutoff_large(n), n, 1.0, 7);
  const auto out = apply_rule(c, HardThreshold{}).coefficients;
  const WeightAuditReport r = weight_audit(c, out, n);
  EXPECT_EQ(r.weights_outside_unit, 0u);
  EXPECT_TRUE(std::isfinite(r.k_min));
  EXPECT_NEAR(r.t_n, std::sqrt(std::log(1024.0) / 1024.0), 1e-15);
  EXPECT_EQ(r.level_cutoff, 7);
  EXPECT_EQ(r.atoms_checked, c.size() - 1);
}

TEST(WeightAudit, AllZeroInput) {
  const std::size_t n = 1024;
  CoefficientSet c(7, n, 1.0);
  const WeightAuditReport r = weight_audit(c, c, n);
  EXPECT_EQ(r.weights_outside_unit, 0u);
  EXPECT_EQ(r.c_min, 0.0);
  EXPECT_EQ(r.above_cutoff_nonzero, 0u);
}

TEST(WeightAudit, BayesConstantsStableAcrossSeeds) {
  const std::size_t n = 1024;
  double c_lo = 1e300, c_hi = 0.0, k_lo = 1e300, k_hi = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    CoefficientSet c = synthetic(cutoff_large(n), n, 1.0, seed);
    // A few genuine signal coefficients alongside the noise.
    c.beta_hat()[flat_index(2, 1)] = 1.0;
    c.beta_hat()[flat_index(4, 7)] = 0.5;
    const auto out = apply_rule(c, LargeVarianceHyper{}).coefficients;
    const WeightAuditReport r = weight_audit(c, out, n);
    EXPECT_EQ(r.weights_outside_unit, 0u);
    c_lo = std::min(c_lo, r.c_min);
    c_hi = std::max(c_hi, r.c_min);
    k_lo = std::min(k_lo, r.k_min);
    k_hi = std::max(k_hi, r.k_min);
  }
  EXPECT_GT(k_lo, 0.0);
  EXPECT_LE(k_hi, 3.0 * k_lo);
  if (c_hi > 0.0) {
    EXPECT_LE(c_hi, 3.0 * c_lo);
  }
}
