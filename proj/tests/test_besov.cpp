#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "warpshrink/besov.hpp"

using namespace warpshrink;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CoefficientArray random_array(std::mt19937_64& rng, int J, double decay) {
  CoefficientArray arr = CoefficientArray::zeros(J);
  std::normal_distribution<double> z;
  for (int j = -1; j <= J; ++j) {
    for (double& b : arr.at(j)) b = z(rng) * std::exp2(-std::max(j, 0) * decay);
  }
  return arr;
}

CoefficientArray scaled(CoefficientArray arr, double t) {
  for (auto& row : arr.levels) {
    for (double& b : row) b *= t;
  }
  return arr;
}

}  // namespace

TEST(CoefficientArray, LevelShapes) {
  const CoefficientArray arr = CoefficientArray::zeros(4);
  EXPECT_EQ(arr.levels.size(), 6u);
  EXPECT_EQ(arr.at(-1).size(), 1u);
  EXPECT_EQ(arr.at(0).size(), 1u);
  EXPECT_EQ(arr.at(4).size(), 16u);
  CoefficientArray bad = arr;
  bad.at(2).push_back(0.0);
  EXPECT_THROW(besov_norm(bad, {}), std::invalid_argument);
}

TEST(CoefficientArray, FromCoefficientSet) {
  CoefficientSet c(3, 10, 1.0);
  c.beta_hat()[flat_index(2, 3)] = 0.5;
  c.beta_hat()[0] = -1.0;
  const CoefficientArray arr = CoefficientArray::from(c);
  EXPECT_EQ(arr.at(2)[3], 0.5);
  EXPECT_EQ(arr.at(-1)[0], -1.0);
}

TEST(BesovNorm, SingleCoefficient) {
  CoefficientArray arr = CoefficientArray::zeros(3);
  arr.at(0)[0] = 1.0;
  EXPECT_DOUBLE_EQ(besov_norm(arr, {0.5, 2.0, kInf}), 1.0);
}

TEST(BesovNorm, GeometricDecayPeaksAtLevelZero) {
  const double s = 0.5;
  CoefficientArray arr = CoefficientArray::zeros(8);
  for (int j = 0; j <= 8; ++j) arr.at(j)[0] = std::exp2(-j * (s + 0.5));
  EXPECT_NEAR(besov_norm(arr, {s, 2.0, kInf}), 1.0, 1e-15);
  // q = 2: sum_j 2^{-j} over j = 0..8.
  EXPECT_NEAR(besov_norm(arr, {s, 2.0, 2.0}), std::sqrt(2.0 - std::exp2(-8)), 1e-14);
}

TEST(BesovNorm, HandComputedMixedCase) {
  CoefficientArray arr = CoefficientArray::zeros(1);
  arr.at(-1)[0] = 2.0;
  arr.at(0)[0] = 1.0;
  arr.at(1) = {3.0, 4.0};
  // s=1, p=1, q=1: weights 2^{j/2}, l1 rows {2, 1, 7}.
  EXPECT_NEAR(besov_norm(arr, {1.0, 1.0, 1.0}), 2.0 * std::exp2(-0.5) + 1.0 + 7.0 * std::exp2(0.5), 1e-14);
}

TEST(BesovNorm, HomogeneousAndRejectsInadmissible) {
  std::mt19937_64 rng(1);
  const CoefficientArray arr = random_array(rng, 6, 0.7);
  for (const BesovIndex idx : {BesovIndex{1.0, 2.0, kInf}, BesovIndex{0.8, 1.0, 3.0}}) {
    EXPECT_NEAR(besov_norm(scaled(arr, 2.0), idx), 2.0 * besov_norm(arr, idx), 1e-12);
    EXPECT_NEAR(besov_norm(scaled(arr, -3.0), idx), 3.0 * besov_norm(arr, idx), 1e-12);
  }
  EXPECT_THROW(besov_norm(arr, {0.4, 1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(besov_norm(arr, {1.0, 0.5, 2.0}), std::invalid_argument);
  EXPECT_EQ(besov_norm(CoefficientArray{}, {}), 0.0);
}

TEST(S2InfSeminorm, Examples) {
  CoefficientArray arr = CoefficientArray::zeros(4);
  arr.at(0)[0] = 1.0;
  EXPECT_DOUBLE_EQ(besov_s2inf_seminorm(arr, 1.0), 1.0);
  EXPECT_EQ(besov_s2inf_seminorm(CoefficientArray::zeros(4), 1.0), 0.0);
  EXPECT_THROW(besov_s2inf_seminorm(arr, 0.0), std::invalid_argument);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const CoefficientArray r = random_array(rng, 7, 0.5);
    double top = 0.0;
    for (double b : r.at(7)) top += b * b;
    EXPECT_GE(besov_s2inf_seminorm(r, 0.6), std::exp2(2.0 * 7 * 0.6) * top * (1 - 1e-15));
    // Quadratic in the coefficients, so its square root is homogeneous.
    EXPECT_NEAR(std::sqrt(besov_s2inf_seminorm(scaled(r, 3.0), 0.6)), 3.0 * std::sqrt(besov_s2inf_seminorm(r, 0.6)),
                1e-9);
  }
}

TEST(WeakBesov, Examples) {
  CoefficientArray one = CoefficientArray::zeros(2);
  one.at(1)[1] = 0.3;
  for (double r : {0.5, 1.0, 1.7}) EXPECT_NEAR(weak_besov_norm(one, r), std::pow(0.3, r / 2.0), 1e-15);
  EXPECT_EQ(weak_besov_norm(CoefficientArray::zeros(3), 1.0), 0.0);
  CoefficientArray two = CoefficientArray::zeros(1);
  two.at(0)[0] = 1.0;
  two.at(1)[0] = -0.5;
  EXPECT_NEAR(weak_besov_norm(two, 1.0), std::sqrt(1.25), 1e-15);
  EXPECT_THROW(weak_besov_norm(two, 2.0), std::invalid_argument);
}

TEST(WeakBesov, AgreesWithDenseLambdaScan) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const CoefficientArray arr = random_array(rng, 4, 0.6);
    const auto mags = arr.magnitudes();
    double hi = 0.0;
    for (double m : mags) hi = std::max(hi, m);
    double scan = 0.0;
    for (int s = 1; s <= 20000; ++s) {
      const double lambda = hi * 1.5 * s / 20000.0;
      double acc = 0.0;
      for (double m : mags) acc += m <= lambda ? m * m : 0.0;
      scan = std::max(scan, std::pow(lambda, 0.8 - 2.0) * acc);
    }
    const double exact = weak_besov_norm(arr, 0.8);
    EXPECT_GE(exact * (1 + 1e-12), std::sqrt(scan));
    EXPECT_NEAR(exact, std::sqrt(scan), 0.02 * exact);
  }
}

TEST(WeakBesov, Homogeneous) {
  std::mt19937_64 rng(4);
  const CoefficientArray arr = random_array(rng, 6, 0.5);
  // Under beta -> t beta the squared norm scales as t^r.
  for (double r : {0.5, 1.0, 1.5}) {
    EXPECT_NEAR(weak_besov_norm(scaled(arr, 4.0), r), std::pow(4.0, r / 2.0) * weak_besov_norm(arr, r), 1e-12);
  }
}

TEST(Prop1, Examples) {
  const auto zero = prop1_check(CoefficientArray::zeros(3), 1.0);
  EXPECT_TRUE(zero.holds);
  EXPECT_EQ(zero.lhs, 0.0);
  CoefficientArray one = CoefficientArray::zeros(2);
  one.at(2)[3] = 0.7;
  const auto single = prop1_check(one, 1.0);
  EXPECT_TRUE(single.holds);
  EXPECT_NEAR(single.lhs, 0.7, 1e-15);
  EXPECT_NEAR(single.rhs, 4.0 * 0.7, 1e-15);
  EXPECT_NEAR(single.ratio, 0.25, 1e-15);
}

TEST(Prop1, LhsMatchesDenseLambdaScan) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const CoefficientArray arr = random_array(rng, 4, 0.4);
    const auto mags = arr.magnitudes();
    double scan = 0.0;
    for (int s = 1; s <= 20000; ++s) {
      const double lambda = 4.0 * s / 20000.0;
      double count = 0.0;
      for (double m : mags) count += m > lambda;
      scan = std::max(scan, std::pow(lambda, 1.5) * count);
    }
    const auto res = prop1_check(arr, 1.5);
    EXPECT_GE(res.lhs * (1 + 1e-12), scan);
    EXPECT_NEAR(res.lhs, scan, 0.01 * res.lhs);
  }
}

TEST(Prop1, HoldsOnFuzzedArrays) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> decay(0.0, 1.5);
  std::uniform_int_distribution<int> level(0, 9);
  for (double r : {0.25, 0.5, 1.0, 1.5}) {
    for (int i = 0; i < 10000; ++i) {
      const auto res = prop1_check(random_array(rng, level(rng), decay(rng)), r);
      ASSERT_TRUE(res.holds) << "r=" << r << " lhs=" << res.lhs << " rhs=" << res.rhs;
    }
  }
}

TEST(Embedding, WeakNormBoundedOnNormalizedBesovBodies) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> sdist(0.2, 2.0), extra(-0.3, 0.8);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double s = sdist(rng);
    CoefficientArray arr = random_array(rng, 10, s + 0.5 + extra(rng));
    const double semi = besov_s2inf_seminorm(arr, s);
    arr = scaled(arr, 1.0 / std::sqrt(semi));
    ASSERT_NEAR(besov_s2inf_seminorm(arr, s), 1.0, 1e-12);
    worst = std::max(worst, weak_besov_norm(arr, 2.0 / (1.0 + 2.0 * s)));
  }
  // Splitting the sum at the level where 2^J ~ lambda^{-2/(1+2s)} bounds the
  // squared weak norm by 2 + 1.
  EXPECT_LE(worst, std::sqrt(3.0));
}
