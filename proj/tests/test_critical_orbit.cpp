#include <bit>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "entroscope/critical_orbit.hpp"
#include "entroscope/precision.hpp"

using namespace entroscope;

namespace {
const PrecisionContext<double> ctx;

template <class Real>
Real xi(Real a, int n) {
  Real x = a;
  for (int k = 0; k < n; ++k) x = x * x + a;
  return x;
}

// Central difference evaluated in 256-bit arithmetic, so that neither
// rounding nor the cubic truncation term is visible at double resolution.
double fd_xi_prime(double a, int n) {
  const Real256 e("1e-30");
  const Real256 A(a);
  return to_double(Real256((xi(Real256(A + e), n) - xi(Real256(A - e), n)) / (2 * e)));
}

double period3_center() {
  double lo = -1.76, hi = -1.75;
  auto g = [](double a) { return (a * a + a) * (a * a + a) + a; };
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(lo) < 0) == (g(mid) < 0) ? lo = mid : hi = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace

TEST(CriticalOrbit, ChebyshevStats) {
  const auto s = critical_stats(-2.0, 3, ctx);
  EXPECT_EQ(s.xi, (std::vector<double>{-2, 2, 2, 2}));
  EXPECT_EQ(s.xi_prime[1], -3.0);
  ASSERT_TRUE(s.lambda[3].has_value());
  EXPECT_NEAR(*s.lambda[3], std::log(4.0), 1e-15);
  EXPECT_FALSE(s.critical_hit.has_value());
}

TEST(CriticalOrbit, ParabolicEndpointLyapunovTendsToZero) {
  const auto s = critical_stats(0.25, 200000, ctx);
  ASSERT_TRUE(s.lambda.back().has_value());
  EXPECT_LT(std::abs(*s.lambda.back()), 1e-3);
}

TEST(CriticalOrbit, XiPrimeMatchesFiniteDifference) {
  const auto s = critical_stats(-1.8, 10, ctx);
  const double e = 1e-7;
  const double fd = (xi(-1.8 + e, 10) - xi(-1.8 - e, 10)) / (2 * e);
  EXPECT_NEAR(s.xi_prime[10] / fd, 1.0, 1e-4);
  EXPECT_NEAR(s.xi_prime[10] / fd_xi_prime(-1.8, 10), 1.0, 1e-10);
}

TEST(CriticalOrbit, XiPrimeMatchesFiniteDifferenceRandom) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pick(-2.0, 0.25);
  for (int i = 0; i < 100; ++i) {
    const double a = pick(rng);
    const auto s = critical_stats(a, 15, ctx);
    for (int n = 1; n <= 15; ++n) {
      const double d = s.xi_prime[n];
      const double fd = fd_xi_prime(a, n);
      EXPECT_LE(std::abs(d - fd), 1e-4 * std::abs(fd)) << "a=" << a << " n=" << n;
    }
  }
}

TEST(CriticalOrbit, XiPrimeExpandedSum) {
  // xi_k' = sum_{j=0}^{k} prod_{i=j}^{k-1} 2 xi_i.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pick(-2.0, 0.25);
  for (int t = 0; t < 100; ++t) {
    const double a = pick(rng);
    const auto s = critical_stats(a, 30, ctx);
    for (int k = 0; k <= 30; ++k) {
      double sum = 0;
      for (int j = 0; j <= k; ++j) {
        double p = 1;
        for (int i = j; i < k; ++i) p *= 2 * s.xi[i];
        sum += p;
      }
      EXPECT_NEAR(s.xi_prime[k], sum, 1e-9 * std::max(1.0, std::abs(sum))) << a << " " << k;
    }
  }
}

TEST(CriticalOrbit, LyapunovChainRule) {
  for (double a : {-1.95, -1.7, -1.5}) {
    const auto s = critical_stats(a, 1000, ctx);
    if (s.critical_hit) continue;
    double sum = 0;
    for (std::size_t j = 1; j <= 1000; ++j) {
      sum += std::log(std::abs(2 * s.xi[j - 1]));
      ASSERT_TRUE(s.lambda[j].has_value());
      EXPECT_NEAR(*s.lambda[j] * static_cast<double>(j), sum, 1e-10 * static_cast<double>(j));
    }
  }
}

TEST(CriticalOrbit, LyapunovEstimateAtChebyshev) {
  const auto e = lyapunov_estimate(-2.0, 1000, ctx);
  ASSERT_TRUE(e.value.has_value());
  EXPECT_NEAR(*e.value, 2 * std::log(2.0), 1e-12);
  EXPECT_TRUE(e.converged);
}

TEST(CriticalOrbit, LyapunovAtSuperattractingIsUnavailable) {
  const auto e = lyapunov_estimate(period3_center(), 100, ctx);
  EXPECT_FALSE(e.value.has_value());
  EXPECT_FALSE(e.converged);
}

TEST(CriticalOrbit, TransversalityChebyshev) {
  EXPECT_NEAR(transversality_Q(-2.0, 60, ctx), 2.0 / 3.0, 1e-10);
  double direct = 1, term = 1;
  for (int k = 1; k <= 60; ++k) {
    term /= (k == 1 ? -4.0 : 4.0);
    direct += term;
  }
  EXPECT_NEAR(transversality_Q(-2.0, 60, ctx), direct, 1e-15);
}

TEST(CriticalOrbit, TransversalityTrivialAndHit) {
  EXPECT_EQ(transversality_Q(-1.3, 0, ctx), 1.0);
  EXPECT_THROW(transversality_Q(period3_center(), 2, ctx), CriticalHit);
}

TEST(CriticalOrbit, TransversalityRatioSumIdentity) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> pick(-2.0, -1.4);
  for (int i = 0; i < 50; ++i) {
    const double a = pick(rng);
    const auto s = critical_stats(a, 20, ctx);
    if (s.critical_hit) continue;
    double deriv = 1;
    for (int j = 0; j < 20; ++j) deriv *= 2 * s.xi[j];
    const double ratio = s.xi_prime[20] / deriv;
    double sum = 0, abs_sum = 0, inv = 1;
    for (int j = 0; j <= 20; ++j) {
      sum += inv;
      abs_sum += std::abs(inv);
      if (j < 20) inv /= 2 * s.xi[j];
    }
    EXPECT_NEAR(ratio, sum, 1e-8 * abs_sum) << a;
    EXPECT_NEAR(transversality_Q(a, 20, ctx), sum, 1e-12 * abs_sum) << a;
  }
}

TEST(CriticalOrbit, WeakRegularityExamples) {
  const auto w = wr_statistic(-2.0, 0.1, 1000, ctx);
  ASSERT_TRUE(w.value.has_value());
  EXPECT_EQ(*w.value, 0.0);
  EXPECT_EQ(w.returns, 0u);
  for (std::size_t n : {3, 10, 500}) EXPECT_TRUE(wr_statistic(period3_center(), 0.1, n, ctx).superattracting);
  EXPECT_THROW(wr_statistic(-1.9, 0.0, 10, ctx), InvalidArgument);
}

TEST(CriticalOrbit, WeakRegularityBruteForceBitForBit) {
  const double a = -1.9, delta = 0.05;
  const std::size_t n = 10000;
  volatile double x = 0;
  double sum = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    x = x * x + a;
    if (std::abs(x) <= delta) sum += std::log(2 * std::abs(x));
  }
  const double brute = sum / static_cast<double>(n);
  const auto w = wr_statistic(a, delta, n, ctx);
  ASSERT_TRUE(w.value.has_value());
  EXPECT_EQ(std::bit_cast<std::uint64_t>(*w.value), std::bit_cast<std::uint64_t>(brute));
}

TEST(CriticalOrbit, WeakRegularityAddedTermsAreNearCritical) {
  // Growing delta only adds terms with log|f'| <= log(2 delta).
  for (double a : {-1.9, -1.63, -1.41}) {
    const auto small = wr_statistic(a, 0.05, 2000, ctx);
    const auto big = wr_statistic(a, 0.2, 2000, ctx);
    ASSERT_TRUE(small.value && big.value);
    ASSERT_GE(big.returns, small.returns);
    const double added = (*big.value - *small.value) * 2000;
    EXPECT_LE(added, static_cast<double>(big.returns - small.returns) * std::log(2 * 0.2) + 1e-9) << a;
  }
}
