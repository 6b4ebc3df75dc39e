#include "carousel/interval.hpp"
#include "carousel/spectral.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace carousel;
using I = Interval<double>;

TEST(Interval, ArithmeticExamples) {
  EXPECT_TRUE((I(1.0) + I(2.0)).contains(3.0));
  I p = I(-1.0, 2.0) * I(-3.0, 1.0);
  EXPECT_LE(p.lo, -6.0);
  EXPECT_GE(p.hi, 3.0);
  EXPECT_LT(p.width(), 9.0 + 1e-14);
  I q = I(1.0, 2.0) / I(4.0, 4.0);
  EXPECT_LE(q.lo, 0.25);
  EXPECT_GE(q.hi, 0.5);
  EXPECT_THROW(I(1.0) / I(-1.0, 1.0), std::domain_error);
  I thirds = I::ratio(1, 3);
  EXPECT_LT(thirds.lo, thirds.hi);
  EXPECT_TRUE((thirds * I(3.0)).contains(1.0));
}

TEST(Interval, Elementary) {
  const double pi = std::numbers::pi;
  EXPECT_TRUE(isin(I(I::down(pi / 2), I::up(pi / 2))).contains(1.0));
  I s = isqrt(I(4.0, 9.0));
  EXPECT_LE(s.lo, 2.0);
  EXPECT_GE(s.hi, 3.0);
  EXPECT_THROW(isqrt(I(-1.0, 1.0)), std::domain_error);
  I sp = isin(I(0.0, pi));
  EXPECT_LE(sp.lo, 0.0);
  EXPECT_GE(sp.hi, 1.0);
  I sq = ipow(I(-1.0, 2.0), 2);
  EXPECT_EQ(sq.lo, 0.0);
  EXPECT_GE(sq.hi, 4.0);
  I cube = ipow(I(-2.0, 1.0), 3);
  EXPECT_LE(cube.lo, -8.0);
  EXPECT_GE(cube.hi, 1.0);
  EXPECT_TRUE(isin_pi_ratio<double>(1, 6).contains(0.5));
  EXPECT_TRUE(isin_pi_ratio<double>(7, 6).contains(-0.5));
  EXPECT_TRUE(I::pi().contains(pi));
}

TEST(Interval, ExcludesZero) {
  EXPECT_TRUE(excludes_zero(I(0.1, 0.2)));
  EXPECT_FALSE(excludes_zero(I(-1.0, 1.0)));
  EXPECT_TRUE(excludes_zero(I(-0.2, -0.1)));
}

TEST(Interval, InclusionMonotonicity) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0), w(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    double a0 = u(rng), b0 = u(rng);
    I a(a0, a0 + w(rng)), b(b0, b0 + w(rng));
    I A(a.lo - w(rng), a.hi + w(rng)), B(b.lo - w(rng), b.hi + w(rng));
    EXPECT_TRUE((a + b).subset_of(A + B));
    EXPECT_TRUE((a - b).subset_of(A - B));
    EXPECT_TRUE((a * b).subset_of(A * B));
    if (B.excludes_zero()) {
      EXPECT_TRUE((a / b).subset_of(A / B));
    }
    EXPECT_TRUE(isin(a).subset_of(isin(A)));
    EXPECT_TRUE(ipow(a, 3).subset_of(ipow(A, 3)));
  }
}

TEST(Interval, PointEvaluationContainment) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-4.0, 4.0), pos(0.1, 4.0);
  for (int t = 0; t < 10000; ++t) {
    double x = u(rng), y = u(rng), z = pos(rng);
    double f = (x * y + std::sin(x)) / z - std::sqrt(z) * y * y * y;
    I F = (I(x) * I(y) + isin(I(x))) / I(z) - isqrt(I(z)) * ipow(I(y), 3);
    EXPECT_TRUE(F.contains(f)) << x << ' ' << y << ' ' << z;
  }
}

TEST(Interval, SCoefficientEnclosures) {
  const Alpha grav = Alpha::newtonian();
  // frozen high-precision values
  auto s4 = s_table_interval<double>(4, grav);
  EXPECT_TRUE(s4[1].contains(0.95710678118654752));
  EXPECT_TRUE(s4[2].contains(1.4142135623730950));
  EXPECT_EQ(s4[4].lo, 0.0);
  EXPECT_EQ(s4[4].hi, 0.0);
  for (int k : {5, 17, 64, 250, 1000}) {
    auto s = s_table_interval<double>(k, grav);
    for (int j = 1; j <= k / 2; j += std::max(1, k / 20)) {
      double f = s_coeff_sum(k, j, 2.0);
      EXPECT_NEAR(s[j].mid(), f, 1e-11 * f);
      EXPECT_LT(s[j].width() / s[j].mid(), 1e-8);
    }
  }
  auto a15 = s_coeff_interval<double>(7, 3, Alpha::from_rational(3, 2));
  EXPECT_TRUE(a15.contains(6.1268108111046756)) << a15;
}

TEST(Interval, KeplerBlockEnclosureAtZero) {
  // P_2(0) for k = 4, alpha = 2; oracle by 40-digit evaluation
  const double oracle = 1.7367876960090081;
  auto s = s_table_interval<double>(4, Alpha::newtonian());
  I two_s1 = I(2.0) * s[1];
  I b = I(3.0) * (s[2] - s[1]) / two_s1;
  I P = (I(1.0) + s[1] / two_s1) * (I(1.0) + s[3] / two_s1) - isqr(b);
  EXPECT_TRUE(excludes_zero(P));
  EXPECT_TRUE(P.contains(oracle)) << P;
  EXPECT_LT(P.width(), 1e-10);
}

TEST(Interval, ExtendedPrecisionIsTighter) {
  auto sd = s_table_interval<double>(200, Alpha::newtonian());
  auto sl = s_table_interval<long double>(200, Alpha::newtonian());
  for (int j = 1; j <= 100; j += 9) {
    EXPECT_LT(static_cast<double>(sl[j].width()), sd[j].width());
    EXPECT_LE(sd[j].lo, static_cast<double>(sl[j].hi));
    EXPECT_GE(sd[j].hi, static_cast<double>(sl[j].lo));
  }
}
