#include "carousel/central_config.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace carousel;

namespace {

double bisect(double lo, double hi, const std::function<double(double)>& f) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi), fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double circumradius(const std::vector<Vec2>& q) {
  Vec2 c = Vec2::Zero();
  for (auto& v : q) c += v / q.size();
  return (q[0] - c).norm();
}

}  // namespace

TEST(AmendedPotential, PolygonIsCritical) {
  for (double a : {1.0, 1.5, 2.0, 2.5, 3.0}) {
    for (int k = 2; k <= 12; ++k) {
      auto cc = polygon_config(k, Alpha(a));
      EXPECT_LT(cc.residual, 1e-11) << k << ' ' << a;
    }
  }
}

TEST(AmendedPotential, HessianMatchesFiniteDifferences) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0), um(0.5, 2.0);
  for (double a : {1.0, 1.5, 2.0}) {
    VecX x(8);
    for (int i = 0; i < 8; ++i) x[i] = u(rng);
    std::vector<double> m = {um(rng), um(rng), um(rng), um(rng)};
    auto ev = amended_potential(x, m, Alpha(a), 2);
    EXPECT_LT((ev.hessian - ev.hessian.transpose()).norm(), 1e-12 * ev.hessian.norm());
    MatX fd(8, 8);
    const double h = 1e-5;
    for (int c = 0; c < 8; ++c) {
      VecX xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      fd.col(c) = (amended_potential(xp, m, Alpha(a), 1).gradient - amended_potential(xm, m, Alpha(a), 1).gradient) / (2 * h);
    }
    EXPECT_LT((fd - ev.hessian).norm() / ev.hessian.norm(), 1e-6);
    // gradient against differences of the value
    VecX g(8);
    for (int c = 0; c < 8; ++c) {
      VecX xp = x, xm = x;
      xp[c] += h;
      xm[c] -= h;
      g[c] = (amended_potential(xp, m, Alpha(a), 0).value - amended_potential(xm, m, Alpha(a), 0).value) / (2 * h);
    }
    EXPECT_LT((g - ev.gradient).norm() / ev.gradient.norm(), 1e-7);
  }
}

TEST(AmendedPotential, TwoBodyKeplerRadius) {
  for (double a : {1.0, 1.5, 2.0, 3.0}) {
    const double mu = 0.5;
    double r = bisect(0.1, 10.0, [&](double x) { return mu * x - std::pow(x, -a); });
    VecX x(4);
    x << -r / 2, 0, r / 2, 0;
    EXPECT_LT(amended_potential(x, {1.0, 1.0}, Alpha(a), 1).gradient.norm(), 1e-12);
    x << -0.55 * r, 0, 0.55 * r, 0;
    EXPECT_GT(amended_potential(x, {1.0, 1.0}, Alpha(a), 1).gradient.norm(), 1e-3);
    auto tb = two_body_config(1.0, 1.0, Alpha(a));
    EXPECT_NEAR((tb.positions[1] - tb.positions[0]).norm(), r, 1e-12);
  }
}

TEST(AmendedPotential, CollisionIsReported) {
  VecX x(4);
  x << 0.3, 0.1, 0.3, 0.1;
  EXPECT_THROW(amended_potential(x, {1.0, 1.0}, Alpha(2.0), 1), CollisionError);
}

TEST(AmendedPotential, RotationEquivariance) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0), th(0.0, 6.28);
  std::vector<double> m = {1.0, 2.0, 0.5, 1.5, 0.7};
  for (int t = 0; t < 20; ++t) {
    VecX x(10);
    for (int i = 0; i < 10; ++i) x[i] = u(rng);
    double theta = th(rng);
    VecX g1 = amended_potential(rotate_all(x, theta), m, Alpha(1.5), 1).gradient;
    VecX g2 = rotate_all(amended_potential(x, m, Alpha(1.5), 1).gradient, theta);
    EXPECT_LT((g1 - g2).norm(), 1e-12 * std::max(1.0, g2.norm()));
  }
}

TEST(AmendedPotential, ScalingLaw) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0), ur(0.5, 2.0), uw(0.3, 3.0);
  std::vector<double> m = {1.0, 2.0, 0.5, 1.5};
  for (double a : {1.0, 1.5, 2.0, 2.5}) {
    for (int t = 0; t < 10; ++t) {
      VecX x(8);
      for (int i = 0; i < 8; ++i) x[i] = u(rng);
      double r = ur(rng), w = uw(rng);
      VecX lhs = amended_potential(r * x, m, Alpha(a), 1, std::pow(r, -(a + 1)) * w).gradient;
      VecX rhs = std::pow(r, -a) * amended_potential(x, m, Alpha(a), 1, w).gradient;
      EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());
    }
  }
}

TEST(Solver, PerturbedEquilateralTriangle) {
  std::vector<Vec2> guess = {Vec2(0.85, 0.02), Vec2(-0.40, 0.71), Vec2(-0.43, -0.74)};
  auto cc = solve_central_config(guess, {1.0, 1.0, 1.0}, Alpha(2.0));
  // oracle: force balance gives R^3 = 1/sqrt(3)
  EXPECT_NEAR(circumradius(cc.positions), std::pow(1.0 / std::sqrt(3.0), 1.0 / 3.0), 1e-12);
  EXPECT_NEAR(circumradius(cc.positions), 0.83268317765560432, 1e-12);
  EXPECT_LT(cc.residual, 1e-12);
}

TEST(Solver, ExactPolygonNeedsNoStep) {
  auto poly = polygon_config(6, Alpha(1.5));
  auto cc = solve_central_config(poly.positions, poly.masses, Alpha(1.5));
  EXPECT_LE(cc.iterations, 1);
  for (int i = 0; i < 6; ++i) EXPECT_LT((cc.positions[i] - poly.positions[i]).norm(), 1e-14);
}

TEST(Solver, EulerCollinear) {
  std::vector<Vec2> guess = {Vec2(-1.2, 0.0), Vec2(0.05, 0.0), Vec2(1.0, 0.0)};
  auto cc = solve_central_config(guess, {1.0, 1.0, 1.0}, Alpha(2.0));
  EXPECT_LT(cc.residual, 1e-12);
  // outer body: x = 1/x^2 + 1/(2x)^2
  double x = bisect(0.5, 2.0, [](double s) { return s - 1.0 / (s * s) - 0.25 / (s * s); });
  EXPECT_NEAR(x, 1.0772173450159419, 1e-14);
  double span = (cc.positions[2] - cc.positions[0]).norm();
  EXPECT_NEAR(span, 2 * x, 1e-11);
  EXPECT_LT(cc.positions[1].norm(), 1e-12);
}

TEST(Solver, PolygonMatchesSolveFromPerturbedSeed) {
  std::mt19937 rng(9);
  std::normal_distribution<double> nd(0.0, 0.01);
  for (double a : {1.5, 2.0}) {
    for (int k : {4, 5, 7}) {
      auto poly = polygon_config(k, Alpha(a));
      std::vector<Vec2> guess = poly.positions;
      for (auto& g : guess) g += Vec2(nd(rng), nd(rng));
      auto cc = solve_central_config(guess, poly.masses, Alpha(a));
      // align phase on body 1
      double ang = std::atan2(cc.positions[k - 1].y(), cc.positions[k - 1].x()) -
                   std::atan2(poly.positions[k - 1].y(), poly.positions[k - 1].x());
      Mat2 r = rot(-ang);
      for (int i = 0; i < k; ++i) EXPECT_LT((r * cc.positions[i] - poly.positions[i]).norm(), 1e-9);
      MatX H = amended_potential(cc.flat(), cc.masses, Alpha(a), 2).hessian;
      EXPECT_LT((H * apply_J_all(cc.flat())).norm(), 1e-9);
    }
  }
}

TEST(Generators, PolygonRadius) {
  auto p3 = polygon_config(3, Alpha(2.0));
  EXPECT_NEAR(polygon_s1(3, Alpha(2.0)), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(p3.positions[0].norm(), std::pow(3.0, -1.0 / 6.0), 1e-15);
  EXPECT_NEAR(polygon_s1(2, Alpha(2.0)), 0.25, 1e-16);
  EXPECT_NEAR(polygon_config(2, Alpha(2.0)).positions[0].norm(), std::cbrt(0.25), 1e-15);
}

TEST(Generators, Lagrange) {
  auto eq = lagrange_config(1, 1, 1, Alpha(2.0));
  EXPECT_NEAR(circumradius(eq.positions), 0.83268317765560432, 1e-14);
  auto l = lagrange_config(1, 2, 3, Alpha(2.0));
  EXPECT_LT(l.residual, 1e-12);
  double d01 = (l.positions[0] - l.positions[1]).norm();
  EXPECT_NEAR((l.positions[1] - l.positions[2]).norm(), d01, 1e-14);
  EXPECT_NEAR((l.positions[0] - l.positions[2]).norm(), d01, 1e-14);
  auto perm = lagrange_config(3, 1, 2, Alpha(2.0));
  EXPECT_NEAR((perm.positions[0] - perm.positions[1]).norm(), d01, 1e-14);
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> um(0.1, 10.0);
  for (int t = 0; t < 10; ++t) {
    for (double a : {1.0, 1.5, 2.0, 2.5}) {
      auto r = lagrange_config(um(rng), um(rng), um(rng), Alpha(a));
      EXPECT_LT(r.residual, 1e-12);
    }
  }
}

TEST(Generators, MassBeta) {
  EXPECT_DOUBLE_EQ(mass_beta(1, 1, 1), 9.0);
  EXPECT_DOUBLE_EQ(mass_beta(1, 2, 3), 8.25);
  EXPECT_NEAR(mass_beta(1, 1, 1e-12), 6.75, 1e-10);
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> um(0.01, 10.0);
  for (int t = 0; t < 100; ++t) EXPECT_LE(mass_beta(um(rng), um(rng), um(rng)), 9.0 + 1e-14);
}

TEST(Generators, ClusterConfigGeneralMasses) {
  for (auto masses : std::vector<std::vector<double>>{{0.5, 0.5}, {0.3, 0.7}, {1, 2, 3}, {1, 1, 1, 1}, {1, 1.2, 0.8, 1.1}}) {
    auto cc = cluster_config(masses, Alpha(1.5));
    EXPECT_LT(cc.residual, 1e-12);
  }
}
