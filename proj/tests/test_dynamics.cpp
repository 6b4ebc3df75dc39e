#include "carousel/dynamics.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace carousel;

namespace {

const double kPi = std::numbers::pi;

/// Rigid rotation at frequency one of a frequency-one central configuration.
PhaseState rigid_state(const CentralConfiguration& cc) {
  PhaseState s;
  s.positions = cc.positions;
  for (const auto& q : cc.positions) s.velocities.push_back(apply_J(q));
  return s;
}

VecX rigid_at(const CentralConfiguration& cc, double t) {
  PhaseState s;
  for (const auto& q : cc.positions) {
    s.positions.push_back(rot(t) * q);
    s.velocities.push_back(apply_J(rot(t) * q));
  }
  return pack(s);
}

}  // namespace

TEST(Rhs, TwoBodyExample) {
  auto a = rhs({Vec2(-0.5, 0), Vec2(0.5, 0)}, {1, 1}, Alpha(2.0));
  EXPECT_NEAR((a[0] - Vec2(1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((a[1] - Vec2(-1, 0)).norm(), 0.0, 1e-15);
  EXPECT_THROW(rhs({Vec2(0, 0), Vec2(0, 0)}, {1, 1}, Alpha(2.0)), CollisionError);
  EXPECT_THROW(rhs({Vec2(0, 0), Vec2(1e-9, 0)}, {1, 1}, Alpha(2.0), 1e-8), CollisionError);
}

TEST(Rhs, RelativeEquilibriumIdentity) {
  for (auto cc : {polygon_config(5, Alpha(1.5)), lagrange_config(1, 2, 3, Alpha(2.0)), polygon_config(4, Alpha::logarithmic())}) {
    auto a = rhs(cc.positions, cc.masses, cc.alpha);
    for (int i = 0; i < cc.size(); ++i) EXPECT_LT((a[i] + cc.positions[i]).norm(), 1e-12);
  }
}

TEST(Rhs, NewtonThirdLaw) {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(-2, 2), um(0.1, 3);
  for (int t = 0; t < 20; ++t) {
    std::vector<Vec2> q;
    std::vector<double> m;
    for (int i = 0; i < 6; ++i) {
      q.emplace_back(u(rng), u(rng));
      m.push_back(um(rng));
    }
    auto a = rhs(q, m, Alpha(1.7));
    Vec2 s = Vec2::Zero();
    double scale = 0;
    for (int i = 0; i < 6; ++i) {
      s += m[i] * a[i];
      scale += m[i] * a[i].norm();
    }
    EXPECT_LT(s.norm(), 1e-13 * scale);
  }
}

TEST(Invariants, Examples) {
  PhaseState rest{{Vec2(0, 0), Vec2(2, 0)}, {Vec2::Zero(), Vec2::Zero()}, 0};
  auto inv = invariants_of(rest, {1.0, 3.0}, Alpha(2.0));
  EXPECT_DOUBLE_EQ(inv.energy, -1.5);
  auto tb = two_body_config(1.0, 3.0, Alpha(2.0));
  auto s = rigid_state(tb);
  double r = (tb.positions[1] - tb.positions[0]).norm();
  double mu = 1.0 * 3.0 / 4.0;
  EXPECT_NEAR(invariants_of(s, tb.masses, tb.alpha).angular_momentum, mu * r * r * 1.0, 1e-14);
  EXPECT_LT(invariants_of(s, tb.masses, tb.alpha).momentum.norm(), 1e-15);
}

TEST(Integrate, CircularKeplerOrbit) {
  auto tb = two_body_config(1.0, 1.0, Alpha(2.0));
  IntegrateOptions o;
  o.rtol = o.atol = 1e-12;
  auto tr = integrate(rigid_state(tb), tb.masses, tb.alpha, 2 * kPi, o);
  EXPECT_LT((tr.back() - tr.front()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(tr.energy_drift(), 1e-11);
  EXPECT_LT(tr.angular_momentum_drift(), 1e-11);
  EXPECT_LT(periodicity_defect(tr, 2 * kPi), 1e-9);
}

TEST(Integrate, PolygonReturnsToStart) {
  auto cc = polygon_config(4, Alpha::logarithmic());
  auto tr = integrate(rigid_state(cc), cc.masses, cc.alpha, 2 * kPi);
  EXPECT_LT(periodicity_defect(tr, 2 * kPi), 1e-8);
}

TEST(Integrate, DenseOutputMatchesRigidRotation) {
  auto cc = lagrange_config(1, 2, 3, Alpha(2.0));
  IntegrateOptions o;
  o.rtol = o.atol = 1e-12;
  for (int i = 1; i < 40; ++i) o.sample_times.push_back(0.15 * i);
  auto tr = integrate(rigid_state(cc), cc.masses, cc.alpha, 6.0, o);
  ASSERT_EQ(tr.size(), 41u);
  for (std::size_t i = 0; i < tr.size(); ++i)
    EXPECT_LT((tr.states[i] - rigid_at(cc, tr.times[i])).cwiseAbs().maxCoeff(), 1e-10) << tr.times[i];
}

TEST(Integrate, TimeReversal) {
  auto tb = two_body_config(1.0, 1.0, Alpha(2.0));
  auto s0 = rigid_state(tb);
  for (double tol : {1e-10, 1e-11}) {
    IntegrateOptions o;
    o.rtol = o.atol = tol;
    auto fwd = integrate(s0, tb.masses, tb.alpha, 10.0, o);
    auto back = integrate(unpack(fwd.back(), 10.0), tb.masses, tb.alpha, 0.0, o);
    EXPECT_LT((back.back() - pack(s0)).cwiseAbs().maxCoeff(), 10 * tol);
    EXPECT_DOUBLE_EQ(back.times.back(), 0.0);
  }
}

TEST(Integrate, ConvergenceOrder) {
  // eccentric Kepler arc; reference from a tight adaptive run
  PhaseState s{{Vec2(-0.5, 0), Vec2(0.5, 0)}, {Vec2(0, -0.55), Vec2(0, 0.55)}, 0};
  std::vector<double> m = {1, 1};
  IntegrateOptions ref_o;
  ref_o.rtol = ref_o.atol = 1e-15;
  VecX ref = integrate(s, m, Alpha(2.0), 2.0, ref_o).back();
  std::vector<double> errs;
  for (double h : {0.05, 0.025}) {
    IntegrateOptions o;
    o.fixed_step = h;
    errs.push_back((integrate(s, m, Alpha(2.0), 2.0, o).back() - ref).norm());
  }
  double order = std::log2(errs[0] / errs[1]);
  EXPECT_NEAR(order, 8.0, 0.5) << errs[0] << ' ' << errs[1];
}

TEST(Integrate, CollisionIsReported) {
  PhaseState s{{Vec2(-0.5, 0), Vec2(0.5, 0)}, {Vec2::Zero(), Vec2::Zero()}, 0};
  EXPECT_THROW(integrate(s, {1, 1}, Alpha(2.0), 5.0), NumericError);
}

TEST(Diagnostics, DefectRequiresSpan) {
  auto cc = polygon_config(3, Alpha(2.0));
  auto tr = integrate(rigid_state(cc), cc.masses, cc.alpha, 1.0);
  EXPECT_THROW(periodicity_defect(tr, 2.0), std::invalid_argument);
}

TEST(Diagnostics, WindingNumbersOfCarousel) {
  auto f = lagrange_binary_family(1, 2, 3, Alpha::from_rational(3, 2));
  for (auto [p, q, pj] : std::vector<std::tuple<long long, long long, long long>>{{60, 1, 1}, {100, 1, -1}}) {
    auto plan = plan_rational({pj}, p, q, f.alpha());
    IntegrateOptions o;
    o.rtol = o.atol = 1e-10;
    o.sample_times = winding_samples(plan);
    auto tr = integrate(carousel_state(f, plan), f.masses(), f.alpha(), plan.period, o);
    auto w = winding_numbers(tr, f.index);
    for (auto b : w.base) EXPECT_EQ(b, q);
    EXPECT_EQ(w.clusters[0], q + pj * p);
  }
}
