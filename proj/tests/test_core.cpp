#include "carousel/core.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace carousel;

namespace {

// phi(r) = int_r^inf s^-a ds, substituted s = r/u and integrated by Simpson
double phi_by_quadrature(double r, double a) {
  const int n = 2000;
  auto f = [&](double u) { return std::pow(r, 1.0 - a) * std::pow(u, a - 2.0); };
  double h = 1.0 / n, s = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(Potential, NamedValues) {
  EXPECT_DOUBLE_EQ(phi(1.0, Alpha(2.0)), 1.0);
  EXPECT_DOUBLE_EQ(phi(1.0, Alpha(1.0)), 0.0);
  EXPECT_NEAR(phi(2.0, Alpha(3.0)), phi_by_quadrature(2.0, 3.0), 1e-12);
  EXPECT_NEAR(phi(2.0, Alpha(3.0)), 0.125, 1e-15);
}

TEST(Potential, DerivativeContractAndMonotonicity) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ur(0.05, 20.0), ua(1.0, 4.0);
  for (int i = 0; i < 500; ++i) {
    double r = ur(rng);
    Alpha a(ua(rng));
    EXPECT_NEAR(dphi(r, a) * std::pow(r, a.value()), -1.0, 1e-15);
    EXPECT_GT(phi(r, a), phi(r * 1.01, a));
    double h = 1e-4 * r;
    double fd = (phi(r + h, a) - phi(r - h, a)) / (2 * h);
    EXPECT_NEAR(fd, dphi(r, a), 1e-6 * std::abs(dphi(r, a)));
  }
  EXPECT_THROW(phi(0.0, Alpha(2.0)), std::domain_error);
  EXPECT_THROW(phi(-1.0, Alpha(1.0)), std::domain_error);
}

TEST(Alpha, TagsAndParsing) {
  EXPECT_THROW(Alpha(0.5), std::domain_error);
  EXPECT_TRUE(Alpha::parse("log").is_logarithmic());
  EXPECT_TRUE(Alpha::parse("newton").is_gravitational());
  auto a = Alpha::parse("21/20");
  ASSERT_TRUE(a.exact());
  EXPECT_EQ(a.exact()->num, 21);
  EXPECT_EQ(a.exact()->den, 20);
  auto b = Alpha::parse("1.05");
  ASSERT_TRUE(b.exact());
  EXPECT_EQ(*b.exact(), *a.exact());
  auto c = Alpha::parse("6/4");
  EXPECT_EQ(c.exact()->num, 3);
  EXPECT_EQ(c.exact()->den, 2);
  EXPECT_FALSE(Alpha::parse("1.5e0").exact());
  EXPECT_THROW(Alpha::parse("abc"), std::invalid_argument);
}

TEST(Planar, GeneratorIdentities) {
  Mat2 I = identity2(), J = J2(), R = R2();
  EXPECT_EQ(J * J, -I);
  EXPECT_EQ(R * R, I);
  EXPECT_EQ(J * R, -(R * J));
  Mat2C iJ = iJ2();
  EXPECT_EQ(iJ, iJ.adjoint());
  EXPECT_NEAR((rot(0.3) - (std::cos(0.3) * I + std::sin(0.3) * J)).norm(), 0.0, 1e-16);
}

TEST(ClusterIndex, MultiIndexExamples) {
  ClusterIndex idx({2, 1});
  EXPECT_EQ(idx.to_multi(0), std::make_pair(1, 1));
  EXPECT_EQ(idx.to_multi(2), std::make_pair(2, 1));
  EXPECT_EQ(idx.n0(), 1);
  EXPECT_EQ(idx.N(), 3);
  EXPECT_THROW(idx.to_multi(3), std::out_of_range);
  EXPECT_THROW(ClusterIndex({1, 2}), std::invalid_argument);
}

TEST(ClusterIndex, RoundTrip) {
  ClusterIndex idx({3, 2, 1, 1});
  EXPECT_EQ(idx.n0(), 2);
  for (int f = 0; f < idx.N(); ++f) {
    auto [j, k] = idx.to_multi(f);
    EXPECT_EQ(idx.to_flat(j, k), f);
  }
}

TEST(CenterOfMass, Examples) {
  ClusterConfig cfg(ClusterIndex({2}), {1.0, 1.0}, {Vec2(1, 0), Vec2(3, 0)});
  auto out = center_of_mass_project(cfg);
  EXPECT_NEAR((out.positions[0] - Vec2(-1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((out.positions[1] - Vec2(1, 0)).norm(), 0.0, 1e-15);
  auto again = center_of_mass_project(out);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(again.positions[i], out.positions[i]);
}

TEST(CenterOfMass, RandomConfigurationsAndJacobiSplit) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0), um(0.1, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    ClusterIndex idx({3, 2, 1, 1});
    std::vector<double> m;
    std::vector<Vec2> q;
    for (int i = 0; i < idx.N(); ++i) {
      m.push_back(um(rng));
      q.emplace_back(u(rng), u(rng));
    }
    ClusterConfig cfg(idx, m, q);
    auto c = center_of_mass_project(cfg);
    EXPECT_LT(c.momentum_like(c.positions).norm(), 1e-14 * 10);
    auto cc = center_of_mass_project(c);
    for (int i = 0; i < idx.N(); ++i) EXPECT_LT((cc.positions[i] - c.positions[i]).cwiseAbs().maxCoeff(), 1e-14);

    auto split = split_jacobi(cfg);
    Vec2 s0 = Vec2::Zero();
    for (int j = 1; j <= idx.n(); ++j) {
      s0 += cfg.cluster_mass(j) * split.centers[j - 1];
      Vec2 sj = Vec2::Zero();
      for (int k = 1; k <= idx.size(j); ++k) sj += cfg.mass(j, k) * split.relative[idx.to_flat(j, k)];
      EXPECT_LT(sj.norm(), 1e-13);
    }
    EXPECT_LT(s0.norm(), 1e-13);
    auto back = merge_jacobi(split, idx, m);
    for (int i = 0; i < idx.N(); ++i) EXPECT_LT((back.positions[i] - q[i]).norm(), 1e-13);
  }
}

TEST(Basis, ComFreeBasisIsOrthonormalAndConstrained) {
  std::vector<double> m = {1.0, 2.0, 3.0, 0.5};
  MatX B = com_free_basis(m);
  EXPECT_EQ(B.cols(), 6);
  EXPECT_LT((B.transpose() * B - MatX::Identity(6, 6)).norm(), 1e-14);
  for (int c = 0; c < B.cols(); ++c) {
    Vec2 s = Vec2::Zero();
    for (int i = 0; i < 4; ++i) s += m[i] * B.col(c).segment<2>(2 * i);
    EXPECT_LT(s.norm(), 1e-14);
  }
}
