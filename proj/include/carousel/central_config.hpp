#pragma once

#include "carousel/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace carousel {

struct CentralConfiguration {
  std::vector<Vec2> positions;
  std::vector<double> masses;
  Alpha alpha{2.0};
  double residual = 0;
  int iterations = 0;

  int size() const { return static_cast<int>(positions.size()); }
  VecX flat() const { return flatten(positions); }
  double total_mass() const {
    double s = 0;
    for (double m : masses) s += m;
    return s;
  }
};

struct AmendedPotentialEval {
  double value = 0;
  VecX gradient;
  MatX hessian;
};

/// V(u) = omega/2 sum m|u|^2 + sum_{i<j} m_i m_j phi(|u_i - u_j|); order selects
/// how many derivatives are assembled.
inline AmendedPotentialEval amended_potential(const VecX& u, const std::vector<double>& m, const Alpha& alpha,
                                              int order = 2, double omega = 1.0) {
  const int k = static_cast<int>(m.size());
  if (u.size() != 2 * k) throw std::invalid_argument("amended_potential: size mismatch");
  const double a = alpha.value();

  double diam = 0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) diam = std::max(diam, (u.segment<2>(2 * i) - u.segment<2>(2 * j)).norm());
  const double collide = 1e-12 * std::max(diam, 1e-300);

  AmendedPotentialEval ev;
  if (order >= 1) ev.gradient = VecX::Zero(2 * k);
  if (order >= 2) ev.hessian = MatX::Zero(2 * k, 2 * k);

  for (int i = 0; i < k; ++i) {
    Vec2 ui = u.segment<2>(2 * i);
    ev.value += 0.5 * omega * m[i] * ui.squaredNorm();
    if (order >= 1) ev.gradient.segment<2>(2 * i) += omega * m[i] * ui;
    if (order >= 2) ev.hessian.block<2, 2>(2 * i, 2 * i) += omega * m[i] * Mat2::Identity();
  }
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      Vec2 d = u.segment<2>(2 * i) - u.segment<2>(2 * j);
      double r = d.norm();
      if (r < collide) throw CollisionError(i, j, r);
      double mm = m[i] * m[j];
      ev.value += mm * phi(r, alpha);
      if (order < 1) continue;
      double ra1 = std::pow(r, -(a + 1.0));
      Vec2 f = mm * ra1 * d;  // attraction pulls u_i toward u_j
      ev.gradient.segment<2>(2 * i) -= f;
      ev.gradient.segment<2>(2 * j) += f;
      if (order < 2) continue;
      Mat2 blk = mm * (-ra1 * Mat2::Identity() + (a + 1.0) * ra1 / (r * r) * d * d.transpose());
      ev.hessian.block<2, 2>(2 * i, 2 * i) += blk;
      ev.hessian.block<2, 2>(2 * j, 2 * j) += blk;
      ev.hessian.block<2, 2>(2 * i, 2 * j) -= blk;
      ev.hessian.block<2, 2>(2 * j, 2 * i) -= blk;
    }
  }
  return ev;
}

inline double cc_residual(const VecX& u, const std::vector<double>& m, const Alpha& alpha) {
  return amended_potential(u, m, alpha, 1).gradient.norm();
}

struct CcSolveOptions {
  double tol = 1e-13;
  int max_iter = 60;
};

/// Newton on grad V over the zero-center-of-mass subspace, rotation fixed by
/// <u - a_guess, J a_guess> = 0 as a bordered row.
inline CentralConfiguration solve_central_config(const std::vector<Vec2>& guess, const std::vector<double>& masses,
                                                 const Alpha& alpha, CcSolveOptions opts = {}) {
  const int k = static_cast<int>(masses.size());
  if (static_cast<int>(guess.size()) != k || k < 2) throw std::invalid_argument("solve_central_config: bad sizes");

  double mt = 0;
  Vec2 c = Vec2::Zero();
  for (int i = 0; i < k; ++i) {
    mt += masses[i];
    c += masses[i] * guess[i];
  }
  c /= mt;
  VecX u(2 * k);
  for (int i = 0; i < k; ++i) u.segment<2>(2 * i) = guess[i] - c;
  const VecX anchor = u;
  const MatX B = com_free_basis(masses);
  const VecX zr = B.transpose() * apply_J_all(anchor);
  if (zr.norm() == 0) throw DegenerateError("solve_central_config: guess has no rotational direction");

  const int d = 2 * k - 2;
  auto ev = amended_potential(u, masses, alpha, 2);
  double res = ev.gradient.norm();
  int it = 0;
  while (res >= opts.tol) {
    if (it >= opts.max_iter) {
      if (res < 1e3 * opts.tol) break;  // round-off plateau
      throw SolverError("solve_central_config: no convergence, residual " + std::to_string(res));
    }
    MatX K = MatX::Zero(d + 1, d + 1);
    K.topLeftCorner(d, d) = B.transpose() * ev.hessian * B;
    K.block(0, d, d, 1) = zr;
    K.block(d, 0, 1, d) = zr.transpose();
    VecX rhs(d + 1);
    rhs.head(d) = -B.transpose() * ev.gradient;
    rhs[d] = -zr.dot(B.transpose() * (u - anchor));
    Eigen::FullPivLU<MatX> lu(K);
    lu.setThreshold(1e-13);
    if (lu.rank() < d + 1) throw DegenerateError("solve_central_config: singular bordered Newton system");
    VecX step = B * lu.solve(rhs).head(d);

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40 && !accepted; ++ls, t *= 0.5) {
      VecX trial = u + t * step;
      try {
        auto ev_t = amended_potential(trial, masses, alpha, 2);
        double r_t = ev_t.gradient.norm();
        if (r_t < (1.0 - 1e-4 * t) * res || r_t < opts.tol) {
          u = trial;
          ev = std::move(ev_t);
          res = r_t;
          accepted = true;
        }
      } catch (const CollisionError&) {
      }
    }
    ++it;
    if (accepted && res < 1e3 * opts.tol && t * step.norm() < 1e-13 * u.norm()) break;
    if (!accepted) {
      if (res < 1e3 * opts.tol) break;  // stalled at round-off level
      throw SolverError("solve_central_config: line search failed, residual " + std::to_string(res));
    }
  }

  CentralConfiguration cc;
  cc.positions = unflatten(u);
  cc.masses = masses;
  cc.alpha = alpha;
  cc.residual = res;
  cc.iterations = it;
  return cc;
}

/// sum_{l=1}^{k-1} 1/sin^{alpha-1}(l pi/k) / 2^alpha
inline double polygon_s1(int k, const Alpha& alpha) {
  const double a = alpha.value();
  double s = 0;
  for (int l = 1; l < k; ++l) {
    int lr = std::min(l, k - l);
    s += std::pow(std::sin(std::numbers::pi * lr / k), 1.0 - a);
  }
  return s * std::pow(2.0, -a);
}

/// Regular k-gon of unit masses rotating with frequency one.
inline CentralConfiguration polygon_config(int k, const Alpha& alpha) {
  if (k < 2) throw std::invalid_argument("polygon_config: k >= 2 required");
  const double radius = std::pow(polygon_s1(k, alpha), 1.0 / (alpha.value() + 1.0));
  CentralConfiguration cc;
  cc.alpha = alpha;
  cc.masses.assign(k, 1.0);
  for (int l = 1; l <= k; ++l) {
    double th = 2.0 * std::numbers::pi * l / k;
    cc.positions.emplace_back(radius * std::cos(th), radius * std::sin(th));
  }
  cc.residual = cc_residual(cc.flat(), cc.masses, alpha);
  return cc;
}

/// Equilateral triangle with side (m1+m2+m3)^{1/(alpha+1)}, centered by masses.
inline CentralConfiguration lagrange_config(double m1, double m2, double m3, const Alpha& alpha) {
  if (!(m1 > 0 && m2 > 0 && m3 > 0)) throw std::invalid_argument("lagrange_config: masses must be positive");
  const double side = std::pow(m1 + m2 + m3, 1.0 / (alpha.value() + 1.0));
  std::vector<Vec2> q = {Vec2(0, 0), Vec2(side, 0), Vec2(0.5 * side, 0.5 * std::sqrt(3.0) * side)};
  std::vector<double> m = {m1, m2, m3};
  Vec2 c = (m1 * q[0] + m2 * q[1] + m3 * q[2]) / (m1 + m2 + m3);
  for (auto& v : q) v -= c;
  CentralConfiguration cc;
  cc.positions = q;
  cc.masses = m;
  cc.alpha = alpha;
  cc.residual = cc_residual(cc.flat(), m, alpha);
  return cc;
}

/// Two bodies on the x-axis at separation (m1+m2)^{1/(alpha+1)}.
inline CentralConfiguration two_body_config(double m1, double m2, const Alpha& alpha) {
  const double mt = m1 + m2;
  const double sep = std::pow(mt, 1.0 / (alpha.value() + 1.0));
  CentralConfiguration cc;
  cc.positions = {Vec2(-m2 / mt * sep, 0), Vec2(m1 / mt * sep, 0)};
  cc.masses = {m1, m2};
  cc.alpha = alpha;
  cc.residual = cc_residual(cc.flat(), cc.masses, alpha);
  return cc;
}

/// Central configuration for arbitrary cluster masses: closed forms for k <= 3,
/// otherwise Newton seeded by the scaled polygon.
inline CentralConfiguration cluster_config(const std::vector<double>& masses, const Alpha& alpha) {
  const int k = static_cast<int>(masses.size());
  if (k == 1) {
    CentralConfiguration cc;
    cc.positions = {Vec2::Zero()};
    cc.masses = masses;
    cc.alpha = alpha;
    return cc;
  }
  if (k == 2) return two_body_config(masses[0], masses[1], alpha);
  if (k == 3) return lagrange_config(masses[0], masses[1], masses[2], alpha);
  double mean = 0;
  for (double m : masses) mean += m / k;
  auto poly = polygon_config(k, alpha);
  double scale = std::pow(mean, 1.0 / (alpha.value() + 1.0));
  std::vector<Vec2> guess;
  for (const auto& p : poly.positions) guess.push_back(scale * p);
  return solve_central_config(guess, masses, alpha);
}

inline double mass_beta(double m1, double m2, double m3) {
  double s = m1 + m2 + m3;
  return 27.0 * (m1 * m2 + m1 * m3 + m2 * m3) / (s * s);
}

}  // namespace carousel
