#pragma once

#include "carousel/carousel.hpp"
#include "carousel/central_config.hpp"
#include "carousel/core.hpp"
#include "carousel/dynamics.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace carousel {

// ---------------------------------------------------------------------------
// Fourier paths

/// Real trigonometric storage: column 0 holds the mean, columns 2l-1 and 2l
/// the cos(l s) and sin(l s) coefficients. Block 0 is the base configuration
/// (n bodies), block j the shape of cluster j.
struct FourierPath {
  int L = 0;
  std::vector<MatX> blocks;

  int columns() const { return 2 * L + 1; }
  int num_blocks() const { return static_cast<int>(blocks.size()); }

  /// d^order/ds^order of block b at s.
  VecX eval(int b, double s, int order = 0) const {
    const MatX& c = blocks.at(b);
    VecX out = order == 0 ? VecX(c.col(0)) : VecX::Zero(c.rows());
    for (int l = 1; l <= L; ++l) {
      const double cs = std::cos(l * s), sn = std::sin(l * s), lp = std::pow(static_cast<double>(l), order);
      // derivatives cycle cos -> -sin -> -cos -> sin
      double fa, fb;
      switch (order % 4) {
        case 0: fa = cs; fb = sn; break;
        case 1: fa = -sn; fb = cs; break;
        case 2: fa = -cs; fb = -sn; break;
        default: fa = sn; fb = -cs; break;
      }
      out += lp * (fa * c.col(2 * l - 1) + fb * c.col(2 * l));
    }
    return out;
  }

  /// Complex coefficient for exp(i l s), l >= 0; negative l are conjugates.
  VecXC coefficient(int b, int l) const {
    const MatX& c = blocks.at(b);
    if (l == 0) return c.col(0).cast<cplx>();
    return (c.col(2 * l - 1).cast<cplx>() - cplx(0, 1) * c.col(2 * l).cast<cplx>()) * 0.5;
  }

  /// Largest |u_L| over the blocks.
  double tail() const {
    double t = 0;
    for (int b = 0; b < num_blocks(); ++b) t = std::max(t, coefficient(b, L).norm());
    return t;
  }

  FourierPath resized(int new_L) const {
    FourierPath p;
    p.L = new_L;
    for (const auto& c : blocks) {
      MatX n = MatX::Zero(c.rows(), 2 * new_L + 1);
      const int keep = std::min(c.cols(), n.cols());
      n.leftCols(keep) = c.leftCols(keep);
      p.blocks.push_back(n);
    }
    return p;
  }

  double distance(const FourierPath& o) const {
    double d = 0;
    const int L0 = std::max(L, o.L);
    const auto a = resized(L0), b = o.resized(L0);
    for (int i = 0; i < num_blocks(); ++i) d += (a.blocks[i] - b.blocks[i]).squaredNorm();
    return std::sqrt(d);
  }
};

/// Constant path through a0 and exp(theta_j J) a_j.
inline FourierPath lift(const CarouselFamily& f, const CarouselPlan& plan, int L) {
  FourierPath p;
  p.L = L;
  MatX base = MatX::Zero(2 * f.n(), 2 * L + 1);
  base.col(0) = f.a0.flat();
  p.blocks.push_back(base);
  for (int j = 1; j <= f.n0(); ++j) {
    const auto& cc = f.clusters[j - 1];
    MatX c = MatX::Zero(2 * cc.size(), 2 * L + 1);
    c.col(0) = rotate_all(cc.flat(), plan.phases.at(j - 1));
    p.blocks.push_back(c);
  }
  return p;
}

// ---------------------------------------------------------------------------
// discrete action

struct RefineOptions {
  double tol = 1e-10;
  int max_iter = 40;
  int L = 32;
  int max_L = 256;
  double tail_tol = 1e-10;
  bool coupling = true;
  int polish = 3;  // extra Newton steps after tol while the residual keeps falling
};

struct ActionEval {
  double value = 0;
  VecX gradient;  // Euclidean gradient in reduced coordinates
  MatX hessian;
};

/// Mode-major reduced unknowns: x[col * Dr + r], r running over the reduced
/// coordinates of every block (zero center of mass per block).
class RefineSystem {
 public:
  RefineSystem(const CarouselFamily& f, const CarouselPlan& plan, int L, bool coupling = true)
      : f_(f), plan_(plan), L_(L), coupling_(coupling) {
    if (plan.n0() != f.n0()) throw std::invalid_argument("RefineSystem: plan and family disagree on n0");
    nodes_ = 4 * L + 1;
    const double a = f.alpha().value();
    masses_all_ = f.masses();
    add_block(f.a0.masses, plan.nu, 1.0);
    for (int j = 1; j <= f.n0(); ++j) {
      const double w = plan.omega[j - 1], r = plan.radii[j - 1];
      add_block(f.clusters[j - 1].masses, plan.nu / w, std::pow(r, 1.0 - a));
    }
    Dr_ = 0;
    Da_ = 0;
    for (std::size_t b = 0; b < basis_.size(); ++b) {
      red_off_.push_back(Dr_);
      amb_off_.push_back(Da_);
      Dr_ += static_cast<int>(basis_[b].cols());
      Da_ += static_cast<int>(basis_[b].rows());
    }
    Bfull_ = MatX::Zero(Da_, Dr_);
    Jr_ = MatX::Zero(Dr_, Dr_);
    for (std::size_t b = 0; b < basis_.size(); ++b) {
      Bfull_.block(amb_off_[b], red_off_[b], basis_[b].rows(), basis_[b].cols()) = basis_[b];
      MatX JB(basis_[b].rows(), basis_[b].cols());
      for (Eigen::Index c = 0; c < basis_[b].cols(); ++c) JB.col(c) = apply_J_all(basis_[b].col(c));
      Jr_.block(red_off_[b], red_off_[b], basis_[b].cols(), basis_[b].cols()) = basis_[b].transpose() * JB;
    }
    build_quadratic();
    trig_ = MatX(columns(), nodes_);
    for (int n = 0; n < nodes_; ++n) {
      const double s = node(n);
      trig_(0, n) = 1.0;
      for (int l = 1; l <= L_; ++l) {
        trig_(2 * l - 1, n) = std::cos(l * s);
        trig_(2 * l, n) = std::sin(l * s);
      }
    }
  }

  int L() const { return L_; }
  int columns() const { return 2 * L_ + 1; }
  int dim() const { return Dr_ * columns(); }
  int nodes() const { return nodes_; }
  double node(int n) const { return 2.0 * std::numbers::pi * n / nodes_; }

  VecX to_x(const FourierPath& p) const {
    if (p.L != L_ || p.num_blocks() != static_cast<int>(basis_.size()))
      throw std::invalid_argument("RefineSystem: path shape mismatch");
    VecX x(dim());
    for (int c = 0; c < columns(); ++c)
      for (std::size_t b = 0; b < basis_.size(); ++b)
        x.segment(c * Dr_ + red_off_[b], basis_[b].cols()) = basis_[b].transpose() * p.blocks[b].col(c);
    return x;
  }

  FourierPath to_path(const VecX& x) const {
    FourierPath p;
    p.L = L_;
    for (std::size_t b = 0; b < basis_.size(); ++b) {
      MatX m(basis_[b].rows(), columns());
      for (int c = 0; c < columns(); ++c) m.col(c) = basis_[b] * x.segment(c * Dr_ + red_off_[b], basis_[b].cols());
      p.blocks.push_back(m);
    }
    return p;
  }

  /// Value, gradient and (order 2) Hessian of the discrete action.
  ActionEval evaluate(const VecX& x, int order = 2) const {
    ActionEval ev;
    ev.value = 0.5 * x.dot(Q_ * x);
    if (order >= 1) ev.gradient = Q_ * x;
    if (order >= 2) ev.hessian = Q_;
    const Eigen::Map<const MatX> Z(x.data(), Dr_, columns());
    const double w = 2.0 * std::numbers::pi / nodes_;
    MatX G = MatX::Zero(Dr_, columns());
    MatX hvals;  // Dr*Dr x nodes
    if (order >= 2) hvals = MatX::Zero(Dr_ * Dr_, nodes_);
    for (int n = 0; n < nodes_; ++n) {
      const VecX ur = Z * trig_.col(n);
      const VecX ua = Bfull_ * ur;
      auto pt = pointwise(ua, node(n), order);
      ev.value += w * pt.value;
      if (order >= 1) G += (w * (Bfull_.transpose() * pt.gradient)) * trig_.col(n).transpose();
      if (order >= 2) {
        const MatX Hr = Bfull_.transpose() * pt.hessian * Bfull_;
        hvals.col(n) = Eigen::Map<const VecX>(Hr.data(), Dr_ * Dr_) * w;
      }
    }
    if (order >= 1) ev.gradient += Eigen::Map<const VecX>(G.data(), dim());
    if (order >= 2) {
      for (int i = 0; i < Dr_; ++i) {
        for (int j = 0; j < Dr_; ++j) {
          const VecX h = hvals.row(j * Dr_ + i).transpose();
          const MatX M = trig_ * h.asDiagonal() * trig_.transpose();
          for (int a = 0; a < columns(); ++a)
            for (int b = 0; b < columns(); ++b) ev.hessian(a * Dr_ + i, b * Dr_ + j) += M(a, b);
        }
      }
    }
    return ev;
  }

  /// H^1 Riesz representative of the gradient: mode l scaled by 1/(pi(1+l^2)), the mean by 1/(2 pi).
  VecX precondition(const VecX& g) const {
    VecX out = g;
    for (int c = 0; c < columns(); ++c) {
      const int l = (c + 1) / 2;
      const double s = c == 0 ? 1.0 / (2.0 * std::numbers::pi) : 1.0 / (std::numbers::pi * (1.0 + l * l));
      out.segment(c * Dr_, Dr_) *= s;
    }
    return out;
  }

  /// L^2 weights of the trigonometric basis.
  VecX l2_weights() const {
    VecX w(dim());
    for (int c = 0; c < columns(); ++c) w.segment(c * Dr_, Dr_).setConstant(c == 0 ? 2.0 * std::numbers::pi : std::numbers::pi);
    return w;
  }

  /// Infinitesimal common rotation of every block.
  VecX rotation_generator(const VecX& x) const {
    VecX g(dim());
    for (int c = 0; c < columns(); ++c) g.segment(c * Dr_, Dr_) = Jr_ * x.segment(c * Dr_, Dr_);
    return g;
  }

  /// Infinitesimal shift s -> s + sigma combined with the cluster counter-rotation p_j sigma.
  VecX shift_generator(const VecX& x) const {
    VecX g = VecX::Zero(dim());
    for (int l = 1; l <= L_; ++l) {
      g.segment((2 * l - 1) * Dr_, Dr_) = l * x.segment(2 * l * Dr_, Dr_);
      g.segment(2 * l * Dr_, Dr_) = -l * x.segment((2 * l - 1) * Dr_, Dr_);
    }
    for (int c = 0; c < columns(); ++c) {
      for (std::size_t b = 1; b < basis_.size(); ++b) {
        const int o = c * Dr_ + red_off_[b], d = static_cast<int>(basis_[b].cols());
        g.segment(o, d) += static_cast<double>(plan_.p_list[b - 1]) * Jr_.block(red_off_[b], red_off_[b], d, d) * x.segment(o, d);
      }
    }
    return g;
  }

  const CarouselPlan& plan() const { return plan_; }
  const CarouselFamily& family() const { return f_; }

 private:
  struct Pointwise {
    double value = 0;
    VecX gradient;
    MatX hessian;
  };

  void add_block(const std::vector<double>& m, double c, double weight) {
    basis_.push_back(com_free_basis(m));
    block_masses_.push_back(m);
    speed_.push_back(c);
    weight_.push_back(weight);
  }

  void build_quadratic() {
    Q_ = MatX::Zero(dim(), dim());
    const double pi = std::numbers::pi;
    for (std::size_t b = 0; b < basis_.size(); ++b) {
      const MatX& B = basis_[b];
      const int d = static_cast<int>(B.cols()), o = red_off_[b];
      MatX M = MatX::Zero(B.rows(), B.rows());
      for (std::size_t i = 0; i < block_masses_[b].size(); ++i) M.block<2, 2>(2 * i, 2 * i) = block_masses_[b][i] * Mat2::Identity();
      MatX MJ = M;
      for (std::size_t i = 0; i < block_masses_[b].size(); ++i) MJ.block<2, 2>(2 * i, 2 * i) = block_masses_[b][i] * J2();
      const MatX BMB = B.transpose() * M * B, BMJB = B.transpose() * MJ * B;
      const double w = weight_[b], c = speed_[b];
      Q_.block(o, o, d, d) = 2.0 * pi * w * BMB;
      for (int l = 1; l <= L_; ++l) {
        const int ia = (2 * l - 1) * Dr_ + o, ib = 2 * l * Dr_ + o;
        const MatX diag = pi * w * (1.0 + c * c * l * l) * BMB;
        const MatX off = 2.0 * pi * w * c * l * BMJB;
        Q_.block(ia, ia, d, d) = diag;
        Q_.block(ib, ib, d, d) = diag;
        Q_.block(ia, ib, d, d) = -off;
        Q_.block(ib, ia, d, d) = off;
      }
    }
  }

  /// Potential at one node as a function of the ambient block coordinates.
  Pointwise pointwise(const VecX& ua, double s, int order) const {
    Pointwise pt;
    const Alpha& alpha = f_.alpha();
    if (order >= 1) pt.gradient = VecX::Zero(Da_);
    if (order >= 2) pt.hessian = MatX::Zero(Da_, Da_);
    if (coupling_) {
      const int N = f_.index.N();
      VecX X(2 * N);
      MatX C = MatX::Zero(2 * N, Da_);
      for (int j = 1; j <= f_.n(); ++j) {
        for (int k = 1; k <= f_.index.size(j); ++k) {
          const int i = f_.index.to_flat(j, k);
          X.segment<2>(2 * i) = ua.segment<2>(2 * (j - 1));
          C.block<2, 2>(2 * i, 2 * (j - 1)) = Mat2::Identity();
          if (j <= f_.n0()) {
            const double r = plan_.radii[j - 1];
            const Mat2 R = r * rot(static_cast<double>(plan_.p_list[j - 1]) * s);
            const int col = amb_off_[j] + 2 * (k - 1);
            X.segment<2>(2 * i) += R * ua.segment<2>(col);
            C.block<2, 2>(2 * i, col) = R;
          }
        }
      }
      auto ev = amended_potential(X, masses_all_, alpha, order, 0.0);
      pt.value = ev.value;
      if (order >= 1) pt.gradient = C.transpose() * ev.gradient;
      if (order >= 2) pt.hessian = C.transpose() * ev.hessian * C;
      return pt;
    }
    auto ev0 = amended_potential(ua.head(2 * f_.n()), f_.a0.masses, alpha, order, 0.0);
    pt.value = ev0.value;
    if (order >= 1) pt.gradient.head(2 * f_.n()) = ev0.gradient;
    if (order >= 2) pt.hessian.topLeftCorner(2 * f_.n(), 2 * f_.n()) = ev0.hessian;
    for (int j = 1; j <= f_.n0(); ++j) {
      const double r = plan_.radii[j - 1];
      const int o = amb_off_[j], d = 2 * f_.index.size(j);
      auto ev = amended_potential(r * ua.segment(o, d), f_.clusters[j - 1].masses, alpha, order, 0.0);
      pt.value += ev.value;
      if (order >= 1) pt.gradient.segment(o, d) = r * ev.gradient;
      if (order >= 2) pt.hessian.block(o, o, d, d) = r * r * ev.hessian;
    }
    return pt;
  }

  const CarouselFamily& f_;
  const CarouselPlan& plan_;
  int L_;
  bool coupling_;
  int nodes_ = 0;
  std::vector<double> masses_all_;
  std::vector<MatX> basis_;
  std::vector<std::vector<double>> block_masses_;
  std::vector<double> speed_, weight_;
  std::vector<int> red_off_, amb_off_;
  int Dr_ = 0, Da_ = 0;
  MatX Bfull_, Jr_, Q_, trig_;
};

inline double discrete_action(const FourierPath& path, const CarouselPlan& plan, const CarouselFamily& f,
                              bool coupling = true) {
  RefineSystem sys(f, plan, path.L, coupling);
  return sys.evaluate(sys.to_x(path), 0).value;
}

/// Projected H^1 gradient as a path of coefficients.
inline FourierPath action_gradient(const FourierPath& path, const CarouselPlan& plan, const CarouselFamily& f,
                                   bool coupling = true) {
  RefineSystem sys(f, plan, path.L, coupling);
  return sys.to_path(sys.precondition(sys.evaluate(sys.to_x(path), 1).gradient));
}

// ---------------------------------------------------------------------------
// bordered Newton

struct RefineReport {
  std::vector<double> residual_history;
  double residual = 0;  // |H^1 gradient| at exit
  int iterations = 0;
  double condition = 0;  // reciprocal condition estimate of the bordered matrix
  std::vector<std::string> phase_constraints;
  double symmetry_residual = 0;  // |<gradient, generator>| / |generator|
  double tail = 0;
  int L = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::pair<VecX, RefineReport> newton_fixed_L(const RefineSystem& sys, const VecX& x0, const RefineOptions& opts) {
  RefineReport rep;
  rep.L = sys.L();
  const VecX w = sys.l2_weights();
  MatX C(2, sys.dim());
  C.row(0) = w.cwiseProduct(sys.rotation_generator(x0)).transpose();
  C.row(1) = w.cwiseProduct(sys.shift_generator(x0)).transpose();
  rep.phase_constraints = {"<u - u_init, J u_init> = 0 (common rotation)",
                           "<u - u_init, u_init' + p_j J u_j,init> = 0 (time shift)"};
  for (int r = 0; r < 2; ++r) {
    const double nr = C.row(r).norm();
    if (nr == 0) throw DegenerateError("refine: symmetry generator vanishes at the initial path");
    C.row(r) /= nr;
  }

  VecX x = x0;
  auto ev = sys.evaluate(x, 2);
  double res = sys.precondition(ev.gradient).norm();
  rep.residual_history.push_back(res);
  int polish_left = opts.polish;
  const int D = sys.dim();
  while (true) {
    if (res < opts.tol) {
      if (polish_left-- <= 0) break;
    }
    if (rep.iterations >= opts.max_iter) break;
    MatX K = MatX::Zero(D + 2, D + 2);
    K.topLeftCorner(D, D) = ev.hessian;
    K.topRightCorner(D, 2) = C.transpose();
    K.bottomLeftCorner(2, D) = C;
    VecX rhs(D + 2);
    rhs.head(D) = -ev.gradient;
    rhs.tail(2) = -C * (x - x0);
    Eigen::PartialPivLU<MatX> lu(K);
    rep.condition = lu.rcond();
    if (!(rep.condition > 1e-15)) throw DegenerateError("refine: bordered Newton matrix is singular");
    const VecX step = lu.solve(rhs).head(D);

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30 && !accepted; ++ls, t *= 0.5) {
      try {
        VecX xt = x + t * step;
        auto et = sys.evaluate(xt, 2);
        const double rt = sys.precondition(et.gradient).norm();
        if (rt <= (1.0 - 1e-4 * t) * res) {
          x = std::move(xt);
          ev = std::move(et);
          res = rt;
          accepted = true;
        }
      } catch (const CollisionError&) {
      }
    }
    ++rep.iterations;
    if (!accepted) break;
    rep.residual_history.push_back(res);
  }
  rep.residual = res;
  rep.converged = res < opts.tol;
  for (const VecX& gen : {sys.rotation_generator(x), sys.shift_generator(x)}) {
    if (gen.norm() > 0) rep.symmetry_residual = std::max(rep.symmetry_residual, std::abs(ev.gradient.dot(gen)) / gen.norm());
  }
  return {x, rep};
}

}  // namespace detail

/// Newton on the projected action gradient; L doubles while the tail exceeds tail_tol.
inline std::pair<FourierPath, RefineReport> refine_orbit(const FourierPath& init, const CarouselPlan& plan,
                                                         const CarouselFamily& f, const RefineOptions& opts = {}) {
  FourierPath path = init.resized(std::max(init.L, 1));
  int L = std::max(opts.L, init.L);
  path = path.resized(L);
  RefineReport rep;
  std::vector<double> history;
  std::vector<std::string> warnings;
  for (;;) {
    RefineSystem sys(f, plan, L, opts.coupling);
    auto [x, r] = detail::newton_fixed_L(sys, sys.to_x(path), opts);
    history.insert(history.end(), r.residual_history.begin(), r.residual_history.end());
    path = sys.to_path(x);
    rep = r;
    rep.tail = path.tail();
    if (!rep.converged || rep.tail < opts.tail_tol || 2 * L > opts.max_L) break;
    warnings.push_back("tail " + std::to_string(rep.tail) + " at L=" + std::to_string(L) + ", doubling");
    L *= 2;
    path = path.resized(L);
  }
  rep.residual_history = std::move(history);
  rep.warnings = std::move(warnings);
  if (rep.tail >= opts.tail_tol) rep.warnings.push_back("truncation tail above tolerance");
  if (!rep.converged) throw SolverError("refine: no convergence, residual " + std::to_string(rep.residual));
  return {path, rep};
}

// ---------------------------------------------------------------------------
// inertial frame

/// s = nu t reduced with the integer winding of rational plans.
inline double path_parameter(const CarouselPlan& plan, double t) {
  if (!plan.rational) return plan.nu * t;
  const double n = std::floor(t / plan.period);
  const double tr = t - n * plan.period;
  return static_cast<double>(plan.rational->p) * tr / static_cast<double>(plan.rational->q);
}

struct InertialState {
  PhaseState state;
  std::vector<Vec2> accelerations;
};

/// q = exp(tJ)u_0(nu t) + r_j exp(omega_j t J)u_j(nu t) with velocities and accelerations.
inline InertialState to_inertial_full(const FourierPath& path, const CarouselPlan& plan, const CarouselFamily& f,
                                      double t) {
  InertialState out;
  out.state.time = t;
  const double s = path_parameter(plan, t), nu = plan.nu;
  const Mat2 R0 = rot(plan.base_angle(t));
  const VecX c0 = path.eval(0, s, 0), c1 = path.eval(0, s, 1), c2 = path.eval(0, s, 2);
  for (int j = 1; j <= f.n(); ++j) {
    const Vec2 c = c0.segment<2>(2 * (j - 1)), dc = c1.segment<2>(2 * (j - 1)), ddc = c2.segment<2>(2 * (j - 1));
    const Vec2 qc = R0 * c;
    const Vec2 vc = R0 * (apply_J(c) + nu * dc);
    const Vec2 ac = R0 * (-c + 2.0 * nu * apply_J(dc) + nu * nu * ddc);
    if (j > f.n0()) {
      out.state.positions.push_back(qc);
      out.state.velocities.push_back(vc);
      out.accelerations.push_back(ac);
      continue;
    }
    const double r = plan.radii[j - 1], w = plan.omega[j - 1];
    const Mat2 Rj = rot(plan.cluster_angle(j, t));
    const VecX u0 = path.eval(j, s, 0), u1 = path.eval(j, s, 1), u2 = path.eval(j, s, 2);
    for (int k = 0; k < f.index.size(j); ++k) {
      const Vec2 u = u0.segment<2>(2 * k), du = u1.segment<2>(2 * k), ddu = u2.segment<2>(2 * k);
      out.state.positions.push_back(qc + r * (Rj * u));
      out.state.velocities.push_back(vc + r * (Rj * (w * apply_J(u) + nu * du)));
      out.accelerations.push_back(ac + r * (Rj * (-w * w * u + 2.0 * w * nu * apply_J(du) + nu * nu * ddu)));
    }
  }
  return out;
}

inline PhaseState to_inertial(const FourierPath& path, const CarouselPlan& plan, const CarouselFamily& f, double t) {
  return to_inertial_full(path, plan, f, t).state;
}

/// max_i |q''_i - a_i(q)| over sample times in one period.
inline double nbody_residual(const FourierPath& path, const CarouselPlan& plan, const CarouselFamily& f, int samples) {
  const auto m = f.masses();
  const double T = plan.rational ? plan.period : 2.0 * std::numbers::pi / plan.nu;
  double worst = 0;
  for (int i = 0; i < samples; ++i) {
    const double t = T * i / samples;
    auto st = to_inertial_full(path, plan, f, t);
    auto a = rhs(st.state.positions, m, f.alpha());
    for (std::size_t b = 0; b < a.size(); ++b) worst = std::max(worst, (st.accelerations[b] - a[b]).norm());
  }
  return worst;
}

}  // namespace carousel
