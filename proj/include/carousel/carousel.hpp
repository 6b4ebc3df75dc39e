#pragma once

#include "carousel/central_config.hpp"
#include "carousel/core.hpp"
#include "carousel/parallel.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace carousel {

// ---------------------------------------------------------------------------
// plans

struct RationalFrequency {
  long long p = 0;
  long long q = 1;
};

struct CarouselPlan {
  std::vector<long long> p_list;
  Alpha alpha{2.0};
  double eps = 0;
  double nu = 0;
  std::vector<double> omega;
  std::vector<double> radii;
  std::vector<double> phases;
  std::optional<RationalFrequency> rational;
  double period = 0;  // 2 pi q for rational plans, 0 otherwise
  std::vector<double> radius_ratio;  // r_j / eps
  std::vector<double> omega_shift;   // omega_j / nu - p_j

  int n0() const { return static_cast<int>(p_list.size()); }
  /// Turns of the base configuration over one period.
  long long base_winding() const { return rational ? rational->q : 0; }
  /// Turns of cluster j about its center over one period (1-based j).
  long long cluster_winding(int j) const {
    return rational ? rational->q + p_list.at(j - 1) * rational->p : 0;
  }

  /// Angle t of the base rotation, reduced by whole periods when rational.
  double base_angle(double t) const { return reduced_angle(t, rational ? rational->q : 0, 1.0); }
  /// Angle omega_j t of cluster j, without the phase offset.
  double cluster_angle(int j, double t) const {
    return reduced_angle(t, rational ? cluster_winding(j) : 0, omega.at(j - 1));
  }

 private:
  /// With t = 2 pi q n + t', the angle w t / q equals w t' / q mod 2 pi.
  double reduced_angle(double t, long long winding, double rate) const {
    if (!rational) return rate * t;
    const double T = period;
    const double n = std::floor(t / T);
    const double tr = t - n * T;
    return static_cast<double>(winding) * tr / static_cast<double>(rational->q);
  }
};

namespace detail {

inline void fill_plan(CarouselPlan& plan) {
  const double a = plan.alpha.value();
  const int n0 = plan.n0();
  plan.omega.assign(n0, 0.0);
  plan.radii.assign(n0, 0.0);
  plan.radius_ratio.assign(n0, 0.0);
  plan.omega_shift.assign(n0, 0.0);
  if (plan.phases.empty()) plan.phases.assign(n0, 0.0);
  if (static_cast<int>(plan.phases.size()) != n0) throw std::invalid_argument("plan: one phase per cluster required");
  for (int j = 0; j < n0; ++j) {
    const double pj = static_cast<double>(plan.p_list[j]);
    double w = 1.0 + pj * plan.nu;
    if (plan.rational) {
      const auto& r = *plan.rational;
      w = static_cast<double>(r.q + plan.p_list[j] * r.p) / static_cast<double>(r.q);
    }
    plan.omega[j] = w;
    plan.radii[j] = std::pow(std::abs(w), -2.0 / (a + 1.0));
    plan.radius_ratio[j] = plan.radii[j] / plan.eps;
    plan.omega_shift[j] = plan.nu != 0 ? w / plan.nu - pj : 0.0;
  }
}

}  // namespace detail

/// nu = eps^{-(alpha+1)/2} - 1, omega_j = 1 + p_j nu, r_j = omega_j^{-2/(alpha+1)}.
inline CarouselPlan plan_from_eps(const std::vector<long long>& p_list, double eps, const Alpha& alpha,
                                  std::vector<double> phases = {}) {
  if (p_list.empty()) throw std::invalid_argument("plan_from_eps: at least one cluster required");
  if (!(eps > 0)) throw std::invalid_argument("plan_from_eps: eps must be positive");
  CarouselPlan plan;
  plan.p_list = p_list;
  plan.alpha = alpha;
  plan.eps = eps;
  plan.nu = std::pow(eps, -(alpha.value() + 1.0) / 2.0) - 1.0;
  plan.phases = std::move(phases);
  for (long long pj : p_list) {
    if (pj == 0) throw std::invalid_argument("plan_from_eps: p_j must be nonzero");
    if (!(1.0 + static_cast<double>(pj) * plan.nu > 0))
      throw InfeasibleError("plan_from_eps: 1 + p_j nu <= 0 for p_j = " + std::to_string(pj));
  }
  detail::fill_plan(plan);
  return plan;
}

/// nu = p/q; clusters with q + p_j p < 0 rotate retrograde with radius |omega_j|^{-2/(alpha+1)}.
inline CarouselPlan plan_rational(const std::vector<long long>& p_list, long long p, long long q, const Alpha& alpha,
                                  std::vector<double> phases = {}) {
  if (p_list.empty()) throw std::invalid_argument("plan_rational: at least one cluster required");
  if (p <= 0 || q <= 0) throw std::invalid_argument("plan_rational: p, q > 0 required");
  if (std::gcd(p, q) != 1) throw std::invalid_argument("plan_rational: p and q must be coprime");
  CarouselPlan plan;
  plan.p_list = p_list;
  plan.alpha = alpha;
  plan.rational = RationalFrequency{p, q};
  plan.nu = static_cast<double>(p) / static_cast<double>(q);
  plan.eps = std::pow(1.0 + plan.nu, -2.0 / (alpha.value() + 1.0));
  plan.period = 2.0 * std::numbers::pi * static_cast<double>(q);
  plan.phases = std::move(phases);
  for (long long pj : p_list) {
    if (pj == 0) throw std::invalid_argument("plan_rational: p_j must be nonzero");
    if (q + pj * p == 0) throw InfeasibleError("plan_rational: q + p_j p = 0 for p_j = " + std::to_string(pj));
  }
  detail::fill_plan(plan);
  return plan;
}

inline CarouselPlan with_phases(CarouselPlan plan, std::vector<double> phases) {
  if (static_cast<int>(phases.size()) != plan.n0()) throw std::invalid_argument("with_phases: one phase per cluster");
  plan.phases = std::move(phases);
  return plan;
}

// ---------------------------------------------------------------------------
// families

struct CarouselFamily {
  CentralConfiguration a0;                     // n bodies with masses M_j
  std::vector<CentralConfiguration> clusters;  // a_1..a_{n0}, each centered
  ClusterIndex index;

  int n() const { return index.n(); }
  int n0() const { return index.n0(); }
  const Alpha& alpha() const { return a0.alpha; }

  std::vector<double> masses() const {
    std::vector<double> m;
    for (int j = 1; j <= n(); ++j) {
      if (j <= n0())
        m.insert(m.end(), clusters[j - 1].masses.begin(), clusters[j - 1].masses.end());
      else
        m.push_back(a0.masses[j - 1]);
    }
    return m;
  }
};

/// Checks masses and residuals, and recenters every configuration.
inline CarouselFamily make_family(CentralConfiguration a0, std::vector<CentralConfiguration> clusters,
                                  double tol = 1e-9) {
  const int n = a0.size();
  const int n0 = static_cast<int>(clusters.size());
  if (n0 < 1 || n0 > n) throw std::invalid_argument("make_family: need 1 <= n0 <= n clusters");
  std::vector<int> sizes;
  for (int j = 0; j < n; ++j) {
    if (j < n0) {
      const auto& c = clusters[j];
      if (c.size() < 2) throw std::invalid_argument("make_family: clusters need at least two bodies");
      if (!(c.alpha.value() == a0.alpha.value())) throw std::invalid_argument("make_family: mixed exponents");
      const double mt = c.total_mass();
      if (std::abs(mt - a0.masses[j]) > 1e-12 * std::max(1.0, mt))
        throw std::invalid_argument("make_family: cluster mass does not match M_j");
      if (c.residual > tol) throw std::invalid_argument("make_family: cluster residual above tolerance");
      sizes.push_back(c.size());
    } else {
      sizes.push_back(1);
    }
  }
  if (a0.residual > tol) throw std::invalid_argument("make_family: a0 residual above tolerance");
  auto center = [](CentralConfiguration& cc) {
    Vec2 s = Vec2::Zero();
    for (int i = 0; i < cc.size(); ++i) s += cc.masses[i] * cc.positions[i];
    s /= cc.total_mass();
    for (auto& q : cc.positions) q -= s;
  };
  center(a0);
  for (auto& c : clusters) center(c);
  CarouselFamily f;
  f.a0 = std::move(a0);
  f.clusters = std::move(clusters);
  f.index = ClusterIndex(sizes);
  return f;
}

/// a0 from the base masses and a cluster configuration for each mass split.
inline CarouselFamily build_family(const CentralConfiguration& a0, const std::vector<std::vector<double>>& splits) {
  std::vector<CentralConfiguration> clusters;
  for (const auto& s : splits) clusters.push_back(cluster_config(s, a0.alpha));
  return make_family(a0, std::move(clusters));
}

/// Lagrange triangle with the first body replaced by an equal-mass binary.
inline CarouselFamily lagrange_binary_family(double m1, double m2, double m3, const Alpha& alpha) {
  return build_family(lagrange_config(m1, m2, m3, alpha), {{m1 / 2, m1 / 2}});
}

// ---------------------------------------------------------------------------
// leading-order trajectories

/// q_{j,k}(t) = exp(tJ)a_{0,j} + r_j exp((omega_j t + theta_j)J)a_{j,k}.
inline ClusterConfig assemble_trajectory(const CarouselFamily& f, const CarouselPlan& plan, double t) {
  if (plan.n0() != f.n0()) throw std::invalid_argument("assemble_trajectory: plan and family disagree on n0");
  const Mat2 base = rot(plan.base_angle(t));
  std::vector<Vec2> q;
  q.reserve(f.index.N());
  for (int j = 1; j <= f.n(); ++j) {
    const Vec2 c = base * f.a0.positions[j - 1];
    if (j <= f.n0()) {
      const Mat2 inner = rot(plan.cluster_angle(j, t) + plan.phases[j - 1]);
      for (const auto& a : f.clusters[j - 1].positions) q.push_back(c + plan.radii[j - 1] * (inner * a));
    } else {
      q.push_back(c);
    }
  }
  return ClusterConfig(f.index, f.masses(), std::move(q));
}

/// Time derivative of assemble_trajectory.
inline std::vector<Vec2> assemble_velocity(const CarouselFamily& f, const CarouselPlan& plan, double t) {
  if (plan.n0() != f.n0()) throw std::invalid_argument("assemble_velocity: plan and family disagree on n0");
  const Mat2 base = rot(plan.base_angle(t));
  std::vector<Vec2> v;
  v.reserve(f.index.N());
  for (int j = 1; j <= f.n(); ++j) {
    const Vec2 c = apply_J(base * f.a0.positions[j - 1]);
    if (j <= f.n0()) {
      const Mat2 inner = rot(plan.cluster_angle(j, t) + plan.phases[j - 1]);
      const double scale = plan.radii[j - 1] * plan.omega[j - 1];
      for (const auto& a : f.clusters[j - 1].positions) v.push_back(c + scale * apply_J(inner * a));
    } else {
      v.push_back(c);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// phase scan

/// Largest m such that rotation by 2 pi / m maps the configuration onto itself
/// with equal masses on matched bodies.
inline int rotational_symmetry(const CentralConfiguration& cc, double tol = 1e-9) {
  const int k = cc.size();
  const double scale = std::max(1e-300, diameter(cc.positions));
  for (int m = k; m >= 2; --m) {
    if (k % m != 0) continue;
    const Mat2 r = rot(2.0 * std::numbers::pi / m);
    bool ok = true;
    for (int i = 0; i < k && ok; ++i) {
      const Vec2 img = r * cc.positions[i];
      bool hit = false;
      for (int l = 0; l < k && !hit; ++l)
        hit = (img - cc.positions[l]).norm() < tol * scale && std::abs(cc.masses[i] - cc.masses[l]) <= tol * cc.masses[i];
      ok = hit;
    }
    if (ok) return m;
  }
  return 1;
}

struct PhasePoint {
  std::vector<double> phases;
  double value = 0;
};

struct PhaseScan {
  std::vector<PhasePoint> grid;
  std::vector<PhasePoint> candidates;
  std::vector<int> symmetry;  // per cluster
  bool flat = false;          // average independent of the phases
  double spread = 0;          // max - min over the grid
  int nodes = 0;              // time quadrature nodes
};

/// Time average over one period of the inter-cluster coupling
/// sum m m' phi(|q - q'|) - M_j M_j' phi(|a_{0,j} - a_{0,j'}|) at leading order.
inline double coupling_average(const CarouselFamily& f, const CarouselPlan& plan, int nodes) {
  if (!plan.rational) throw std::invalid_argument("coupling_average: rational plan required");
  const Alpha& alpha = f.alpha();
  double base = 0;
  for (int j = 0; j < f.n(); ++j)
    for (int l = j + 1; l < f.n(); ++l)
      base += f.a0.masses[j] * f.a0.masses[l] * phi((f.a0.positions[j] - f.a0.positions[l]).norm(), alpha);
  const auto m = f.masses();
  double acc = 0;
  for (int s = 0; s < nodes; ++s) {
    const double t = plan.period * s / nodes;
    const auto q = assemble_trajectory(f, plan, t);
    double u = 0;
    for (int a = 0; a < q.size(); ++a) {
      const int ja = q.index.to_multi(a).first;
      for (int b = a + 1; b < q.size(); ++b) {
        if (q.index.to_multi(b).first == ja) continue;
        u += m[a] * m[b] * phi((q.positions[a] - q.positions[b]).norm(), alpha);
      }
    }
    acc += u - base;
  }
  return acc / nodes;
}

/// Grid over [0, 2 pi / sym_j)^{n0}; candidates are the discrete local extrema,
/// or every grid point when the average is flat.
inline PhaseScan phase_scan(const CarouselFamily& f, const CarouselPlan& plan, int grid_size, int jobs = 1) {
  if (!plan.rational) throw std::invalid_argument("phase_scan: rational plan required");
  if (grid_size < 3) throw std::invalid_argument("phase_scan: grid_size >= 3 required");
  const int n0 = f.n0();
  PhaseScan out;
  long long fastest = 1;
  for (int j = 1; j <= n0; ++j) {
    out.symmetry.push_back(rotational_symmetry(f.clusters[j - 1]));
    fastest = std::max<long long>(fastest, std::llabs(plan.p_list[j - 1] * plan.rational->p) * out.symmetry.back());
  }
  // the integrand is a trigonometric polynomial in the relative angles; oversample it
  out.nodes = static_cast<int>(std::min<long long>(200000, 16 * (fastest + plan.rational->q) + 64));

  long long total = 1;
  for (int j = 0; j < n0; ++j) total *= grid_size;
  out.grid.resize(static_cast<std::size_t>(total));
  auto decode = [&](long long flat) {
    std::vector<int> ix(n0);
    for (int j = 0; j < n0; ++j) {
      ix[j] = static_cast<int>(flat % grid_size);
      flat /= grid_size;
    }
    return ix;
  };
  parallel_for(out.grid.size(), jobs, [&](std::size_t i) {
    auto ix = decode(static_cast<long long>(i));
    std::vector<double> ph(n0);
    for (int j = 0; j < n0; ++j) ph[j] = 2.0 * std::numbers::pi / out.symmetry[j] * ix[j] / grid_size;
    out.grid[i] = {ph, coupling_average(f, with_phases(plan, ph), out.nodes)};
  });

  double lo = out.grid[0].value, hi = lo, scale = 0;
  for (const auto& g : out.grid) {
    lo = std::min(lo, g.value);
    hi = std::max(hi, g.value);
    scale = std::max(scale, std::abs(g.value));
  }
  out.spread = hi - lo;
  out.flat = out.spread <= 1e-10 * std::max(scale, 1e-300);
  if (out.flat) {
    out.candidates = out.grid;
    return out;
  }
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    auto ix = decode(static_cast<long long>(i));
    bool is_max = true, is_min = true;
    for (int j = 0; j < n0; ++j) {
      for (int d : {-1, 1}) {
        auto nb = ix;
        nb[j] = (nb[j] + d + grid_size) % grid_size;
        long long flat = 0;
        for (int l = n0 - 1; l >= 0; --l) flat = flat * grid_size + nb[l];
        const double v = out.grid[static_cast<std::size_t>(flat)].value;
        is_max = is_max && out.grid[i].value >= v;
        is_min = is_min && out.grid[i].value <= v;
      }
    }
    if (is_max || is_min) out.candidates.push_back(out.grid[i]);
  }
  return out;
}

}  // namespace carousel
