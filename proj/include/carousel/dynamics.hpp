#pragma once

#include "carousel/carousel.hpp"
#include "carousel/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace carousel {

// ---------------------------------------------------------------------------
// equations of motion

struct PhaseState {
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  double time = 0;

  int size() const { return static_cast<int>(positions.size()); }
};

/// [q_1, ..., q_N, v_1, ..., v_N]
inline VecX pack(const PhaseState& s) {
  const int n = s.size();
  VecX y(4 * n);
  for (int i = 0; i < n; ++i) {
    y.segment<2>(2 * i) = s.positions[i];
    y.segment<2>(2 * n + 2 * i) = s.velocities[i];
  }
  return y;
}

inline PhaseState unpack(const VecX& y, double t) {
  const int n = static_cast<int>(y.size() / 4);
  PhaseState s;
  s.time = t;
  for (int i = 0; i < n; ++i) {
    s.positions.emplace_back(y.segment<2>(2 * i));
    s.velocities.emplace_back(y.segment<2>(2 * n + 2 * i));
  }
  return s;
}

/// a_i = -sum_j m_j (q_i - q_j) / |q_i - q_j|^{alpha+1}; distances at or below min_dist throw.
inline std::vector<Vec2> rhs(const std::vector<Vec2>& q, const std::vector<double>& m, const Alpha& alpha,
                             double min_dist = 0.0) {
  const std::size_t n = q.size();
  if (m.size() != n) throw std::invalid_argument("rhs: masses and positions differ in size");
  const double e = alpha.value() + 1.0;
  std::vector<Vec2> acc(n, Vec2::Zero());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 d = q[i] - q[j];
      const double r = d.norm();
      if (!(r > min_dist) || !(r > 0)) throw CollisionError(i, j, r);
      double w;
      if (alpha.is_gravitational()) w = 1.0 / (r * r * r);
      else if (alpha.is_logarithmic()) w = 1.0 / (r * r);
      else w = std::pow(r, -e);
      acc[i] -= (m[j] * w) * d;
      acc[j] += (m[i] * w) * d;
    }
  }
  return acc;
}

inline VecX rhs_flat(const VecX& y, const std::vector<double>& m, const Alpha& alpha, double min_dist = 0.0) {
  const int n = static_cast<int>(y.size() / 4);
  std::vector<Vec2> q(n);
  for (int i = 0; i < n; ++i) q[i] = y.segment<2>(2 * i);
  const auto a = rhs(q, m, alpha, min_dist);
  VecX f(y.size());
  f.head(2 * n) = y.tail(2 * n);
  for (int i = 0; i < n; ++i) f.segment<2>(2 * n + 2 * i) = a[i];
  return f;
}

struct Invariants {
  double energy = 0;
  double angular_momentum = 0;
  Vec2 momentum = Vec2::Zero();
  Vec2 center_of_mass = Vec2::Zero();
};

/// energy = K - U with U = sum over pairs m m' phi(r); L = sum m <v, J q>.
inline Invariants invariants_of(const PhaseState& s, const std::vector<double>& m, const Alpha& alpha) {
  Invariants inv;
  double kinetic = 0, potential = 0, mt = 0;
  for (int i = 0; i < s.size(); ++i) {
    kinetic += 0.5 * m[i] * s.velocities[i].squaredNorm();
    inv.angular_momentum += m[i] * s.velocities[i].dot(apply_J(s.positions[i]));
    inv.momentum += m[i] * s.velocities[i];
    inv.center_of_mass += m[i] * s.positions[i];
    mt += m[i];
    for (int j = i + 1; j < s.size(); ++j)
      potential += m[i] * m[j] * phi((s.positions[i] - s.positions[j]).norm(), alpha);
  }
  inv.energy = kinetic - potential;
  inv.center_of_mass /= mt;
  return inv;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 8(5,3) with the seventh-order interpolant

namespace dop853 {

// clang-format off
inline constexpr double kC[16] = {0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0, 1.0, 0.1, 0.2, 0.7777777777777778};
inline constexpr double kA[16][16] = {
    {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259, 0.0, 0.0, 0.0, 0.0},
    {0.056167502283047954, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25350021021662483, -0.2462390374708025, -0.12419142326381637, 0.15329179827876568, 0.00820105229563469, 0.007567897660545699, -0.008298, 0.0, 0.0, 0.0},
    {0.03183464816350214, 0.0, 0.0, 0.0, 0.0, 0.028300909672366776, 0.053541988307438566, -0.05492374857139099, 0.0, 0.0, -0.00010834732869724932, 0.0003825710908356584, -0.00034046500868740456, 0.1413124436746325, 0.0, 0.0},
    {-0.42889630158379194, 0.0, 0.0, 0.0, 0.0, -4.697621415361164, 7.683421196062599, 4.06898981839711, 0.3567271874552811, 0.0, 0.0, 0.0, -0.0013990241651590145, 2.9475147891527724, -9.15095847217987, 0.0},
};
inline constexpr double kB[12] = {0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259};
inline constexpr double kE3[13] = {-0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034, 0.02265179219836082, 0.0};
inline constexpr double kE5[13] = {0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294, 0.0};
inline constexpr double kD[4][16] = {
    {-8.428938276109013, 0.0, 0.0, 0.0, 0.0, 0.5667149535193777, -3.0689499459498917, 2.38466765651207, 2.117034582445028, -0.871391583777973, 2.2404374302607883, 0.6315787787694688, -0.08899033645133331, 18.148505520854727, -9.194632392478356, -4.436036387594894},
    {10.427508642579134, 0.0, 0.0, 0.0, 0.0, 242.28349177525817, 165.20045171727028, -374.5467547226902, -22.113666853125306, 7.733432668472264, -30.674084731089398, -9.332130526430229, 15.697238121770845, -31.139403219565178, -9.35292435884448, 35.81684148639408},
    {19.985053242002433, 0.0, 0.0, 0.0, 0.0, -387.0373087493518, -189.17813819516758, 527.8081592054236, -11.57390253995963, 6.8812326946963, -1.0006050966910838, 0.7777137798053443, -2.778205752353508, -60.19669523126412, 84.32040550667716, 11.99229113618279},
    {-25.69393346270375, 0.0, 0.0, 0.0, 0.0, -154.18974869023643, -231.5293791760455, 357.6391179106141, 93.40532418362432, -37.45832313645163, 104.0996495089623, 29.8402934266605, -43.53345659001114, 96.32455395918828, -39.17726167561544, -149.72683625798564},
};
// clang-format on

inline constexpr int kStages = 12;
inline constexpr double kSafety = 0.9;
inline constexpr double kMinFactor = 0.2;
inline constexpr double kMaxFactor = 10.0;

}  // namespace dop853

struct IntegrateOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  long long max_steps = 5'000'000;
  double collision_factor = 1e-8;    // times the initial diameter
  std::vector<double> sample_times;  // dense-output samples
  bool record_steps = false;         // also keep every step endpoint
  double first_step = 0;             // 0 selects automatically
  double fixed_step = 0;             // > 0 disables error control
};

struct Trajectory {
  std::vector<double> times;
  std::vector<VecX> states;
  std::vector<Invariants> ledger;
  std::vector<double> masses;
  Alpha alpha{2.0};
  int interpolation_order = 7;
  long long steps = 0;
  long long rejected = 0;
  long long evaluations = 0;

  std::size_t size() const { return times.size(); }
  PhaseState state(std::size_t i) const { return unpack(states.at(i), times.at(i)); }
  const VecX& front() const { return states.front(); }
  const VecX& back() const { return states.back(); }

  /// Largest relative drift of energy and angular momentum against the first sample.
  double energy_drift() const {
    double d = 0, e0 = ledger.front().energy;
    for (const auto& l : ledger) d = std::max(d, std::abs(l.energy - e0) / std::max(std::abs(e0), 1e-300));
    return d;
  }
  double angular_momentum_drift() const {
    double d = 0, l0 = ledger.front().angular_momentum;
    for (const auto& l : ledger)
      d = std::max(d, std::abs(l.angular_momentum - l0) / std::max(std::abs(l0), 1e-300));
    return d;
  }
  double momentum_drift() const {
    double d = 0;
    Vec2 p0 = ledger.front().momentum;
    double scale = 0;
    for (std::size_t i = 0; i < masses.size(); ++i)
      scale += masses[i] * states.front().segment<2>(2 * masses.size() + 2 * i).norm();
    for (const auto& l : ledger) d = std::max(d, (l.momentum - p0).norm() / std::max(scale, 1e-300));
    return d;
  }
};

/// Adaptive integration from s0.time to t_end; negative spans integrate backwards.
inline Trajectory integrate(const PhaseState& s0, const std::vector<double>& masses, const Alpha& alpha, double t_end,
                            const IntegrateOptions& opts = {}) {
  using namespace dop853;
  if (!(opts.rtol > 0) || !(opts.atol > 0)) throw std::invalid_argument("integrate: tolerances must be positive");
  if (static_cast<int>(masses.size()) != s0.size()) throw std::invalid_argument("integrate: mass count mismatch");
  const double min_dist = opts.collision_factor * diameter(s0.positions);

  Trajectory tr;
  tr.masses = masses;
  tr.alpha = alpha;
  auto fun = [&](const VecX& y) {
    ++tr.evaluations;
    return rhs_flat(y, masses, alpha, min_dist);
  };
  auto record = [&](double t, const VecX& y) {
    tr.times.push_back(t);
    tr.states.push_back(y);
    tr.ledger.push_back(invariants_of(unpack(y, t), masses, alpha));
  };

  double t = s0.time;
  VecX y = pack(s0);
  const Eigen::Index n = y.size();
  const double dir = t_end >= t ? 1.0 : -1.0;

  std::vector<double> samples;
  for (double ts : opts.sample_times)
    if (dir * (ts - t) > 0 && dir * (t_end - ts) > 0) samples.push_back(ts);
  std::sort(samples.begin(), samples.end(), [&](double a, double b) { return dir * a < dir * b; });
  std::size_t next_sample = 0;

  record(t, y);
  if (t == t_end) return tr;

  VecX f = fun(y);
  auto rms = [&](const VecX& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(n)); };

  double h_abs = opts.fixed_step > 0 ? opts.fixed_step : opts.first_step;
  if (h_abs <= 0) {
    const VecX scale = opts.atol + y.cwiseAbs().array() * opts.rtol;
    const double d0 = rms(y.cwiseQuotient(scale)), d1 = rms(f.cwiseQuotient(scale));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, std::abs(t_end - t));
    const VecX f1 = fun(y + h0 * dir * f);
    const double d2 = rms((f1 - f).cwiseQuotient(scale)) / h0;
    const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                   : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
    h_abs = std::min({100 * h0, h1, std::abs(t_end - t)});
  }

  std::vector<VecX> K(16, VecX::Zero(n));
  const double err_exp = -1.0 / 8.0;
  while (dir * (t_end - t) > 0) {
    if (tr.steps >= opts.max_steps) throw NumericError("integrate: maximum number of steps exceeded");
    const double min_step = 10.0 * std::abs(std::nextafter(t, dir * std::numeric_limits<double>::infinity()) - t);
    bool rejected = false, accepted = false;
    double h = 0, t_new = 0;
    VecX y_new, f_new;
    while (!accepted) {
      if (h_abs < min_step) throw NumericError("integrate: step size underflow at t = " + std::to_string(t));
      h = h_abs * dir;
      t_new = t + h;
      if (dir * (t_new - t_end) > 0) t_new = t_end;
      h = t_new - t;
      h_abs = std::abs(h);

      K[0] = f;
      for (int s = 1; s < kStages; ++s) {
        VecX dy = VecX::Zero(n);
        for (int j = 0; j < s; ++j)
          if (kA[s][j] != 0.0) dy += kA[s][j] * K[j];
        K[s] = fun(y + h * dy);
      }
      VecX incr = VecX::Zero(n);
      for (int j = 0; j < kStages; ++j)
        if (kB[j] != 0.0) incr += kB[j] * K[j];
      y_new = y + h * incr;
      f_new = fun(y_new);
      K[kStages] = f_new;

      const VecX scale = (opts.atol + y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array() * opts.rtol).matrix();
      VecX e5 = VecX::Zero(n), e3 = VecX::Zero(n);
      for (int j = 0; j <= kStages; ++j) {
        if (kE5[j] != 0.0) e5 += kE5[j] * K[j];
        if (kE3[j] != 0.0) e3 += kE3[j] * K[j];
      }
      const double n5 = e5.cwiseQuotient(scale).squaredNorm(), n3 = e3.cwiseQuotient(scale).squaredNorm();
      double err = 0;
      if (n5 > 0 || n3 > 0) err = h_abs * n5 / std::sqrt((n5 + 0.01 * n3) * static_cast<double>(n));

      if (opts.fixed_step > 0) {
        h_abs = opts.fixed_step;
        accepted = true;
      } else if (err < 1.0) {
        double factor = err == 0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err, err_exp));
        if (rejected) factor = std::min(1.0, factor);
        h_abs *= factor;
        accepted = true;
      } else {
        h_abs *= std::max(kMinFactor, kSafety * std::pow(err, err_exp));
        rejected = true;
        ++tr.rejected;
      }
    }
    ++tr.steps;

    // dense output for samples inside (t, t_new]
    if (next_sample < samples.size() && dir * (samples[next_sample] - t_new) <= 0) {
      for (int s = kStages + 1; s < 16; ++s) {
        VecX dy = VecX::Zero(n);
        for (int j = 0; j < s; ++j)
          if (kA[s][j] != 0.0) dy += kA[s][j] * K[j];
        K[s] = fun(y + h * dy);
      }
      VecX F[7];
      const VecX delta = y_new - y;
      F[0] = delta;
      F[1] = h * f - delta;
      F[2] = 2.0 * delta - h * (f_new + f);
      for (int r = 0; r < 4; ++r) {
        F[3 + r] = VecX::Zero(n);
        for (int j = 0; j < 16; ++j)
          if (kD[r][j] != 0.0) F[3 + r] += kD[r][j] * K[j];
        F[3 + r] *= h;
      }
      while (next_sample < samples.size() && dir * (samples[next_sample] - t_new) <= 0) {
        const double ts = samples[next_sample++];
        const double x = (ts - t) / h;
        VecX ys = VecX::Zero(n);
        for (int i = 0; i < 7; ++i) {
          ys += F[6 - i];
          ys *= (i % 2 == 0) ? x : (1.0 - x);
        }
        record(ts, ys + y);
      }
    }

    t = t_new;
    y = std::move(y_new);
    f = std::move(f_new);
    if (opts.record_steps && t != t_end) record(t, y);
  }
  record(t, y);
  return tr;
}

// ---------------------------------------------------------------------------
// diagnostics

/// Max over bodies of sqrt(m_i / m_max) times the larger of the position and velocity differences.
inline double periodicity_defect(const VecX& a, const VecX& b, const std::vector<double>& masses) {
  const std::size_t n = masses.size();
  const double mmax = *std::max_element(masses.begin(), masses.end());
  double d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dq = (a.segment<2>(2 * i) - b.segment<2>(2 * i)).norm();
    const double dv = (a.segment<2>(2 * n + 2 * i) - b.segment<2>(2 * n + 2 * i)).norm();
    d = std::max(d, std::sqrt(masses[i] / mmax) * std::max(dq, dv));
  }
  return d;
}

/// Defect between the first sample and the sample at first time + T.
inline double periodicity_defect(const Trajectory& tr, double T) {
  if (tr.size() < 2) throw std::invalid_argument("periodicity_defect: trajectory too short");
  const double target = tr.times.front() + T;
  const double tol = 1e-9 * std::max(1.0, std::abs(T));
  for (std::size_t i = 1; i < tr.size(); ++i)
    if (std::abs(tr.times[i] - target) <= tol) return periodicity_defect(tr.states.front(), tr.states[i], tr.masses);
  throw std::invalid_argument("periodicity_defect: trajectory does not reach t0 + T");
}

struct WindingNumbers {
  std::vector<long long> base;      // cluster centers about the origin, one per body group
  std::vector<long long> clusters;  // first member about its cluster center, j <= n0
  double max_residual = 0;          // in turns
};

/// Continuous unwrapping over the samples; each step must turn less than a quarter turn.
inline WindingNumbers winding_numbers(const Trajectory& tr, const ClusterIndex& idx) {
  if (tr.size() < 3) throw std::invalid_argument("winding_numbers: too few samples");
  const int N = idx.N();
  auto center = [&](const VecX& y, int j) {
    Vec2 c = Vec2::Zero();
    double mt = 0;
    for (int k = 1; k <= idx.size(j); ++k) {
      const int f = idx.to_flat(j, k);
      c += tr.masses[f] * y.segment<2>(2 * f);
      mt += tr.masses[f];
    }
    return Vec2(c / mt);
  };
  auto turns = [&](const std::function<Vec2(const VecX&)>& vec) {
    double total = 0;
    Vec2 prev = vec(tr.states.front());
    double scale = prev.norm();
    for (std::size_t i = 1; i < tr.size(); ++i) {
      Vec2 cur = vec(tr.states[i]);
      scale = std::max(scale, cur.norm());
      if (cur.norm() < 1e-9 * scale || prev.norm() < 1e-9 * scale)
        throw NumericError("winding_numbers: ambiguous unwrapping near the origin");
      const double step = std::atan2(prev.x() * cur.y() - prev.y() * cur.x(), prev.dot(cur));
      if (std::abs(step) > std::numbers::pi / 2) throw NumericError("winding_numbers: samples too sparse to unwrap");
      total += step;
      prev = cur;
    }
    return total / (2.0 * std::numbers::pi);
  };
  WindingNumbers w;
  auto take = [&](double x) {
    const long long r = std::llround(x);
    w.max_residual = std::max(w.max_residual, std::abs(x - static_cast<double>(r)));
    return r;
  };
  for (int j = 1; j <= idx.n(); ++j) w.base.push_back(take(turns([&](const VecX& y) { return center(y, j); })));
  for (int j = 1; j <= idx.n0(); ++j) {
    const int f = idx.to_flat(j, 1);
    w.clusters.push_back(take(turns([&](const VecX& y) { return Vec2(y.segment<2>(2 * f) - center(y, j)); })));
  }
  if (w.max_residual >= 0.01)
    throw NumericError("winding_numbers: residual " + std::to_string(w.max_residual) + " turns exceeds 0.01");
  (void)N;
  return w;
}

/// Uniform sample times over one period, dense enough to unwrap the fastest cluster.
inline std::vector<double> winding_samples(const CarouselPlan& plan, int per_turn = 16) {
  if (!plan.rational) throw std::invalid_argument("winding_samples: rational plan required");
  long long fastest = plan.base_winding();
  for (int j = 1; j <= plan.n0(); ++j) fastest = std::max(fastest, std::llabs(plan.cluster_winding(j)));
  // relative rotation of clusters in the base frame can exceed the inertial winding
  for (int j = 1; j <= plan.n0(); ++j) fastest = std::max(fastest, std::llabs(plan.cluster_winding(j)) + plan.base_winding());
  const long long count = per_turn * fastest + 1;
  std::vector<double> ts;
  for (long long i = 1; i < count; ++i) ts.push_back(plan.period * static_cast<double>(i) / static_cast<double>(count));
  return ts;
}

/// Initial state of the leading-order carousel at t = 0.
inline PhaseState carousel_state(const CarouselFamily& f, const CarouselPlan& plan, double t = 0.0) {
  PhaseState s;
  s.time = t;
  s.positions = assemble_trajectory(f, plan, t).positions;
  s.velocities = assemble_velocity(f, plan, t);
  return s;
}

}  // namespace carousel
