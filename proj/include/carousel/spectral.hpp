#pragma once

#include "carousel/central_config.hpp"
#include "carousel/core.hpp"
#include "carousel/interval.hpp"
#include "carousel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace carousel {

// ---------------------------------------------------------------------------
// certificates

enum class Verdict { certified, refuted, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::certified: return "certified";
    case Verdict::refuted: return "refuted";
    default: return "inconclusive";
  }
}

struct FailingMode {
  int block = 0;
  long long ell = 0;
  double value = 0;
};

struct CertResult {
  std::string target;
  Verdict verdict = Verdict::certified;
  std::vector<FailingMode> failing_modes;
  double margin = std::numeric_limits<double>::infinity();
  int margin_block = 0;
  long long margin_ell = 0;
  long long modes_checked = 0;
  long long enclosures_evaluated = 0;
  bool interval = false;
  double max_rel_width = 0;
  std::vector<std::string> log;
  std::vector<cplx> eigenvalues;

  void note(std::string s) { log.push_back(std::move(s)); }
  void consider(double value, int j, long long ell) {
    if (std::abs(value) < margin) {
      margin = std::abs(value);
      margin_block = j;
      margin_ell = ell;
    }
  }
  void refute(int j, long long ell, double value) {
    failing_modes.push_back({j, ell, value});
    verdict = Verdict::refuted;
  }
  void undecided(int j, long long ell, double value) {
    failing_modes.push_back({j, ell, value});
    if (verdict == Verdict::certified) verdict = Verdict::inconclusive;
  }
};

// ---------------------------------------------------------------------------
// polygon coefficients s_j

inline int wrap_index(long long j, int k) { return static_cast<int>(((j % k) + k) % k); }

/// Direct summation of 2^-a sum_l sin^2(j l pi/k) / sin^{a+1}(l pi/k).
inline double s_coeff_sum(int k, int j, double a) {
  if (k < 2) throw std::invalid_argument("s_coeff: k >= 2 required");
  const int jj = wrap_index(j, k);
  if (jj == 0) return 0.0;
  double s = 0;
  for (int l = 1; l < k; ++l) {
    int r = wrap_index(static_cast<long long>(jj) * l, k);
    int rr = std::min(r, k - r);
    int lr = std::min(l, k - l);
    double num = std::sin(std::numbers::pi * rr / k);
    s += num * num / std::pow(std::sin(std::numbers::pi * lr / k), a + 1.0);
  }
  return s * std::pow(2.0, -a);
}

/// Exact j(k-j)/2 in the logarithmic case, direct summation otherwise.
inline double s_coeff(int k, int j, const Alpha& alpha) {
  if (alpha.is_logarithmic()) {
    const long long jj = wrap_index(j, k);
    return static_cast<double>(jj * (k - jj)) / 2.0;
  }
  return s_coeff_sum(k, j, alpha.value());
}

inline std::vector<double> s_table(int k, const Alpha& alpha) {
  std::vector<double> s(k + 1, 0.0);
  for (int j = 1; j <= k / 2; ++j) s[j] = s[k - j] = s_coeff(k, j, alpha);
  s[k] = 0.0;
  return s;
}

/// Enclosures of s_0..s_k; sin^2(j l pi/k) is indexed by j l mod k.
template <class T>
std::vector<Interval<T>> s_table_interval(int k, const Alpha& alpha) {
  using I = Interval<T>;
  std::vector<I> sn(k), sq(k), inv(k);
  for (int r = 0; r < k; ++r) {
    int rr = std::min(r, k - r);
    sn[r] = (r == 0) ? I(T(0)) : isin_pi_ratio<T>(rr, k);
    if (sn[r].lo < 0) sn[r].lo = 0;
    sq[r] = isqr(sn[r]);
  }
  const T e = static_cast<T>(alpha.value()) + T(1);
  for (int l = 1; l < k; ++l) inv[l] = I(T(1)) / ipow_real(sn[l], e);
  const I scale = I(T(1)) / ipow_real(I(T(2)), static_cast<T>(alpha.value()));

  std::vector<I> s(k + 1, I(T(0)));
  for (int j = 1; j <= k / 2; ++j) {
    // terms are non-negative, so endpoints accumulate independently
    T lo = 0, hi = 0;
    for (int l = 1; l < k; ++l) {
      const I& a = sq[wrap_index(static_cast<long long>(j) * l, k)];
      const I& b = inv[l];
      lo = I::down(lo + I::down(a.lo * b.lo));
      hi = I::up(hi + I::up(a.hi * b.hi));
    }
    s[j] = s[k - j] = I(std::max(T(0), lo), hi) * scale;
    if (s[j].lo < 0) s[j].lo = s[k - j].lo = 0;
  }
  return s;
}

template <class T>
Interval<T> s_coeff_interval(int k, int j, const Alpha& alpha) {
  return s_table_interval<T>(k, alpha)[wrap_index(j, k)];
}

// ---------------------------------------------------------------------------
// normal-form blocks

struct BlockCoeffs {
  double a = 0;  // alpha_j
  double b = 0;  // beta_j
  double g = 0;  // gamma_j
};

inline BlockCoeffs block_coeffs(const std::vector<double>& s, int k, int j, double alpha) {
  auto S = [&](long long i) { return s[wrap_index(i, k)]; };
  const double s1 = s[1];
  return {(alpha - 1.0) / (4.0 * s1) * (S(j + 1) + S(j - 1)), (alpha + 1.0) / (2.0 * s1) * (S(j) - s1),
          (alpha - 1.0) / (4.0 * s1) * (S(j + 1) - S(j - 1))};
}

inline Mat2C block_from_coeffs(const BlockCoeffs& c) {
  return (1.0 + c.a) * Mat2C::Identity() - c.b * R2().cast<cplx>() - c.g * iJ2();
}

inline Mat2C block_m_from(const BlockCoeffs& c, double lambda) {
  return lambda * lambda * Mat2C::Identity() - 2.0 * lambda * iJ2() + block_from_coeffs(c);
}

/// P_j(lambda) = ((l-1)^2 + a - g)((l+1)^2 + a + g) - b^2
inline double det_from(const BlockCoeffs& c, double lambda) {
  return ((lambda - 1) * (lambda - 1) + c.a - c.g) * ((lambda + 1) * (lambda + 1) + c.a + c.g) - c.b * c.b;
}

struct PolygonSpectrum {
  int k = 0;
  Alpha alpha{2.0};
  std::vector<double> s;              // s_0..s_k
  std::vector<BlockCoeffs> coeffs;    // index j = 1..k (slot 0 unused)
  std::vector<Mat2C> blocks;          // B_j, index j = 1..k

  const BlockCoeffs& at(int j) const { return coeffs.at(j); }
  Mat2C m(int j, double lambda) const { return block_m_from(coeffs.at(j), lambda); }
  double det(int j, double lambda) const { return det_from(coeffs.at(j), lambda); }
};

inline PolygonSpectrum polygon_spectrum(int k, const Alpha& alpha) {
  PolygonSpectrum ps;
  ps.k = k;
  ps.alpha = alpha;
  ps.s = s_table(k, alpha);
  ps.coeffs.resize(k + 1);
  ps.blocks.resize(k + 1);
  for (int j = 1; j <= k; ++j) {
    ps.coeffs[j] = block_coeffs(ps.s, k, j, alpha.value());
    ps.blocks[j] = block_from_coeffs(ps.coeffs[j]);
  }
  return ps;
}

inline Mat2C block_B(int k, int j, const Alpha& alpha) {
  return block_from_coeffs(block_coeffs(s_table(k, alpha), k, j, alpha.value()));
}

inline Mat2C block_m(int k, int j, const Alpha& alpha, double lambda) {
  return block_m_from(block_coeffs(s_table(k, alpha), k, j, alpha.value()), lambda);
}

inline double det_m(int k, int j, const Alpha& alpha, double lambda) {
  return det_from(block_coeffs(s_table(k, alpha), k, j, alpha.value()), lambda);
}

/// Eigenvalues (mu^-, mu^+) of the j = k block; mu^- via det/mu^+ for stability.
inline std::pair<double, double> kepler_mu(double alpha, double lambda) {
  const double l2 = lambda * lambda;
  const double plus = 0.5 * (alpha + 1.0) + l2 + 0.5 * std::sqrt((alpha + 1.0) * (alpha + 1.0) + 16.0 * l2);
  const double det = l2 * (l2 + alpha - 3.0);
  return {det / plus, plus};
}

inline double kepler_zero(const Alpha& alpha) {
  if (alpha.value() >= 3.0) throw std::domain_error("kepler_zero: requires alpha < 3");
  return std::sqrt(3.0 - alpha.value());
}

// ---------------------------------------------------------------------------
// resonance tests with exact integer arithmetic

namespace detail {

inline bool perfect_square(__int128 v, __int128* root = nullptr) {
  if (v < 0) return false;
  long double guess = std::sqrt(static_cast<long double>(v));
  __int128 r = static_cast<__int128>(guess);
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  if (root) *root = r;
  return r * r == v;
}

}  // namespace detail

struct KeplerCheck {
  bool resonant = false;
  bool exact = false;
  long long ell = 0;  // the integer equal to p sqrt(3 - alpha) when resonant
};

/// Is p sqrt(3 - alpha) a positive integer?
inline KeplerCheck kepler_condition(long long p, const Alpha& alpha) {
  KeplerCheck kc;
  const long long ap = p < 0 ? -p : p;
  if (alpha.value() >= 3.0) {
    kc.exact = alpha.exact().has_value();
    return kc;
  }
  if (alpha.exact()) {
    kc.exact = true;
    const auto r = *alpha.exact();
    __int128 num = static_cast<__int128>(ap) * ap * (3 * static_cast<__int128>(r.den) - r.num);
    if (num <= 0 || num % r.den != 0) return kc;
    __int128 root = 0;
    if (detail::perfect_square(num / r.den, &root)) {
      kc.resonant = true;
      kc.ell = static_cast<long long>(root);
    }
    return kc;
  }
  const double x = static_cast<double>(ap) * std::sqrt(3.0 - alpha.value());
  if (std::abs(x - std::round(x)) < 1e-9 && std::round(x) >= 1) {
    kc.resonant = true;
    kc.ell = static_cast<long long>(std::round(x));
  }
  return kc;
}

/// Logarithmic-limit resonance data for block j of the k-gon:
/// sufficient_ok  <=> p^2 j(k-j)/(k-1) is not an integer,
/// exact_ok  <=> no integer l with l^2 = p^2 (1 +- beta_j) at alpha = 1.
struct LimitCondition {
  bool sufficient_ok = true;
  bool exact_ok = true;
  long long ell = 0;
};

inline LimitCondition limit_condition(int k, int j, long long p) {
  LimitCondition lc;
  const __int128 p2 = static_cast<__int128>(p) * p;
  const __int128 jk = static_cast<__int128>(j) * (k - j);
  if ((p2 * jk) % (k - 1) == 0) lc.sufficient_ok = false;
  for (__int128 num : {p2 * jk, p2 * (2 * static_cast<__int128>(k - 1) - jk)}) {
    if (num <= 0 || num % (k - 1) != 0) continue;
    __int128 root = 0;
    if (detail::perfect_square(num / (k - 1), &root) && root > 0) {
      lc.exact_ok = false;
      lc.ell = static_cast<long long>(root);
    }
  }
  return lc;
}

// ---------------------------------------------------------------------------
// polygon certifiers

constexpr double kResonanceTol = 1e-9;

inline CertResult certify_polygon_weak(int k, long long p, const Alpha& alpha) {
  if (k < 3) throw std::invalid_argument("certify_polygon_weak: k >= 3 required");
  if (p == 0) throw std::invalid_argument("certify_polygon_weak: p must be nonzero");
  CertResult cr;
  {
    std::ostringstream os;
    os << "polygon-weak k=" << k << " p=" << p << " alpha=" << alpha.str();
    cr.target = os.str();
  }
  const auto ps = polygon_spectrum(k, alpha);
  const double a = alpha.value();
  const double pd = static_cast<double>(p);
  const long long ap = p < 0 ? -p : p;

  // Kepler block j = k
  auto kc = kepler_condition(p, alpha);
  cr.note(std::string("Kepler condition: p*sqrt(3-alpha) ") + (kc.resonant ? "is" : "is not") + " a natural number (" +
          (kc.exact ? "exact arithmetic" : "floating test") + ")");
  if (kc.resonant) {
    cr.refute(k, kc.ell, 0.0);
    cr.refute(k, -kc.ell, 0.0);
  }
  const long long lk = a < 3.0 ? static_cast<long long>(std::ceil(ap * std::sqrt(3.0 - a))) + 1 : 1;
  for (long long l = 1; l <= lk; ++l) {
    double lam = static_cast<double>(l) / pd;
    double d = lam * lam * (lam * lam + a - 3.0);
    ++cr.modes_checked;
    if (!(kc.resonant && l == kc.ell)) cr.consider(d, k, l);
  }

  // restricted blocks j = 1 and k - 1: (lambda +- 1)^2 + 2 alpha_1, least at lambda = -+1
  const double two_a1 = 2.0 * ps.at(1).a;
  cr.modes_checked += 2;
  cr.consider(two_a1, 1, -ap);
  if (two_a1 < kResonanceTol) {
    cr.note("restricted blocks j=1, k-1 vanish (2 alpha_1 = " + std::to_string(two_a1) + ")");
    cr.refute(1, -p, two_a1);
    cr.refute(k - 1, p, two_a1);
  }

  // blocks j = 2..k-2 over the safe sweep
  bool sufficient_all = true, exact_all = true;
  for (int j = 2; j <= k - 2; ++j) {
    const auto& c = ps.at(j);
    const double bound = std::sqrt(std::max(c.b * c.b, std::abs(c.b)) + 2.0 * c.a + 1.0) + 1.0;
    const long long lmax = ap * static_cast<long long>(std::ceil(bound));
    for (long long l = -lmax; l <= lmax; ++l) {
      double d = det_from(c, static_cast<double>(l) / pd);
      ++cr.modes_checked;
      cr.consider(d, j, l);
      if (std::abs(d) < kResonanceTol) cr.refute(j, l, d);
    }
    auto lc = limit_condition(k, j, ap);
    sufficient_all = sufficient_all && lc.sufficient_ok;
    exact_all = exact_all && lc.exact_ok;
    if (lc.sufficient_ok != lc.exact_ok)
      cr.note("block j=" + std::to_string(j) + ": p^2 j(k-j)/(k-1) is an integer but not a square");
  }
  if (k >= 4) {
    cr.note(std::string("limit condition at alpha -> 1: sufficient test ") + (sufficient_all ? "passes" : "fails") +
            ", exact resonance test " + (exact_all ? "passes" : "fails"));
  }
  return cr;
}

/// Rigorous check for alpha = 2 with 2 pi / m symmetric paths.
/// For l >= 1 both factors of P_j(l) are non-decreasing, so P_j(0), the last
/// negative value and the first positive value decide every integer l >= 0;
/// negative l are covered by block k - j.
template <class T = double>
CertResult certify_polygon_grav(int k, int m) {
  using I = Interval<T>;
  if (k < 4) throw std::invalid_argument("certify_polygon_grav: k >= 4 required");
  if (m < 1) throw std::invalid_argument("certify_polygon_grav: m >= 1 required");
  CertResult cr;
  cr.interval = true;
  cr.target = "polygon-grav k=" + std::to_string(k) + " m=" + std::to_string(m);
  const Alpha alpha = Alpha::newtonian();
  const auto s = s_table_interval<T>(k, alpha);
  for (int j = 1; j <= k / 2; ++j) {
    T mid = std::abs(s[j].mid());
    if (mid > 0) cr.max_rel_width = std::max<double>(cr.max_rel_width, static_cast<double>(s[j].width() / mid));
  }
  const I s1 = s[1];
  const I two_s1 = I(T(2)) * s1;

  // Kepler block on l in mZ \ {0}: det = l^2 (l^2 - 1)
  if (m == 1) {
    cr.refute(k, 1, 0.0);
    cr.refute(k, -1, 0.0);
    cr.note("j=k block: homographic resonance at l = +-1");
  } else {
    double d = static_cast<double>(m) * m * (static_cast<double>(m) * m - 1.0);
    cr.consider(d, k, m);
  }
  cr.modes_checked += 1;

  // restricted blocks
  const I a1 = s[2] / (I(T(4)) * s1);
  cr.modes_checked += 2;
  if (!(a1.lo > 0)) cr.undecided(1, -1, static_cast<double>(a1.lo));
  cr.consider(static_cast<double>(2 * a1.lo), 1, -1);

  auto P = [&](int j, long long l) {
    const I lm = I(T(l - 1)), lp = I(T(l + 1));
    const I am = s[j - 1] / two_s1, apl = s[j + 1] / two_s1;
    const I b = I(T(3)) * (s[j] - s1) / two_s1;
    return (isqr(lm) + am) * (isqr(lp) + apl) - isqr(b);
  };
  auto check = [&](int j, long long l, int expected_sign) {
    I v = P(j, l);
    ++cr.enclosures_evaluated;
    bool ok = expected_sign > 0 ? v.lo > 0 : (expected_sign < 0 ? v.hi < 0 : v.excludes_zero());
    if (!ok) {
      cr.undecided(j, l, static_cast<double>(v.mid()));
      return;
    }
    cr.consider(static_cast<double>(v.mig()), j, l);
  };

  for (int j = 2; j <= k - 2; ++j) {
    const T bmid = std::abs((T(3) * (s[j].mid() - s1.mid())) / (T(2) * s1.mid()));
    const T amid = (s[j - 1].mid() + s[j + 1].mid()) / (T(4) * s1.mid());
    const long long coarse_bound = static_cast<long long>(std::ceil(std::sqrt(static_cast<double>(bmid * bmid + 1))));
    const long long safe_bound = static_cast<long long>(
        std::ceil(std::sqrt(static_cast<double>(std::max(bmid * bmid, bmid) + 2 * amid + 1)) + 1.0));
    const long long lmax = std::max(coarse_bound, safe_bound) + 1;
    cr.modes_checked += lmax + 1;

    check(j, 0, 0);
    auto negative = [&](long long l) { return P(j, l).mid() < 0; };
    long long last_neg = 0;
    if (negative(1)) {
      long long lo = 1, hi = lmax;
      while (negative(hi)) hi *= 2;
      while (hi - lo > 1) {
        long long mid = lo + (hi - lo) / 2;
        (negative(mid) ? lo : hi) = mid;
      }
      last_neg = lo;
      check(j, last_neg, -1);
    }
    check(j, last_neg + 1, +1);
  }
  if (cr.verdict == Verdict::certified)
    cr.note("all blocks j=2..k-2 free of integer roots; restricted and Kepler blocks invertible on the symmetric modes");
  return cr;
}

template <class T = double>
std::vector<CertResult> certify_polygon_grav_range(int k_lo, int k_hi, int m, int jobs) {
  std::vector<CertResult> out(static_cast<std::size_t>(std::max(0, k_hi - k_lo + 1)));
  parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = certify_polygon_grav<T>(k_lo + static_cast<int>(i), m); });
  return out;
}

// ---------------------------------------------------------------------------
// Lagrange triangle

/// Linearised eigenvalues l1+-, l2+- in the rotating frame.
inline std::vector<cplx> lagrange_eigenvalues(double beta, double alpha) {
  const cplx inner = std::sqrt(cplx(9.0 * (alpha - 1) * (alpha - 1) - beta * (alpha + 3) * (alpha + 3), 0.0));
  const cplx i(0, 1);
  cplx l1 = i / 6.0 * std::sqrt(18.0 * (1 - alpha) + 6.0 * inner);
  cplx l2 = i / 6.0 * std::sqrt(18.0 * (1 - alpha) - 6.0 * inner);
  return {l1, -l1, l2, -l2};
}

inline double routh_threshold(double alpha) {
  double r = (3.0 - alpha) / (1.0 + alpha);
  return 9.0 * r * r;
}

/// mode >= 2 selects the 2 pi / m symmetric test (alpha = 2 only); otherwise p is used.
inline CertResult certify_lagrange(double m1, double m2, double m3, const Alpha& alpha, long long p, int mode = 0) {
  CertResult cr;
  const double beta = mass_beta(m1, m2, m3);
  {
    std::ostringstream os;
    os << "lagrange masses=" << m1 << "," << m2 << "," << m3 << " alpha=" << alpha.str();
    if (mode >= 2) os << " m=" << mode;
    else os << " p=" << p;
    cr.target = os.str();
  }
  cr.eigenvalues = lagrange_eigenvalues(beta, alpha.value());
  cr.note("beta = " + std::to_string(beta));
  cr.modes_checked = 1;

  if (mode >= 2) {
    if (!alpha.is_gravitational()) throw std::invalid_argument("certify_lagrange: mode m applies to alpha = 2");
    cr.margin = beta - 1.0;
    if (beta > 1.0 + 1e-12) {
      cr.note("beta > 1");
    } else {
      cr.undecided(0, mode, beta - 1.0);
      cr.note("beta <= 1: symmetric nondegeneracy not established");
    }
    return cr;
  }

  if (p == 0) throw std::invalid_argument("certify_lagrange: p must be nonzero");
  auto kc = kepler_condition(p, alpha);
  if (kc.resonant) {
    cr.refute(3, kc.ell, 0.0);
    cr.note("p*sqrt(3-alpha) is a natural number");
  }
  const double thr = routh_threshold(alpha.value());
  cr.margin = beta - thr;
  cr.note("threshold 9((3-alpha)/(1+alpha))^2 = " + std::to_string(thr));
  if (std::abs(beta - thr) <= 1e-12 * std::max(1.0, thr)) {
    cr.undecided(0, 0, beta - thr);
    cr.note("boundary case: beta equals the threshold");
  } else if (beta < thr) {
    cr.undecided(0, 0, beta - thr);
    cr.note("beta below threshold: nondegeneracy not established");
  }
  return cr;
}

// ---------------------------------------------------------------------------
// general numeric checks through the reduced blocks

/// (1 + l^2)^{-1} B^T ((l/p)^2 M - 2 i (l/p) M J + Hess V) B with B an orthonormal
/// basis of the zero-center-of-mass subspace.
inline MatXC hatT_block(const CentralConfiguration& cc, long long ell, long long p) {
  if (p == 0) throw std::invalid_argument("hatT_block: p must be nonzero");
  const int k = cc.size();
  const MatX B = com_free_basis(cc.masses);
  const MatX H = amended_potential(cc.flat(), cc.masses, cc.alpha, 2).hessian;
  MatX M = MatX::Zero(2 * k, 2 * k), MJ = MatX::Zero(2 * k, 2 * k);
  for (int i = 0; i < k; ++i) {
    M.block<2, 2>(2 * i, 2 * i) = cc.masses[i] * Mat2::Identity();
    MJ.block<2, 2>(2 * i, 2 * i) = cc.masses[i] * J2();
  }
  const double lam = static_cast<double>(ell) / static_cast<double>(p);
  MatXC A = (lam * lam * M + H).cast<cplx>() - cplx(0, 2.0 * lam) * MJ.cast<cplx>();
  MatXC Bc = B.cast<cplx>();
  return (Bc.adjoint() * A * Bc) / (1.0 + static_cast<double>(ell) * static_cast<double>(ell));
}

/// Reduced Hessian restricted to the complement of the rotational direction.
inline MatX reduced_hessian_without_rotation(const CentralConfiguration& cc) {
  const MatX B = com_free_basis(cc.masses);
  const MatX Hr = B.transpose() * amended_potential(cc.flat(), cc.masses, cc.alpha, 2).hessian * B;
  VecX z = B.transpose() * apply_J_all(cc.flat());
  z.normalize();
  const int d = static_cast<int>(z.size());
  MatX Q = Eigen::HouseholderQR<MatX>(z).householderQ() * MatX::Identity(d, d);
  MatX C = Q.rightCols(d - 1);
  return C.transpose() * Hr * C;
}

inline CertResult certify_a0(const CentralConfiguration& cc0, double tol = 1e-8) {
  CertResult cr;
  cr.target = "a0 n=" + std::to_string(cc0.size()) + " alpha=" + cc0.alpha.str();
  const MatX B = com_free_basis(cc0.masses);
  const MatX Hr = B.transpose() * amended_potential(cc0.flat(), cc0.masses, cc0.alpha, 2).hessian * B;
  Eigen::SelfAdjointEigenSolver<MatX> es(Hr);
  const VecX& ev = es.eigenvalues();
  std::vector<int> order(ev.size());
  for (int i = 0; i < ev.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int x, int y) { return std::abs(ev[x]) < std::abs(ev[y]); });
  cr.modes_checked = ev.size();
  int zeros = 0;
  for (int i : order)
    if (std::abs(ev[i]) < tol) ++zeros;
  cr.note("kernel dimension " + std::to_string(zeros));
  VecX z = B.transpose() * apply_J_all(cc0.flat());
  z.normalize();
  const double cosine = std::abs(es.eigenvectors().col(order[0]).dot(z));
  cr.note("alignment of the smallest mode with J a0: " + std::to_string(cosine));
  cr.margin = ev.size() > 1 ? std::abs(ev[order[1]]) : 0.0;
  cr.margin_block = 0;
  if (zeros == 0 || cosine < 1.0 - 1e-6) {
    cr.refute(0, 0, ev[order[0]]);
    cr.note("rotational zero mode not found");
  } else if (zeros > 1) {
    for (int i = 1; i < zeros; ++i) cr.refute(0, 0, ev[order[i]]);
  } else if (ev.size() > 1 && std::abs(ev[order[1]]) < 10.0 * tol) {
    cr.undecided(0, 0, ev[order[1]]);
  }
  return cr;
}

/// Smallest singular value of every reduced block up to the index where the
/// quadratic term dominates.
inline CertResult certify_general(const CentralConfiguration& cc, long long p, double tol = 1e-9) {
  if (p == 0) throw std::invalid_argument("certify_general: p must be nonzero");
  CertResult cr;
  cr.target = "general k=" + std::to_string(cc.size()) + " p=" + std::to_string(p) + " alpha=" + cc.alpha.str();
  const long long ap = p < 0 ? -p : p;
  const MatX H = amended_potential(cc.flat(), cc.masses, cc.alpha, 2).hessian;
  const double hn = Eigen::JacobiSVD<MatX>(H).singularValues()[0];
  const double mmin = *std::min_element(cc.masses.begin(), cc.masses.end());
  const double mmax = *std::max_element(cc.masses.begin(), cc.masses.end());
  const double x = (2.0 * mmax + std::sqrt(4.0 * mmax * mmax + 8.0 * mmin * hn)) / (2.0 * mmin);
  const long long lmax = static_cast<long long>(std::ceil(ap * x)) + 1;
  cr.note("sweep |l| <= " + std::to_string(lmax));

  auto record = [&](double sigma, long long ell) {
    cr.consider(sigma, 0, ell);
    if (sigma < tol) {
      cr.refute(0, ell, sigma);
      if (ell != 0) cr.refute(0, -ell, sigma);
    }
  };
  {
    MatX H0 = reduced_hessian_without_rotation(cc);
    Eigen::JacobiSVD<MatX> svd(H0);
    record(svd.singularValues().minCoeff(), 0);
    ++cr.modes_checked;
  }
  // blocks at -l are complex conjugates of those at l
  for (long long l = 1; l <= lmax; ++l) {
    MatXC T = hatT_block(cc, l, ap);
    Eigen::JacobiSVD<MatXC> svd(T);
    record(svd.singularValues().minCoeff(), l);
    cr.modes_checked += 2;
  }
  if (cr.verdict == Verdict::certified && cr.margin < 10.0 * tol) cr.undecided(0, cr.margin_ell, cr.margin);
  return cr;
}

}  // namespace carousel
