#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace carousel {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Mat2C = Eigen::Matrix2cd;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using VecXC = Eigen::VectorXcd;
using MatXC = Eigen::MatrixXcd;
using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// error taxonomy (the CLI maps these onto exit codes)

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Newton system singular at a configuration (genuine degeneracy).
struct DegenerateError : SolverError {
  using SolverError::SolverError;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CollisionError : NumericError {
  CollisionError(std::size_t a, std::size_t b, double dist)
      : NumericError("collision between bodies " + std::to_string(a) + " and " + std::to_string(b) +
                     " (distance " + std::to_string(dist) + ")"),
        first(a), second(b), distance(dist) {}
  std::size_t first, second;
  double distance;
};

// ---------------------------------------------------------------------------
// exponent of the power law

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t n, std::int64_t d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    if (g == 0) g = 1;
    return {n / g, d / g};
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

class Alpha {
 public:
  explicit Alpha(double v) : value_(v) { check(); }
  Alpha(double v, Rational exact) : value_(v), exact_(exact) { check(); }

  static Alpha from_rational(std::int64_t num, std::int64_t den) {
    Rational r = Rational::make(num, den);
    return Alpha(r.value(), r);
  }
  static Alpha logarithmic() { return from_rational(1, 1); }
  static Alpha newtonian() { return from_rational(2, 1); }

  /// Accepts "log", "newton", "num/den" or a decimal literal (kept exact).
  static Alpha parse(const std::string& text);

  double value() const { return value_; }
  const std::optional<Rational>& exact() const { return exact_; }
  bool is_logarithmic() const { return value_ == 1.0; }
  bool is_gravitational() const { return value_ == 2.0; }

  std::string str() const {
    if (exact_ && exact_->den != 1) return std::to_string(exact_->num) + "/" + std::to_string(exact_->den);
    if (exact_) return std::to_string(exact_->num);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value_);
    return buf;
  }

 private:
  void check() const {
    if (!std::isfinite(value_) || value_ < 1.0)
      throw std::domain_error("exponent alpha must be finite and >= 1");
  }
  double value_;
  std::optional<Rational> exact_;
};

inline Alpha Alpha::parse(const std::string& text) {
  if (text == "log") return logarithmic();
  if (text == "newton") return newtonian();
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    std::size_t used = 0;
    std::int64_t n = std::stoll(text.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument("bad alpha: " + text);
    std::string d = text.substr(slash + 1);
    std::int64_t den = std::stoll(d, &used);
    if (used != d.size()) throw std::invalid_argument("bad alpha: " + text);
    return from_rational(n, den);
  }
  std::size_t used = 0;
  double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("bad alpha: " + text);
  // a plain decimal literal denotes a rational exactly
  auto dot = text.find('.');
  bool plain = text.find_first_of("eE") == std::string::npos;
  if (plain) {
    std::string digits = text;
    std::int64_t den = 1;
    if (dot != std::string::npos) {
      std::size_t frac = text.size() - dot - 1;
      if (frac <= 15) {
        digits.erase(dot, 1);
        for (std::size_t i = 0; i < frac; ++i) den *= 10;
      } else {
        return Alpha(v);
      }
    }
    if (digits.size() <= 17) return Alpha(v, Rational::make(std::stoll(digits), den));
  }
  return Alpha(v);
}

// ---------------------------------------------------------------------------
// power-law potential family, phi'(r) = -r^-alpha

inline double phi(double r, const Alpha& a) {
  if (!(r > 0.0)) throw std::domain_error("phi: non-positive distance");
  if (a.is_logarithmic()) return -std::log(r);
  if (a.is_gravitational()) return 1.0 / r;
  double e = a.value() - 1.0;
  return std::pow(r, -e) / e;
}

inline double dphi(double r, const Alpha& a) {
  if (!(r > 0.0)) throw std::domain_error("dphi: non-positive distance");
  return -1.0 / std::pow(r, a.value());
}

inline double d2phi(double r, const Alpha& a) {
  if (!(r > 0.0)) throw std::domain_error("d2phi: non-positive distance");
  return a.value() / std::pow(r, a.value() + 1.0);
}

// ---------------------------------------------------------------------------
// planar generators

inline Mat2 identity2() { return Mat2::Identity(); }
inline Mat2 J2() { Mat2 m; m << 0, -1, 1, 0; return m; }
inline Mat2 R2() { Mat2 m; m << 1, 0, 0, -1; return m; }
inline Mat2C iJ2() { return cplx(0, 1) * J2().cast<cplx>(); }

/// exp(theta J)
inline Mat2 rot(double theta) {
  double c = std::cos(theta), s = std::sin(theta);
  Mat2 m;
  m << c, -s, s, c;
  return m;
}

inline Vec2 apply_J(const Vec2& v) { return {-v.y(), v.x()}; }

// ---------------------------------------------------------------------------
// cluster bookkeeping

class ClusterIndex {
 public:
  ClusterIndex() = default;
  explicit ClusterIndex(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw std::invalid_argument("ClusterIndex: no clusters");
    offsets_.reserve(sizes_.size() + 1);
    offsets_.push_back(0);
    bool seen_single = false;
    for (int k : sizes_) {
      if (k <= 0) throw std::invalid_argument("ClusterIndex: cluster sizes must be positive");
      if (k > 1 && seen_single)
        throw std::invalid_argument("ClusterIndex: clusters with k > 1 must come first");
      if (k == 1) seen_single = true;
      else ++n0_;
      offsets_.push_back(offsets_.back() + k);
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int n() const { return static_cast<int>(sizes_.size()); }
  int n0() const { return n0_; }
  int N() const { return offsets_.empty() ? 0 : offsets_.back(); }
  /// 1-based cluster j
  int size(int j) const { return sizes_.at(j - 1); }
  int offset(int j) const { return offsets_.at(j - 1); }

  /// flat (0-based) -> (j, k), both 1-based
  std::pair<int, int> to_multi(int flat) const {
    if (flat < 0 || flat >= N()) throw std::out_of_range("ClusterIndex: flat index out of range");
    int j = 0;
    while (offsets_[j + 1] <= flat) ++j;
    return {j + 1, flat - offsets_[j] + 1};
  }
  int to_flat(int j, int k) const {
    if (j < 1 || j > n() || k < 1 || k > sizes_[j - 1])
      throw std::out_of_range("ClusterIndex: (j,k) out of range");
    return offsets_[j - 1] + k - 1;
  }

  bool operator==(const ClusterIndex& o) const { return sizes_ == o.sizes_; }

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  int n0_ = 0;
};

struct ClusterConfig {
  ClusterIndex index;
  std::vector<double> masses;
  std::vector<Vec2> positions;

  ClusterConfig() = default;
  ClusterConfig(ClusterIndex idx, std::vector<double> m, std::vector<Vec2> q)
      : index(std::move(idx)), masses(std::move(m)), positions(std::move(q)) {
    validate();
  }

  void validate() const {
    if (static_cast<int>(masses.size()) != index.N() || static_cast<int>(positions.size()) != index.N())
      throw std::invalid_argument("ClusterConfig: sizes do not match index");
    for (double m : masses)
      if (!(m > 0.0)) throw std::invalid_argument("ClusterConfig: masses must be positive");
  }

  int size() const { return index.N(); }
  const Vec2& at(int j, int k) const { return positions[index.to_flat(j, k)]; }
  double mass(int j, int k) const { return masses[index.to_flat(j, k)]; }

  double cluster_mass(int j) const {
    double s = 0;
    for (int k = 1; k <= index.size(j); ++k) s += mass(j, k);
    return s;
  }
  Vec2 cluster_center(int j) const {
    Vec2 c = Vec2::Zero();
    for (int k = 1; k <= index.size(j); ++k) c += mass(j, k) * at(j, k);
    return c / cluster_mass(j);
  }
  double total_mass() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }
  Vec2 momentum_like(const std::vector<Vec2>& v) const {
    Vec2 s = Vec2::Zero();
    for (std::size_t i = 0; i < v.size(); ++i) s += masses[i] * v[i];
    return s;
  }
};

/// Removes the global mass-weighted mean of the positions.
inline ClusterConfig center_of_mass_project(const ClusterConfig& cfg) {
  ClusterConfig out = cfg;
  Vec2 c = cfg.momentum_like(cfg.positions) / cfg.total_mass();
  for (auto& q : out.positions) q -= c;
  return out;
}

/// Cluster centers and member offsets; both sets have zero weighted mean.
struct JacobiSplit {
  std::vector<Vec2> centers;    // n entries, weights M_j
  std::vector<Vec2> relative;   // N entries, weights m_{j,k} within each cluster
  Vec2 total_center = Vec2::Zero();
};

inline JacobiSplit split_jacobi(const ClusterConfig& cfg) {
  JacobiSplit s;
  const auto& idx = cfg.index;
  s.total_center = cfg.momentum_like(cfg.positions) / cfg.total_mass();
  s.relative.resize(cfg.size());
  for (int j = 1; j <= idx.n(); ++j) {
    Vec2 c = cfg.cluster_center(j);
    s.centers.push_back(c - s.total_center);
    for (int k = 1; k <= idx.size(j); ++k) s.relative[idx.to_flat(j, k)] = cfg.at(j, k) - c;
  }
  return s;
}

inline ClusterConfig merge_jacobi(const JacobiSplit& s, const ClusterIndex& idx, const std::vector<double>& masses) {
  std::vector<Vec2> q(idx.N());
  for (int j = 1; j <= idx.n(); ++j)
    for (int k = 1; k <= idx.size(j); ++k) {
      int f = idx.to_flat(j, k);
      q[f] = s.total_center + s.centers[j - 1] + s.relative[f];
    }
  return ClusterConfig(idx, masses, std::move(q));
}

// ---------------------------------------------------------------------------
// flat layout helpers: (x1, y1, x2, y2, ...)

inline VecX flatten(const std::vector<Vec2>& pts) {
  VecX v(2 * pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) v.segment<2>(2 * i) = pts[i];
  return v;
}

inline std::vector<Vec2> unflatten(const VecX& v) {
  std::vector<Vec2> pts(v.size() / 2);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = v.segment<2>(2 * i);
  return pts;
}

/// J applied to every planar component.
inline VecX apply_J_all(const VecX& v) {
  VecX out(v.size());
  for (Eigen::Index i = 0; i < v.size(); i += 2) {
    out[i] = -v[i + 1];
    out[i + 1] = v[i];
  }
  return out;
}

inline VecX rotate_all(const VecX& v, double theta) {
  Mat2 r = rot(theta);
  VecX out(v.size());
  for (Eigen::Index i = 0; i < v.size(); i += 2) out.segment<2>(i) = r * v.segment<2>(i);
  return out;
}

/// Orthonormal basis (columns) of { u in R^{2k} : sum_i m_i u_i = 0 }.
inline MatX com_free_basis(const std::vector<double>& masses) {
  const int k = static_cast<int>(masses.size());
  MatX constraint = MatX::Zero(2 * k, 2);
  for (int i = 0; i < k; ++i) {
    constraint(2 * i, 0) = masses[i];
    constraint(2 * i + 1, 1) = masses[i];
  }
  Eigen::HouseholderQR<MatX> qr(constraint);
  MatX q = qr.householderQ() * MatX::Identity(2 * k, 2 * k);
  return q.rightCols(2 * k - 2);
}

inline double diameter(const std::vector<Vec2>& pts) {
  double d = 0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) d = std::max(d, (pts[a] - pts[b]).norm());
  return d;
}

}  // namespace carousel
