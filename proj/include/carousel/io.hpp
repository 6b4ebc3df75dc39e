#pragma once

#include "carousel/carousel.hpp"
#include "carousel/central_config.hpp"
#include "carousel/dynamics.hpp"
#include "carousel/refine.hpp"
#include "carousel/spectral.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace carousel::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// exponent

inline json alpha_to_json(const Alpha& a) { return a.exact() ? json(a.str()) : json(a.value()); }

/// Accepts a number, "num/den", a decimal string, "log" or "newton".
inline Alpha alpha_from_json(const json& j) {
  if (j.is_string()) return Alpha::parse(j.get<std::string>());
  if (j.is_number()) return Alpha(j.get<double>());
  throw std::invalid_argument("alpha: expected number or string");
}

inline json points_to_json(const std::vector<Vec2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x(), p.y()});
  return a;
}

inline std::vector<Vec2> points_from_json(const json& j) {
  std::vector<Vec2> pts;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw std::invalid_argument("positions: expected [x, y] pairs");
    pts.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return pts;
}

// ---------------------------------------------------------------------------
// central configurations

inline json to_json(const CentralConfiguration& cc) {
  return {{"alpha", alpha_to_json(cc.alpha)},
          {"masses", cc.masses},
          {"positions", points_to_json(cc.positions)},
          {"residual", cc.residual}};
}

inline CentralConfiguration cc_from_json(const json& j) {
  CentralConfiguration cc;
  cc.alpha = alpha_from_json(j.at("alpha"));
  cc.masses = j.at("masses").get<std::vector<double>>();
  cc.positions = points_from_json(j.at("positions"));
  if (cc.masses.size() != cc.positions.size()) throw std::invalid_argument("configuration: masses and positions differ in length");
  for (double m : cc.masses)
    if (!(m > 0)) throw std::invalid_argument("configuration: masses must be positive");
  cc.residual = j.contains("residual") ? j["residual"].get<double>() : cc_residual(cc.flat(), cc.masses, cc.alpha);
  return cc;
}

// ---------------------------------------------------------------------------
// certificates

inline json to_json(const CertResult& r) {
  json modes = json::array();
  for (const auto& m : r.failing_modes) modes.push_back({{"block", m.block}, {"ell", m.ell}, {"value", m.value}});
  json j = {{"target", r.target},
            {"verdict", to_string(r.verdict)},
            {"margin", std::isfinite(r.margin) ? json(r.margin) : json(nullptr)},
            {"margin_block", r.margin_block},
            {"margin_ell", r.margin_ell},
            {"modes_checked", r.modes_checked},
            {"enclosures_evaluated", r.enclosures_evaluated},
            {"interval", r.interval},
            {"max_rel_width", r.max_rel_width},
            {"failing_modes", modes},
            {"log", r.log}};
  if (!r.eigenvalues.empty()) {
    json ev = json::array();
    for (const auto& z : r.eigenvalues) ev.push_back({z.real(), z.imag()});
    j["eigenvalues"] = ev;
  }
  return j;
}

inline Verdict verdict_from_string(const std::string& s) {
  if (s == "certified") return Verdict::certified;
  if (s == "refuted") return Verdict::refuted;
  if (s == "inconclusive") return Verdict::inconclusive;
  throw std::invalid_argument("unknown verdict: " + s);
}

inline CertResult cert_from_json(const json& j) {
  CertResult r;
  r.target = j.at("target").get<std::string>();
  r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  r.margin = j.at("margin").is_null() ? std::numeric_limits<double>::infinity() : j["margin"].get<double>();
  r.margin_block = j.value("margin_block", 0);
  r.margin_ell = j.value("margin_ell", 0LL);
  r.modes_checked = j.at("modes_checked").get<long long>();
  r.enclosures_evaluated = j.value("enclosures_evaluated", 0LL);
  r.interval = j.at("interval").get<bool>();
  r.max_rel_width = j.value("max_rel_width", 0.0);
  for (const auto& m : j.value("failing_modes", json::array()))
    r.failing_modes.push_back({m.at("block").get<int>(), m.at("ell").get<long long>(), m.at("value").get<double>()});
  r.log = j.value("log", std::vector<std::string>{});
  for (const auto& z : j.value("eigenvalues", json::array())) r.eigenvalues.emplace_back(z[0].get<double>(), z[1].get<double>());
  return r;
}

// ---------------------------------------------------------------------------
// plans and families

inline json to_json(const CarouselPlan& p) {
  json j = {{"p_list", p.p_list},   {"alpha", alpha_to_json(p.alpha)}, {"eps", p.eps},
            {"nu", p.nu},           {"omega", p.omega},                {"radii", p.radii},
            {"phases", p.phases},   {"radius_ratio", p.radius_ratio},  {"omega_shift", p.omega_shift}};
  if (p.rational) {
    j["p"] = p.rational->p;
    j["q"] = p.rational->q;
    j["period"] = p.period;
    json w = {{"base", p.base_winding()}, {"clusters", json::array()}};
    for (int c = 1; c <= p.n0(); ++c) w["clusters"].push_back(p.cluster_winding(c));
    j["windings"] = w;
  }
  return j;
}

/// Rebuilds the plan from its defining data; derived fields are recomputed.
inline CarouselPlan plan_from_json(const json& j) {
  const auto p_list = j.at("p_list").get<std::vector<long long>>();
  const Alpha a = alpha_from_json(j.at("alpha"));
  const auto phases = j.value("phases", std::vector<double>{});
  if (j.contains("p") && j.contains("q"))
    return plan_rational(p_list, j["p"].get<long long>(), j["q"].get<long long>(), a, phases);
  return plan_from_eps(p_list, j.at("eps").get<double>(), a, phases);
}

inline json to_json(const CarouselFamily& f) {
  json cl = json::array();
  for (const auto& c : f.clusters) cl.push_back(to_json(c));
  return {{"a0", to_json(f.a0)}, {"clusters", cl}};
}

inline CarouselFamily family_from_json(const json& j) {
  std::vector<CentralConfiguration> cl;
  for (const auto& c : j.at("clusters")) cl.push_back(cc_from_json(c));
  return make_family(cc_from_json(j.at("a0")), std::move(cl));
}

/// FNV-1a over the compact JSON text.
inline std::string content_hash(const json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Fourier paths

/// Complex coefficients for l = 0..L per block, as [re, im] pairs per coordinate.
inline json to_json(const FourierPath& path, const CarouselPlan& plan, const CarouselFamily& f) {
  json blocks = json::array();
  for (int b = 0; b < path.num_blocks(); ++b) {
    json modes = json::array();
    for (int l = 0; l <= path.L; ++l) {
      json coords = json::array();
      const VecXC c = path.coefficient(b, l);
      for (Eigen::Index i = 0; i < c.size(); ++i) coords.push_back({c[i].real(), c[i].imag()});
      modes.push_back(coords);
    }
    blocks.push_back(modes);
  }
  const json fj = to_json(f), pj = to_json(plan);
  return {{"L", path.L}, {"blocks", blocks}, {"plan", pj}, {"family", fj},
          {"plan_hash", content_hash(pj)}, {"family_hash", content_hash(fj)}};
}

inline FourierPath path_from_json(const json& j) {
  FourierPath p;
  p.L = j.at("L").get<int>();
  for (const auto& modes : j.at("blocks")) {
    if (static_cast<int>(modes.size()) != p.L + 1) throw std::invalid_argument("path: expected L+1 modes per block");
    const auto dim = static_cast<Eigen::Index>(modes[0].size());
    MatX c = MatX::Zero(dim, p.columns());
    for (int l = 0; l <= p.L; ++l) {
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double re = modes[l][i][0].get<double>(), im = modes[l][i][1].get<double>();
        if (l == 0) {
          c(i, 0) = re;
        } else {
          c(i, 2 * l - 1) = 2.0 * re;
          c(i, 2 * l) = -2.0 * im;
        }
      }
    }
    p.blocks.push_back(c);
  }
  if (j.contains("family_hash") && j.contains("family") && content_hash(j["family"]) != j["family_hash"].get<std::string>())
    throw std::invalid_argument("path: family hash mismatch");
  if (j.contains("plan_hash") && j.contains("plan") && content_hash(j["plan"]) != j["plan_hash"].get<std::string>())
    throw std::invalid_argument("path: plan hash mismatch");
  return p;
}

inline json to_json(const RefineReport& r) {
  return {{"residual", r.residual},
          {"residual_history", r.residual_history},
          {"iterations", r.iterations},
          {"condition", r.condition},
          {"phase_constraints", r.phase_constraints},
          {"symmetry_residual", r.symmetry_residual},
          {"tail", r.tail},
          {"L", r.L},
          {"converged", r.converged},
          {"warnings", r.warnings}};
}

// ---------------------------------------------------------------------------
// CSV

inline std::string body_label(const ClusterIndex& idx, int flat) {
  auto [j, k] = idx.to_multi(flat);
  return std::to_string(j) + "_" + std::to_string(k);
}

/// t, x_{j,k}, y_{j,k}, ... and optionally the velocities.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const ClusterIndex& idx, bool velocities = false) {
  const int N = idx.N();
  os << "t";
  for (int i = 0; i < N; ++i) os << ",x_" << body_label(idx, i) << ",y_" << body_label(idx, i);
  if (velocities)
    for (int i = 0; i < N; ++i) os << ",vx_" << body_label(idx, i) << ",vy_" << body_label(idx, i);
  os << '\n' << std::setprecision(17);
  for (std::size_t s = 0; s < tr.size(); ++s) {
    os << tr.times[s];
    const Eigen::Index cols = velocities ? 4 * N : 2 * N;
    for (Eigen::Index c = 0; c < cols; ++c) os << ',' << tr.states[s][c];
    os << '\n';
  }
}

inline void write_ledger_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,energy,angular_momentum,px,py\n" << std::setprecision(17);
  for (std::size_t s = 0; s < tr.size(); ++s) {
    const auto& l = tr.ledger[s];
    os << tr.times[s] << ',' << l.energy << ',' << l.angular_momentum << ',' << l.momentum.x() << ',' << l.momentum.y()
       << '\n';
  }
}

/// Parses a numeric CSV with one header line.
inline std::vector<std::vector<double>> read_csv(std::istream& is, std::vector<std::string>* header = nullptr) {
  std::string line;
  std::vector<std::vector<double>> rows;
  if (!std::getline(is, line)) return rows;
  if (header) {
    header->clear();
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) header->push_back(cell);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// SVG

/// One polyline per body, colored by cluster.
inline void write_svg(std::ostream& os, const std::vector<std::vector<Vec2>>& orbits, const ClusterIndex& idx,
                      int size = 800) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (const auto& o : orbits)
    for (const auto& p : o) {
      lo_x = std::min(lo_x, p.x());
      hi_x = std::max(hi_x, p.x());
      lo_y = std::min(lo_y, p.y());
      hi_y = std::max(hi_y, p.y());
    }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double scale = 0.9 * size / span, pad = 0.05 * size;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
     << size << ' ' << size << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" << std::setprecision(6);
  for (std::size_t b = 0; b < orbits.size(); ++b) {
    const int cluster = idx.to_multi(static_cast<int>(b)).first;
    os << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << palette[(cluster - 1) % 8] << "\" points=\"";
    for (const auto& p : orbits[b]) os << pad + (p.x() - lo_x) * scale << ',' << size - pad - (p.y() - lo_y) * scale << ' ';
    os << "\"/>\n";
  }
  os << "</svg>\n";
}

/// Positions of every body at the trajectory samples.
inline std::vector<std::vector<Vec2>> orbits_of(const Trajectory& tr, int N) {
  std::vector<std::vector<Vec2>> out(N);
  for (const auto& s : tr.states)
    for (int i = 0; i < N; ++i) out[i].push_back(s.segment<2>(2 * i));
  return out;
}

// ---------------------------------------------------------------------------
// files

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace carousel::io
