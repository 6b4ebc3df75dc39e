// Command-line front end: central configurations, certificates, carousel plans and orbits.

#include "carousel/carousel.hpp"
#include "carousel/central_config.hpp"
#include "carousel/dynamics.hpp"
#include "carousel/io.hpp"
#include "carousel/refine.hpp"
#include "carousel/spectral.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace carousel;
using carousel::io::json;

namespace {

enum Exit { kOk = 0, kInfeasible = 2, kRefuted = 3, kInconclusive = 4, kNumeric = 5 };

/// Refinement failures are reported as numeric failures, not as infeasible input.
struct RefineFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::certified: return kOk;
    case Verdict::refuted: return kRefuted;
    default: return kInconclusive;
  }
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    io::write_text_file(out, j.dump(2) + "\n");
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stod(cell));
  return v;
}

/// "lagrange:m1,m2,m3", "polygon:k", "two-body:m1,m2" or a configuration JSON file.
CentralConfiguration load_config(const std::string& source, const Alpha& alpha) {
  const auto colon = source.find(':');
  if (colon != std::string::npos) {
    const std::string kind = source.substr(0, colon), rest = source.substr(colon + 1);
    if (kind == "lagrange") {
      auto m = parse_list(rest);
      if (m.size() != 3) throw std::invalid_argument("lagrange: three masses required");
      return lagrange_config(m[0], m[1], m[2], alpha);
    }
    if (kind == "polygon") return polygon_config(std::stoi(rest), alpha);
    if (kind == "two-body") {
      auto m = parse_list(rest);
      if (m.size() != 2) throw std::invalid_argument("two-body: two masses required");
      return two_body_config(m[0], m[1], alpha);
    }
    throw std::invalid_argument("unknown configuration kind: " + kind);
  }
  return io::cc_from_json(io::read_json_file(source));
}

std::pair<int, int> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) {
    int k = std::stoi(s);
    return {k, k};
  }
  return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
}

bool extended_precision() {
  const char* p = std::getenv("CAROUSEL_PRECISION");
  if (!p || std::string(p) == "double") return false;
  if (std::string(p) == "extended") return true;
  throw std::invalid_argument("CAROUSEL_PRECISION must be double or extended");
}

// ---------------------------------------------------------------------------
// shared carousel options

struct CarouselArgs {
  std::string alpha = "3/2";
  std::string base = "lagrange:1,2,3";
  std::vector<std::string> splits;
  std::vector<long long> p_list{1};
  long long nu_p = 0;
  long long q = 1;
  double eps = 0;
  std::vector<double> phases;
  std::string out;

  void attach(CLI::App* sub) {
    sub->add_option("--alpha", alpha, "exponent: decimal, num/den, log or newton")->capture_default_str();
    sub->add_option("--base", base, "base configuration: lagrange:m1,m2,m3 | polygon:k | two-body:m1,m2 | file.json")
        ->capture_default_str();
    sub->add_option("--split", splits, "cluster masses of one base body, e.g. 0.5,0.5 (repeat per cluster)");
    sub->add_option("--p", p_list, "cluster integers p_j")->delimiter(',')->capture_default_str();
    sub->add_option("--nu-p", nu_p, "numerator p of nu = p/q");
    sub->add_option("--q", q, "denominator q of nu = p/q")->capture_default_str();
    sub->add_option("--eps", eps, "scale parameter instead of a rational frequency");
    sub->add_option("--phases", phases, "cluster phases")->delimiter(',');
    sub->add_option("--out", out, "write JSON here instead of stdout");
  }

  Alpha exponent() const { return Alpha::parse(alpha); }

  CarouselFamily family() const {
    auto a0 = load_config(base, exponent());
    std::vector<std::vector<double>> s;
    for (const auto& sp : splits) s.push_back(parse_list(sp));
    if (s.empty()) s.push_back({a0.masses[0] / 2, a0.masses[0] / 2});
    return build_family(a0, s);
  }

  CarouselPlan plan() const {
    if (nu_p != 0) return plan_rational(p_list, nu_p, q, exponent(), phases);
    if (eps > 0) return plan_from_eps(p_list, eps, exponent(), phases);
    throw std::invalid_argument("plan: give --nu-p (with --q) or --eps");
  }
};

json windings_json(const WindingNumbers& w) { return {{"base", w.base}, {"clusters", w.clusters}, {"max_residual", w.max_residual}}; }

/// p' with the same q whose plan has scale closest to eps.
long long p_for_eps(double eps, long long q, const Alpha& a) {
  return std::llround(static_cast<double>(q) * std::pow(eps, -(a.value() + 1.0) / 2.0) - static_cast<double>(q));
}

json simulate_once(const CarouselFamily& f, const CarouselPlan& plan, double rtol, Trajectory* keep) {
  IntegrateOptions o;
  o.rtol = o.atol = rtol;
  o.sample_times = winding_samples(plan);
  auto tr = integrate(carousel_state(f, plan), f.masses(), f.alpha(), plan.period, o);
  json j = {{"eps", plan.eps},
            {"p", plan.rational->p},
            {"q", plan.rational->q},
            {"period", plan.period},
            {"defect", periodicity_defect(tr, plan.period)},
            {"energy_drift", tr.energy_drift()},
            {"angular_momentum_drift", tr.angular_momentum_drift()},
            {"momentum_drift", tr.momentum_drift()},
            {"steps", tr.steps},
            {"windings", windings_json(winding_numbers(tr, f.index))}};
  if (keep) *keep = std::move(tr);
  return j;
}

void write_outputs(const Trajectory& tr, const ClusterIndex& idx, const std::string& csv, const std::string& svg) {
  if (!csv.empty()) {
    std::ofstream os(csv);
    if (!os) throw std::runtime_error("cannot write " + csv);
    io::write_trajectory_csv(os, tr, idx);
  }
  if (!svg.empty()) {
    std::ofstream os(svg);
    if (!os) throw std::runtime_error("cannot write " + svg);
    io::write_svg(os, io::orbits_of(tr, idx.N()), idx);
  }
}

// ---------------------------------------------------------------------------

int run(std::vector<std::string> args);

/// Job file: {"command": ..., "subcommand": ..., "args": {flag: value}}; string arrays repeat the flag.
std::vector<std::string> job_to_args(const json& job) {
  std::vector<std::string> a{job.at("command").get<std::string>()};
  if (job.contains("subcommand")) a.push_back(job["subcommand"].get<std::string>());
  const json flags = job.value("args", json::object());
  for (const auto& [key, value] : flags.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) a.push_back("--" + key);
      continue;
    }
    auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array() && !value.empty() && value[0].is_string()) {
      for (const auto& v : value) {
        a.push_back("--" + key);
        a.push_back(v.get<std::string>());
      }
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + scalar(v);
      a.push_back("--" + key);
      a.push_back(joined);
    } else {
      a.push_back("--" + key);
      a.push_back(scalar(value));
    }
  }
  return a;
}

int run(std::vector<std::string> args) {
  CLI::App app{"Central configurations, nondegeneracy certificates and carousel orbits"};
  app.require_subcommand(0, 1);
  std::string job;
  app.add_option("--job", job, "JSON job file");
  int code = kOk;

  // cc -----------------------------------------------------------------------
  auto* cc = app.add_subcommand("cc", "central configurations");
  cc->require_subcommand(1);
  struct {
    int k = 3;
    std::string alpha = "2";
    std::vector<double> masses{1, 1, 1};
    std::string in, out;
    double tol = 1e-13;
  } cca;
  auto* ccp = cc->add_subcommand("polygon", "regular k-gon of equal masses");
  ccp->add_option("--k", cca.k)->required();
  ccp->add_option("--alpha", cca.alpha)->capture_default_str();
  ccp->add_option("--out", cca.out);
  ccp->callback([&] { emit(io::to_json(polygon_config(cca.k, Alpha::parse(cca.alpha))), cca.out); });

  auto* ccl = cc->add_subcommand("lagrange", "equilateral triangle");
  ccl->add_option("--masses", cca.masses)->delimiter(',')->expected(3)->required();
  ccl->add_option("--alpha", cca.alpha)->capture_default_str();
  ccl->add_option("--out", cca.out);
  ccl->callback([&] {
    auto c = lagrange_config(cca.masses[0], cca.masses[1], cca.masses[2], Alpha::parse(cca.alpha));
    auto j = io::to_json(c);
    const double a = (c.positions[0] - c.positions[1]).norm(), b = (c.positions[1] - c.positions[2]).norm(),
                 d = (c.positions[2] - c.positions[0]).norm();
    j["side_lengths"] = {a, b, d};
    j["equilateral"] = std::max({a, b, d}) - std::min({a, b, d}) < 1e-12 * a;
    j["beta"] = mass_beta(cca.masses[0], cca.masses[1], cca.masses[2]);
    emit(j, cca.out);
  });

  auto* ccs = cc->add_subcommand("solve", "Newton from a seed configuration");
  ccs->add_option("--in", cca.in, "seed JSON (alpha, masses, positions)")->required();
  ccs->add_option("--tol", cca.tol)->capture_default_str();
  ccs->add_option("--out", cca.out);
  ccs->callback([&] {
    auto seed = io::cc_from_json(io::read_json_file(cca.in));
    CcSolveOptions o;
    o.tol = cca.tol;
    auto c = solve_central_config(seed.positions, seed.masses, seed.alpha, o);
    auto j = io::to_json(c);
    j["iterations"] = c.iterations;
    emit(j, cca.out);
  });

  auto* ccv = cc->add_subcommand("verify", "report the residual of a configuration");
  ccv->add_option("--in", cca.in)->required();
  ccv->add_option("--tol", cca.tol, "residual accepted as central")->capture_default_str();
  ccv->callback([&] {
    auto j = io::read_json_file(cca.in);
    auto c = io::cc_from_json(j);
    const double r = cc_residual(c.flat(), c.masses, c.alpha);
    emit({{"residual", r}, {"central", r < cca.tol}, {"n", c.size()}}, "");
  });

  // certify ------------------------------------------------------------------
  auto* cert = app.add_subcommand("certify", "nondegeneracy certificates");
  cert->require_subcommand(1);
  struct {
    int k = 4;
    long long p = 1;
    std::string alpha = "2", k_range, config, out;
    int m = 1, jobs = 1, mode = 0;
    std::vector<double> masses{1, 1, 1};
    double tol = 1e-9;
    bool verbose = false;
  } ca;
  auto finish = [&](const CertResult& r) {
    emit(io::to_json(r), ca.out);
    code = verdict_exit(r.verdict);
  };

  auto* cw = cert->add_subcommand("polygon-weak", "equal-mass polygon, arbitrary exponent");
  cw->add_option("--k", ca.k)->required();
  cw->add_option("--p", ca.p)->required();
  cw->add_option("--alpha", ca.alpha)->required();
  cw->add_option("--out", ca.out);
  cw->callback([&] { finish(certify_polygon_weak(ca.k, ca.p, Alpha::parse(ca.alpha))); });

  auto* cg = cert->add_subcommand("polygon-grav", "gravitational polygon, interval enclosures");
  cg->add_option("--k-range", ca.k_range, "k or lo..hi")->required();
  cg->add_option("--m", ca.m, "mode integer")->capture_default_str();
  cg->add_option("--jobs", ca.jobs)->capture_default_str();
  cg->add_flag("--verbose", ca.verbose, "include every per-k certificate");
  cg->add_option("--out", ca.out);
  cg->callback([&] {
    auto [lo, hi] = parse_range(ca.k_range);
    if (lo < 4 || hi < lo) throw std::invalid_argument("--k-range must satisfy 4 <= lo <= hi");
    const bool ext = extended_precision();
    auto results = ext ? certify_polygon_grav_range<long double>(lo, hi, ca.m, ca.jobs)
                       : certify_polygon_grav_range<double>(lo, hi, ca.m, ca.jobs);
    json refuted = json::array(), inconclusive = json::array(), all = json::array();
    double margin = std::numeric_limits<double>::infinity(), width = 0;
    long long enclosures = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      const int k = lo + static_cast<int>(i);
      if (r.verdict == Verdict::refuted) refuted.push_back(k);
      if (r.verdict == Verdict::inconclusive) inconclusive.push_back(k);
      margin = std::min(margin, r.margin);
      width = std::max(width, r.max_rel_width);
      enclosures += r.enclosures_evaluated;
      if (ca.verbose) all.push_back(io::to_json(r));
    }
    const Verdict v = !refuted.empty() ? Verdict::refuted : !inconclusive.empty() ? Verdict::inconclusive : Verdict::certified;
    json j = {{"target", "polygon alpha=2 k=" + std::to_string(lo) + ".." + std::to_string(hi) + " m=" + std::to_string(ca.m)},
              {"verdict", to_string(v)},
              {"certified", static_cast<long long>(results.size()) - static_cast<long long>(refuted.size() + inconclusive.size())},
              {"refuted", refuted},
              {"inconclusive", inconclusive},
              {"min_margin", margin},
              {"max_rel_width", width},
              {"enclosures_evaluated", enclosures},
              {"interval", true},
              {"precision", ext ? "extended" : "double"}};
    if (ca.verbose) j["results"] = all;
    emit(j, ca.out);
    code = verdict_exit(v);
  });

  auto* cl = cert->add_subcommand("lagrange", "equilateral triangle with three masses");
  cl->add_option("--masses", ca.masses)->delimiter(',')->expected(3)->required();
  cl->add_option("--alpha", ca.alpha)->required();
  cl->add_option("--p", ca.p)->required();
  cl->add_option("--mode", ca.mode, "0: all modes, >= 2: only that symmetric mode")->capture_default_str();
  cl->add_option("--out", ca.out);
  cl->callback([&] { finish(certify_lagrange(ca.masses[0], ca.masses[1], ca.masses[2], Alpha::parse(ca.alpha), ca.p, ca.mode)); });

  auto* c0 = cert->add_subcommand("a0", "nondegeneracy of a central configuration");
  c0->add_option("--config", ca.config, "lagrange:m1,m2,m3 | polygon:k | file.json")->required();
  c0->add_option("--alpha", ca.alpha)->capture_default_str();
  c0->add_option("--tol", ca.tol)->capture_default_str();
  c0->add_option("--out", ca.out);
  c0->callback([&] { finish(certify_a0(load_config(ca.config, Alpha::parse(ca.alpha)), ca.tol)); });

  auto* cgen = cert->add_subcommand("general", "floating-point check of every Fourier block");
  cgen->add_option("--config", ca.config)->required();
  cgen->add_option("--alpha", ca.alpha)->capture_default_str();
  cgen->add_option("--p", ca.p)->required();
  cgen->add_option("--tol", ca.tol)->capture_default_str();
  cgen->add_option("--out", ca.out);
  cgen->callback([&] { finish(certify_general(load_config(ca.config, Alpha::parse(ca.alpha)), ca.p, ca.tol)); });

  // carousel -----------------------------------------------------------------
  auto* car = app.add_subcommand("carousel", "carousel orbits");
  car->require_subcommand(1);
  CarouselArgs xa;
  struct {
    std::string csv, svg;
    int samples = 2000;
    double rtol = 1e-12;
    bool halve = false;
    int L = 32, grid = 16, jobs = 1;
    double tol = 1e-10;
    std::string path_out;
  } xo;

  auto* xp = car->add_subcommand("plan", "frequencies, radii and windings");
  xa.attach(xp);
  xp->callback([&] {
    auto plan = xa.plan();
    emit(io::to_json(plan), xa.out);
  });

  auto* xs = car->add_subcommand("synthesize", "leading-order orbit");
  xa.attach(xs);
  xs->add_option("--csv", xo.csv);
  xs->add_option("--svg", xo.svg);
  xs->add_option("--samples", xo.samples)->capture_default_str();
  xs->callback([&] {
    auto f = xa.family();
    auto plan = xa.plan();
    const double T = plan.rational ? plan.period : 2.0 * std::numbers::pi;
    Trajectory tr;
    tr.masses = f.masses();
    tr.alpha = f.alpha();
    for (int i = 0; i <= xo.samples; ++i) {
      const double t = T * i / xo.samples;
      PhaseState s;
      s.positions = assemble_trajectory(f, plan, t).positions;
      s.velocities = assemble_velocity(f, plan, t);
      tr.times.push_back(t);
      tr.states.push_back(pack(s));
    }
    write_outputs(tr, f.index, xo.csv, xo.svg);
    emit({{"plan", io::to_json(plan)}, {"samples", tr.size()}, {"csv", xo.csv}, {"svg", xo.svg}}, xa.out);
  });

  auto* xsim = car->add_subcommand("simulate", "integrate the leading-order orbit for one period");
  xa.attach(xsim);
  xsim->add_option("--rtol", xo.rtol)->capture_default_str();
  xsim->add_flag("--halve", xo.halve, "also run at eps/2 and report the defect ratio");
  xsim->add_option("--csv", xo.csv);
  xsim->add_option("--svg", xo.svg);
  xsim->callback([&] {
    auto f = xa.family();
    auto plan = xa.plan();
    if (!plan.rational) throw std::invalid_argument("simulate: rational plan required (--nu-p, --q)");
    Trajectory tr;
    json j = simulate_once(f, plan, xo.rtol, &tr);
    write_outputs(tr, f.index, xo.csv, xo.svg);
    if (xo.halve) {
      auto half = plan_rational(plan.p_list, p_for_eps(plan.eps / 2, plan.rational->q, f.alpha()), plan.rational->q, f.alpha(),
                                plan.phases);
      json h = simulate_once(f, half, xo.rtol, nullptr);
      j = {{"runs", {j, h}}, {"defect_ratio", j["defect"].get<double>() / h["defect"].get<double>()}};
    }
    emit(j, xa.out);
  });

  auto* xr = car->add_subcommand("refine", "Fourier-Galerkin refinement and re-integration");
  xa.attach(xr);
  xr->add_option("--L", xo.L)->capture_default_str();
  xr->add_option("--tol", xo.tol)->capture_default_str();
  xr->add_option("--rtol", xo.rtol, "integration tolerance for the check")->default_val(1e-14);
  xr->add_option("--path-out", xo.path_out, "write the refined path JSON here");
  xr->add_option("--csv", xo.csv);
  xr->add_option("--svg", xo.svg);
  xr->callback([&] {
    auto f = xa.family();
    auto plan = xa.plan();
    if (!plan.rational) throw std::invalid_argument("refine: rational plan required (--nu-p, --q)");
    RefineOptions o;
    o.L = xo.L;
    o.tol = xo.tol;
    std::pair<FourierPath, RefineReport> res;
    try {
      res = refine_orbit(lift(f, plan, xo.L), plan, f, o);
    } catch (const SolverError& e) {
      throw RefineFailure(e.what());
    }
    const auto& [path, rep] = res;
    IntegrateOptions io_;
    io_.rtol = io_.atol = xo.rtol;
    io_.sample_times = winding_samples(plan);
    auto tr = integrate(to_inertial(path, plan, f, 0.0), f.masses(), f.alpha(), plan.period, io_);
    write_outputs(tr, f.index, xo.csv, xo.svg);
    if (!xo.path_out.empty()) io::write_text_file(xo.path_out, io::to_json(path, plan, f).dump(2) + "\n");
    emit({{"report", io::to_json(rep)},
          {"nbody_residual", nbody_residual(path, plan, f, 256)},
          {"defect", periodicity_defect(tr, plan.period)},
          {"distance_from_init", path.distance(lift(f, plan, path.L))},
          {"windings", windings_json(winding_numbers(tr, f.index))},
          {"plan", io::to_json(plan)}},
         xa.out);
  });

  auto* xph = car->add_subcommand("phase-scan", "time-averaged coupling over cluster phases");
  xa.attach(xph);
  xph->add_option("--grid", xo.grid)->capture_default_str();
  xph->add_option("--jobs", xo.jobs)->capture_default_str();
  xph->callback([&] {
    auto f = xa.family();
    auto plan = xa.plan();
    auto scan = phase_scan(f, plan, xo.grid, xo.jobs);
    auto pts = [](const std::vector<PhasePoint>& v) {
      json a = json::array();
      for (const auto& p : v) a.push_back({{"phases", p.phases}, {"value", p.value}});
      return a;
    };
    emit({{"flat", scan.flat},
          {"spread", scan.spread},
          {"symmetry", scan.symmetry},
          {"nodes", scan.nodes},
          {"candidates", pts(scan.candidates)},
          {"grid", pts(scan.grid)}},
         xa.out);
  });

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (!job.empty()) return run(job_to_args(io::read_json_file(job)));
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kInfeasible;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const RefineFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasible;
  }
}
