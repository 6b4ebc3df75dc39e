#include "carousel/io.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace carousel;
using carousel::io::json;

namespace {

CarouselFamily binary_family() { return lagrange_binary_family(1, 2, 3, Alpha::from_rational(3, 2)); }

}  // namespace

TEST(Json, AlphaForms) {
  EXPECT_EQ(io::alpha_to_json(Alpha::from_rational(3, 2)), json("3/2"));
  EXPECT_EQ(io::alpha_from_json(json("log")).value(), 1.0);
  EXPECT_EQ(io::alpha_from_json(json("newton")).value(), 2.0);
  auto a = io::alpha_from_json(json("1.05"));
  ASSERT_TRUE(a.exact().has_value());
  EXPECT_EQ(a.exact()->num, 21);
  EXPECT_EQ(a.exact()->den, 20);
  EXPECT_FALSE(io::alpha_from_json(json(1.7)).exact().has_value());
  EXPECT_THROW(io::alpha_from_json(json::array()), std::invalid_argument);
}

TEST(Json, CentralConfigurationRoundTrip) {
  auto cc = lagrange_config(1, 2, 3, Alpha::from_rational(5, 2));
  auto j = io::to_json(cc);
  EXPECT_TRUE(j.contains("alpha") && j.contains("masses") && j.contains("positions") && j.contains("residual"));
  auto back = io::cc_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.masses, cc.masses);
  for (int i = 0; i < cc.size(); ++i) EXPECT_EQ(back.positions[i], cc.positions[i]);
  EXPECT_EQ(back.alpha.exact(), cc.alpha.exact());
  EXPECT_EQ(back.residual, cc.residual);
  json bad = j;
  bad["masses"] = {1.0, 2.0};
  EXPECT_THROW(io::cc_from_json(bad), std::invalid_argument);
  bad = j;
  bad["masses"] = {1.0, -2.0, 3.0};
  EXPECT_THROW(io::cc_from_json(bad), std::invalid_argument);
}

TEST(Json, CertificateRoundTrip) {
  for (const auto& r : {certify_polygon_weak(4, 3, Alpha::logarithmic()), certify_lagrange(1, 1, 1, Alpha::from_rational(3, 2), 1),
                        certify_polygon_grav<double>(7, 2)}) {
    auto j = io::to_json(r);
    auto back = io::cert_from_json(json::parse(j.dump()));
    EXPECT_EQ(back.target, r.target);
    EXPECT_EQ(back.verdict, r.verdict);
    EXPECT_EQ(back.modes_checked, r.modes_checked);
    EXPECT_EQ(back.interval, r.interval);
    EXPECT_EQ(back.failing_modes.size(), r.failing_modes.size());
    EXPECT_EQ(back.eigenvalues.size(), r.eigenvalues.size());
    EXPECT_EQ(io::to_json(back), j);
  }
}

TEST(Json, PlanRoundTrip) {
  auto rp = plan_rational({1, -2}, 41, 3, Alpha::from_rational(3, 2), {0.1, 0.2});
  auto back = io::plan_from_json(json::parse(io::to_json(rp).dump()));
  EXPECT_EQ(back.rational->p, 41);
  EXPECT_EQ(back.rational->q, 3);
  EXPECT_EQ(back.omega, rp.omega);
  EXPECT_EQ(back.phases, rp.phases);
  EXPECT_EQ(io::to_json(rp)["windings"]["clusters"][1], 3 - 2 * 41);
  auto ep = plan_from_eps({1}, 0.02, Alpha(1.7));
  auto eb = io::plan_from_json(io::to_json(ep));
  EXPECT_DOUBLE_EQ(eb.nu, ep.nu);
  EXPECT_FALSE(eb.rational.has_value());
}

TEST(Json, FamilyAndPathRoundTrip) {
  auto f = binary_family();
  auto plan = plan_rational({1}, 60, 1, f.alpha(), {0.3});
  auto fb = io::family_from_json(io::to_json(f));
  EXPECT_EQ(fb.masses(), f.masses());
  EXPECT_EQ(fb.index, f.index);

  RefineOptions o;
  o.L = 8;
  auto [path, rep] = refine_orbit(lift(f, plan, 8), plan, f, o);
  auto j = io::to_json(path, plan, f);
  auto back = io::path_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.L, path.L);
  EXPECT_LT(back.distance(path), 1e-15);
  EXPECT_EQ(j["family_hash"], io::content_hash(io::to_json(f)));
  j["family"]["a0"]["masses"][0] = 1.5;
  EXPECT_THROW(io::path_from_json(j), std::invalid_argument);
  EXPECT_TRUE(io::to_json(rep)["converged"].get<bool>());
}

TEST(Csv, TrajectoryRoundTrip) {
  auto f = binary_family();
  auto plan = plan_rational({1}, 20, 1, f.alpha());
  IntegrateOptions o;
  for (int i = 1; i < 10; ++i) o.sample_times.push_back(0.1 * i);
  auto tr = integrate(carousel_state(f, plan), f.masses(), f.alpha(), 1.0, o);
  std::stringstream ss;
  io::write_trajectory_csv(ss, tr, f.index, true);
  std::vector<std::string> header;
  auto rows = io::read_csv(ss, &header);
  ASSERT_EQ(rows.size(), tr.size());
  EXPECT_EQ(header.size(), 1u + 4u * 4u);
  EXPECT_EQ(header[1], "x_1_1");
  EXPECT_EQ(header[7], "x_3_1");
  for (std::size_t s = 0; s < rows.size(); ++s) {
    EXPECT_EQ(rows[s][0], tr.times[s]);
    for (int c = 0; c < 16; ++c) EXPECT_EQ(rows[s][1 + c], tr.states[s][c]);
  }
  std::stringstream ls;
  io::write_ledger_csv(ls, tr);
  auto lrows = io::read_csv(ls);
  ASSERT_EQ(lrows.size(), tr.size());
  EXPECT_EQ(lrows[0][1], tr.ledger[0].energy);
}

TEST(Svg, OnePolylinePerBody) {
  auto f = binary_family();
  auto plan = plan_rational({1}, 20, 1, f.alpha());
  IntegrateOptions o;
  for (int i = 1; i < 50; ++i) o.sample_times.push_back(0.1 * i);
  auto tr = integrate(carousel_state(f, plan), f.masses(), f.alpha(), 5.0, o);
  std::stringstream ss;
  io::write_svg(ss, io::orbits_of(tr, f.index.N()), f.index);
  const std::string svg = ss.str();
  std::size_t count = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++count;
  EXPECT_EQ(count, 4u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
