#include <cmath>
#include <cstdio>
#include <fstream>

#include "ddenf/io.hpp"
#include "doctest.h"

using namespace ddenf;

TEST_CASE("orbit json round-trip is bit-identical") {
  auto m = make_model("hopf_ode");
  SolveCycleOptions so;
  so.L = 12;
  so.M = 3;
  auto guess = [](double t) {
    Vec v(2);
    v << std::cos(t), std::sin(t);
    return v;
  };
  auto orbit = solve_cycle(m, guess, 2 * M_PI, so);
  Json j = orbit_to_json(orbit);
  save_json("/tmp/ddenf_orbit_test.json", j);
  Json j2 = load_json("/tmp/ddenf_orbit_test.json");
  auto back = orbit_from_json(j2);
  CHECK(back.period() == orbit.period());
  for (int g = 0; g < orbit.profile().mesh().num_basis(); ++g)
    for (int c = 0; c < 2; ++c)
      CHECK(back.profile().values()(c, g) == orbit.profile().values()(c, g));
  CHECK(back.lin.model().id() == "hopf_ode");
}

TEST_CASE("complex profile json round-trip") {
  auto mesh = std::make_shared<Mesh>(6, 3, 2.0);
  ComplexProfile p(mesh, 2, Boundary::Antiperiodic);
  for (int g = 0; g < mesh->num_basis(); ++g)
    p.values().col(g) = CVec::Constant(2, cplx(std::sin(g * 0.3), std::cos(g * 0.2)));
  Json j = profile_to_json(p);
  auto back = complex_profile_from_json(j);
  CHECK(back.boundary() == Boundary::Antiperiodic);
  CHECK((back.values() - p.values()).norm() == 0.0);
  CHECK_THROWS_AS(real_profile_from_json(j), InputError);
}

TEST_CASE("codim1 branch csv round-trip and svg export") {
  Codim1Branch br;
  br.kind = "ns";
  br.param1 = "zeta";
  br.param2 = "tau";
  br.termination = "range_exhausted";
  for (int k = 0; k < 5; ++k) {
    Codim1BranchPoint pt;
    pt.p1 = 0.1 * k;
    pt.p2 = 6.0 + k;
    pt.T = 0.7;
    pt.coef = cplx(0.5 - 0.3 * k, 0.1);
    br.points.push_back(std::move(pt));
  }
  Codim2Event ev;
  ev.kind = "CH";
  ev.lo = 1;
  ev.hi = 2;
  ev.p1 = 0.15;
  ev.p2 = 7.5;
  br.events.push_back(ev);

  write_codim1_branch_csv("/tmp/ddenf_branch_test.csv", br);
  auto back = read_codim1_branch_csv("/tmp/ddenf_branch_test.csv");
  CHECK(back.kind == "ns");
  CHECK(back.points.size() == 5);
  CHECK(back.points[3].p1 == doctest::Approx(0.3));
  CHECK(back.events.size() == 1);

  write_branch_svg("/tmp/ddenf_branch_test.svg", {br});
  std::ifstream svg("/tmp/ddenf_branch_test.svg");
  std::string content((std::istreambuf_iterator<char>(svg)),
                      std::istreambuf_iterator<char>());
  CHECK(content.find("<svg") != std::string::npos);
  CHECK(content.find("<circle") != std::string::npos);  // one event marker
  CHECK(content.find("CH") != std::string::npos);

  // empty branch still writes a valid artifact
  Codim1Branch empty;
  empty.kind = "pd";
  empty.param1 = "a";
  empty.param2 = "c";
  write_branch_svg("/tmp/ddenf_empty_test.svg", {empty});
  std::ifstream svg2("/tmp/ddenf_empty_test.svg");
  std::string content2((std::istreambuf_iterator<char>(svg2)),
                       std::istreambuf_iterator<char>());
  CHECK(content2.find("</svg>") != std::string::npos);
}

TEST_CASE("normal form report json") {
  NormalFormReport rep;
  rep.kind = "pd";
  rep.method = NfMethod::Both;
  rep.L = 40;
  rep.M = 4;
  rep.a_direct = 0.5;
  rep.a_efficient = 0.5000001;
  rep.c_direct = -2.0;
  rep.c_efficient = -2.0000002;
  rep.diagnostics["c_discrepancy"] = 1e-7;
  Json j = report_to_json(rep);
  CHECK(j["coefficients"]["c"] == doctest::Approx(-2.0000002));
  CHECK(j["kind"] == "pd");
  CHECK(j["diagnostics"]["c_discrepancy"] == doctest::Approx(1e-7));
}
