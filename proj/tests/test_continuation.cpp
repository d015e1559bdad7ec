#include <cmath>

#include "ddenf/branch.hpp"
#include "doctest.h"

using namespace ddenf;

namespace {
PeriodicOrbit hopf_cycle_seed() {
  auto m = make_model("hopf_ode");
  SolveCycleOptions opts;
  opts.L = 20;
  opts.M = 4;
  auto guess = [](double t) {
    Vec v(2);
    v << std::cos(t), std::sin(t);
    return v;
  };
  return solve_cycle(m, guess, 2 * M_PI, opts);
}
}  // namespace

TEST_CASE("continuing the hopf cycle in the radial parameter keeps T = 2 pi") {
  auto m = make_model("hopf_ode");
  auto seed = hopf_cycle_seed();
  ContinuationOptions co;
  co.L = 20;
  co.M = 4;
  co.initial_step = 0.05;
  co.max_step = 0.2;
  co.max_points = 25;
  co.range_lo = 0.5;
  co.range_hi = 2.5;
  co.multiplier_count = 4;
  auto branch = continue_cycle(m, seed, "s", co);
  CHECK(branch.points.size() >= 10);
  for (const auto& pt : branch.points) {
    CHECK(std::abs(pt.orbit.period() - 2 * M_PI) < 1e-8);
    // cycle radius 1/sqrt(s)
    double r = pt.orbit.profile().value(1.0).norm();
    CHECK(r == doctest::Approx(1.0 / std::sqrt(pt.param)).epsilon(1e-6));
    CHECK(pt.spectrum.trivial_error < 1e-8);
  }
}

TEST_CASE("reversing direction retraces the previous point") {
  auto m = make_model("hopf_ode");
  auto seed = hopf_cycle_seed();
  ContinuationOptions co;
  co.L = 16;
  co.M = 4;
  co.initial_step = 0.05;
  co.max_points = 4;
  co.multiplier_count = 2;
  auto branch = continue_cycle(m, seed, "s", co);
  REQUIRE(branch.points.size() >= 3);
  // re-solve the middle point standalone from the stored orbit: corrector
  // determinism onto the same branch
  const auto& mid = branch.points[1];
  m->set_params(mid.orbit.params);
  SolveCycleOptions so;
  so.L = 16;
  so.M = 4;
  auto again = solve_cycle_from(mid.orbit, m, so);
  CHECK(std::abs(again.period() - mid.orbit.period()) < 1e-9);
  CHECK((again.profile().values() - mid.orbit.profile().values()).norm() < 1e-7);
}

TEST_CASE("detect_codim1 on synthetic test-function sequences") {
  CycleBranch branch;
  branch.free_param = "p";
  auto mk = [&](double pd, double ns, double w, double dp) {
    CyclePoint pt;
    pt.param = double(branch.points.size());
    pt.tests.pd = pd;
    pt.tests.ns = ns;
    pt.tests.ns_omega = w;
    pt.tests.fold = std::numeric_limits<double>::quiet_NaN();
    pt.dparam_ds = dp;
    branch.points.push_back(std::move(pt));
  };
  // multipliers {-0.9, -1.1}: pd test +0.1 -> -0.1
  mk(+0.1, -0.02, 0.5, 1.0);
  mk(-0.1, +0.02, 0.5, 1.0);
  mk(-0.2, +0.04, 2 * M_PI / 3.0, -1.0);  // modulus keeps growing; fold turn
  auto events = detect_codim1(branch);
  int pd = 0, ns = 0, fold = 0;
  for (const auto& ev : events) {
    if (ev.kind == "pd") ++pd;
    if (ev.kind == "ns") {
      ++ns;
      CHECK(std::isfinite(ev.omega));
    }
    if (ev.kind == "fold") ++fold;
  }
  CHECK(pd == 1);
  CHECK(ns == 1);
  CHECK(fold == 1);
}

TEST_CASE("ns resonance flag from the multiplier argument") {
  FloquetSpectrum spec;
  spec.multipliers = {cplx(1.0, 0.0),
                      std::polar(0.98, 2 * M_PI / 3.0)};  // 1:3 resonance angle
  spec.trivial_index = 0;
  spec.trivial_error = 0.0;
  auto tf = test_functions(spec, 2.0, 0.05);
  CHECK(tf.ns == doctest::Approx(-0.02));
  CHECK(tf.ns_resonant);

  FloquetSpectrum spec2;
  spec2.multipliers = {cplx(1.0, 0.0), std::polar(1.02, 2.0)};
  spec2.trivial_index = 0;
  auto tf2 = test_functions(spec2, 2.0, 0.05);
  CHECK(tf2.ns == doctest::Approx(0.02));
  CHECK_FALSE(tf2.ns_resonant);
}

TEST_CASE("detect_codim2 on synthetic coefficient sequences") {
  Codim1Branch br;
  br.kind = "pd";
  auto mk = [&](double coef) {
    Codim1BranchPoint pt;
    pt.p1 = double(br.points.size());
    pt.p2 = 0.0;
    pt.coef = cplx(coef, 0.0);
    br.points.push_back(std::move(pt));
  };
  mk(+1.0);
  mk(-1.0);
  auto ev = detect_codim2(br);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].kind == "GPD");
  CHECK(ev[0].p1 == doctest::Approx(0.5));
  CHECK_FALSE(ev[0].divergence);

  Codim1Branch br2;
  br2.kind = "fold";
  br2.points.clear();
  {
    Codim1BranchPoint a, b, c;
    a.coef = cplx(1.0, 0);
    b.coef = cplx(2.0, 0);
    c.coef = cplx(0.5, 0);
    br2.points = {a, b, c};
  }
  CHECK(detect_codim2(br2).empty());

  // sign change through +-infinity is a divergence event, not a zero
  Codim1Branch br3;
  br3.kind = "ns";
  {
    Codim1BranchPoint a, b;
    a.coef = cplx(5e6, 0);
    b.coef = cplx(-4e6, 0);
    br3.points = {a, b};
  }
  auto ev3 = detect_codim2(br3);
  REQUIRE(ev3.size() == 1);
  CHECK(ev3[0].kind == "CH");
  CHECK(ev3[0].divergence);
}
