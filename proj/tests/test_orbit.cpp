#include <cmath>

#include "ddenf/orbit.hpp"
#include "doctest.h"

using namespace ddenf;

namespace {
PeriodicOrbit hopf_cycle(int L = 20, int M = 4) {
  auto m = make_model("hopf_ode");
  SolveCycleOptions opts;
  opts.L = L;
  opts.M = M;
  auto guess = [](double t) {
    Vec v(2);
    v << 1.05 * std::cos(t), 1.05 * std::sin(t);
    return v;
  };
  return solve_cycle(m, guess, 6.0, opts);
}
}  // namespace

TEST_CASE("hopf_ode cycle: unit circle, T = 2 pi") {
  auto orbit = hopf_cycle();
  CHECK(std::abs(orbit.period() - 2 * M_PI) < 1e-8);
  for (double t : {0.0, 1.0, 3.0})
    CHECK(orbit.profile().value(t).norm() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(orbit.residual_norm <= 1e-10);
}

TEST_CASE("re-solving from the returned orbit converges immediately") {
  auto m = make_model("hopf_ode");
  auto orbit = hopf_cycle();
  SolveCycleOptions opts;
  opts.L = 20;
  opts.M = 4;
  opts.max_iter = 2;
  auto again = solve_cycle_from(orbit, m, opts);
  CHECK(std::abs(again.period() - orbit.period()) < 1e-9);
}

TEST_CASE("floquet multipliers of the hopf_ode cycle") {
  auto orbit = hopf_cycle();
  auto spec = floquet_multipliers(orbit.lin, 10);
  REQUIRE(spec.multipliers.size() >= 2);
  CHECK(spec.trivial_error < 1e-8);
  // nontrivial multiplier exp(-4 pi) from the planar divergence integral
  double target = std::exp(-4 * M_PI);
  bool found = false;
  for (auto mu : spec.multipliers)
    if (std::abs(mu - cplx(target)) < 1e-6 * target + 1e-12) found = true;
  CHECK(found);
}

TEST_CASE("trivial multiplier error decreases under mesh refinement") {
  auto o1 = hopf_cycle(10, 4);
  auto o2 = hopf_cycle(20, 4);
  auto s1 = floquet_multipliers(o1.lin, 6);
  auto s2 = floquet_multipliers(o2.lin, 6);
  CHECK(s2.trivial_error <= s1.trivial_error + 1e-14);
}

TEST_CASE("phase-gauge covariance: shifted reference gives the same cycle") {
  auto m = make_model("hopf_ode");
  auto orbit = hopf_cycle();
  double T = orbit.period();
  SolveCycleOptions opts;
  opts.L = 20;
  opts.M = 4;
  // time-shifted guess/reference
  auto guess = [&](double t) { return orbit.profile().value(t + 0.37 * T); };
  auto shifted = solve_cycle(m, guess, T, opts);
  CHECK(std::abs(shifted.period() - T) < 1e-8);
  auto s1 = floquet_multipliers(orbit.lin, 4);
  auto s2 = floquet_multipliers(shifted.lin, 4);
  // multipliers are properties of the cycle, not the parameterization
  for (size_t k = 0; k < 2; ++k)
    CHECK(std::abs(s1.multipliers[k] - s2.multipliers[k]) < 1e-8);
  // profiles agree up to the time shift
  Vec a = shifted.profile().value(0.0);
  Vec b = orbit.profile().value(0.37 * T);
  CHECK((a - b).norm() < 1e-7);
}

TEST_CASE("solve_cycle reports non-convergence") {
  auto m = make_model("hopf_ode");
  SolveCycleOptions opts;
  opts.L = 8;
  opts.M = 2;
  opts.max_iter = 1;
  auto bad_guess = [](double t) {
    Vec v(2);
    v << 3.0 + std::cos(t), -2.0 + 0.2 * std::sin(3 * t);
    return v;
  };
  CHECK_THROWS_AS(solve_cycle(m, bad_guess, 9.0, opts), ConvergenceError);
}

TEST_CASE("superconvergence of the analytic cycle at mesh points") {
  // mesh-point error of the hopf cycle scales like O(H^{2M}); with M = 2 the
  // orders are measurable above round-off
  auto run = [&](int L) {
    auto orbit = hopf_cycle(L, 2);
    double e = std::abs(orbit.period() - 2 * M_PI);
    for (int i = 0; i <= L; ++i) {
      double t = orbit.period() * i / L;
      e = std::max(e, std::abs(orbit.profile().value(t).norm() - 1.0));
    }
    return e;
  };
  double e1 = run(10), e2 = run(20);
  double order = std::log2(e1 / e2);
  CHECK(order > 0.8 * 4);
}
