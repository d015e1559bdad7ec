#include <cmath>

#include "ddenf/simulate.hpp"
#include "doctest.h"

using namespace ddenf;

TEST_CASE("simulate: pure decay through a zero-coefficient delay") {
  auto m = make_model("linear_delay_test");
  m->set_param("a", -1.0);
  m->set_param("b", 0.0);
  auto hist = HistorySegment::constant(Vec::Ones(1), 1.0);
  auto traj = simulate(*m, hist, 1.0, 1e-3);
  CHECK(std::abs(traj.value(1.0)[0] - std::exp(-1.0)) < 1e-8);
}

TEST_CASE("simulate: delayed cosine solution") {
  // x'(t) = -(pi/2) x(t-1) with history cos(pi t / 2) stays on the cosine
  auto m = make_model("linear_delay_test");
  m->set_param("a", 0.0);
  m->set_param("b", -M_PI / 2.0);
  auto hist = HistorySegment::sampled(
      [](double th) { return Vec::Constant(1, std::cos(M_PI * th / 2.0)); }, 1.0,
      128);
  auto traj = simulate(*m, hist, 4.0, 2e-3);
  for (double t : {0.5, 1.0, 2.0, 3.0, 4.0})
    CHECK(std::abs(traj.value(t)[0] - std::cos(M_PI * t / 2.0)) < 1e-6);
}

TEST_CASE("simulate: equilibrium history stays constant") {
  auto ncx = make_model("neocortex");
  auto hist = HistorySegment::constant(Vec::Zero(2), ncx->max_delay());
  auto traj = simulate(*ncx, hist, 30.0, 0.05);
  CHECK(traj.value(30.0).norm() < 1e-12);
}

TEST_CASE("simulate: blow-up detection") {
  auto m = make_model("linear_delay_test");
  m->set_param("a", 5.0);
  m->set_param("b", 0.0);
  auto hist = HistorySegment::constant(Vec::Ones(1), 1.0);
  CHECK_THROWS_AS(simulate(*m, hist, 20.0, 1e-2, 1e3), DivergenceError);
}

TEST_CASE("simulate input validation") {
  auto m = make_model("linear_delay_test");
  auto hist = HistorySegment::constant(Vec::Ones(1), 0.2);  // too short
  CHECK_THROWS_AS(simulate(*m, hist, 1.0, 1e-2), InputError);
}

TEST_CASE("estimate_period on a known oscillation") {
  auto m = make_model("hopf_ode");
  auto hist = HistorySegment::sampled(
      [](double th) {
        Vec v(2);
        v << 0.9 * std::cos(th), 0.9 * std::sin(th);
        return v;
      },
      1.0, 32);
  auto traj = simulate(*m, hist, 50.0, 0.01);
  double T = estimate_period(traj, 25.0);
  CHECK(T == doctest::Approx(2 * M_PI).epsilon(0.02));
}
