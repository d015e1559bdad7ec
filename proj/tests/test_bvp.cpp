#include <cmath>

#include "ddenf/bvp.hpp"
#include "doctest.h"

using namespace ddenf;

namespace {

// y' = -y + h(t), manufactured so y = sin(2 pi t / T) is exact
BvpSpec decay_spec(std::shared_ptr<const Mesh> mesh) {
  BvpSpec spec;
  spec.mesh = mesh;
  spec.n = 1;
  spec.terms.push_back(
      {0.0, [](int, int, double, CMat& C) { C = CMat::Constant(1, 1, 1.0); }});
  double T = mesh->T();
  spec.rhs = [T](int, int, double t, CVec& r) {
    double w = 2 * M_PI / T;
    r.resize(1);
    r[0] = w * std::cos(w * t) + std::sin(w * t);
  };
  return spec;
}

}  // namespace

TEST_CASE("manufactured linear BVP: sup error O(H^M), mesh superconvergence O(H^2M)") {
  const int M = 3;
  auto run = [&](int L, double& sup_err, double& mesh_err) {
    auto mesh = std::make_shared<Mesh>(L, M, 1.0);
    auto res = solve_linear_bvp(decay_spec(mesh));
    sup_err = 0;
    mesh_err = 0;
    for (int k = 0; k <= 1000; ++k) {
      double t = k / 1000.0;
      double w = 2 * M_PI;
      sup_err = std::max(sup_err,
                         std::abs(res.profile.value(t)[0].real() - std::sin(w * t)));
    }
    for (int i = 0; i <= L; ++i) {
      double t = double(i) / L;
      mesh_err = std::max(
          mesh_err, std::abs(res.profile.value(t)[0].real() - std::sin(2 * M_PI * t)));
    }
  };
  double s1, m1, s2, m2, s3, m3;
  run(8, s1, m1);
  run(16, s2, m2);
  run(32, s3, m3);
  double sup_order = std::log2(s2 / s3);
  double mesh_order = std::log2(m2 / m3);
  CHECK(sup_order > 0.8 * M);
  CHECK(mesh_order > 0.8 * 2 * M);
  CHECK(mesh_order < 1.2 * 2 * M + 0.8);
  CHECK(m3 < 1e-10);
}

TEST_CASE("homogeneous antiperiodic delay system is flagged singular") {
  // y'(t) = -(pi/2) y(t-1) on T = 2 with antiperiodic boundary has the
  // analytic null solution cos(pi t / 2)
  auto mesh = std::make_shared<Mesh>(20, 4, 2.0);
  BvpSpec spec;
  spec.mesh = mesh;
  spec.n = 1;
  spec.boundary = Boundary::Antiperiodic;
  spec.terms.push_back(
      {-1.0, [](int, int, double, CMat& C) { C = CMat::Constant(1, 1, M_PI / 2.0); }});
  bool threw = false;
  try {
    solve_linear_bvp(spec);
  } catch (const SingularityError& e) {
    threw = true;
    CHECK(e.smallest_sv < 1e-8);
  }
  CHECK(threw);
}

TEST_CASE("zero rhs with nonsingular operator gives the zero profile") {
  auto mesh = std::make_shared<Mesh>(10, 3, 1.0);
  BvpSpec spec;
  spec.mesh = mesh;
  spec.n = 1;
  spec.terms.push_back(
      {0.0, [](int, int, double, CMat& C) { C = CMat::Constant(1, 1, 1.0); }});
  auto res = solve_linear_bvp(spec);
  CHECK(res.profile.values().norm() < 1e-14);
}

TEST_CASE("solving twice is bit-identical") {
  auto mesh = std::make_shared<Mesh>(12, 4, 2.0);
  auto r1 = solve_linear_bvp(decay_spec(mesh));
  auto r2 = solve_linear_bvp(decay_spec(mesh));
  for (int g = 0; g < mesh->num_basis(); ++g) {
    CHECK(r1.profile.values()(0, g).real() == r2.profile.values()(0, g).real());
    CHECK(r1.profile.values()(0, g).imag() == r2.profile.values()(0, g).imag());
  }
}

TEST_CASE("integral constraint with extra column pins the solution") {
  // singular periodic system y' = 0 (nullspace constants) bordered with the
  // mean-zero constraint and a constant extra column: unique solution
  auto mesh = std::make_shared<Mesh>(8, 3, 1.0);
  BvpSpec spec;
  spec.mesh = mesh;
  spec.n = 1;
  spec.rhs = [](int, int, double t, CVec& r) {
    r.resize(1);
    r[0] = std::cos(2 * M_PI * t);
  };
  BvpConstraint mean_zero;
  mean_zero.weight = [](double, CVec& w) { w = CVec::Constant(1, 1.0); };
  spec.constraints.push_back(std::move(mean_zero));
  BvpExtraColumn col;
  col.colloc = [](int, int, double, CVec& c) { c = CVec::Constant(1, 1.0); };
  col.constraint = CVec::Zero(1);
  spec.extras.push_back(std::move(col));
  auto res = solve_linear_bvp(spec);
  // y' + mu = cos(2 pi t), mean(y) = 0 -> y = sin(2 pi t)/(2 pi), mu = 0
  CHECK(std::abs(res.extras[0]) < 1e-10);
  for (double t : {0.2, 0.7})
    CHECK(res.profile.value(t)[0].real() ==
          doctest::Approx(std::sin(2 * M_PI * t) / (2 * M_PI)).epsilon(1e-3));
}

TEST_CASE("complex spec solves the realified system") {
  // y' + (1 + i) y = (1 + i) exp-free manufactured rhs with y = sin + i cos
  auto mesh = std::make_shared<Mesh>(16, 4, 1.0);
  BvpSpec spec;
  spec.mesh = mesh;
  spec.n = 1;
  spec.complex_valued = true;
  cplx z(1.0, 1.0);
  spec.terms.push_back(
      {0.0, [z](int, int, double, CMat& C) { C = CMat::Constant(1, 1, z); }});
  spec.rhs = [z](int, int, double t, CVec& r) {
    double w = 2 * M_PI;
    cplx y(std::sin(w * t), std::cos(w * t));
    cplx dy(w * std::cos(w * t), -w * std::sin(w * t));
    r.resize(1);
    r[0] = dy + z * y;
  };
  auto res = solve_linear_bvp(spec);
  for (double t : {0.25, 0.6}) {
    cplx got = res.profile.value(t)[0];
    CHECK(std::abs(got - cplx(std::sin(2 * M_PI * t), std::cos(2 * M_PI * t))) < 1e-6);
  }
}

TEST_CASE("antiperiodic involution: negating the boundary sign twice") {
  auto mesh = std::make_shared<Mesh>(10, 3, 2.0);
  auto make = [&](Boundary b) {
    BvpSpec spec;
    spec.mesh = mesh;
    spec.n = 1;
    spec.boundary = b;
    spec.terms.push_back(
        {0.0, [](int, int, double, CMat& C) { C = CMat::Constant(1, 1, 0.7); }});
    spec.rhs = [](int, int, double t, CVec& r) {
      r.resize(1);
      r[0] = std::sin(M_PI * t);
    };
    return spec;
  };
  auto p1 = solve_linear_bvp(make(Boundary::Periodic));
  auto a1 = solve_linear_bvp(make(Boundary::Antiperiodic));
  auto spec_back = make(Boundary::Antiperiodic);
  spec_back.boundary = Boundary::Periodic;  // negate twice = periodic again
  auto p2 = solve_linear_bvp(spec_back);
  CHECK((p1.profile.values() - p2.profile.values()).norm() == 0.0);
  CHECK((p1.profile.values() - a1.profile.values()).norm() > 1e-3);
}
