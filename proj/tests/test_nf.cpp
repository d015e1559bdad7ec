#include <cmath>

#include "ddenf/nf.hpp"
#include "doctest.h"

using namespace ddenf;

namespace {

// planar system with a nondegenerate fold of cycles at s = -1:
//   r' = r (s + 2 r^2 - r^4),  theta' = 1 + 0.3 (r^2 - 1).
// Cycles at r^2 = 1 +- sqrt(1+s) collide at r = 1. With <q1^*, q0>_T = 0
// and the rank-two pairing normalized to one, the critical coefficient has
// the closed form b = -20/3: q1 = (5/3) n(t), p = 3/(5T) n(t)^T, and the
// radial second derivative along n is G''(1) = -8, so
// b = (1/2)(5/3)^2(-8)(3/5) = -20/3.
std::shared_ptr<DdeModel> radial_fold_model() {
  auto rhs = [](const Mat& st, const Vec& p, Vec& out) {
    double s = p[0];
    double x = st(0, 0), y = st(1, 0);
    double r2 = x * x + y * y;
    double g = s + 2 * r2 - r2 * r2;
    double w = 1.0 + 0.3 * (r2 - 1.0);
    out.resize(2);
    out[0] = x * g - y * w + 0.0 * st(0, 1);
    out[1] = y * g + x * w;
  };
  return std::make_shared<DdeModel>(
      "radial_fold", 2, std::vector<double>{1.0}, std::vector<std::string>{"s"},
      (Vec(1) << -1.0).finished(), rhs);
}

PeriodicOrbit radial_fold_cycle(int L = 32, int M = 4) {
  auto m = radial_fold_model();
  SolveCycleOptions so;
  so.L = L;
  so.M = M;
  auto guess = [](double t) {
    Vec v(2);
    v << std::cos(t), std::sin(t);
    return v;
  };
  return solve_cycle(m, guess, 2 * M_PI, so);
}

}  // namespace

TEST_CASE("fold coefficient matches the analytic radial oracle") {
  auto orbit = radial_fold_cycle();
  auto rep = fold_coefficient(orbit, NfMethod::Both);
  const double expect = -20.0 / 3.0;
  CHECK(rep.b_direct == doctest::Approx(expect).epsilon(1e-5));
  CHECK(rep.b_efficient == doctest::Approx(expect).epsilon(1e-5));
  CHECK(rep.diagnostics.at("b_discrepancy") < 1e-7);
  CHECK(rep.diagnostics.at("fold_orthogonality") < 1e-5);
  CHECK(rep.diagnostics.at("q1_residual") < 1e-4);
  CHECK(rep.diagnostics.at("b_imag_leak") < 1e-8);
}

TEST_CASE("fold coefficient is stable under mesh refinement") {
  NfOptions opts;
  opts.solvability_tol = 1e-4;  // the orthogonality residual is mesh-level
  auto r1 = fold_coefficient(radial_fold_cycle(24), NfMethod::Efficient, opts);
  auto r2 = fold_coefficient(radial_fold_cycle(48), NfMethod::Efficient, opts);
  CHECK(std::abs(r1.b_efficient - r2.b_efficient) <
        1e-4 * std::max(1.0, std::abs(r2.b_efficient)));
}

TEST_CASE("fold machinery rejects non-fold cycles") {
  auto m = radial_fold_model();
  m->set_param("s", -0.9);
  SolveCycleOptions so;
  so.L = 24;
  so.M = 4;
  double r0 = std::sqrt(1.0 + std::sqrt(0.1));
  auto guess = [r0](double t) {
    Vec v(2);
    v << r0 * std::cos(t), r0 * std::sin(t);
    return v;
  };
  auto orbit = solve_cycle(m, guess, 6.0, so);
  CHECK_THROWS_AS(fold_coefficient(orbit, NfMethod::Direct), SolvabilityError);
}

TEST_CASE("left_null_vector: transpose consistency, scaling, error paths") {
  // use the hopf cycle's trivial exponent: a simple null space, so the
  // selected direction is unique up to sign
  auto model = make_model("hopf_ode");
  SolveCycleOptions so;
  so.L = 16;
  so.M = 4;
  auto hguess = [](double t) {
    Vec v(2);
    v << std::cos(t), std::sin(t);
    return v;
  };
  auto orbit = solve_cycle(model, hguess, 2 * M_PI, so);
  const CycleLinearization& lin = orbit.lin;

  BvpSpec spec = delta_bvp_spec(lin, 0.0, Boundary::Periodic);
  CollocationSystem sys(spec);
  NfOptions opts;
  auto lv = left_null_vector(sys, opts);
  CHECK(lv.colloc.size() == spec.colloc_rows());

  auto nd = sys.null_vectors();
  Vec vt = sys.matrix().transpose() * nd.left_raw;
  double an = 0;
  for (int k = 0; k < sys.matrix().outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.matrix(), k); it; ++it)
      an = std::max(an, std::abs(it.value()));
  CHECK(vt.norm() < 1e-8 * an);

  // scale invariance: A -> 2A leaves the selected direction unchanged
  BvpSpec spec2 = delta_bvp_spec(lin, 0.0, Boundary::Periodic);
  for (auto& term : spec2.terms) {
    auto inner = term.coeff;
    term.coeff = [inner](int i, int j, double t, CMat& C) {
      inner(i, j, t, C);
      C *= 2.0;
    };
  }
  spec2.deriv_sign *= 2.0;
  CollocationSystem sys2(spec2);
  auto lv2 = left_null_vector(sys2, opts);
  // the collocation-row scaling rebalances colloc vs boundary components of
  // the unit-norm left vector, but the restricted direction is invariant
  CVec d1 = lv.colloc / lv.colloc.norm();
  CVec d2 = lv2.colloc / lv2.colloc.norm();
  double err = std::min((d1 - d2).norm(), (d1 + d2).norm());
  CHECK(err < 1e-10);

  // nonsingular input errors out
  BvpSpec ns = delta_bvp_spec(lin, 0.35, Boundary::Periodic);
  CollocationSystem sys3(ns);
  CHECK_THROWS_AS(left_null_vector(sys3, NfOptions{}), NumericalError);
}

TEST_CASE("ns_coefficients refuses strong resonances") {
  auto model = make_model("hopf_ode");
  SolveCycleOptions so;
  so.L = 16;
  so.M = 4;
  auto guess = [](double t) {
    Vec v(2);
    v << std::cos(t), std::sin(t);
    return v;
  };
  auto orbit = solve_cycle(model, guess, 2 * M_PI, so);
  double T = orbit.period();
  for (int q = 1; q <= 4; ++q) {
    bool threw = false;
    try {
      ns_coefficients(orbit, 2 * M_PI / (q * T), NfMethod::Direct);
    } catch (const ResonanceError& e) {
      threw = true;
      CHECK(e.q <= q);
    } catch (const NumericalError&) {
      threw = true;  // the non-exponent rejection may fire first
    }
    CHECK(threw);
  }
}
