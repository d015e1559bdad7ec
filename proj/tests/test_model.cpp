#include <cmath>
#include <random>

#include "ddenf/model.hpp"
#include "doctest.h"

using namespace ddenf;

namespace {
std::shared_ptr<DdeModel> cubic_scalar() {
  // f(x0, x1) = -x1^3
  auto rhs = [](const Mat& s, const Vec&, Vec& out) {
    out.resize(1);
    out[0] = -s(0, 1) * s(0, 1) * s(0, 1);
  };
  return std::make_shared<DdeModel>("cubic", 1, std::vector<double>{1.0},
                                    std::vector<std::string>{}, Vec(0), rhs);
}
}  // namespace

TEST_CASE("eval_rhs on simple models") {
  auto lin = make_model("linear_delay_test");
  lin->set_param("a", 0.0);
  lin->set_param("b", -1.0);
  Mat s(1, 2);
  s << 2.0, 3.0;
  CHECK(lin->rhs(s)[0] == doctest::Approx(-3.0));

  auto ncx = make_model("neocortex");
  ncx->set_param("a", 1.0);
  ncx->set_param("c", 1.0);
  Mat z = Mat::Zero(2, 3);
  Vec f = ncx->rhs(z);
  CHECK(std::abs(f[0]) < 1e-14);
  CHECK(std::abs(f[1]) < 1e-14);

  auto ac = make_model("active_control");
  ac->set_param("zeta", 0.0);
  ac->set_param("tau", 1.0);
  Mat sa(2, 2);
  sa << 1.0, 1.0, 0.0, 0.0;
  Vec fa = ac->rhs(sa);
  CHECK(fa[0] == doctest::Approx(0.0));
  CHECK(fa[1] == doctest::Approx(-1.0));
}

TEST_CASE("rhs dimension mismatch is an input error") {
  auto lin = make_model("linear_delay_test");
  Mat bad(1, 3);
  bad.setZero();
  CHECK_THROWS_AS(lin->rhs(bad), InputError);
}

TEST_CASE("linearization matrices") {
  auto lin = make_model("linear_delay_test");
  lin->set_param("a", 0.7);
  lin->set_param("b", -2.1);
  Mat s = Mat::Zero(1, 2);
  Mat m0, m1;
  lin->jacobian(s, 0, m0);
  lin->jacobian(s, 1, m1);
  CHECK(m0(0, 0) == doctest::Approx(0.7));
  CHECK(m1(0, 0) == doctest::Approx(-2.1));

  auto cub = cubic_scalar();
  Mat sc(1, 2);
  sc << 0.0, 2.0;
  cub->jacobian(sc, 0, m0);
  cub->jacobian(sc, 1, m1);
  CHECK(std::abs(m0(0, 0)) < 1e-9);
  CHECK(m1(0, 0) == doctest::Approx(-12.0).epsilon(1e-7));
}

TEST_CASE("active control M1 matches the symbolic derivative") {
  auto ac = make_model("active_control");
  double tau = ac->param("tau"), gu = ac->param("gu"), gv = ac->param("gv"),
         beta = ac->param("beta");
  Mat s(2, 2);
  s << 0.3, 0.8, -0.2, 0.1;
  Mat m1;
  ac->jacobian(s, 1, m1);
  CHECK(m1(1, 0) == doctest::Approx(tau * (-gu + 3 * beta * 0.8 * 0.8)));
  CHECK(m1(1, 1) == doctest::Approx(-tau * gv));
  CHECK(m1(0, 0) == 0.0);
}

TEST_CASE("finite differences agree with exact derivatives on registry models") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dist(-0.8, 0.8);
  for (const auto& id : model_registry_ids()) {
    auto m = make_model(id);
    Mat s(m->dim(), m->num_args());
    for (int trial = 0; trial < 3; ++trial) {
      for (int r = 0; r < s.rows(); ++r)
        for (int c = 0; c < s.cols(); ++c) s(r, c) = dist(rng);
      for (int j = 0; j < m->num_args(); ++j) {
        Mat exact, fd;
        m->jacobian(s, j, exact);
        m->use_finite_differences(true);
        m->jacobian(s, j, fd);
        m->use_finite_differences(false);
        CHECK((exact - fd).lpNorm<Eigen::Infinity>() < 2e-7);
      }
      // order 2 and 3 cross-checks through random directions
      Mat d1 = Mat::NullaryExpr(s.rows(), s.cols(), [&]() { return dist(rng); });
      Mat d2 = Mat::NullaryExpr(s.rows(), s.cols(), [&]() { return dist(rng); });
      Mat d3 = Mat::NullaryExpr(s.rows(), s.cols(), [&]() { return dist(rng); });
      Vec b_exact = m->multilinear2(s, d1, d2);
      Vec c_exact = m->multilinear3(s, d1, d2, d3);
      m->use_finite_differences(true);
      Vec b_fd = m->multilinear2(s, d1, d2);
      Vec c_fd = m->multilinear3(s, d1, d2, d3);
      m->use_finite_differences(false);
      CHECK((b_exact - b_fd).lpNorm<Eigen::Infinity>() < 5e-6);
      CHECK((c_exact - c_fd).lpNorm<Eigen::Infinity>() < 5e-4);
    }
  }
}

TEST_CASE("multilinear forms: symmetry and vanishing for linear models") {
  auto lin = make_model("linear_delay_test");
  Mat s = Mat::Zero(1, 2), d1(1, 2), d2(1, 2), d3(1, 2);
  d1 << 0.3, -1.0;
  d2 << 1.7, 0.2;
  d3 << -0.4, 0.9;
  CHECK(lin->multilinear2(s, d1, d2).norm() < 1e-12);
  CHECK(lin->multilinear3(s, d1, d2, d3).norm() < 1e-12);

  auto cub = cubic_scalar();
  Mat base = Mat::Zero(1, 2);
  Mat u(1, 2), v(1, 2), w(1, 2);
  u << 0.0, 2.0;
  v << 0.0, -1.5;
  w << 0.0, 0.7;
  Vec c = cub->multilinear3(base, u, v, w);
  CHECK(c[0] == doctest::Approx(-6.0 * 2.0 * (-1.5) * 0.7).epsilon(1e-6));

  // symmetry under swapping direction arguments (neocortex, random base)
  auto ncx = make_model("neocortex");
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  Mat sb = Mat::NullaryExpr(2, 3, [&]() { return dist(rng); });
  Mat a = Mat::NullaryExpr(2, 3, [&]() { return dist(rng); });
  Mat b = Mat::NullaryExpr(2, 3, [&]() { return dist(rng); });
  Mat cc = Mat::NullaryExpr(2, 3, [&]() { return dist(rng); });
  CHECK((ncx->multilinear2(sb, a, b) - ncx->multilinear2(sb, b, a)).norm() < 1e-12);
  CHECK((ncx->multilinear3(sb, a, b, cc) - ncx->multilinear3(sb, cc, a, b)).norm() < 1e-12);
}

TEST_CASE("complex multilinear expansion is bilinear") {
  auto ncx = make_model("neocortex");
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  Mat sb = Mat::NullaryExpr(2, 3, [&]() { return dist(rng); });
  CMat z1 = Mat::NullaryExpr(2, 3, [&]() { return dist(rng); }).cast<cplx>() +
            cplx(0, 1) * Mat::NullaryExpr(2, 3, [&]() { return dist(rng); }).cast<cplx>();
  CMat z2 = Mat::NullaryExpr(2, 3, [&]() { return dist(rng); }).cast<cplx>() +
            cplx(0, 1) * Mat::NullaryExpr(2, 3, [&]() { return dist(rng); }).cast<cplx>();
  cplx lam(0.3, -0.8);
  CVec lhs = ncx->multilinear2(sb, (lam * z1).eval(), z2);
  CVec rhs = lam * ncx->multilinear2(sb, z1, z2);
  CHECK((lhs - rhs).norm() < 1e-10);
}

TEST_CASE("model parameter access") {
  auto m = make_model("active_control");
  CHECK_THROWS_AS(m->param("nope"), InputError);
  m->set_param("tau", 7.25);
  CHECK(m->param("tau") == doctest::Approx(7.25));
  CHECK_THROWS_AS(make_model("not_a_model"), InputError);
}
