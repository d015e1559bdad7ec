#include <cmath>

#include "ddenf/model.hpp"

namespace ddenf {

namespace {

// neocortex synaptic activation and derivatives
inline double ncx_g(double x) {
  static const double c2 = std::cosh(1.0) * std::cosh(1.0);
  return (std::tanh(x - 1.0) + std::tanh(1.0)) * c2;
}
inline double ncx_g1(double x) {
  static const double c2 = std::cosh(1.0) * std::cosh(1.0);
  double s = 1.0 / std::cosh(x - 1.0);
  return c2 * s * s;
}
inline double ncx_g2(double x) {
  static const double c2 = std::cosh(1.0) * std::cosh(1.0);
  double s = 1.0 / std::cosh(x - 1.0);
  return -2.0 * c2 * s * s * std::tanh(x - 1.0);
}
inline double ncx_g3(double x) {
  static const double c2 = std::cosh(1.0) * std::cosh(1.0);
  double s2 = 1.0 / (std::cosh(x - 1.0) * std::cosh(x - 1.0));
  double t = std::tanh(x - 1.0);
  return c2 * (4.0 * s2 * t * t - 2.0 * s2 * s2);
}

std::shared_ptr<DdeModel> make_neocortex() {
  // two-node Hopfield lumped model; delays fixed, (a,c) unfolding
  auto rhs = [](const Mat& s, const Vec& p, Vec& out) {
    double a = p[0], c = p[1], b = p[2], d = p[3];
    out.resize(2);
    out[0] = -s(0, 0) - a * ncx_g(b * s(0, 1)) + c * ncx_g(d * s(1, 2));
    out[1] = -s(1, 0) - a * ncx_g(b * s(1, 1)) + c * ncx_g(d * s(0, 2));
  };
  auto m = std::make_shared<DdeModel>(
      "neocortex", 2, std::vector<double>{11.6, 20.3},
      std::vector<std::string>{"a", "c", "b", "d"},
      (Vec(4) << 1.0, 1.0, 2.0, 1.2).finished(), rhs);
  auto jac = [](const Mat& s, const Vec& p, int j, Mat& out) {
    double a = p[0], c = p[1], b = p[2], d = p[3];
    out = Mat::Zero(2, 2);
    if (j == 0) {
      out(0, 0) = -1.0;
      out(1, 1) = -1.0;
    } else if (j == 1) {
      out(0, 0) = -a * b * ncx_g1(b * s(0, 1));
      out(1, 1) = -a * b * ncx_g1(b * s(1, 1));
    } else {
      out(0, 1) = c * d * ncx_g1(d * s(1, 2));
      out(1, 0) = c * d * ncx_g1(d * s(0, 2));
    }
  };
  auto hess = [](const Mat& s, const Vec& p, const Mat& dir, int k, Mat& out) {
    double a = p[0], c = p[1], b = p[2], d = p[3];
    out = Mat::Zero(2, 2);
    if (k == 1) {
      out(0, 0) = -a * b * b * ncx_g2(b * s(0, 1)) * dir(0, 1);
      out(1, 1) = -a * b * b * ncx_g2(b * s(1, 1)) * dir(1, 1);
    } else if (k == 2) {
      out(0, 1) = c * d * d * ncx_g2(d * s(1, 2)) * dir(1, 2);
      out(1, 0) = c * d * d * ncx_g2(d * s(0, 2)) * dir(0, 2);
    }
  };
  auto third = [](const Mat& s, const Vec& p, const Mat& d1, const Mat& d2,
                  const Mat& d3, Vec& out) {
    double a = p[0], c = p[1], b = p[2], d = p[3];
    out.resize(2);
    out[0] = -a * b * b * b * ncx_g3(b * s(0, 1)) * d1(0, 1) * d2(0, 1) * d3(0, 1) +
             c * d * d * d * ncx_g3(d * s(1, 2)) * d1(1, 2) * d2(1, 2) * d3(1, 2);
    out[1] = -a * b * b * b * ncx_g3(b * s(1, 1)) * d1(1, 1) * d2(1, 1) * d3(1, 1) +
             c * d * d * d * ncx_g3(d * s(0, 2)) * d1(0, 2) * d2(0, 2) * d3(0, 2);
  };
  m->set_exact_derivatives(jac, hess, third);
  return m;
}

std::shared_ptr<DdeModel> make_active_control() {
  // delayed active control system, time rescaled so the delay is 1 and the
  // delay parameter tau multiplies the vector field
  auto rhs = [](const Mat& s, const Vec& p, Vec& out) {
    double zeta = p[0], tau = p[1], gu = p[2], gv = p[3], beta = p[4];
    out.resize(2);
    out[0] = tau * s(1, 0);
    out[1] = tau * (-s(0, 0) - gu * s(0, 1) - 2.0 * zeta * s(1, 0) - gv * s(1, 1) +
                    beta * s(0, 1) * s(0, 1) * s(0, 1));
  };
  auto m = std::make_shared<DdeModel>(
      "active_control", 2, std::vector<double>{1.0},
      std::vector<std::string>{"zeta", "tau", "gu", "gv", "beta"},
      (Vec(5) << 0.0, 6.0, 0.1, 0.52, 0.1).finished(), rhs);
  auto jac = [](const Mat& s, const Vec& p, int j, Mat& out) {
    double zeta = p[0], tau = p[1], gu = p[2], gv = p[3], beta = p[4];
    out = Mat::Zero(2, 2);
    if (j == 0) {
      out(0, 1) = tau;
      out(1, 0) = -tau;
      out(1, 1) = -2.0 * tau * zeta;
    } else {
      out(1, 0) = tau * (-gu + 3.0 * beta * s(0, 1) * s(0, 1));
      out(1, 1) = -tau * gv;
    }
  };
  auto hess = [](const Mat& s, const Vec& p, const Mat& dir, int k, Mat& out) {
    double tau = p[1], beta = p[4];
    out = Mat::Zero(2, 2);
    if (k == 1) out(1, 0) = 6.0 * tau * beta * s(0, 1) * dir(0, 1);
  };
  auto third = [](const Mat& s, const Vec& p, const Mat& d1, const Mat& d2,
                  const Mat& d3, Vec& out) {
    double tau = p[1], beta = p[4];
    out = Vec::Zero(2);
    out[1] = 6.0 * tau * beta * d1(0, 1) * d2(0, 1) * d3(0, 1);
  };
  m->set_exact_derivatives(jac, hess, third);
  return m;
}

std::shared_ptr<DdeModel> make_hopf_ode() {
  // planar Hopf normal form embedded as a DDE through a zero-coefficient
  // delayed term; cycle r = 1/sqrt(s), T = 2*pi
  auto rhs = [](const Mat& st, const Vec& p, Vec& out) {
    double s = p[0];
    double x = st(0, 0), y = st(1, 0);
    double r2 = x * x + y * y;
    out.resize(2);
    out[0] = x - y - s * x * r2 + 0.0 * st(0, 1);
    out[1] = x + y - s * y * r2;
  };
  auto m = std::make_shared<DdeModel>(
      "hopf_ode", 2, std::vector<double>{1.0}, std::vector<std::string>{"s"},
      (Vec(1) << 1.0).finished(), rhs);
  auto jac = [](const Mat& st, const Vec& p, int j, Mat& out) {
    double s = p[0];
    double x = st(0, 0), y = st(1, 0);
    out = Mat::Zero(2, 2);
    if (j == 0) {
      out(0, 0) = 1.0 - s * (3 * x * x + y * y);
      out(0, 1) = -1.0 - 2 * s * x * y;
      out(1, 0) = 1.0 - 2 * s * x * y;
      out(1, 1) = 1.0 - s * (x * x + 3 * y * y);
    }
  };
  auto hess = [](const Mat& st, const Vec& p, const Mat& dir, int k, Mat& out) {
    double s = p[0];
    double x = st(0, 0), y = st(1, 0);
    out = Mat::Zero(2, 2);
    if (k == 0) {
      double dx = dir(0, 0), dy = dir(1, 0);
      out(0, 0) = -6 * s * x * dx - 2 * s * y * dy;
      out(0, 1) = -2 * s * y * dx - 2 * s * x * dy;
      out(1, 0) = -2 * s * y * dx - 2 * s * x * dy;
      out(1, 1) = -2 * s * x * dx - 6 * s * y * dy;
    }
  };
  auto third = [](const Mat& st, const Vec& p, const Mat& d1, const Mat& d2,
                  const Mat& d3, Vec& out) {
    double s = p[0];
    double a1 = d1(0, 0), b1 = d1(1, 0), a2 = d2(0, 0), b2 = d2(1, 0),
           a3 = d3(0, 0), b3 = d3(1, 0);
    out.resize(2);
    out[0] = -6 * s * a1 * a2 * a3 - 2 * s * (a1 * b2 * b3 + b1 * a2 * b3 + b1 * b2 * a3);
    out[1] = -6 * s * b1 * b2 * b3 - 2 * s * (b1 * a2 * a3 + a1 * b2 * a3 + a1 * a2 * b3);
  };
  m->set_exact_derivatives(jac, hess, third);
  return m;
}

std::shared_ptr<DdeModel> make_linear_delay() {
  // x'(t) = a x(t) + b x(t-1); the antiperiodic analytic oracle uses
  // a = 0, b = -pi/2, T = 2
  auto rhs = [](const Mat& s, const Vec& p, Vec& out) {
    out.resize(1);
    out[0] = p[0] * s(0, 0) + p[1] * s(0, 1);
  };
  auto m = std::make_shared<DdeModel>(
      "linear_delay_test", 1, std::vector<double>{1.0},
      std::vector<std::string>{"a", "b"},
      (Vec(2) << 0.0, -M_PI / 2.0).finished(), rhs);
  auto jac = [](const Mat&, const Vec& p, int j, Mat& out) {
    out.resize(1, 1);
    out(0, 0) = (j == 0) ? p[0] : p[1];
  };
  auto hess = [](const Mat&, const Vec&, const Mat&, int, Mat& out) {
    out = Mat::Zero(1, 1);
  };
  auto third = [](const Mat&, const Vec&, const Mat&, const Mat&, const Mat&,
                  Vec& out) { out = Vec::Zero(1); };
  m->set_exact_derivatives(jac, hess, third);
  return m;
}

}  // namespace

std::shared_ptr<DdeModel> make_model(const std::string& id) {
  if (id == "neocortex") return make_neocortex();
  if (id == "active_control") return make_active_control();
  if (id == "hopf_ode") return make_hopf_ode();
  if (id == "linear_delay_test") return make_linear_delay();
  throw InputError("unknown model id '" + id + "'");
}

std::vector<std::string> model_registry_ids() {
  return {"neocortex", "active_control", "hopf_ode", "linear_delay_test"};
}

}  // namespace ddenf
