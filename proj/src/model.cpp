#include "ddenf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ddenf {

namespace {
const double kEps = std::numeric_limits<double>::epsilon();
const double kStep1 = std::cbrt(kEps);          // first order
const double kStep23 = std::pow(kEps, 0.25);    // orders 2 and 3
}  // namespace

DdeModel::DdeModel(std::string id, int n, std::vector<double> delays,
                   std::vector<std::string> param_names, Vec param_values, RhsFn rhs)
    : id_(std::move(id)),
      n_(n),
      delays_(std::move(delays)),
      param_names_(std::move(param_names)),
      params_(std::move(param_values)),
      rhs_(std::move(rhs)) {
  if (n_ <= 0) throw InputError("model: dimension must be positive");
  for (size_t j = 0; j < delays_.size(); ++j) {
    if (!(delays_[j] > 0)) throw InputError("model: delays must be positive");
    if (j > 0 && !(delays_[j] > delays_[j - 1]))
      throw InputError("model: delays must be strictly increasing");
  }
  if (params_.size() != Eigen::Index(param_names_.size()))
    throw InputError("model: parameter names/values size mismatch");
}

int DdeModel::param_index(const std::string& name) const {
  auto it = std::find(param_names_.begin(), param_names_.end(), name);
  if (it == param_names_.end())
    throw InputError("model '" + id_ + "': unknown parameter '" + name + "'");
  return int(it - param_names_.begin());
}

void DdeModel::set_params(const Vec& p) {
  if (p.size() != params_.size()) throw InputError("model: parameter vector size mismatch");
  params_ = p;
}

void DdeModel::set_exact_derivatives(JacFn jac, HessFn hess, ThirdFn third) {
  jac_ = std::move(jac);
  hess_ = std::move(hess);
  third_ = std::move(third);
}

void DdeModel::rhs(const Mat& states, Vec& out) const {
  if (states.rows() != n_ || states.cols() != num_args())
    throw InputError("model: states must be n x (m+1)");
  rhs_(states, params_, out);
  if (!out.allFinite()) throw NumericalError("model '" + id_ + "': rhs is not finite");
}

Vec DdeModel::rhs(const Mat& states) const {
  Vec out(n_);
  rhs(states, out);
  return out;
}

void DdeModel::fd_jacobian(const Mat& states, int j, Mat& out) const {
  out.resize(n_, n_);
  Mat s = states;
  Vec fp(n_), fm(n_);
  for (int c = 0; c < n_; ++c) {
    double base = states(c, j);
    double h = kStep1 * std::max(1.0, std::abs(base));
    s(c, j) = base + h;
    rhs_(s, params_, fp);
    s(c, j) = base - h;
    rhs_(s, params_, fm);
    s(c, j) = base;
    out.col(c) = (fp - fm) / (2 * h);
    if (!out.col(c).allFinite())
      throw NumericalError("model '" + id_ + "': finite-difference failure in M_" +
                           std::to_string(j) + ", column " + std::to_string(c));
  }
}

void DdeModel::jacobian(const Mat& states, int j, Mat& out) const {
  if (j < 0 || j >= num_args()) throw InputError("model: jacobian index out of range");
  if (jac_ && !force_fd_) {
    jac_(states, params_, j, out);
    return;
  }
  fd_jacobian(states, j, out);
}

std::vector<Mat> DdeModel::jacobians(const Mat& states) const {
  std::vector<Mat> mj(num_args());
  for (int j = 0; j < num_args(); ++j) jacobian(states, j, mj[j]);
  return mj;
}

void DdeModel::hessian_contract(const Mat& states, const Mat& dir, int k, Mat& out) const {
  if (hess_ && !force_fd_) {
    hess_(states, params_, dir, k, out);
    return;
  }
  // directional difference of the k-th Jacobian block along dir
  double dn = dir.norm();
  out = Mat::Zero(n_, n_);
  if (dn == 0) return;
  double h = kStep23 / dn * std::max(1.0, states.norm());
  Mat jp(n_, n_), jm(n_, n_);
  Mat sp = states + h * dir, sm = states - h * dir;
  if (jac_ && !force_fd_) {
    jac_(sp, params_, k, jp);
    jac_(sm, params_, k, jm);
  } else {
    fd_jacobian(sp, k, jp);
    fd_jacobian(sm, k, jm);
  }
  out = (jp - jm) / (2 * h);
}

Vec DdeModel::multilinear2(const Mat& states, const Mat& d1, const Mat& d2) const {
  if (hess_ && !force_fd_) {
    Vec out = Vec::Zero(n_);
    Mat g(n_, n_);
    for (int k = 0; k < num_args(); ++k) {
      hess_(states, params_, d1, k, g);
      out += g * d2.col(k);
    }
    return out;
  }
  // 4-point polarization of directional central differences
  double n1 = d1.norm(), n2 = d2.norm();
  if (n1 == 0 || n2 == 0) return Vec::Zero(n_);
  double scale = std::max(1.0, states.norm());
  double h1 = kStep23 * scale / n1, h2 = kStep23 * scale / n2;
  Vec fpp(n_), fpm(n_), fmp(n_), fmm(n_);
  rhs_(states + h1 * d1 + h2 * d2, params_, fpp);
  rhs_(states + h1 * d1 - h2 * d2, params_, fpm);
  rhs_(states - h1 * d1 + h2 * d2, params_, fmp);
  rhs_(states - h1 * d1 - h2 * d2, params_, fmm);
  return (fpp - fpm - fmp + fmm) / (4 * h1 * h2);
}

Vec DdeModel::multilinear3(const Mat& states, const Mat& d1, const Mat& d2,
                           const Mat& d3) const {
  if (third_ && !force_fd_) {
    Vec out(n_);
    third_(states, params_, d1, d2, d3, out);
    return out;
  }
  double n1 = d1.norm(), n2 = d2.norm(), n3 = d3.norm();
  if (n1 == 0 || n2 == 0 || n3 == 0) return Vec::Zero(n_);
  double scale = std::max(1.0, states.norm());
  double h1 = kStep23 * scale / n1, h2 = kStep23 * scale / n2, h3 = kStep23 * scale / n3;
  Vec acc = Vec::Zero(n_), f(n_);
  for (int s1 : {+1, -1})
    for (int s2 : {+1, -1})
      for (int s3 : {+1, -1}) {
        rhs_(states + s1 * h1 * d1 + s2 * h2 * d2 + s3 * h3 * d3, params_, f);
        acc += double(s1 * s2 * s3) * f;
      }
  return acc / (8 * h1 * h2 * h3);
}

CVec DdeModel::multilinear2(const Mat& states, const CMat& d1, const CMat& d2) const {
  // bilinear over C: expand into real parts
  Mat a = d1.real(), b = d1.imag(), c = d2.real(), d = d2.imag();
  Vec rr = multilinear2(states, a, c);
  Vec ii = multilinear2(states, b, d);
  Vec ri = multilinear2(states, a, d);
  Vec ir = multilinear2(states, b, c);
  return (rr - ii).cast<cplx>() + cplx(0, 1) * (ri + ir).cast<cplx>();
}

CVec DdeModel::multilinear3(const Mat& states, const CMat& d1, const CMat& d2,
                            const CMat& d3) const {
  CVec out = CVec::Zero(n_);
  Mat parts1[2] = {d1.real(), d1.imag()};
  Mat parts2[2] = {d2.real(), d2.imag()};
  Mat parts3[2] = {d3.real(), d3.imag()};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        Vec v = multilinear3(states, parts1[i], parts2[j], parts3[k]);
        cplx unit = std::pow(cplx(0, 1), i + j + k);
        out += unit * v.cast<cplx>();
      }
  return out;
}

}  // namespace ddenf
