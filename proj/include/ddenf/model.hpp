#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ddenf/types.hpp"

namespace ddenf {

/// A discrete DDE of point type:
///   x'(t) = f(x(t), x(t - tau_1), ..., x(t - tau_m); alpha).
/// `states` blocks are the columns of an n x (m+1) matrix, column j holding
/// the state at lag tau_j (tau_0 = 0). Derivatives of f come either from
/// user-supplied exact callbacks or from central finite differences.
class DdeModel {
 public:
  using RhsFn = std::function<void(const Mat& states, const Vec& par, Vec& out)>;
  // exact partial Jacobian d f / d x_j
  using JacFn = std::function<void(const Mat& states, const Vec& par, int j, Mat& out)>;
  // G_k = sum_j D^2 f [slot j <- dir col j][slot k <- identity]  (n x n)
  using HessFn =
      std::function<void(const Mat& states, const Vec& par, const Mat& dir, int k, Mat& out)>;
  // full trilinear action D^3 f (d1, d2, d3)
  using ThirdFn = std::function<void(const Mat& states, const Vec& par, const Mat& d1,
                                     const Mat& d2, const Mat& d3, Vec& out)>;

  DdeModel(std::string id, int n, std::vector<double> delays,
           std::vector<std::string> param_names, Vec param_values, RhsFn rhs);

  const std::string& id() const { return id_; }
  int dim() const { return n_; }
  int num_delays() const { return int(delays_.size()); }           // m
  int num_args() const { return int(delays_.size()) + 1; }         // m + 1
  const std::vector<double>& delays() const { return delays_; }
  double lag(int j) const { return j == 0 ? 0.0 : delays_[j - 1]; }
  double max_delay() const { return delays_.empty() ? 0.0 : delays_.back(); }

  const Vec& params() const { return params_; }
  const std::vector<std::string>& param_names() const { return param_names_; }
  int param_index(const std::string& name) const;
  double param(const std::string& name) const { return params_[param_index(name)]; }
  void set_param(const std::string& name, double v) { params_[param_index(name)] = v; }
  void set_params(const Vec& p);

  void set_exact_derivatives(JacFn jac, HessFn hess = nullptr, ThirdFn third = nullptr);
  bool has_exact_jacobian() const { return bool(jac_); }
  bool has_exact_hessian() const { return bool(hess_); }
  bool has_exact_third() const { return bool(third_); }
  /// Force finite-difference derivatives even when exact callbacks exist.
  void use_finite_differences(bool fd) { force_fd_ = fd; }

  void rhs(const Mat& states, Vec& out) const;
  Vec rhs(const Mat& states) const;

  /// M_j = d f / d x_j at the given states.
  void jacobian(const Mat& states, int j, Mat& out) const;
  std::vector<Mat> jacobians(const Mat& states) const;

  /// G_k = sum_j D^2 f (dir_j at slot j, . at slot k); one call per slot k.
  void hessian_contract(const Mat& states, const Mat& dir, int k, Mat& out) const;

  /// r-linear forms D^r F (r = 2, 3) acting on full lag-block directions.
  Vec multilinear2(const Mat& states, const Mat& d1, const Mat& d2) const;
  Vec multilinear3(const Mat& states, const Mat& d1, const Mat& d2, const Mat& d3) const;
  CVec multilinear2(const Mat& states, const CMat& d1, const CMat& d2) const;
  CVec multilinear3(const Mat& states, const CMat& d1, const CMat& d2, const CMat& d3) const;

 private:
  void fd_jacobian(const Mat& states, int j, Mat& out) const;

  std::string id_;
  int n_;
  std::vector<double> delays_;
  std::vector<std::string> param_names_;
  Vec params_;
  RhsFn rhs_;
  JacFn jac_;
  HessFn hess_;
  ThirdFn third_;
  bool force_fd_ = false;
};

/// Built-in models keyed by string id: "neocortex", "active_control",
/// "hopf_ode", "linear_delay_test". Throws InputError for unknown ids.
std::shared_ptr<DdeModel> make_model(const std::string& id);
std::vector<std::string> model_registry_ids();

}  // namespace ddenf
