#pragma once

#include <complex>
#include <Eigen/Core>
#include <Eigen/Dense>

namespace ddenf {

using cplx = std::complex<double>;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Error taxonomy: input errors are caller bugs / bad files, numerical errors
// are legitimate runtime failures (divergence, singularity, multiplicity).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : NumericalError {
  double last_residual;
  ConvergenceError(const std::string& msg, double r)
      : NumericalError(msg), last_residual(r) {}
};

struct SingularityError : NumericalError {
  double smallest_sv;
  SingularityError(const std::string& msg, double sv)
      : NumericalError(msg), smallest_sv(sv) {}
};

struct MultiplicityError : NumericalError {
  using NumericalError::NumericalError;
};

struct SolvabilityError : NumericalError {
  cplx pairing;
  SolvabilityError(const std::string& msg, cplx p)
      : NumericalError(msg), pairing(p) {}
};

struct ResonanceError : NumericalError {
  int q;  // resonance order e^{i q w T} = 1
  ResonanceError(const std::string& msg, int q_) : NumericalError(msg), q(q_) {}
};

struct DivergenceError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace ddenf
