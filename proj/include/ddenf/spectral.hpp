#pragma once

#include "ddenf/orbit.hpp"

namespace ddenf {

/// Eigenfunction-style history object
///   v(tau)(theta) = e^{sigma theta} ( v0(tau+theta) - kappa theta q(tau+theta) ),
/// covering plain null functions (kappa = 0), generalized eigenfunctions of
/// rank two, and the center-manifold coefficients h2, h11, h20, h21.
struct HistoryFunction {
  cplx sigma{0.0, 0.0};
  ComplexProfile v0;
  cplx kappa{0.0, 0.0};
  ComplexProfile q;  // unused when kappa == 0

  CVec eval(double tau, double theta) const {
    CVec out = v0.value(tau + theta);
    if (kappa != cplx(0, 0)) out -= kappa * theta * q.value(tau + theta);
    return std::exp(sigma * theta) * out;
  }
  /// lag-block matrix: column j = v(tau)(-tau_j); feeds the multilinear forms
  CMat lag_blocks(const DdeModel& model, double tau) const {
    CMat out(v0.dim(), model.num_args());
    for (int j = 0; j < model.num_args(); ++j) out.col(j) = eval(tau, -model.lag(j));
    return out;
  }
};

/// One-sided evaluation of (Delta^(l)(z) q)(t) at local position u of the
/// given subinterval (one-sided in the interpolant derivative for l = 0):
///   l = 0:  q'(t) + z q(t) - sum_j e^{-z tau_j} M_j(t) q(t - tau_j)
///   l = 1:  q(t) + sum_j tau_j e^{-z tau_j} M_j(t) q(t - tau_j)
///   l = 2:  - sum_j tau_j^2 e^{-z tau_j} M_j(t) q(t - tau_j)
CVec delta_eval(const CycleLinearization& lin, cplx z, int order,
                const ComplexProfile& q, int interval, double u);

/// Adjoint; p is row-valued, stored transposed as a column profile:
///   l = 0: -p'(t) + z p(t) - sum_j e^{-z tau_j} M_j(t+tau_j)^T p(t + tau_j)
/// with the obvious l = 1, 2 analogues.
CVec delta_star_eval(const CycleLinearization& lin, cplx z, int order,
                     const ComplexProfile& p, int interval, double u);

/// Values at the collocation points as an n x (L*M) matrix.
CMat delta_values(const CycleLinearization& lin, cplx z, int order,
                  const ComplexProfile& q);
CMat delta_star_values(const CycleLinearization& lin, cplx z, int order,
                       const ComplexProfile& p);

/// sigma-weighted pairing <p, g>_T = int_0^T p(t)^T g(t) dt with one-sided
/// per-subinterval evaluation of g (bilinear, no conjugation).
cplx pair_T(const ComplexProfile& p,
            const std::function<CVec(int i, int j, double t)>& g);
cplx pair_T(const ComplexProfile& p, const ComplexProfile& g);

/// Gauss-node variant of the same pairing.
cplx pair_T_gauss(const ComplexProfile& p,
                  const std::function<CVec(int i, int j, double t)>& g);

/// Hermitian norm pairing <q^*, q>_T (real and positive for q != 0).
double pair_norm(const ComplexProfile& q);

struct SpectralOptions {
  double exponent_tol = 1e-6;   // sv threshold (relative to |A|) for "is an exponent"
  double gap_ratio = 1e3;       // sv2/sv1 must exceed this for a simple exponent
  int dense_svd_cap = 900;      // above this, inverse iteration
};

struct NullFunction {
  ComplexProfile q;
  cplx sigma{0, 0};
  double residual = 0;     // ||Delta(sigma) q|| at collocation points
  double sv1 = 0, sv2 = 0; // singular-value diagnostics
};

struct AdjointNullFunction {
  ComplexProfile p;  // row-valued, stored transposed
  cplx sigma{0, 0};
  cplx pairing{0, 0};  // <p, Delta'(sigma) q>_T against the paired q, after normalization
  double residual = 0;
};

/// Null function of Delta(sigma) in the given boundary class via the smallest
/// singular vector of the homogeneous collocation system; normalized to
/// <q^*, q>_T = 1 with the largest-magnitude basis value rotated to the
/// positive real axis.
NullFunction solve_null_function(const CycleLinearization& lin, cplx sigma,
                                 Boundary boundary,
                                 const SpectralOptions& opts = {});

/// Adjoint null function of Delta^*(sigma), normalized against a paired null
/// function so that <p, Delta'(sigma) q>_T = 1.
AdjointNullFunction solve_adjoint_null(const CycleLinearization& lin, cplx sigma,
                                       Boundary boundary, const NullFunction& q,
                                       const SpectralOptions& opts = {});

struct JordanChainFold {
  RealProfile q0;       // = gamma'
  RealProfile q1;       // Delta(0) q1 = -Delta'(0) q0, gauge <q1^*, q0>_T = 0
  ComplexProfile p;     // periodic adjoint null, <p,D'q1> + (1/2)<p,D''q0> = 1
  double solvability = 0;  // |<p_raw, Delta'(0) q0>_T| before the solve
  double residual = 0;     // ||Delta(0) q1 + Delta'(0) q0|| at collocation points
};

/// Rank-two Jordan chain at a fold of cycles (trivial exponent, algebraic
/// multiplicity two). Errors with SolvabilityError away from a fold.
JordanChainFold solve_generalized_q1(const CycleLinearization& lin,
                                     const SpectralOptions& opts = {},
                                     double solvability_tol = 1e-6);

struct BorderedSolution {
  HistoryFunction v;   // v0 = xi + mu q with <p, xi>_T = 0
  cplx mu{0, 0};
  double solvability = 0;  // projected residual before solving
};

/// B_sigma^inv(eta, kappa): bordered inverse at a simple exponent sigma with
/// normalized pair (q, p): xi solves Delta(sigma) xi = eta + kappa Delta'(sigma) q
/// subject to <p, xi>_T = 0, and mu = -<p, Delta'(sigma) xi>_T
/// - (kappa/2) <p, Delta''(sigma) q>_T.
BorderedSolution bordered_inverse(const CycleLinearization& lin, cplx sigma,
                                  const std::function<CVec(double)>& eta,
                                  cplx kappa, const NullFunction& q,
                                  const AdjointNullFunction& p,
                                  Boundary boundary,
                                  double solvability_tol = 1e-6);

/// v0 = Delta(z)^{-1} w0 for z not a Floquet exponent; the history extension
/// is e^{z theta} v0(tau + theta). Throws ResonanceError on exponent collision.
HistoryFunction resolvent_solve(const CycleLinearization& lin, cplx z,
                                const std::function<CVec(double)>& w0,
                                Boundary boundary = Boundary::Periodic);

/// Assembled homogeneous Delta^(z) system (collocation + boundary rows), the
/// shared building block: real when z is real, realified otherwise.
BvpSpec delta_bvp_spec(const CycleLinearization& lin, cplx z, Boundary boundary,
                       bool adjoint = false, bool force_complex = false);

}  // namespace ddenf
