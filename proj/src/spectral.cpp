#include "ddenf/spectral.hpp"

#include <cmath>

namespace ddenf {

namespace {

CVec delta_core(const CycleLinearization& lin, cplx z, int order,
                const ComplexProfile& q, bool adjoint, int interval, double u) {
  const DdeModel& model = lin.model();
  const Mesh& mesh = lin.mesh();
  const int n = model.dim();
  const double t = (interval + u) * mesh.H();
  CVec out = CVec::Zero(n);
  double dsign = adjoint ? -1.0 : 1.0;
  double shift_sign = adjoint ? 1.0 : -1.0;
  if (order == 0) {
    out = dsign * q.derivative_on(interval, u) + z * q.value(t);
  } else if (order == 1) {
    out = q.value(t);
  }
  for (int j = 0; j < model.num_args(); ++j) {
    double tau = model.lag(j);
    if (order >= 1 && tau == 0.0) continue;
    cplx factor = std::exp(-z * tau);
    if (order == 0)
      factor = -factor;
    else if (order == 1)
      factor *= tau;
    else
      factor *= -tau * tau;
    double targ = t + shift_sign * tau;
    Mat Mj = adjoint ? Mat(lin.jacobians_at(targ)[size_t(j)].transpose())
                     : lin.jacobians_at(t)[size_t(j)];
    out += factor * (Mj.cast<cplx>() * q.value(targ));
  }
  return out;
}

}  // namespace

CVec delta_eval(const CycleLinearization& lin, cplx z, int order,
                const ComplexProfile& q, int interval, double u) {
  return delta_core(lin, z, order, q, false, interval, u);
}

CVec delta_star_eval(const CycleLinearization& lin, cplx z, int order,
                     const ComplexProfile& p, int interval, double u) {
  return delta_core(lin, z, order, p, true, interval, u);
}

CMat delta_values(const CycleLinearization& lin, cplx z, int order,
                  const ComplexProfile& q) {
  const Mesh& mesh = lin.mesh();
  CMat out(q.dim(), mesh.num_colloc());
  for (int i = 0; i < mesh.L(); ++i)
    for (int j = 0; j < mesh.M(); ++j)
      out.col(i * mesh.M() + j) =
          delta_eval(lin, z, order, q, i, mesh.gl_nodes()[j]);
  return out;
}

CMat delta_star_values(const CycleLinearization& lin, cplx z, int order,
                       const ComplexProfile& p) {
  const Mesh& mesh = lin.mesh();
  CMat out(p.dim(), mesh.num_colloc());
  for (int i = 0; i < mesh.L(); ++i)
    for (int j = 0; j < mesh.M(); ++j)
      out.col(i * mesh.M() + j) =
          delta_star_eval(lin, z, order, p, i, mesh.gl_nodes()[j]);
  return out;
}

cplx pair_T(const ComplexProfile& p,
            const std::function<CVec(int, int, double)>& g) {
  const Mesh& mesh = p.mesh();
  cplx acc(0);
  const auto& nc = mesh.newton_cotes();
  for (int i = 0; i < mesh.L(); ++i)
    for (int j = 0; j <= mesh.M(); ++j) {
      double t = mesh.basis_time(i * mesh.M() + j);
      CVec pv = p.values().col(i * mesh.M() + j);
      CVec gv = g(i, j, t);
      acc += mesh.H() * nc[j] * (pv.transpose() * gv)(0, 0);
    }
  return acc;
}

cplx pair_T(const ComplexProfile& p, const ComplexProfile& g) {
  return pair_T(p, [&g, M = p.mesh().M()](int i, int j, double) -> CVec {
    return g.values().col(i * M + j);
  });
}

cplx pair_T_gauss(const ComplexProfile& p,
                  const std::function<CVec(int, int, double)>& g) {
  const Mesh& mesh = p.mesh();
  cplx acc(0);
  for (int i = 0; i < mesh.L(); ++i)
    for (int j = 0; j < mesh.M(); ++j) {
      double t = mesh.colloc_time(i, j);
      CVec pv = p.value(t);
      CVec gv = g(i, j, t);
      acc += mesh.H() * mesh.gl_weights()[j] * (pv.transpose() * gv)(0, 0);
    }
  return acc;
}

double pair_norm(const ComplexProfile& q) {
  const Mesh& mesh = q.mesh();
  double acc = 0;
  for (int g = 0; g < mesh.num_basis(); ++g)
    acc += mesh.sigma()[g] * q.values().col(g).squaredNorm();
  return acc;
}

BvpSpec delta_bvp_spec(const CycleLinearization& lin, cplx z, Boundary boundary,
                       bool adjoint, bool force_complex) {
  BvpSpec spec;
  spec.mesh = lin.mesh_ptr();
  spec.n = lin.dim();
  spec.complex_valued = force_complex || z.imag() != 0.0;
  spec.deriv_sign = adjoint ? -1.0 : 1.0;
  spec.boundary = boundary;
  const DdeModel& model = lin.model();
  const CycleLinearization* L = &lin;
  for (int j = 0; j < model.num_args(); ++j) {
    BvpTerm term;
    double tau = model.lag(j);
    term.shift = adjoint ? tau : -tau;
    cplx efac = std::exp(-z * tau);
    if (adjoint) {
      term.coeff = [L, j, efac, z, tau](int i, int jj, double t, CMat& C) {
        Mat Mj = tau == 0.0 ? L->jac_colloc(i, jj)[size_t(j)]
                            : L->jacobians_at(t + tau)[size_t(j)];
        C = (-efac) * Mj.transpose().cast<cplx>();
        if (j == 0) C += z * CMat::Identity(C.rows(), C.cols());
      };
    } else {
      term.coeff = [L, j, efac, z](int i, int jj, double, CMat& C) {
        C = (-efac) * L->jac_colloc(i, jj)[size_t(j)].cast<cplx>();
        if (j == 0) C += z * CMat::Identity(C.rows(), C.cols());
      };
    }
    spec.terms.push_back(std::move(term));
  }
  return spec;
}

NullFunction solve_null_function(const CycleLinearization& lin, cplx sigma,
                                 Boundary boundary, const SpectralOptions& opts) {
  BvpSpec spec = delta_bvp_spec(lin, sigma, boundary);
  CollocationSystem sys(spec);
  auto nd = sys.null_vectors(opts.dense_svd_cap);
  double scale = sys.matrix().coeffs().matrix().lpNorm<Eigen::Infinity>();
  if (nd.sv1 > opts.exponent_tol * scale)
    throw NumericalError(
        "solve_null_function: sigma is not a Floquet exponent of this boundary "
        "class (relative smallest singular value " +
        std::to_string(nd.sv1 / scale) + ")");
  // a realified complex system carries the {v, iv} pair, so only the real
  // case can use the sv2/sv1 gap as a simplicity check
  if (!spec.complex_valued && nd.sv2 > 0 && nd.sv2 < opts.gap_ratio * nd.sv1)
    throw MultiplicityError(
        "solve_null_function: two-dimensional numerical nullspace where a "
        "simple exponent was expected");

  NullFunction nf;
  nf.sigma = sigma;
  nf.sv1 = nd.sv1;
  nf.sv2 = nd.sv2;
  nf.q = ComplexProfile(lin.mesh_ptr(), lin.dim(), boundary);
  const int n = lin.dim();
  for (int g = 0; g < lin.mesh().num_basis(); ++g)
    nf.q.values().col(g) = nd.right.segment(g * n, n);

  nf.q.values() /= std::sqrt(pair_norm(nf.q));
  Eigen::Index rmax = 0, cmax = 0;
  nf.q.values().cwiseAbs().maxCoeff(&rmax, &cmax);
  cplx piv = nf.q.values()(rmax, cmax);
  nf.q.values() *= std::abs(piv) / piv;

  nf.residual = delta_values(lin, sigma, 0, nf.q).norm() /
                std::sqrt(double(lin.mesh().num_colloc()));
  return nf;
}

AdjointNullFunction solve_adjoint_null(const CycleLinearization& lin, cplx sigma,
                                       Boundary boundary, const NullFunction& q,
                                       const SpectralOptions& opts) {
  BvpSpec spec = delta_bvp_spec(lin, sigma, boundary, /*adjoint=*/true);
  CollocationSystem sys(spec);
  auto nd = sys.null_vectors(opts.dense_svd_cap);
  double scale = sys.matrix().coeffs().matrix().lpNorm<Eigen::Infinity>();
  if (nd.sv1 > opts.exponent_tol * scale)
    throw NumericalError(
        "solve_adjoint_null: sigma is not a characteristic value of the "
        "adjoint operator here");
  if (!spec.complex_valued && nd.sv2 > 0 && nd.sv2 < opts.gap_ratio * nd.sv1)
    throw MultiplicityError(
        "solve_adjoint_null: multiple numerical nullspace for the adjoint");

  AdjointNullFunction an;
  an.sigma = sigma;
  an.p = ComplexProfile(lin.mesh_ptr(), lin.dim(), boundary);
  const int n = lin.dim();
  for (int g = 0; g < lin.mesh().num_basis(); ++g)
    an.p.values().col(g) = nd.right.segment(g * n, n);

  cplx val = pair_T(an.p, [&](int i, int j, double) {
    return delta_eval(lin, sigma, 1, q.q, i, double(j) / lin.mesh().M());
  });
  double qs = std::sqrt(pair_norm(q.q)), ps = std::sqrt(pair_norm(an.p));
  if (std::abs(val) < 1e-6 * qs * ps)
    throw MultiplicityError(
        "solve_adjoint_null: vanishing pairing with the paired null function "
        "(exponent not simple)");
  an.p.values() /= val;
  an.pairing = cplx(1.0, 0.0);
  an.residual = delta_star_values(lin, sigma, 0, an.p).norm() /
                std::sqrt(double(lin.mesh().num_colloc()));
  return an;
}

JordanChainFold solve_generalized_q1(const CycleLinearization& lin,
                                     const SpectralOptions& opts,
                                     double solvability_tol) {
  JordanChainFold jc;
  jc.q0 = lin.dgamma();
  ComplexProfile q0c = to_complex(jc.q0);
  const Mesh& mesh = lin.mesh();

  BvpSpec aspec = delta_bvp_spec(lin, 0.0, Boundary::Periodic, /*adjoint=*/true);
  CollocationSystem asys(aspec);
  auto nd = asys.null_vectors(opts.dense_svd_cap);
  ComplexProfile p(lin.mesh_ptr(), lin.dim(), Boundary::Periodic);
  for (int g = 0; g < mesh.num_basis(); ++g)
    p.values().col(g) = nd.right.segment(g * lin.dim(), lin.dim());
  p.values() /= std::sqrt(pair_norm(p));

  cplx sp = pair_T(p, [&](int i, int j, double) {
    return delta_eval(lin, 0.0, 1, q0c, i, double(j) / mesh.M());
  });
  double q0s = std::sqrt(pair_norm(q0c));
  jc.solvability = std::abs(sp) / q0s;
  if (jc.solvability > solvability_tol)
    throw SolvabilityError(
        "solve_generalized_q1: <p, Delta'(0) q0>_T does not vanish (not at a "
        "fold of cycles)",
        sp);

  BvpSpec spec = delta_bvp_spec(lin, 0.0, Boundary::Periodic);
  spec.rhs = [&](int i, int j, double, CVec& r) {
    r = -delta_eval(lin, 0.0, 1, q0c, i, mesh.gl_nodes()[j]);
  };
  BvpConstraint gauge;  // <q0^*, q1>_T = 0
  gauge.weight = [&q0c](double t, CVec& w) { w = q0c.value(t).conjugate(); };
  spec.constraints.push_back(std::move(gauge));
  // border with (a proxy of) the left null vector: at a fold the right null
  // q0 lies in the range of the operator, so it cannot regularize the system
  BvpExtraColumn leftcol;
  leftcol.colloc = [&p, &mesh](int, int j, double t, CVec& c) {
    c = (mesh.H() * mesh.gl_weights()[j]) * p.value(t);
  };
  spec.extras.push_back(std::move(leftcol));
  CollocationSystem sys(spec);
  CVec sol = sys.solve(sys.spec_rhs(), /*check_singular=*/false);
  jc.q1 = RealProfile(lin.mesh_ptr(), lin.dim(), Boundary::Periodic);
  for (int g = 0; g < mesh.num_basis(); ++g)
    jc.q1.values().col(g) = sol.segment(g * lin.dim(), lin.dim()).real();

  ComplexProfile q1c = to_complex(jc.q1);
  CMat res = delta_values(lin, 0.0, 0, q1c) + delta_values(lin, 0.0, 1, q0c);
  jc.residual = res.norm() / std::sqrt(double(mesh.num_colloc()));

  cplx val = pair_T(p, [&](int i, int j, double) {
               return delta_eval(lin, 0.0, 1, q1c, i, double(j) / mesh.M());
             }) +
             0.5 * pair_T(p, [&](int i, int j, double) {
               return delta_eval(lin, 0.0, 2, q0c, i, double(j) / mesh.M());
             });
  if (std::abs(val) < 1e-10)
    throw MultiplicityError(
        "solve_generalized_q1: degenerate rank-two pairing at the fold");
  p.values() /= val;
  jc.p = std::move(p);
  return jc;
}

BorderedSolution bordered_inverse(const CycleLinearization& lin, cplx sigma,
                                  const std::function<CVec(double)>& eta,
                                  cplx kappa, const NullFunction& q,
                                  const AdjointNullFunction& p,
                                  Boundary boundary, double solvability_tol) {
  const Mesh& mesh = lin.mesh();
  cplx proj = pair_T(p.p, [&](int i, int j, double t) {
    CVec v = eta(t);
    if (kappa != cplx(0, 0))
      v += kappa * delta_eval(lin, sigma, 1, q.q, i, double(j) / mesh.M());
    return v;
  });
  BorderedSolution out;
  out.solvability = std::abs(proj);
  double scale = std::max(1.0, std::sqrt(pair_norm(q.q)));
  if (out.solvability > solvability_tol * scale)
    throw SolvabilityError("bordered_inverse: Fredholm solvability violated",
                           proj);

  BvpSpec spec =
      delta_bvp_spec(lin, sigma, boundary, false, /*force_complex=*/true);
  spec.rhs = [&](int i, int j, double t, CVec& r) {
    r = eta(t);
    if (kappa != cplx(0, 0))
      r += kappa * delta_eval(lin, sigma, 1, q.q, i, mesh.gl_nodes()[j]);
  };
  BvpConstraint ortho;  // <p, xi>_T = 0
  ortho.weight = [&](double t, CVec& w) { w = p.p.value(t); };
  spec.constraints.push_back(std::move(ortho));
  // border with the (approximate) left null direction: Gauss-weighted adjoint
  // samples; the right null would fail whenever it lies in the range
  BvpExtraColumn leftcol;
  leftcol.colloc = [&](int, int j, double t, CVec& c) {
    c = (mesh.H() * mesh.gl_weights()[j]) * p.p.value(t);
  };
  spec.extras.push_back(std::move(leftcol));
  CollocationSystem sys(spec);
  CVec sol = sys.solve(sys.spec_rhs(), /*check_singular=*/false);

  ComplexProfile xi(lin.mesh_ptr(), lin.dim(), boundary);
  for (int g = 0; g < mesh.num_basis(); ++g)
    xi.values().col(g) = sol.segment(g * lin.dim(), lin.dim());

  out.mu = -pair_T(p.p, [&](int i, int j, double) {
    return delta_eval(lin, sigma, 1, xi, i, double(j) / mesh.M());
  });
  if (kappa != cplx(0, 0))
    out.mu -= (kappa / 2.0) * pair_T(p.p, [&](int i, int j, double) {
      return delta_eval(lin, sigma, 2, q.q, i, double(j) / mesh.M());
    });

  out.v.sigma = sigma;
  out.v.v0 = xi;
  out.v.v0.values() += out.mu * q.q.values();
  out.v.kappa = kappa;
  out.v.q = q.q;
  return out;
}

HistoryFunction resolvent_solve(const CycleLinearization& lin, cplx z,
                                const std::function<CVec(double)>& w0,
                                Boundary boundary) {
  BvpSpec spec = delta_bvp_spec(lin, z, boundary, false, /*force_complex=*/true);
  spec.rhs = [&](int, int, double t, CVec& r) { r = w0(t); };
  try {
    auto res = solve_linear_bvp(spec);
    HistoryFunction h;
    h.sigma = z;
    h.v0 = std::move(res.profile);
    return h;
  } catch (const SingularityError&) {
    throw ResonanceError(
        "resolvent_solve: z collides with a Floquet exponent (strong resonance)",
        0);
  }
}

}  // namespace ddenf
