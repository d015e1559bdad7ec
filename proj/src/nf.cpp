#include "ddenf/nf.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace ddenf {

namespace {

cplx pair_rule(const ComplexProfile& p,
               const std::function<CVec(int, int, double)>& g, bool gauss) {
  return gauss ? pair_T_gauss(p, g) : pair_T(p, g);
}

// B(phi1, phi2)(t) with history functions; base states from the cycle
CVec b_form(const CycleLinearization& lin, const HistoryFunction& f1,
            const HistoryFunction& f2, double t) {
  Mat base = lin.states_at(t);
  CMat d1 = f1.lag_blocks(lin.model(), t);
  CMat d2 = f2.lag_blocks(lin.model(), t);
  return lin.model().multilinear2(base, d1, d2);
}

CVec c_form(const CycleLinearization& lin, const HistoryFunction& f1,
            const HistoryFunction& f2, const HistoryFunction& f3, double t) {
  Mat base = lin.states_at(t);
  CMat d1 = f1.lag_blocks(lin.model(), t);
  CMat d2 = f2.lag_blocks(lin.model(), t);
  CMat d3 = f3.lag_blocks(lin.model(), t);
  return lin.model().multilinear3(base, d1, d2, d3);
}

// Delta'(z)-style bracket evaluated at the collocation points for a stack
CMat delta1_stack(const CycleLinearization& lin, cplx z, const ComplexProfile& u) {
  return delta_values(lin, z, 1, u);
}

HistoryFunction plain_history(cplx sigma, const ComplexProfile& v0) {
  HistoryFunction h;
  h.sigma = sigma;
  h.v0 = v0;
  return h;
}

}  // namespace

LeftNullVector left_null_vector(CollocationSystem& sys, const NfOptions& opts) {
  auto nd = sys.null_vectors(opts.dense_svd_cap);
  double scale = sys.matrix().coeffs().matrix().lpNorm<Eigen::Infinity>();
  const bool cx = sys.spec().complex_valued;
  if (nd.sv1 > 1e-6 * scale)
    throw NumericalError("left_null_vector: system is not numerically singular");
  double gap = cx ? (nd.sv2 > 0 ? nd.sv3 / nd.sv2 : 0.0)
                  : (nd.sv1 > 0 ? nd.sv2 / nd.sv1 : 1e18);
  if (cx) {
    // a simple complex exponent realifies into a singular pair {v, iv};
    // negative sentinels mean the sparse path skipped the gap estimate
    if (nd.sv3 > 0 && nd.sv2 > 0 && nd.sv3 < opts.spectral.gap_ratio * nd.sv2)
      throw MultiplicityError("left_null_vector: missing singular-value gap "
                              "(multiple exponent?)");
  } else {
    if (nd.sv2 > 0 && nd.sv2 < opts.spectral.gap_ratio * nd.sv1)
      throw MultiplicityError("left_null_vector: missing singular-value gap "
                              "(multiple exponent?)");
  }
  (void)gap;

  LeftNullVector out;
  out.sv1 = nd.sv1;
  out.sv2 = nd.sv2;
  out.sv3 = nd.sv3;
  const int rows = sys.spec().colloc_rows();
  out.colloc.resize(rows);
  if (!cx) {
    for (int k = 0; k < rows; ++k) out.colloc[k] = nd.left_raw[k];
  } else {
    for (int k = 0; k < rows; ++k)
      out.colloc[k] = cplx(nd.left_raw[2 * k], -nd.left_raw[2 * k + 1]);
  }

  if (opts.colloc_rows_only) {
    // debug reading: null vector of the collocation-row block alone
    Mat D(sys.matrix());
    const int rr = cx ? 2 * rows : rows;
    Mat Block = D.topRows(rr);
    Eigen::BDCSVD<Mat> svd(Block.transpose(), Eigen::ComputeThinV);
    Vec v = svd.matrixV().col(svd.matrixV().cols() - 1);
    for (int k = 0; k < rows; ++k)
      out.colloc[k] = cx ? cplx(v[2 * k], -v[2 * k + 1]) : cplx(v[k], 0.0);
  }
  return out;
}

namespace {

// stack of values at collocation points -> pairing with a left vector
cplx left_pair(const CVec& left, const CMat& stack) {
  const int n = int(stack.rows());
  cplx acc(0);
  for (int k = 0; k < int(stack.cols()); ++k)
    for (int c = 0; c < n; ++c) acc += left[k * n + c] * stack(c, k);
  return acc;
}

// collocation-point stack of a history-function B/C combination
template <class Fn>
CMat colloc_stack(const Mesh& mesh, int n, Fn&& fn) {
  CMat out(n, mesh.num_colloc());
  for (int i = 0; i < mesh.L(); ++i)
    for (int j = 0; j < mesh.M(); ++j)
      out.col(i * mesh.M() + j) = fn(i, j, mesh.colloc_time(i, j));
  return out;
}

}  // namespace

NormalFormReport fold_coefficient(const PeriodicOrbit& orbit, NfMethod method,
                                  const NfOptions& opts) {
  const CycleLinearization& lin = orbit.lin;
  const Mesh& mesh = lin.mesh();
  NormalFormReport rep;
  rep.kind = "fold";
  rep.method = method;
  rep.L = mesh.L();
  rep.M = mesh.M();

  auto jc = solve_generalized_q1(lin, opts.spectral, opts.solvability_tol);
  rep.diagnostics["fold_orthogonality"] = jc.solvability;
  rep.diagnostics["q1_residual"] = jc.residual;

  ComplexProfile q0c = to_complex(jc.q0), q1c = to_complex(jc.q1);
  ComplexProfile dq0 = q0c.differentiated(), dq1 = q1c.differentiated();
  HistoryFunction phi1;  // theta q0(tau+theta) + q1(tau+theta)
  phi1.sigma = 0;
  phi1.v0 = q1c;
  phi1.kappa = -1.0;
  phi1.q = q0c;

  // numerator N = B(phi1,phi1) - 2 Delta'(0) dq1 - Delta''(0) dq0,
  // denominator D = 2 Delta'(0) q1 + Delta''(0) q0
  if (method != NfMethod::Efficient) {
    cplx val = pair_rule(
        jc.p,
        [&](int i, int j, double t) -> CVec {
          double u = opts.pair_gauss ? mesh.gl_nodes()[j] : double(j) / mesh.M();
          return b_form(lin, phi1, phi1, t) -
                 2.0 * delta_eval(lin, 0.0, 1, dq1, i, u) -
                 delta_eval(lin, 0.0, 2, dq0, i, u);
        },
        opts.pair_gauss);
    rep.b_direct = 0.5 * val.real();
    rep.diagnostics["b_imag_leak"] = std::abs(0.5 * val.imag());
  }

  if (method != NfMethod::Direct) {
    BvpSpec spec = delta_bvp_spec(lin, 0.0, Boundary::Periodic);
    CollocationSystem sys(spec);
    auto pv = left_null_vector(sys, opts);
    rep.diagnostics["fold_sv1"] = pv.sv1;
    rep.diagnostics["fold_sv_gap"] = pv.sv1 > 0 ? pv.sv2 / pv.sv1 : 0.0;

    CMat Nstack = colloc_stack(mesh, lin.dim(), [&](int i, int j, double t) {
      return CVec(b_form(lin, phi1, phi1, t) -
                  2.0 * delta_eval(lin, 0.0, 1, dq1, i, mesh.gl_nodes()[j]) -
                  delta_eval(lin, 0.0, 2, dq0, i, mesh.gl_nodes()[j]));
    });
    CMat Dstack = 2.0 * delta1_stack(lin, 0.0, q1c) + delta_values(lin, 0.0, 2, q0c);
    cplx num = left_pair(pv.colloc, Nstack);
    cplx den = left_pair(pv.colloc, Dstack);
    if (std::abs(den) < 1e-12)
      throw NumericalError("fold_coefficient: vanishing denominator pairing");
    cplx b = num / den;
    rep.b_efficient = b.real();
    rep.diagnostics["b_eff_imag_leak"] = std::abs(b.imag());
    // dropped a-term of the solvability combination (vanishes at the fold)
    CMat Astack = delta1_stack(lin, 0.0, q0c);
    rep.diagnostics["fold_a_term"] = std::abs(left_pair(pv.colloc, Astack) / den);
  }

  if (method == NfMethod::Both)
    rep.diagnostics["b_discrepancy"] =
        std::abs(rep.b_direct - rep.b_efficient) /
        std::max(1.0, std::abs(rep.b_direct));
  return rep;
}

namespace {

// shared PD/NS machinery: the T-periodic adjoint null r of Delta^*(0)
// normalized against q0 = gamma' ( <r, Delta'(0) q0>_T = 1 )
AdjointNullFunction periodic_adjoint_r(const CycleLinearization& lin,
                                       const NfOptions& opts) {
  NullFunction q0;
  q0.sigma = 0;
  q0.q = to_complex(lin.dgamma());
  return solve_adjoint_null(lin, 0.0, Boundary::Periodic, q0, opts.spectral);
}

}  // namespace

NormalFormReport pd_coefficients(const PeriodicOrbit& orbit, NfMethod method,
                                 const NfOptions& opts) {
  const CycleLinearization& lin = orbit.lin;
  const Mesh& mesh = lin.mesh();
  NormalFormReport rep;
  rep.kind = "pd";
  rep.method = method;
  rep.L = mesh.L();
  rep.M = mesh.M();

  // antiperiodic null pair at sigma = 0 (multiplier -1)
  NullFunction q = solve_null_function(lin, 0.0, Boundary::Antiperiodic, opts.spectral);
  rep.diagnostics["q_residual"] = q.residual;
  HistoryFunction phi = plain_history(0.0, q.q);
  ComplexProfile q0c = to_complex(lin.dgamma());
  ComplexProfile dq = q.q.differentiated();

  AdjointNullFunction r = periodic_adjoint_r(lin, opts);
  rep.diagnostics["r_residual"] = r.residual;

  // a from the T-periodic solvability of the xi^2 equation
  CMat Bpp = colloc_stack(mesh, lin.dim(), [&](int i, int j, double t) {
    return b_form(lin, phi, phi, t);
  });

  if (method != NfMethod::Efficient) {
    cplx a2 = pair_rule(
        r.p, [&](int i, int j, double t) { return b_form(lin, phi, phi, t); },
        opts.pair_gauss);
    rep.a_direct = 0.5 * a2.real();
    rep.diagnostics["a_imag_leak"] = std::abs(0.5 * a2.imag());
  }

  LeftNullVector rv;
  if (method != NfMethod::Direct) {
    BvpSpec spec0 = delta_bvp_spec(lin, 0.0, Boundary::Periodic);
    CollocationSystem sys0(spec0);
    rv = left_null_vector(sys0, opts);
    CMat Dq0 = delta1_stack(lin, 0.0, q0c);
    cplx den = left_pair(rv.colloc, Dq0);
    if (std::abs(den) < 1e-12)
      throw NumericalError("pd_coefficients: vanishing <r, Delta'(0) q0> pairing");
    cplx a = left_pair(rv.colloc, Bpp) / (2.0 * den);
    rep.a_efficient = a.real();
    rep.diagnostics["a_eff_imag_leak"] = std::abs(a.imag());
  }

  // h2 = B_0^inv(B(phi,phi), -2a), solved once per method with its own a
  auto solve_h2 = [&](double a) {
    NullFunction q0n;
    q0n.sigma = 0;
    q0n.q = q0c;
    return bordered_inverse(
        lin, 0.0, [&](double t) { return CVec(b_form(lin, phi, phi, t)); },
        cplx(-2.0 * a, 0.0), q0n, r, Boundary::Periodic, opts.solvability_tol);
  };

  if (method != NfMethod::Efficient) {
    auto h2 = solve_h2(rep.a_direct);
    rep.diagnostics["h2_solvability"] = h2.solvability;
    rep.diagnostics["h2_mu"] = std::abs(h2.mu);
    // antiperiodic adjoint p with <p, Delta'(0) q>_T = 1
    AdjointNullFunction p =
        solve_adjoint_null(lin, 0.0, Boundary::Antiperiodic, q, opts.spectral);
    rep.diagnostics["p_residual"] = p.residual;
    cplx val = pair_rule(
        p.p,
        [&](int i, int j, double t) -> CVec {
          double u = opts.pair_gauss ? mesh.gl_nodes()[j] : double(j) / mesh.M();
          return c_form(lin, phi, phi, phi, t) +
                 3.0 * b_form(lin, phi, h2.v, t) -
                 6.0 * rep.a_direct * delta_eval(lin, 0.0, 1, dq, i, u);
        },
        opts.pair_gauss);
    rep.c_direct = val.real() / 6.0;
    rep.diagnostics["c_imag_leak"] = std::abs(val.imag() / 6.0);

    // xi^2 homological residual at collocation points:
    // Delta(0) h20 - B(phi,phi) + 2a Delta'(0) q0 = 0
    CMat resid = delta_values(lin, 0.0, 0, h2.v.v0) - Bpp +
                 2.0 * rep.a_direct * delta1_stack(lin, 0.0, q0c);
    rep.diagnostics["h2_residual"] =
        resid.norm() / std::sqrt(double(mesh.num_colloc()));
  }

  if (method != NfMethod::Direct) {
    auto h2 = solve_h2(rep.a_efficient);
    BvpSpec spec_a = delta_bvp_spec(lin, 0.0, Boundary::Antiperiodic);
    CollocationSystem sys_a(spec_a);
    auto pv = left_null_vector(sys_a, opts);
    rep.diagnostics["pd_sv1"] = pv.sv1;

    CMat Nstack = colloc_stack(mesh, lin.dim(), [&](int i, int j, double t) {
      return CVec(c_form(lin, phi, phi, phi, t) + 3.0 * b_form(lin, phi, h2.v, t));
    });
    CMat Dq = delta1_stack(lin, 0.0, q.q);
    CMat Ddq = delta1_stack(lin, 0.0, dq);
    cplx den = left_pair(pv.colloc, Dq);
    if (std::abs(den) < 1e-12)
      throw NumericalError("pd_coefficients: vanishing <p, Delta'(0) q> pairing");
    cplx c = left_pair(pv.colloc, Nstack) / (6.0 * den) -
             rep.a_efficient * left_pair(pv.colloc, Ddq) / den;
    rep.c_efficient = c.real();
    rep.diagnostics["c_eff_imag_leak"] = std::abs(c.imag());
  }

  if (method == NfMethod::Both) {
    rep.diagnostics["a_discrepancy"] = std::abs(rep.a_direct - rep.a_efficient) /
                                       std::max(1.0, std::abs(rep.a_direct));
    rep.diagnostics["c_discrepancy"] = std::abs(rep.c_direct - rep.c_efficient) /
                                       std::max(1.0, std::abs(rep.c_direct));
  }
  return rep;
}

NormalFormReport ns_coefficients(const PeriodicOrbit& orbit, double omega,
                                 NfMethod method, const NfOptions& opts) {
  const CycleLinearization& lin = orbit.lin;
  const Mesh& mesh = lin.mesh();
  const double T = mesh.T();
  NormalFormReport rep;
  rep.kind = "ns";
  rep.method = method;
  rep.L = mesh.L();
  rep.M = mesh.M();
  rep.omega = omega;

  for (int qq = 1; qq <= 4; ++qq) {
    if (std::abs(std::exp(cplx(0, qq * omega * T)) - cplx(1.0)) < opts.resonance_tol)
      throw ResonanceError("ns_coefficients: strong resonance e^{i q w T} = 1 with q = " +
                               std::to_string(qq),
                           qq);
  }

  const cplx iw(0.0, omega);
  NullFunction q = solve_null_function(lin, iw, Boundary::Periodic, opts.spectral);
  rep.diagnostics["q_residual"] = q.residual;
  HistoryFunction phi = plain_history(iw, q.q);
  HistoryFunction phib = plain_history(-iw, conjugated(q.q));
  ComplexProfile q0c = to_complex(lin.dgamma());
  ComplexProfile dq = q.q.differentiated();

  AdjointNullFunction r = periodic_adjoint_r(lin, opts);

  CMat Bpb = colloc_stack(mesh, lin.dim(), [&](int i, int j, double t) {
    return b_form(lin, phi, phib, t);
  });

  if (method != NfMethod::Efficient) {
    cplx a = pair_rule(
        r.p, [&](int i, int j, double t) { return b_form(lin, phi, phib, t); },
        opts.pair_gauss);
    rep.a_direct = a.real();
    rep.diagnostics["a_imag_leak"] = std::abs(a.imag());
  }
  LeftNullVector rv;
  if (method != NfMethod::Direct) {
    BvpSpec spec0 = delta_bvp_spec(lin, 0.0, Boundary::Periodic);
    CollocationSystem sys0(spec0);
    rv = left_null_vector(sys0, opts);
    CMat Dq0 = delta1_stack(lin, 0.0, q0c);
    cplx den = left_pair(rv.colloc, Dq0);
    cplx a = left_pair(rv.colloc, Bpb) / den;
    rep.a_efficient = a.real();
    rep.diagnostics["a_eff_imag_leak"] = std::abs(a.imag());
  }

  // h20 via the resolvent at 2 i w (absence of strong resonances)
  HistoryFunction h20 = resolvent_solve(
      lin, 2.0 * iw, [&](double t) { return CVec(b_form(lin, phi, phi, t)); },
      Boundary::Periodic);
  {
    CMat resid = delta_values(lin, 2.0 * iw, 0, h20.v0) -
                 colloc_stack(mesh, lin.dim(), [&](int i, int j, double t) {
                   return b_form(lin, phi, phi, t);
                 });
    rep.diagnostics["h20_residual"] =
        resid.norm() / std::sqrt(double(mesh.num_colloc()));
  }

  auto solve_h11 = [&](double a) {
    NullFunction q0n;
    q0n.sigma = 0;
    q0n.q = q0c;
    return bordered_inverse(
        lin, 0.0, [&](double t) { return CVec(b_form(lin, phi, phib, t)); },
        cplx(-a, 0.0), q0n, r, Boundary::Periodic, opts.solvability_tol);
  };

  auto ns_numerator = [&](const HistoryFunction& h11, int i, int j, double t,
                          double u) -> CVec {
    (void)i;
    (void)j;
    (void)u;
    return CVec(b_form(lin, h20, phib, t) + 2.0 * b_form(lin, h11, phi, t) +
                c_form(lin, phi, phi, phib, t));
  };

  if (method != NfMethod::Efficient) {
    auto h11 = solve_h11(rep.a_direct);
    rep.diagnostics["h11_solvability"] = h11.solvability;
    rep.diagnostics["h11_imag_leak"] = h11.v.v0.values().imag().norm();

    AdjointNullFunction p =
        solve_adjoint_null(lin, iw, Boundary::Periodic, q, opts.spectral);
    rep.diagnostics["p_residual"] = p.residual;

    // iw q + dq as a profile
    ComplexProfile u(lin.mesh_ptr(), lin.dim(), Boundary::Periodic);
    u.values() = iw * q.q.values() + dq.values();
    cplx val = pair_rule(
        p.p,
        [&](int i, int j, double t) -> CVec {
          double uu = opts.pair_gauss ? mesh.gl_nodes()[j] : double(j) / mesh.M();
          return ns_numerator(h11.v, i, j, t, uu) -
                 2.0 * rep.a_direct * delta_eval(lin, iw, 1, u, i, uu);
        },
        opts.pair_gauss);
    rep.d_direct = 0.5 * val + cplx(0.0, rep.a_direct * omega);
  }

  if (method != NfMethod::Direct) {
    auto h11 = solve_h11(rep.a_efficient);
    BvpSpec spec_iw = delta_bvp_spec(lin, iw, Boundary::Periodic);
    CollocationSystem sys_iw(spec_iw);
    auto pv = left_null_vector(sys_iw, opts);
    rep.diagnostics["ns_sv2"] = pv.sv2;
    rep.diagnostics["ns_sv_gap"] = pv.sv2 > 0 ? pv.sv3 / pv.sv2 : 0.0;

    CMat Nstack = colloc_stack(mesh, lin.dim(), [&](int i, int j, double t) {
      return ns_numerator(h11.v, i, j, t, mesh.gl_nodes()[j]);
    });
    CMat Dq, Ddq;
    if (!opts.supplement_literal_ns) {
      Dq = delta1_stack(lin, iw, q.q);
      Ddq = delta1_stack(lin, iw, dq);
    } else {
      // printed-variant brackets (1 - e^{-i w tau_l})/(i w) for debugging
      auto literal = [&](const ComplexProfile& f) {
        return colloc_stack(mesh, lin.dim(), [&](int i, int j, double t) {
          CVec v = f.value(t);
          const DdeModel& model = lin.model();
          for (int l = 1; l < model.num_args(); ++l) {
            double tau = model.lag(l);
            cplx fac = (1.0 - std::exp(-iw * tau)) / iw;
            v += fac * (lin.jac_colloc(i, j)[size_t(l)].cast<cplx>() *
                        f.value(t - tau));
          }
          return v;
        });
      };
      Dq = literal(q.q);
      Ddq = literal(dq);
    }
    cplx den = left_pair(pv.colloc, Dq);
    if (std::abs(den) < 1e-12)
      throw NumericalError("ns_coefficients: vanishing <p, Delta'(iw) q> pairing");
    rep.d_efficient = left_pair(pv.colloc, Nstack) / (2.0 * den) -
                      rep.a_efficient * left_pair(pv.colloc, Ddq) / den;
  }

  if (method == NfMethod::Both) {
    rep.diagnostics["a_discrepancy"] = std::abs(rep.a_direct - rep.a_efficient) /
                                       std::max(1.0, std::abs(rep.a_direct));
    rep.diagnostics["d_discrepancy"] = std::abs(rep.d_direct - rep.d_efficient) /
                                       std::max(1.0, std::abs(rep.d_direct));
  }
  return rep;
}

}  // namespace ddenf
