#include "ddenf/continuation.hpp"

#include <cmath>

namespace ddenf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_real_mu(cplx mu) { return std::abs(mu.imag()) <= 1e-6 * (1.0 + std::abs(mu.real())); }

// weighted inner product over (profile values, T, alpha)
struct Tangent {
  Mat dY;       // n x NB
  double dT = 0, dalpha = 0;
};

double tdot(const Tangent& a, const Tangent& b) {
  double wy = 1.0 / double(a.dY.size());
  return wy * (a.dY.array() * b.dY.array()).sum() + a.dT * b.dT +
         a.dalpha * b.dalpha;
}

struct CorrectorState {
  RealProfile y;  // scaled mesh, T(mesh) = 1
  double T;
  double alpha;
};

// residual of [collocation; periodicity; phase; arclength]
Vec corrector_residual(const DdeModel& model, const Mesh& mesh,
                       const CorrectorState& s, const RealProfile& dref,
                       double phase_rhs, const CorrectorState& pred,
                       const Tangent& tan) {
  const int n = model.dim(), M = mesh.M();
  Vec r(n * mesh.num_basis() + 2);
  Mat states(n, model.num_args());
  for (int i = 0; i < mesh.L(); ++i)
    for (int j = 0; j < M; ++j) {
      double sc = mesh.colloc_time(i, j);
      states.col(0) = s.y.value(sc);
      for (int q = 1; q < model.num_args(); ++q)
        states.col(q) = s.y.value(sc - model.lag(q) / s.T);
      r.segment((i * M + j) * n, n) =
          s.y.derivative_on(i, mesh.gl_nodes()[j]) - s.T * model.rhs(states);
    }
  const int rb = n * mesh.num_colloc();
  r.segment(rb, n) = s.y.values().col(mesh.num_basis() - 1) - s.y.values().col(0);
  double phase = 0;
  for (int g = 0; g < mesh.num_basis(); ++g)
    phase += mesh.sigma()[g] * dref.values().col(g).dot(s.y.values().col(g));
  r[rb + n] = phase - phase_rhs;
  Tangent diff{s.y.values() - pred.y.values(), s.T - pred.T, s.alpha - pred.alpha};
  r[rb + n + 1] = tdot(diff, tan);
  return r;
}

// one pseudo-arclength corrector solve; updates s in place, returns iterations
// used or -1 on failure
int correct(std::shared_ptr<DdeModel> model, const std::string& free_param,
            const std::shared_ptr<const Mesh>& mesh, CorrectorState& s,
            const RealProfile& dref, double phase_rhs,
            const CorrectorState& pred, const Tangent& tan, double tol,
            int max_iter) {
  const int n = model->dim();
  const int NB = mesh->num_basis();
  for (int iter = 0; iter < max_iter; ++iter) {
    Vec r = corrector_residual(*model, *mesh, s, dref, phase_rhs, pred, tan);
    double rn = r.lpNorm<Eigen::Infinity>();
    if (rn <= tol) return iter;
    if (!std::isfinite(rn)) return -1;

    BvpSpec spec;
    spec.mesh = mesh;
    spec.n = n;
    spec.boundary = Boundary::Periodic;
    // linearized delay terms at the current iterate
    std::vector<std::vector<Mat>> mj(size_t(mesh->num_colloc()));
    for (int i = 0; i < mesh->L(); ++i)
      for (int j = 0; j < mesh->M(); ++j) {
        double sc = mesh->colloc_time(i, j);
        Mat states(n, model->num_args());
        states.col(0) = s.y.value(sc);
        for (int q = 1; q < model->num_args(); ++q)
          states.col(q) = s.y.value(sc - model->lag(q) / s.T);
        mj[size_t(i) * mesh->M() + j] = model->jacobians(states);
      }
    for (int q = 0; q < model->num_args(); ++q) {
      BvpTerm term;
      term.shift = -model->lag(q) / s.T;
      double Tcur = s.T;
      term.coeff = [&mj, q, M = mesh->M(), Tcur](int i, int j, double, CMat& C) {
        C = (-Tcur * mj[size_t(i) * M + j][size_t(q)]).cast<cplx>();
      };
      spec.terms.push_back(std::move(term));
    }
    // phase row and arclength row
    BvpConstraint phase;
    phase.weight = [&dref](double t, CVec& w) { w = dref.value(t).cast<cplx>(); };
    spec.constraints.push_back(std::move(phase));
    BvpConstraint arc;
    arc.raw.resize(n * NB);
    double wy = 1.0 / double(tan.dY.size());
    for (int g = 0; g < NB; ++g)
      for (int c = 0; c < n; ++c) arc.raw[g * n + c] = wy * tan.dY(c, g);
    spec.constraints.push_back(std::move(arc));
    // T column
    BvpExtraColumn tcol;
    tcol.colloc = [&s, model](int, int, double sc, CVec& col) {
      Mat states(model->dim(), model->num_args());
      states.col(0) = s.y.value(sc);
      for (int q = 1; q < model->num_args(); ++q)
        states.col(q) = s.y.value(sc - model->lag(q) / s.T);
      Vec v = -model->rhs(states);
      for (int q = 1; q < model->num_args(); ++q) {
        Mat mjq;
        model->jacobian(states, q, mjq);
        v -= (model->lag(q) / s.T) * mjq * s.y.derivative(sc - model->lag(q) / s.T);
      }
      col = v.cast<cplx>();
    };
    tcol.constraint = CVec::Zero(2);
    tcol.constraint[1] = tan.dT;
    spec.extras.push_back(std::move(tcol));
    // alpha column via central parameter differences
    BvpExtraColumn acol;
    acol.colloc = [&s, model, &free_param](int, int, double sc, CVec& col) {
      Mat states(model->dim(), model->num_args());
      states.col(0) = s.y.value(sc);
      for (int q = 1; q < model->num_args(); ++q)
        states.col(q) = s.y.value(sc - model->lag(q) / s.T);
      double a0 = s.alpha;
      double h = 1e-6 * std::max(1.0, std::abs(a0));
      model->set_param(free_param, a0 + h);
      Vec fp1 = model->rhs(states);
      model->set_param(free_param, a0 - h);
      Vec fm1 = model->rhs(states);
      model->set_param(free_param, a0);
      col = (-s.T * (fp1 - fm1) / (2 * h)).cast<cplx>();
    };
    acol.constraint = CVec::Zero(2);
    acol.constraint[1] = tan.dalpha;
    spec.extras.push_back(std::move(acol));

    CollocationSystem sys(spec);
    CVec dz;
    try {
      dz = sys.solve(r.cast<cplx>(), false);
    } catch (const SingularityError&) {
      return -1;
    }
    Vec du = -dz.real();
    if (!du.allFinite()) return -1;
    for (int g = 0; g < NB; ++g)
      s.y.values().col(g) += du.segment(g * n, n);
    s.T += du[n * NB];
    s.alpha += du[n * NB + 1];
    model->set_param(free_param, s.alpha);
    if (s.T <= 0) return -1;
  }
  Vec r = corrector_residual(*model, *mesh, s, dref, phase_rhs, pred, tan);
  return r.lpNorm<Eigen::Infinity>() <= tol ? max_iter : -1;
}

}  // namespace

TestFunctions test_functions(const FloquetSpectrum& spec, double T,
                             double resonance_tol) {
  TestFunctions tf;
  const auto& mus = spec.multipliers;
  double best_fold = 1e300, best_pd = 1e300, best_ns = 1e300;
  for (int k = 0; k < int(mus.size()); ++k) {
    cplx mu = mus[size_t(k)];
    if (is_real_mu(mu)) {
      double re = mu.real();
      if (k != spec.trivial_index && std::abs(re - 1.0) < best_fold) {
        best_fold = std::abs(re - 1.0);
        tf.fold = re - 1.0;
      }
      if (std::abs(re + 1.0) < best_pd) {
        best_pd = std::abs(re + 1.0);
        tf.pd = re + 1.0;
      }
    } else if (mu.imag() > 0) {
      // pairs hugging the real axis near +1 are fold collisions or the
      // trivial multiplier's discretization twin, not torus candidates
      if (std::abs(std::arg(mu)) < 0.1) continue;
      double dist = std::abs(std::abs(mu) - 1.0);
      if (dist < best_ns) {
        best_ns = dist;
        tf.ns = std::abs(mu) - 1.0;
        double arg = std::arg(mu);  // (0, pi)
        tf.ns_omega = arg / T;
        tf.ns_resonant = false;
        for (int q = 1; q <= 4; ++q)
          if (std::abs(std::exp(cplx(0, q * arg)) - cplx(1.0)) < resonance_tol)
            tf.ns_resonant = true;
      }
    }
  }
  return tf;
}

CycleBranch continue_cycle(std::shared_ptr<DdeModel> model,
                           const PeriodicOrbit& seed,
                           const std::string& free_param,
                           const ContinuationOptions& opts) {
  CycleBranch branch;
  branch.free_param = free_param;
  model->set_params(seed.params);

  auto mesh = std::make_shared<Mesh>(opts.L, opts.M, 1.0);
  const int n = model->dim();

  // re-solve the seed on the scaled mesh
  CorrectorState cur;
  cur.y = RealProfile(mesh, n, Boundary::Periodic);
  const RealProfile& sp = seed.profile();
  for (int g = 0; g < mesh->num_basis(); ++g)
    cur.y.values().col(g) = sp.value(seed.period() * mesh->basis_time(g));
  cur.T = seed.period();
  cur.alpha = model->param(free_param);

  auto push_point = [&](const CorrectorState& s) {
    auto pmesh = std::make_shared<Mesh>(opts.L, opts.M, s.T);
    RealProfile gamma(pmesh, n, Boundary::Periodic);
    gamma.values() = s.y.values();
    CyclePoint pt;
    pt.orbit.lin = CycleLinearization(model, std::move(gamma));
    pt.orbit.params = model->params();
    pt.param = s.alpha;
    pt.spectrum = floquet_multipliers(pt.orbit.lin, opts.multiplier_count);
    pt.tests = test_functions(pt.spectrum, s.T, opts.resonance_tol);
    branch.points.push_back(std::move(pt));
    if (branch.points.size() >= 2) {
      auto& a = branch.points[branch.points.size() - 2];
      auto& b = branch.points.back();
      // weighted secant slope of the parameter along the branch
      double dp = b.param - a.param;
      double dTn = b.orbit.period() - a.orbit.period();
      Mat dY = b.orbit.profile().values() - a.orbit.profile().values();
      double ds = std::sqrt(dY.squaredNorm() / double(dY.size()) + dTn * dTn + dp * dp);
      b.dparam_ds = ds > 0 ? dp / ds : kNaN;
      if (branch.points.size() == 2) a.dparam_ds = b.dparam_ds;
    }
  };

  // reference phase data from the current solution
  RealProfile dref = cur.y.differentiated();
  double phase_rhs = 0;
  for (int g = 0; g < mesh->num_basis(); ++g)
    phase_rhs += mesh->sigma()[g] * dref.values().col(g).dot(cur.y.values().col(g));

  // correct the seed in place (alpha pinned by a trivial tangent)
  Tangent tan0{Mat::Zero(n, mesh->num_basis()), 0.0, 1.0};
  CorrectorState pred = cur;
  if (correct(model, free_param, mesh, cur, dref, phase_rhs, pred, tan0,
              opts.tol, opts.max_iter) < 0)
    throw ConvergenceError("continue_cycle: seed correction failed", 0.0);
  push_point(cur);

  double ds = opts.initial_step;
  Tangent tan = tan0;
  CorrectorState prev = cur;
  bool have_secant = false;

  while (int(branch.points.size()) < opts.max_points) {
    CorrectorState base = cur;
    pred = cur;
    pred.y.values() += ds * tan.dY;
    pred.T += ds * tan.dT;
    pred.alpha += ds * tan.dalpha;
    CorrectorState trial = pred;
    model->set_param(free_param, trial.alpha);
    int iters = correct(model, free_param, mesh, trial, dref, phase_rhs, pred,
                        tan, opts.tol, opts.max_iter);
    if (iters < 0) {
      ds *= 0.5;
      model->set_param(free_param, base.alpha);
      cur = base;
      if (ds < opts.min_step) {
        branch.termination = "step_underflow";
        return branch;
      }
      continue;
    }
    // accept
    prev = cur;
    cur = trial;
    push_point(cur);
    if (cur.alpha < opts.range_lo || cur.alpha > opts.range_hi) {
      branch.termination = "range_exhausted";
      return branch;
    }
    // secant tangent for the next step
    Tangent sec{cur.y.values() - prev.y.values(), cur.T - prev.T,
                cur.alpha - prev.alpha};
    double nrm = std::sqrt(tdot(sec, sec));
    if (nrm > 0) {
      sec.dY /= nrm;
      sec.dT /= nrm;
      sec.dalpha /= nrm;
      tan = sec;
      have_secant = true;
    }
    (void)have_secant;
    // refresh the phase reference from the accepted point
    dref = cur.y.differentiated();
    phase_rhs = 0;
    for (int g = 0; g < mesh->num_basis(); ++g)
      phase_rhs += mesh->sigma()[g] * dref.values().col(g).dot(cur.y.values().col(g));
    if (iters <= 3) ds = std::min(ds * 1.3, opts.max_step);
  }
  branch.termination = "max_points";
  return branch;
}

std::vector<Codim1Event> detect_codim1(const CycleBranch& branch,
                                       double resonance_tol) {
  std::vector<Codim1Event> events;
  const auto& pts = branch.points;
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    const auto& a = pts[k].tests;
    const auto& b = pts[k + 1].tests;
    if (std::isfinite(a.pd) && std::isfinite(b.pd) && a.pd * b.pd < 0)
      events.push_back({"pd", int(k), int(k + 1), kNaN, false});
    if (std::isfinite(a.ns) && std::isfinite(b.ns) && a.ns * b.ns < 0 &&
        std::abs(a.ns_omega - b.ns_omega) <
            0.3 * std::max(std::abs(a.ns_omega), std::abs(b.ns_omega)) + 1e-3) {
      Codim1Event ev{"ns", int(k), int(k + 1),
                     0.5 * (a.ns_omega + b.ns_omega), a.ns_resonant || b.ns_resonant};
      events.push_back(ev);
    }
    double da = pts[k].dparam_ds, db = pts[k + 1].dparam_ds;
    if (std::isfinite(da) && std::isfinite(db) && da * db < 0)
      events.push_back({"fold", int(k), int(k + 1), kNaN, false});
  }
  (void)resonance_tol;
  // collapse noise clusters: same-kind events with overlapping or adjacent
  // brackets count once
  std::vector<Codim1Event> out;
  for (const auto& ev : events) {
    bool merged = false;
    for (auto& kept : out)
      if (kept.kind == ev.kind && ev.lo <= kept.hi + 3) {
        kept.hi = std::max(kept.hi, ev.hi);
        merged = true;
        break;
      }
    if (!merged) out.push_back(ev);
  }
  return out;
}

}  // namespace ddenf
