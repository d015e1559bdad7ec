#include "ddenf/orbit.hpp"

#include <cmath>

namespace ddenf {

CycleLinearization::CycleLinearization(std::shared_ptr<const DdeModel> model,
                                       RealProfile gamma)
    : model_(std::move(model)), gamma_(std::move(gamma)) {
  dgamma_ = gamma_.differentiated();
  const Mesh& mesh = gamma_.mesh();
  Mj_colloc_.resize(size_t(mesh.num_colloc()));
  for (int i = 0; i < mesh.L(); ++i)
    for (int j = 0; j < mesh.M(); ++j)
      Mj_colloc_[size_t(i) * mesh.M() + j] =
          model_->jacobians(states_at(mesh.colloc_time(i, j)));
  Mj_basis_.resize(size_t(mesh.num_basis()));
  for (int g = 0; g < mesh.num_basis(); ++g)
    Mj_basis_[size_t(g)] = model_->jacobians(states_at(mesh.basis_time(g)));
}

Mat CycleLinearization::states_at(double t) const {
  Mat s(model_->dim(), model_->num_args());
  s.col(0) = gamma_.value(t);
  for (int j = 1; j < model_->num_args(); ++j)
    s.col(j) = gamma_.value(t - model_->lag(j));
  return s;
}

std::vector<Mat> CycleLinearization::jacobians_at(double t) const {
  return model_->jacobians(states_at(t));
}

namespace {

struct NewtonWork {
  std::shared_ptr<const Mesh> mesh;  // scaled mesh, T = 1
  std::shared_ptr<const DdeModel> model;
  RealProfile y;       // current iterate on the scaled mesh
  RealProfile dref;    // phase reference derivative on the scaled mesh
  double T;
  double phase_rhs;    // sum sigma <dref, yref>
  bool fixed_period;
  int pin_component = -1;
  double pin_value = 0.0;
};

// residual of the scaled system; logical layout [colloc rows; boundary; phase]
Vec residual(const NewtonWork& w) {
  const Mesh& mesh = *w.mesh;
  const DdeModel& model = *w.model;
  const int n = model.dim(), M = mesh.M();
  Vec r(n * mesh.num_basis() + 1);
  Mat states(n, model.num_args());
  for (int i = 0; i < mesh.L(); ++i)
    for (int j = 0; j < M; ++j) {
      double s = mesh.colloc_time(i, j);
      states.col(0) = w.y.value(s);
      for (int q = 1; q < model.num_args(); ++q)
        states.col(q) = w.y.value(s - model.lag(q) / w.T);
      r.segment((i * M + j) * n, n) =
          w.y.derivative_on(i, mesh.gl_nodes()[j]) - w.T * model.rhs(states);
    }
  const int rb = n * mesh.num_colloc();
  r.segment(rb, n) =
      w.y.values().col(mesh.num_basis() - 1) - w.y.values().col(0);
  if (w.pin_component >= 0) {
    r[rb + n] = w.y.values()(w.pin_component, 0) - w.pin_value;
    return r;
  }
  double phase = 0;
  for (int g = 0; g < mesh.num_basis(); ++g)
    phase += mesh.sigma()[g] *
             w.dref.values().col(g).dot(w.y.values().col(g));
  r[rb + n] = w.fixed_period ? 0.0 : phase - w.phase_rhs;
  return r;
}

}  // namespace

PeriodicOrbit solve_cycle(std::shared_ptr<const DdeModel> model,
                          const std::function<Vec(double)>& guess,
                          double T_guess, const SolveCycleOptions& opts) {
  if (!(T_guess > 0)) throw InputError("solve_cycle: period guess must be positive");
  const int n = model->dim();
  auto mesh = std::make_shared<Mesh>(opts.L, opts.M, 1.0);

  NewtonWork w;
  w.mesh = mesh;
  w.model = model;
  w.T = T_guess;
  w.fixed_period = opts.fixed_period;
  w.pin_component = opts.pin_component;
  w.pin_value = opts.pin_value;
  w.y = RealProfile(mesh, n, Boundary::Periodic);
  for (int g = 0; g < mesh->num_basis(); ++g)
    w.y.values().col(g) = guess(T_guess * mesh->basis_time(g));
  w.y.enforce_boundary();

  // phase reference: supplied profile (any mesh/period scaling) or the guess
  RealProfile ref = w.y;
  if (opts.phase_reference) {
    const RealProfile& pr = *opts.phase_reference;
    double Tr = pr.mesh().T();
    for (int g = 0; g < mesh->num_basis(); ++g)
      ref.values().col(g) = pr.value(Tr * mesh->basis_time(g));
  }
  w.dref = ref.differentiated();
  w.phase_rhs = 0;
  for (int g = 0; g < mesh->num_basis(); ++g)
    w.phase_rhs += mesh->sigma()[g] *
                   w.dref.values().col(g).dot(ref.values().col(g));

  const int NL = n * mesh->num_basis() + 1;
  double rnorm = 0;
  bool converged = false;
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    Vec r = residual(w);
    rnorm = r.lpNorm<Eigen::Infinity>();
    if (rnorm <= opts.tol) {
      converged = true;
      break;
    }

    // Jacobian: linear delay operator in scaled time plus the T column
    BvpSpec spec;
    spec.mesh = mesh;
    spec.n = n;
    spec.boundary = Boundary::Periodic;
    std::vector<std::vector<Mat>> mj(size_t(mesh->num_colloc()));
    for (int i = 0; i < mesh->L(); ++i)
      for (int j = 0; j < mesh->M(); ++j) {
        double s = mesh->colloc_time(i, j);
        Mat states(n, model->num_args());
        states.col(0) = w.y.value(s);
        for (int q = 1; q < model->num_args(); ++q)
          states.col(q) = w.y.value(s - model->lag(q) / w.T);
        mj[size_t(i) * mesh->M() + j] = model->jacobians(states);
      }
    for (int q = 0; q < model->num_args(); ++q) {
      BvpTerm term;
      term.shift = -model->lag(q) / w.T;
      const double Tcur = w.T;
      term.coeff = [&mj, q, M = mesh->M(), Tcur](int i, int j, double, CMat& C) {
        C = (-Tcur * mj[size_t(i) * M + j][size_t(q)]).cast<cplx>();
      };
      spec.terms.push_back(std::move(term));
    }
    BvpConstraint phase;
    if (w.pin_component >= 0) {
      phase.raw = CVec::Zero(n * mesh->num_basis());
      phase.raw[w.pin_component] = 1.0;
    } else {
      phase.weight = [&w](double t, CVec& out) {
        if (w.fixed_period)
          out = CVec::Zero(w.dref.dim());
        else
          out = w.dref.value(t).cast<cplx>();
      };
    }
    spec.constraints.push_back(std::move(phase));
    BvpExtraColumn tcol;
    tcol.colloc = [&w, &model](int, int, double s, CVec& col) {
      if (w.fixed_period) {
        col = CVec::Zero(model->dim());
        return;
      }
      Mat states(model->dim(), model->num_args());
      states.col(0) = w.y.value(s);
      for (int q = 1; q < model->num_args(); ++q)
        states.col(q) = w.y.value(s - model->lag(q) / w.T);
      Vec v = -model->rhs(states);
      for (int q = 1; q < model->num_args(); ++q) {
        Mat mjq;
        model->jacobian(states, q, mjq);
        v -= (model->lag(q) / w.T) * mjq *
             w.y.derivative(s - model->lag(q) / w.T);
      }
      col = v.cast<cplx>();
    };
    if (w.fixed_period) {
      // keep the system square: the phase row is zero, pin dT = 0 instead
      tcol.constraint = CVec::Zero(1);
      tcol.constraint[0] = 1.0;
    }
    spec.extras.push_back(std::move(tcol));

    CollocationSystem sys(spec);
    CVec dz;
    try {
      dz = sys.solve(r.cast<cplx>(), false);
    } catch (const SingularityError&) {
      throw SingularityError("solve_cycle: singular Jacobian (non-isolated cycle?)", 0.0);
    }
    Vec du = -dz.real();
    if (!du.allFinite())
      throw SingularityError("solve_cycle: singular Jacobian (non-isolated cycle?)",
                             0.0);

    // damped update
    double lambda = 1.0;
    Vec y_save = w.y.values().reshaped();
    double T_save = w.T;
    for (int back = 0; back < 6; ++back) {
      for (int g = 0; g < mesh->num_basis(); ++g)
        w.y.values().col(g) =
            y_save.segment(g * n, n) + lambda * du.segment(g * n, n);
      if (!w.fixed_period) w.T = T_save + lambda * du[NL - 1];
      if (w.T > 0 && residual(w).lpNorm<Eigen::Infinity>() < rnorm) break;
      lambda *= 0.5;
      if (back == 5) {  // accept the last small step and keep iterating
        for (int g = 0; g < mesh->num_basis(); ++g)
          w.y.values().col(g) =
              y_save.segment(g * n, n) + lambda * du.segment(g * n, n);
        if (!w.fixed_period) w.T = std::max(T_save + lambda * du[NL - 1], 1e-8);
      }
    }
  }
  if (!converged)
    throw ConvergenceError("solve_cycle: no convergence in " +
                               std::to_string(opts.max_iter) + " iterations",
                           rnorm);

  // rebuild on the physical mesh [0, T]
  auto pmesh = std::make_shared<Mesh>(opts.L, opts.M, w.T);
  RealProfile gamma(pmesh, n, Boundary::Periodic);
  gamma.values() = w.y.values();
  PeriodicOrbit orbit;
  orbit.lin = CycleLinearization(model, std::move(gamma));
  orbit.params = model->params();
  orbit.residual_norm = rnorm;
  return orbit;
}

PeriodicOrbit solve_cycle(std::shared_ptr<const DdeModel> model,
                          const Trajectory& traj, double t_from,
                          const SolveCycleOptions& opts) {
  double T0 = estimate_period(traj, t_from);
  if (T0 <= 0)
    throw ConvergenceError("solve_cycle: could not estimate a period from the trajectory",
                           0.0);
  double t0 = traj.t_end() - 2.0 * T0;
  auto guess = [&traj, t0](double t) { return traj.value(t0 + t); };
  return solve_cycle(model, guess, T0, opts);
}

PeriodicOrbit solve_cycle_from(const PeriodicOrbit& seed,
                               std::shared_ptr<const DdeModel> model,
                               const SolveCycleOptions& opts) {
  SolveCycleOptions o = opts;
  const RealProfile& ref = seed.profile();
  o.phase_reference = &ref;
  auto guess = [&ref](double t) { return ref.value(t); };
  return solve_cycle(model, guess, seed.period(), o);
}

}  // namespace ddenf
