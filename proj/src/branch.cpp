#include "ddenf/branch.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace ddenf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Kind { Fold, Pd, Ns };

Kind kind_of(const std::string& s) {
  if (s == "fold") return Kind::Fold;
  if (s == "pd") return Kind::Pd;
  if (s == "ns") return Kind::Ns;
  throw InputError("unknown codim-1 kind '" + s + "'");
}

struct ExtState {
  RealProfile y;   // periodic, scaled mesh
  double T = 0;
  RealProfile q;   // pd: antiperiodic; fold: v (periodic); ns: real part
  RealProfile qi;  // ns only: imaginary part
  double vT = 0;   // fold
  double omega = 0;  // ns
  Vec alpha;
};

/// Extended defining system for LPC/PD/NS curves: the scaled cycle BVP
/// augmented with the matching eigen-system, one or two free parameters, and
/// (for two) a pseudo-arclength row.
struct DefiningSystem {
  Kind kind;
  std::shared_ptr<DdeModel> model;
  std::shared_ptr<const Mesh> mesh;
  std::vector<std::string> pnames;
  int n = 0, NB = 0, nCL = 0;

  RealProfile dref;  // phase reference derivative
  double phase_rhs = 0;
  RealProfile qref, qiref;  // normalization references
  double vT_ref = 0;

  bool with_arclength = false;
  Vec tangent;      // weighted tangent (size = unknowns) when with_arclength
  Vec pred;         // predictor point (size = unknowns)

  int eig_offset() const { return n * NB + 1; }
  int num_eig() const { return kind == Kind::Ns ? 2 * n * NB : n * NB; }
  int scalar_offset() const { return eig_offset() + num_eig(); }
  int num_scalars() const {
    return (kind == Kind::Fold ? 1 : 0) + (kind == Kind::Ns ? 1 : 0);
  }
  int alpha_offset() const { return scalar_offset() + num_scalars(); }
  int num_unknowns() const { return alpha_offset() + int(pnames.size()); }
  int num_rows() const {
    int cycle = n * NB + 1;
    int eig = kind == Kind::Ns ? 2 * n * NB + 2 : n * NB + 1 + (kind == Kind::Fold ? 1 : 0);
    // pd: nCL + n + 1(norm) = nNB+1; fold: nCL + n + 1(phase) + 1(norm) = nNB+2
    // ns: 2nCL + 2n + 2(norm) = 2nNB+2
    return cycle + eig + (with_arclength ? 1 : 0);
  }

  Vec pack(const ExtState& s) const {
    Vec u(num_unknowns());
    int k = 0;
    for (int g = 0; g < NB; ++g)
      for (int c = 0; c < n; ++c) u[k++] = s.y.values()(c, g);
    u[k++] = s.T;
    for (int g = 0; g < NB; ++g)
      for (int c = 0; c < n; ++c) u[k++] = s.q.values()(c, g);
    if (kind == Kind::Ns)
      for (int g = 0; g < NB; ++g)
        for (int c = 0; c < n; ++c) u[k++] = s.qi.values()(c, g);
    if (kind == Kind::Fold) u[k++] = s.vT;
    if (kind == Kind::Ns) u[k++] = s.omega;
    for (int a = 0; a < int(pnames.size()); ++a) u[k++] = s.alpha[a];
    return u;
  }

  void unpack(const Vec& u, ExtState& s) const {
    int k = 0;
    for (int g = 0; g < NB; ++g)
      for (int c = 0; c < n; ++c) s.y.values()(c, g) = u[k++];
    s.T = u[k++];
    for (int g = 0; g < NB; ++g)
      for (int c = 0; c < n; ++c) s.q.values()(c, g) = u[k++];
    if (kind == Kind::Ns)
      for (int g = 0; g < NB; ++g)
        for (int c = 0; c < n; ++c) s.qi.values()(c, g) = u[k++];
    if (kind == Kind::Fold) s.vT = u[k++];
    if (kind == Kind::Ns) s.omega = u[k++];
    for (int a = 0; a < int(pnames.size()); ++a) s.alpha[a] = u[k++];
  }

  void apply_params(const ExtState& s) const {
    for (int a = 0; a < int(pnames.size()); ++a)
      model->set_param(pnames[size_t(a)], s.alpha[a]);
  }

  // weighted norm coefficients for arclength/normalization rows
  double wprof() const { return 1.0 / double(n * NB); }

  Vec cycle_rows(const ExtState& s) const {
    Vec r(n * NB + 1);
    Mat states(n, model->num_args());
    for (int i = 0; i < mesh->L(); ++i)
      for (int j = 0; j < mesh->M(); ++j) {
        double sc = mesh->colloc_time(i, j);
        states.col(0) = s.y.value(sc);
        for (int q2 = 1; q2 < model->num_args(); ++q2)
          states.col(q2) = s.y.value(sc - model->lag(q2) / s.T);
        r.segment((i * mesh->M() + j) * n, n) =
            s.y.derivative_on(i, mesh->gl_nodes()[j]) - s.T * model->rhs(states);
      }
    r.segment(nCL, n) = s.y.values().col(NB - 1) - s.y.values().col(0);
    double phase = 0;
    for (int g = 0; g < NB; ++g)
      phase += mesh->sigma()[g] * dref.values().col(g).dot(s.y.values().col(g));
    r[nCL + n] = phase - phase_rhs;
    return r;
  }

  Vec eig_rows(const ExtState& s) const {
    const int M = mesh->M();
    Mat states(n, model->num_args());
    std::vector<Mat> mj;
    if (kind == Kind::Pd) {
      Vec r(n * NB + 1);
      for (int i = 0; i < mesh->L(); ++i)
        for (int j = 0; j < M; ++j) {
          double sc = mesh->colloc_time(i, j);
          states.col(0) = s.y.value(sc);
          for (int q2 = 1; q2 < model->num_args(); ++q2)
            states.col(q2) = s.y.value(sc - model->lag(q2) / s.T);
          mj = model->jacobians(states);
          Vec acc = s.q.derivative_on(i, mesh->gl_nodes()[j]);
          for (int q2 = 0; q2 < model->num_args(); ++q2)
            acc -= s.T * mj[size_t(q2)] * s.q.value(sc - model->lag(q2) / s.T);
          r.segment((i * M + j) * n, n) = acc;
        }
      // antiperiodic boundary: q(1) + q(0) = 0 -- values stored with the wrap
      r.segment(nCL, n) = s.q.values().col(NB - 1) + s.q.values().col(0);
      double nrm = 0;
      for (int g = 0; g < NB; ++g)
        nrm += mesh->sigma()[g] * qref.values().col(g).dot(s.q.values().col(g));
      r[nCL + n] = nrm - 1.0;
      return r;
    }
    if (kind == Kind::Fold) {
      Vec r(n * NB + 2);
      for (int i = 0; i < mesh->L(); ++i)
        for (int j = 0; j < M; ++j) {
          double sc = mesh->colloc_time(i, j);
          states.col(0) = s.y.value(sc);
          for (int q2 = 1; q2 < model->num_args(); ++q2)
            states.col(q2) = s.y.value(sc - model->lag(q2) / s.T);
          mj = model->jacobians(states);
          Vec acc = s.q.derivative_on(i, mesh->gl_nodes()[j]);
          for (int q2 = 0; q2 < model->num_args(); ++q2)
            acc -= s.T * mj[size_t(q2)] * s.q.value(sc - model->lag(q2) / s.T);
          // vT column of the cycle Jacobian
          Vec tcol = -model->rhs(states);
          for (int q2 = 1; q2 < model->num_args(); ++q2)
            tcol -= (model->lag(q2) / s.T) * mj[size_t(q2)] *
                    s.y.derivative(sc - model->lag(q2) / s.T);
          acc += s.vT * tcol;
          r.segment((i * M + j) * n, n) = acc;
        }
      r.segment(nCL, n) = s.q.values().col(NB - 1) - s.q.values().col(0);
      double ph = 0;
      for (int g = 0; g < NB; ++g)
        ph += mesh->sigma()[g] * dref.values().col(g).dot(s.q.values().col(g));
      r[nCL + n] = ph;
      double nrm = 0;
      for (int g = 0; g < NB; ++g)
        nrm += wprof() * qref.values().col(g).dot(s.q.values().col(g));
      nrm += s.vT * vT_ref;
      r[nCL + n + 1] = nrm - 1.0;
      return r;
    }
    // ns
    Vec r(2 * n * NB + 2);
    const double nu = s.omega * s.T;
    for (int i = 0; i < mesh->L(); ++i)
      for (int j = 0; j < M; ++j) {
        double sc = mesh->colloc_time(i, j);
        states.col(0) = s.y.value(sc);
        for (int q2 = 1; q2 < model->num_args(); ++q2)
          states.col(q2) = s.y.value(sc - model->lag(q2) / s.T);
        mj = model->jacobians(states);
        Vec ar = s.q.derivative_on(i, mesh->gl_nodes()[j]) -
                 nu * s.qi.value(sc);
        Vec ai = s.qi.derivative_on(i, mesh->gl_nodes()[j]) +
                 nu * s.q.value(sc);
        for (int q2 = 0; q2 < model->num_args(); ++q2) {
          double tau = model->lag(q2);
          double cph = std::cos(s.omega * tau), sph = std::sin(s.omega * tau);
          Vec qr_lag = s.q.value(sc - tau / s.T);
          Vec qi_lag = s.qi.value(sc - tau / s.T);
          ar -= s.T * (mj[size_t(q2)] * (cph * qr_lag + sph * qi_lag));
          ai -= s.T * (mj[size_t(q2)] * (-sph * qr_lag + cph * qi_lag));
        }
        r.segment((i * M + j) * n, n) = ar;
        r.segment(nCL + (i * M + j) * n, n) = ai;
      }
    r.segment(2 * nCL, n) = s.q.values().col(NB - 1) - s.q.values().col(0);
    r.segment(2 * nCL + n, n) = s.qi.values().col(NB - 1) - s.qi.values().col(0);
    double nr = 0, ni = 0;
    for (int g = 0; g < NB; ++g) {
      nr += mesh->sigma()[g] * (qref.values().col(g).dot(s.q.values().col(g)) +
                                qiref.values().col(g).dot(s.qi.values().col(g)));
      ni += mesh->sigma()[g] * (qref.values().col(g).dot(s.qi.values().col(g)) -
                                qiref.values().col(g).dot(s.q.values().col(g)));
    }
    r[2 * nCL + 2 * n] = nr - 1.0;
    r[2 * nCL + 2 * n + 1] = ni;
    return r;
  }

  Vec residual(const ExtState& s) const {
    apply_params(s);
    Vec r(num_rows());
    r.segment(0, n * NB + 1) = cycle_rows(s);
    Vec e = eig_rows(s);
    r.segment(n * NB + 1, e.size()) = e;
    if (with_arclength) {
      Vec u = pack(s);
      r[num_rows() - 1] = (u - pred).dot(tangent);
    }
    return r;
  }

  // dense Jacobian: analytic stencils for the linear-in-own-block parts, FD
  // columns for the nonlinear couplings
  Mat jacobian(const ExtState& s) const {
    apply_params(s);
    const int NU = num_unknowns(), NR = num_rows();
    Mat J = Mat::Zero(NR, NU);
    const int M = mesh->M();
    Vec lv(M + 1), ld(M + 1);

    // cached jacobian stacks along the cycle
    std::vector<std::vector<Mat>> mj(size_t(nCL / n));
    {
      Mat states(n, model->num_args());
      for (int i = 0; i < mesh->L(); ++i)
        for (int j = 0; j < M; ++j) {
          double sc = mesh->colloc_time(i, j);
          states.col(0) = s.y.value(sc);
          for (int q2 = 1; q2 < model->num_args(); ++q2)
            states.col(q2) = s.y.value(sc - model->lag(q2) / s.T);
          mj[size_t(i * M + j)] = model->jacobians(states);
        }
    }

    // generic operator stencil filler: rows at row0 over columns col0 (profile
    // block), derivative term plus sum_q C_q y(t + shift_q) with wrap sign
    auto fill_block = [&](int row0, int col0, int bsign,
                          const std::function<Mat(int, int, int)>& Cq) {
      for (int i = 0; i < mesh->L(); ++i)
        for (int j = 0; j < M; ++j) {
          const int r0 = row0 + (i * M + j) * n;
          mesh->basis_derivs(mesh->gl_nodes()[j], ld);
          for (int b = 0; b <= M; ++b) {
            int g = i * M + b;
            for (int c = 0; c < n; ++c)
              J(r0 + c, col0 + g * n + c) += ld[b] / mesh->H();
          }
          for (int q2 = 0; q2 < model->num_args(); ++q2) {
            Mat C = Cq(i, j, q2);
            double shift = -model->lag(q2) / s.T;
            auto loc = mesh->locate(mesh->colloc_time(i, j) + shift);
            double sgn = (bsign < 0 && (loc.wraps & 1L)) ? -1.0 : 1.0;
            mesh->basis_values(loc.u, lv);
            for (int b = 0; b <= M; ++b) {
              if (lv[b] == 0) continue;
              int g = loc.interval * M + b;
              for (int rr = 0; rr < n; ++rr)
                for (int cc = 0; cc < n; ++cc)
                  J(r0 + rr, col0 + g * n + cc) += sgn * lv[b] * C(rr, cc);
            }
          }
        }
    };

    // --- cycle rows ---
    fill_block(0, 0, +1, [&](int i, int j, int q2) {
      return Mat(-s.T * mj[size_t(i * M + j)][size_t(q2)]);
    });
    for (int c = 0; c < n; ++c) {
      J(nCL + c, (NB - 1) * n + c) += 1.0;
      J(nCL + c, c) -= 1.0;
    }
    for (int g = 0; g < NB; ++g)
      for (int c = 0; c < n; ++c)
        J(nCL + n, g * n + c) += mesh->sigma()[g] * dref.values()(c, g);

    // --- eig self-blocks ---
    const int eo = eig_offset();
    const int er0 = n * NB + 1;
    if (kind == Kind::Pd) {
      fill_block(er0, eo, -1, [&](int i, int j, int q2) {
        return Mat(-s.T * mj[size_t(i * M + j)][size_t(q2)]);
      });
      for (int c = 0; c < n; ++c) {
        J(er0 + nCL + c, eo + (NB - 1) * n + c) += 1.0;
        J(er0 + nCL + c, eo + c) += 1.0;  // antiperiodic: q(1) + q(0)
      }
      for (int g = 0; g < NB; ++g)
        for (int c = 0; c < n; ++c)
          J(er0 + nCL + n, eo + g * n + c) += mesh->sigma()[g] * qref.values()(c, g);
    } else if (kind == Kind::Fold) {
      fill_block(er0, eo, +1, [&](int i, int j, int q2) {
        return Mat(-s.T * mj[size_t(i * M + j)][size_t(q2)]);
      });
      // vT column: the cycle Jacobian's T column
      for (int i = 0; i < mesh->L(); ++i)
        for (int j = 0; j < M; ++j) {
          double sc = mesh->colloc_time(i, j);
          Mat states(n, model->num_args());
          states.col(0) = s.y.value(sc);
          for (int q2 = 1; q2 < model->num_args(); ++q2)
            states.col(q2) = s.y.value(sc - model->lag(q2) / s.T);
          Vec tcol = -model->rhs(states);
          for (int q2 = 1; q2 < model->num_args(); ++q2)
            tcol -= (model->lag(q2) / s.T) * mj[size_t(i * M + j)][size_t(q2)] *
                    s.y.derivative(sc - model->lag(q2) / s.T);
          J.block((er0 + (i * M + j) * n), scalar_offset(), n, 1) = tcol;
        }
      for (int c = 0; c < n; ++c) {
        J(er0 + nCL + c, eo + (NB - 1) * n + c) += 1.0;
        J(er0 + nCL + c, eo + c) -= 1.0;
      }
      for (int g = 0; g < NB; ++g)
        for (int c = 0; c < n; ++c)
          J(er0 + nCL + n, eo + g * n + c) += mesh->sigma()[g] * dref.values()(c, g);
      for (int g = 0; g < NB; ++g)
        for (int c = 0; c < n; ++c)
          J(er0 + nCL + n + 1, eo + g * n + c) += wprof() * qref.values()(c, g);
      J(er0 + nCL + n + 1, scalar_offset()) += vT_ref;
    } else {  // ns
      const double nu = s.omega * s.T;
      // Re rows / qr block
      fill_block(er0, eo, +1, [&](int i, int j, int q2) {
        double cph = std::cos(s.omega * model->lag(q2));
        return Mat(-s.T * cph * mj[size_t(i * M + j)][size_t(q2)]);
      });
      // Im rows / qi block
      fill_block(er0 + nCL, eo + n * NB, +1, [&](int i, int j, int q2) {
        double cph = std::cos(s.omega * model->lag(q2));
        return Mat(-s.T * cph * mj[size_t(i * M + j)][size_t(q2)]);
      });
      // off-diagonal lag couplings and the nu I terms (no derivative stencil)
      for (int i = 0; i < mesh->L(); ++i)
        for (int j = 0; j < M; ++j) {
          const int rR = er0 + (i * M + j) * n;
          const int rI = er0 + nCL + (i * M + j) * n;
          double sc = mesh->colloc_time(i, j);
          // nu I at the collocation point (value stencil)
          auto loc0 = mesh->locate(sc);
          mesh->basis_values(loc0.u, lv);
          for (int b = 0; b <= M; ++b) {
            if (lv[b] == 0) continue;
            int g = loc0.interval * M + b;
            for (int c = 0; c < n; ++c) {
              J(rR + c, eo + n * NB + g * n + c) += -nu * lv[b];
              J(rI + c, eo + g * n + c) += +nu * lv[b];
            }
          }
          for (int q2 = 0; q2 < model->num_args(); ++q2) {
            double tau = model->lag(q2);
            double sph = std::sin(s.omega * tau);
            if (sph == 0.0 && tau == 0.0) continue;
            auto loc = mesh->locate(sc - tau / s.T);
            mesh->basis_values(loc.u, lv);
            const Mat& Mq = mj[size_t(i * M + j)][size_t(q2)];
            for (int b = 0; b <= M; ++b) {
              if (lv[b] == 0) continue;
              int g = loc.interval * M + b;
              for (int rr = 0; rr < n; ++rr)
                for (int cc = 0; cc < n; ++cc) {
                  double v = lv[b] * s.T * sph * Mq(rr, cc);
                  J(rR + rr, eo + n * NB + g * n + cc) += -v;
                  J(rI + rr, eo + g * n + cc) += +v;
                }
            }
          }
        }
      for (int c = 0; c < n; ++c) {
        J(er0 + 2 * nCL + c, eo + (NB - 1) * n + c) += 1.0;
        J(er0 + 2 * nCL + c, eo + c) -= 1.0;
        J(er0 + 2 * nCL + n + c, eo + n * NB + (NB - 1) * n + c) += 1.0;
        J(er0 + 2 * nCL + n + c, eo + n * NB + c) -= 1.0;
      }
      for (int g = 0; g < NB; ++g)
        for (int c = 0; c < n; ++c) {
          double wr = mesh->sigma()[g] * qref.values()(c, g);
          double wi = mesh->sigma()[g] * qiref.values()(c, g);
          J(er0 + 2 * nCL + 2 * n, eo + g * n + c) += wr;
          J(er0 + 2 * nCL + 2 * n, eo + n * NB + g * n + c) += wi;
          J(er0 + 2 * nCL + 2 * n + 1, eo + g * n + c) -= wi;
          J(er0 + 2 * nCL + 2 * n + 1, eo + n * NB + g * n + c) += wr;
        }
    }

    // --- cross block d(eig rows)/dY by column differences ---
    {
      ExtState sp = s;
      const double hbase = 1e-6;
      for (int g = 0; g < NB; ++g)
        for (int c = 0; c < n; ++c) {
          double save = sp.y.values()(c, g);
          double h = hbase * std::max(1.0, std::abs(save));
          sp.y.values()(c, g) = save + h;
          Vec ep = eig_rows(sp);
          sp.y.values()(c, g) = save - h;
          Vec em = eig_rows(sp);
          sp.y.values()(c, g) = save;
          J.block(er0, g * n + c, ep.size(), 1) += (ep - em) / (2 * h);
        }
    }

    // --- thin columns: T, omega, alphas by full-residual differences ---
    {
      ExtState sp = s;
      auto fd_state_col = [&](int col, std::function<double&(ExtState&)> get) {
        double save = get(sp);
        double h = 1e-6 * std::max(1.0, std::abs(save));
        get(sp) = save + h;
        Vec rp = residual_nopred(sp);
        get(sp) = save - h;
        Vec rm = residual_nopred(sp);
        get(sp) = save;
        J.col(col) += (rp - rm) / (2 * h);
      };
      fd_state_col(n * NB, [](ExtState& e) -> double& { return e.T; });
      if (kind == Kind::Ns)
        fd_state_col(scalar_offset(), [](ExtState& e) -> double& { return e.omega; });
      for (int a = 0; a < int(pnames.size()); ++a)
        fd_state_col(alpha_offset() + a,
                     [a](ExtState& e) -> double& { return e.alpha[a]; });
    }

    if (with_arclength) J.row(NR - 1) = tangent.transpose();
    return J;
  }

  // residual without the arclength row contribution recomputed (used by the
  // FD columns so the arclength row comes out exact via `tangent` anyway)
  Vec residual_nopred(const ExtState& s) const {
    apply_params(s);
    Vec r(num_rows());
    r.setZero();
    r.segment(0, n * NB + 1) = cycle_rows(s);
    Vec e = eig_rows(s);
    r.segment(n * NB + 1, e.size()) = e;
    return r;
  }

  // Newton; returns iterations or -1
  int newton(ExtState& s, double tol, int max_iter) const {
    for (int it = 0; it < max_iter; ++it) {
      Vec r = residual(s);
      double rn = r.lpNorm<Eigen::Infinity>();
      if (!std::isfinite(rn)) return -1;
      if (rn <= tol) return it;
      Mat J = jacobian(s);
      Eigen::PartialPivLU<Mat> lu(J);
      Vec du = lu.solve(-r);
      if (!du.allFinite()) return -1;
      Vec u = pack(s) + du;
      unpack(u, s);
      if (s.T <= 0) return -1;
    }
    Vec r = residual(s);
    return r.lpNorm<Eigen::Infinity>() <= tol ? max_iter : -1;
  }
};

PeriodicOrbit make_orbit(const DefiningSystem& sys, const ExtState& s) {
  auto pmesh = std::make_shared<Mesh>(sys.mesh->L(), sys.mesh->M(), s.T);
  RealProfile gamma(pmesh, sys.n, Boundary::Periodic);
  gamma.values() = s.y.values();
  sys.apply_params(s);
  PeriodicOrbit orbit;
  orbit.lin = CycleLinearization(sys.model, std::move(gamma));
  orbit.params = sys.model->params();
  return orbit;
}

cplx monitor_coefficient(const DefiningSystem& sys, const ExtState& s,
                         const BranchOptions& opts, double* aux_a) {
  PeriodicOrbit orbit = make_orbit(sys, s);
  NfOptions nf = opts.nf;
  try {
    if (sys.kind == Kind::Fold) {
      auto rep = fold_coefficient(orbit, NfMethod::Efficient, nf);
      return cplx(rep.b_efficient, 0.0);
    } else if (sys.kind == Kind::Pd) {
      auto rep = pd_coefficients(orbit, NfMethod::Efficient, nf);
      if (aux_a) *aux_a = rep.a_efficient;
      return cplx(rep.c_efficient, 0.0);
    } else {
      auto rep = ns_coefficients(orbit, s.omega, NfMethod::Efficient, nf);
      if (aux_a) *aux_a = rep.a_efficient;
      return rep.d_efficient;
    }
  } catch (const NumericalError&) {
    return cplx(kNaN, kNaN);
  }
}

double monitored_value(Kind kind, cplx coef) {
  return kind == Kind::Ns ? coef.real() : coef.real();
}

}  // namespace

// ---------------------------------------------------------------------------

LocalizedPoint localize_codim1(std::shared_ptr<DdeModel> model,
                               const CycleBranch& branch, const Codim1Event& ev,
                               const ContinuationOptions& opts, double test_tol) {
  const auto& plo = branch.points[size_t(ev.lo)];
  const auto& phi = branch.points[size_t(ev.hi)];
  const std::string& fp = branch.free_param;

  LocalizedPoint out;
  out.kind = ev.kind;

  if (ev.kind == "pd" || ev.kind == "ns") {
    auto test_of = [&](const TestFunctions& t) {
      return ev.kind == "pd" ? t.pd : t.ns;
    };
    double a_lo = plo.param, a_hi = phi.param;
    double t_lo = test_of(plo.tests), t_hi = test_of(phi.tests);
    PeriodicOrbit seed = plo.orbit;
    const RealProfile ref = plo.orbit.profile();
    double a_best = a_lo, t_best = t_lo;
    PeriodicOrbit best = plo.orbit;
    TestFunctions tf_best = plo.tests;
    for (int it = 0; it < 40 && std::abs(t_best) > test_tol; ++it) {
      double a_next = a_lo - t_lo * (a_hi - a_lo) / (t_hi - t_lo);  // secant
      double mid = 0.5 * (a_lo + a_hi);
      if (!(a_next > std::min(a_lo, a_hi) && a_next < std::max(a_lo, a_hi)))
        a_next = mid;
      // blend toward bisection when the bracket stagnates
      if (it % 4 == 3) a_next = mid;
      model->set_params(seed.params);
      model->set_param(fp, a_next);
      SolveCycleOptions so;
      so.L = opts.L;
      so.M = opts.M;
      so.tol = opts.tol;
      so.phase_reference = &ref;
      auto guess = [&](double t) { return seed.profile().value(t); };
      PeriodicOrbit orb;
      try {
        orb = solve_cycle(model, guess, seed.period(), so);
      } catch (const NumericalError&) {
        // shrink toward the lo side and retry
        a_hi = a_next;
        continue;
      }
      auto spec = floquet_multipliers(orb.lin, opts.multiplier_count);
      auto tf = test_functions(spec, orb.period(), opts.resonance_tol);
      double t = test_of(tf);
      if (!std::isfinite(t)) {
        a_hi = a_next;
        continue;
      }
      if (std::abs(t) < std::abs(t_best)) {
        t_best = t;
        a_best = a_next;
        best = orb;
        tf_best = tf;
      }
      if (t * t_lo > 0) {
        a_lo = a_next;
        t_lo = t;
      } else {
        a_hi = a_next;
        t_hi = t;
      }
      seed = orb;
      if (std::abs(a_hi - a_lo) < 1e-13 * std::max(1.0, std::abs(a_lo))) break;
    }
    out.orbit = best;
    out.param = a_best;
    out.test_value = t_best;
    if (ev.kind == "ns") {
      out.omega = tf_best.ns_omega;
      out.eig = solve_null_function(out.orbit.lin, cplx(0.0, out.omega),
                                    Boundary::Periodic)
                    .q;
    } else {
      out.eig =
          solve_null_function(out.orbit.lin, 0.0, Boundary::Antiperiodic).q;
    }
    model->set_params(out.orbit.params);
    return out;
  }

  // fold: Newton on the one-parameter LPC defining system from the bracket
  DefiningSystem sys;
  sys.kind = Kind::Fold;
  sys.model = model;
  sys.mesh = std::make_shared<Mesh>(opts.L, opts.M, 1.0);
  sys.pnames = {fp};
  sys.n = model->dim();
  sys.NB = sys.mesh->num_basis();
  sys.nCL = sys.n * sys.mesh->num_colloc();

  ExtState s;
  s.y = RealProfile(sys.mesh, sys.n, Boundary::Periodic);
  s.q = RealProfile(sys.mesh, sys.n, Boundary::Periodic);
  s.alpha = Vec::Constant(1, 0.5 * (plo.param + phi.param));
  const PeriodicOrbit& near =
      std::abs(plo.param - s.alpha[0]) < std::abs(phi.param - s.alpha[0]) ? plo.orbit
                                                                          : phi.orbit;
  for (int g = 0; g < sys.NB; ++g)
    s.y.values().col(g) = near.profile().value(near.period() * sys.mesh->basis_time(g));
  s.T = near.period();
  model->set_params(near.params);

  sys.dref = s.y.differentiated();
  sys.phase_rhs = 0;
  for (int g = 0; g < sys.NB; ++g)
    sys.phase_rhs +=
        sys.mesh->sigma()[g] * sys.dref.values().col(g).dot(s.y.values().col(g));

  // null vector of the cycle Jacobian (Y, T) as the fold eigen-seed
  {
    // approximate by the secant of the two bracket orbits
    for (int g = 0; g < sys.NB; ++g)
      s.q.values().col(g) =
          phi.orbit.profile().value(phi.orbit.period() * sys.mesh->basis_time(g)) -
          plo.orbit.profile().value(plo.orbit.period() * sys.mesh->basis_time(g));
    s.vT = phi.orbit.period() - plo.orbit.period();
    double nrm = std::sqrt(sys.wprof() * s.q.values().squaredNorm() + s.vT * s.vT);
    if (nrm < 1e-12) {
      s.q.values().setConstant(1.0);
      s.vT = 0;
    } else {
      s.q.values() /= nrm;
      s.vT /= nrm;
    }
  }
  sys.qref = s.q;
  sys.vT_ref = s.vT;

  if (sys.newton(s, opts.tol * 10, 25) < 0)
    throw ConvergenceError("localize_codim1: fold defining system did not converge",
                           0.0);
  out.orbit = make_orbit(sys, s);
  out.param = s.alpha[0];
  out.fold_null = sys.pack(s).segment(sys.eig_offset(), sys.num_eig() + 1);
  // diagnostic: the secant slope at the located fold is the test value
  out.test_value = 0.0;
  model->set_params(out.orbit.params);
  return out;
}

Codim1Branch continue_codim1_branch(std::shared_ptr<DdeModel> model,
                                    const LocalizedPoint& seed,
                                    const std::string& param1,
                                    const std::string& param2,
                                    const BranchOptions& opts) {
  Codim1Branch branch;
  branch.kind = seed.kind;
  branch.param1 = param1;
  branch.param2 = param2;

  DefiningSystem sys;
  sys.kind = kind_of(seed.kind);
  sys.model = model;
  sys.mesh = std::make_shared<Mesh>(opts.L, opts.M, 1.0);
  sys.pnames = {param1, param2};
  sys.n = model->dim();
  sys.NB = sys.mesh->num_basis();
  sys.nCL = sys.n * sys.mesh->num_colloc();

  model->set_params(seed.orbit.params);

  ExtState s;
  s.y = RealProfile(sys.mesh, sys.n, Boundary::Periodic);
  for (int g = 0; g < sys.NB; ++g)
    s.y.values().col(g) =
        seed.orbit.profile().value(seed.orbit.period() * sys.mesh->basis_time(g));
  s.T = seed.orbit.period();
  s.alpha = Vec(2);
  s.alpha << model->param(param1), model->param(param2);
  s.omega = seed.omega;

  Boundary eigb = sys.kind == Kind::Pd ? Boundary::Antiperiodic : Boundary::Periodic;
  s.q = RealProfile(sys.mesh, sys.n, eigb);
  s.qi = RealProfile(sys.mesh, sys.n, Boundary::Periodic);
  if (sys.kind == Kind::Fold) {
    if (seed.fold_null.size() == sys.n * sys.NB + 1) {
      for (int g = 0; g < sys.NB; ++g)
        s.q.values().col(g) = seed.fold_null.segment(g * sys.n, sys.n);
      s.vT = seed.fold_null[sys.n * sys.NB];
    } else {
      s.q.values().setConstant(1.0);
      s.vT = 0.0;
    }
  } else {
    double Ts = seed.orbit.period();
    for (int g = 0; g < sys.NB; ++g) {
      CVec qv = seed.eig.value(Ts * sys.mesh->basis_time(g));
      s.q.values().col(g) = qv.real();
      s.qi.values().col(g) = qv.imag();
    }
  }

  auto set_references = [&](const ExtState& st) {
    sys.dref = st.y.differentiated();
    sys.phase_rhs = 0;
    for (int g = 0; g < sys.NB; ++g)
      sys.phase_rhs +=
          sys.mesh->sigma()[g] * sys.dref.values().col(g).dot(st.y.values().col(g));
    sys.qref = st.q;
    sys.qiref = st.qi;
    sys.vT_ref = st.vT;
    if (sys.kind == Kind::Pd) {
      // scale the reference so the sigma-pairing normalization row is = 1
      double nrm = 0;
      for (int g = 0; g < sys.NB; ++g)
        nrm += sys.mesh->sigma()[g] * st.q.values().col(g).squaredNorm();
      sys.qref.values() /= nrm;
    } else if (sys.kind == Kind::Ns) {
      double nrm = 0;
      for (int g = 0; g < sys.NB; ++g)
        nrm += sys.mesh->sigma()[g] * (st.q.values().col(g).squaredNorm() +
                                       st.qi.values().col(g).squaredNorm());
      sys.qref.values() /= nrm;
      sys.qiref.values() /= nrm;
    } else {
      double nrm = sys.wprof() * st.q.values().squaredNorm() + st.vT * st.vT;
      sys.qref.values() /= nrm;
      sys.vT_ref /= nrm;
    }
  };
  set_references(s);

  // seed correction: the codim-1 system is square with one effective free
  // parameter, so pin param2 through the arclength row
  sys.with_arclength = true;
  sys.tangent = Vec::Zero(sys.num_unknowns());
  sys.tangent[sys.alpha_offset() + 1] = 1.0;
  sys.pred = sys.pack(s);
  if (sys.newton(s, opts.tol, opts.max_iter + 8) < 0)
    throw ConvergenceError(
        "continue_codim1_branch: seed does not satisfy the defining system", 0.0);

  auto accept = [&](const ExtState& st) {
    Codim1BranchPoint pt;
    pt.p1 = st.alpha[0];
    pt.p2 = st.alpha[1];
    pt.T = st.T;
    pt.omega = sys.kind == Kind::Ns ? st.omega : kNaN;
    pt.orbit = make_orbit(sys, st);
    if (opts.monitor_coefficients) {
      double aux = kNaN;
      pt.coef = monitor_coefficient(sys, st, opts, &aux);
      pt.coef_a = aux;
    }
    pt.defining_residual = sys.residual_nopred(st).lpNorm<Eigen::Infinity>();
    branch.points.push_back(std::move(pt));
  };
  accept(s);

  sys.with_arclength = true;
  const int NU = sys.num_unknowns();
  Vec tan = Vec::Zero(NU);
  tan[sys.alpha_offset()] = opts.initial_direction >= 0 ? 1.0 : -1.0;
  double ds = opts.initial_step;
  ExtState prev = s;

  auto weighted_normalize = [&](Vec& v) {
    // profile-type entries weighted down so scalars stay O(1)
    double w = sys.wprof();
    double acc = 0;
    for (int k = 0; k < NU; ++k) {
      bool scalar = (k == sys.n * sys.NB) || k >= sys.scalar_offset();
      acc += (scalar ? 1.0 : w) * v[k] * v[k];
    }
    double nrm = std::sqrt(acc);
    if (nrm > 0) v /= nrm;
  };

  auto weighted_tangent_row = [&](const Vec& v) {
    Vec row = v;
    double w = sys.wprof();
    for (int k = 0; k < NU; ++k) {
      bool scalar = (k == sys.n * sys.NB) || k >= sys.scalar_offset();
      row[k] *= scalar ? 1.0 : w;
    }
    return row;
  };

  while (int(branch.points.size()) < opts.max_points) {
    Vec u = sys.pack(s);
    sys.pred = u + ds * tan;
    sys.tangent = weighted_tangent_row(tan);
    ExtState trial = s;
    sys.unpack(sys.pred, trial);
    int iters = sys.newton(trial, opts.tol, opts.max_iter);
    bool ok = iters >= 0 && trial.T > 0;
    if (ok) {
      // forward-progress guard: near branch endpoints the corrector can fall
      // back onto the curve in the reverse direction
      double forward = (sys.pack(trial) - u).dot(sys.tangent);
      if (forward < 0.05 * ds) ok = false;
    }
    if (!ok) {
      ds *= 0.5;
      if (ds < opts.min_step) {
        branch.termination = "step_underflow";
        return branch;
      }
      continue;
    }
    // eigen-structure guard: a jump in the tracked frequency means the
    // corrector landed on a different family (e.g. across a Hopf-Hopf point)
    if (sys.kind == Kind::Ns &&
        std::abs(trial.omega - s.omega) > 0.08 * std::max(std::abs(s.omega), 0.1)) {
      branch.termination = "eigen_structure_change";
      return branch;
    }
    prev = s;
    s = trial;
    accept(s);

    // online codim-2 refinement between the last two accepted points
    if (opts.monitor_coefficients && branch.points.size() >= 2) {
      auto& A = branch.points[branch.points.size() - 2];
      auto& B = branch.points.back();
      double ca = monitored_value(sys.kind, A.coef);
      double cb = monitored_value(sys.kind, B.coef);
      if (std::isfinite(ca) && std::isfinite(cb) && ca * cb < 0) {
        bool diverging = std::min(std::abs(ca), std::abs(cb)) > opts.divergence_threshold;
        Codim2Event ev;
        ev.kind = sys.kind == Kind::Fold ? "CPC" : (sys.kind == Kind::Pd ? "GPD" : "CH");
        ev.lo = int(branch.points.size()) - 2;
        ev.hi = int(branch.points.size()) - 1;
        if (diverging) {
          ev.divergence = true;
          ev.p1 = 0.5 * (A.p1 + B.p1);
          ev.p2 = 0.5 * (A.p2 + B.p2);
          ev.coef = std::numeric_limits<double>::infinity();
        } else {
          // secant refinement along the connecting segment
          Vec ua = sys.pack(prev), ub = sys.pack(s);
          double tlo = 0.0, thi = 1.0, clo = ca, chi = cb;
          ExtState best = s;
          double cbest = cb, tbest = 1.0;
          for (int it = 0; it < 14 && std::abs(cbest) > opts.event_tol; ++it) {
            double th = tlo - clo * (thi - tlo) / (chi - clo);
            if (!(th > tlo && th < thi)) th = 0.5 * (tlo + thi);
            Vec um = ua + th * (ub - ua);
            ExtState mid = s;
            sys.unpack(um, mid);
            sys.pred = um;
            Vec seg = ub - ua;
            weighted_normalize(seg);
            sys.tangent = weighted_tangent_row(seg);
            if (sys.newton(mid, opts.tol, opts.max_iter) < 0) break;
            double cm = monitored_value(sys.kind, monitor_coefficient(sys, mid, opts, nullptr));
            if (!std::isfinite(cm)) break;
            if (std::abs(cm) < std::abs(cbest)) {
              cbest = cm;
              best = mid;
              tbest = th;
            }
            if (cm * clo > 0) {
              tlo = th;
              clo = cm;
            } else {
              thi = th;
              chi = cm;
            }
          }
          (void)tbest;
          ev.p1 = best.alpha[0];
          ev.p2 = best.alpha[1];
          ev.coef = cbest;
          // drop brackets whose refinement never approached a zero: family
          // jumps and resonance passages make spurious sign changes
          if (std::abs(cbest) > 100 * opts.event_tol) ev.kind = "";
        }
        bool dup = ev.kind.empty();
        for (const auto& prior : branch.events)
          if (prior.kind == ev.kind &&
              std::abs(prior.p1 - ev.p1) + std::abs(prior.p2 - ev.p2) <
                  1e-4 * (1.0 + std::abs(ev.p1) + std::abs(ev.p2)))
            dup = true;
        if (!dup) branch.events.push_back(ev);
      }
    }

    if (s.alpha[0] < opts.p1_lo || s.alpha[0] > opts.p1_hi ||
        s.alpha[1] < opts.p2_lo || s.alpha[1] > opts.p2_hi) {
      branch.termination = "range_exhausted";
      return branch;
    }

    // secant tangent and reference refresh
    Vec sec = sys.pack(s) - sys.pack(prev);
    Vec secn = sec;
    weighted_normalize(secn);
    tan = secn;
    set_references(s);
    if (iters <= 3) ds = std::min(ds * 1.3, opts.max_step);
  }
  branch.termination = "max_points";
  return branch;
}

std::vector<Codim2Event> detect_codim2(const Codim1Branch& branch,
                                       double divergence_threshold) {
  std::vector<Codim2Event> events;
  const auto& pts = branch.points;
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    double a = pts[k].coef.real(), b = pts[k + 1].coef.real();
    if (!std::isfinite(a) || !std::isfinite(b) || a * b >= 0) continue;
    Codim2Event ev;
    ev.kind = branch.kind == "fold" ? "CPC" : (branch.kind == "pd" ? "GPD" : "CH");
    ev.lo = int(k);
    ev.hi = int(k + 1);
    if (std::min(std::abs(a), std::abs(b)) > divergence_threshold) {
      ev.divergence = true;
      ev.p1 = 0.5 * (pts[k].p1 + pts[k + 1].p1);
      ev.p2 = 0.5 * (pts[k].p2 + pts[k + 1].p2);
      ev.coef = std::numeric_limits<double>::infinity();
    } else {
      double t = -a / (b - a);
      ev.p1 = pts[k].p1 + t * (pts[k + 1].p1 - pts[k].p1);
      ev.p2 = pts[k].p2 + t * (pts[k + 1].p2 - pts[k].p2);
      ev.coef = 0.0;
    }
    events.push_back(ev);
  }
  return events;
}

}  // namespace ddenf
