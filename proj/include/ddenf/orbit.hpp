#pragma once

#include "ddenf/bvp.hpp"
#include "ddenf/model.hpp"
#include "ddenf/simulate.hpp"

namespace ddenf {

/// A cycle with its linearization data: the profile gamma on a physical-time
/// mesh [0,T], its derivative, and the Jacobian matrices M_j cached along the
/// cycle. Spectral operations only need this view, so linear test problems
/// can construct it directly around a zero profile.
class CycleLinearization {
 public:
  CycleLinearization() = default;
  CycleLinearization(std::shared_ptr<const DdeModel> model, RealProfile gamma);

  const DdeModel& model() const { return *model_; }
  std::shared_ptr<const DdeModel> model_ptr() const { return model_; }
  const Mesh& mesh() const { return gamma_.mesh(); }
  std::shared_ptr<const Mesh> mesh_ptr() const { return gamma_.mesh_ptr(); }
  double period() const { return gamma_.mesh().T(); }
  int dim() const { return model_->dim(); }

  const RealProfile& gamma() const { return gamma_; }
  const RealProfile& dgamma() const { return dgamma_; }

  /// lag-state block matrix (n x (m+1)) of gamma at time t
  Mat states_at(double t) const;
  const std::vector<Mat>& jac_colloc(int i, int j) const {
    return Mj_colloc_[size_t(i) * mesh().M() + j];
  }
  const std::vector<Mat>& jac_basis(int g) const { return Mj_basis_[size_t(g)]; }
  std::vector<Mat> jacobians_at(double t) const;

 private:
  std::shared_ptr<const DdeModel> model_;
  RealProfile gamma_, dgamma_;
  std::vector<std::vector<Mat>> Mj_colloc_, Mj_basis_;
};

struct PeriodicOrbit {
  CycleLinearization lin;
  Vec params;            // parameter values the cycle was solved at
  double residual_norm = 0.0;
  double period() const { return lin.period(); }
  const RealProfile& profile() const { return lin.gamma(); }
};

struct SolveCycleOptions {
  int L = 40;
  int M = 4;
  double tol = 1e-10;
  int max_iter = 20;
  // phase reference: when empty, the initial guess provides it
  const RealProfile* phase_reference = nullptr;  // scaled or physical mesh
  bool fixed_period = false;  // solve with T frozen (no phase condition)
  // anchor row y_comp(0) = value instead of the integral phase condition;
  // keeps Newton away from the trivial equilibrium when seeding small cycles
  int pin_component = -1;
  double pin_value = 0.0;
};

/// Newton on the collocation discretization of the periodic BVP with the
/// classical integral phase condition; unknowns are the profile values and T.
PeriodicOrbit solve_cycle(std::shared_ptr<const DdeModel> model,
                          const std::function<Vec(double)>& guess,
                          double T_guess, const SolveCycleOptions& opts = {});

PeriodicOrbit solve_cycle(std::shared_ptr<const DdeModel> model,
                          const Trajectory& traj, double t_from,
                          const SolveCycleOptions& opts = {});

PeriodicOrbit solve_cycle_from(const PeriodicOrbit& seed,
                               std::shared_ptr<const DdeModel> model,
                               const SolveCycleOptions& opts = {});

struct FloquetSpectrum {
  std::vector<cplx> multipliers;  // sorted by distance of |mu| to 1
  int trivial_index = -1;
  double trivial_error = 1.0;  // |mu_trivial - 1|
};

/// Floquet multipliers of the discretized period map: the linearized
/// collocation system is condensed onto the history segment and the dense
/// condensed map's eigenvalues are returned (near-zero ones discarded).
FloquetSpectrum floquet_multipliers(const CycleLinearization& lin,
                                    int count = 20);

}  // namespace ddenf
