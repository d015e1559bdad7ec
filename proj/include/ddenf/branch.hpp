#pragma once

#include "ddenf/continuation.hpp"
#include "ddenf/nf.hpp"

namespace ddenf {

/// A codim-1 point refined from a detection bracket, with the eigendata
/// needed to seed two-parameter continuation.
struct LocalizedPoint {
  std::string kind;  // "fold" | "pd" | "ns"
  PeriodicOrbit orbit;
  double param = 0;
  double test_value = 0;
  double omega = std::numeric_limits<double>::quiet_NaN();  // ns
  ComplexProfile eig;        // pd/ns null function on the orbit mesh
  Vec fold_null;             // fold: null of the cycle-BVP Jacobian (Y,T)
};

/// Bisection/secant refinement of a detected bracket to |test| <= test_tol
/// (multiplier tests for PD/NS; the cycle-Jacobian fold system for LPC).
LocalizedPoint localize_codim1(std::shared_ptr<DdeModel> model,
                               const CycleBranch& branch, const Codim1Event& ev,
                               const ContinuationOptions& opts,
                               double test_tol = 1e-8);

struct Codim2Event {
  std::string kind;  // "CPC" | "GPD" | "CH"
  int lo = 0, hi = 0;
  double p1 = 0, p2 = 0;
  double coef = 0;          // coefficient at the refined point
  bool divergence = false;  // sign change through +-infinity, not a zero
};

struct Codim1BranchPoint {
  double p1 = 0, p2 = 0;
  double T = 0;
  cplx coef{std::numeric_limits<double>::quiet_NaN(), 0};  // b | c | d
  double coef_a = std::numeric_limits<double>::quiet_NaN();  // pd/ns a
  double omega = std::numeric_limits<double>::quiet_NaN();
  double defining_residual = 0;
  PeriodicOrbit orbit;
};

struct Codim1Branch {
  std::string kind;
  std::string param1, param2;
  std::vector<Codim1BranchPoint> points;
  std::vector<Codim2Event> events;
  std::string termination;
};

struct BranchOptions {
  double initial_step = 0.05;
  int initial_direction = +1;  // sign of the first predictor along param1
  double min_step = 1e-7;
  double max_step = 0.4;
  int max_points = 150;
  double tol = 1e-9;
  int max_iter = 12;
  int L = 30, M = 4;
  double p1_lo = -1e300, p1_hi = 1e300;
  double p2_lo = -1e300, p2_hi = 1e300;
  bool monitor_coefficients = true;
  double event_tol = 1e-6;  // codim-2 refinement target on |coef|
  double divergence_threshold = 1e6;
  NfOptions nf{};
};

/// Pseudo-arclength continuation of an LPC / PD / NS curve in two parameters
/// using the cycle BVP augmented with the matching eigen-system; evaluates
/// the normal-form coefficient at each accepted point and refines codim-2
/// sign changes (CPC/GPD/CH) to |coef| <= event_tol online.
Codim1Branch continue_codim1_branch(std::shared_ptr<DdeModel> model,
                                    const LocalizedPoint& seed,
                                    const std::string& param1,
                                    const std::string& param2,
                                    const BranchOptions& opts);

/// Scan a finished branch for coefficient sign changes; pure bracketing plus
/// secant interpolation of the stored values (divergence-aware).
std::vector<Codim2Event> detect_codim2(const Codim1Branch& branch,
                                       double divergence_threshold = 1e6);

}  // namespace ddenf
