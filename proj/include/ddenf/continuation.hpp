#pragma once

#include "ddenf/orbit.hpp"

namespace ddenf {

/// Multiplier-based test functions recorded at each accepted branch point.
struct TestFunctions {
  double fold = std::numeric_limits<double>::quiet_NaN();  // nontrivial mu - 1
  double pd = std::numeric_limits<double>::quiet_NaN();    // real mu + 1
  double ns = std::numeric_limits<double>::quiet_NaN();    // |mu| - 1, complex pair
  double ns_omega = std::numeric_limits<double>::quiet_NaN();
  bool ns_resonant = false;
};

struct CyclePoint {
  PeriodicOrbit orbit;
  double param = 0;
  FloquetSpectrum spectrum;
  TestFunctions tests;
  double dparam_ds = std::numeric_limits<double>::quiet_NaN();  // secant slope
};

struct CycleBranch {
  std::string free_param;
  std::vector<CyclePoint> points;
  std::string termination;  // "range_exhausted" | "step_underflow" | "max_points"
};

struct ContinuationOptions {
  double initial_step = 0.02;
  double min_step = 1e-7;
  double max_step = 0.25;
  double range_lo = -1e300, range_hi = 1e300;
  int max_points = 300;
  int L = 40, M = 4;
  double tol = 1e-10;
  int max_iter = 12;
  int multiplier_count = 20;
  double resonance_tol = 0.05;
};

/// Pseudo-arclength continuation of a cycle in one parameter: secant
/// predictor, Newton corrector on the fixed-parameter cycle system at the
/// predicted parameter ("natural" corrector) with parameter fallback control:
/// the step halves on corrector failure and grows by 1.3x on fast convergence.
CycleBranch continue_cycle(std::shared_ptr<DdeModel> model,
                           const PeriodicOrbit& seed,
                           const std::string& free_param,
                           const ContinuationOptions& opts);

struct Codim1Event {
  std::string kind;  // "fold" | "pd" | "ns"
  int lo = 0, hi = 0;  // bracketing indices into branch.points
  double omega = std::numeric_limits<double>::quiet_NaN();
  bool resonant = false;
};

/// Sign-change brackets of the recorded test functions; NS candidates carry
/// omega and a strong-resonance flag (e^{i q w T} ~ 1 for q <= 4).
std::vector<Codim1Event> detect_codim1(const CycleBranch& branch,
                                       double resonance_tol = 0.05);

/// Extract test functions from a spectrum (exposed for tests).
TestFunctions test_functions(const FloquetSpectrum& spec, double T,
                             double resonance_tol = 0.05);

}  // namespace ddenf
