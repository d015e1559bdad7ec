#pragma once

#include <map>
#include <string>

#include "ddenf/spectral.hpp"

namespace ddenf {

enum class NfMethod { Direct, Efficient, Both };

/// Critical normal-form coefficients at a located codim-1 point, computed by
/// the adjoint-pairing formulas (direct) and/or the discretized left-null
/// Fredholm reduction (efficient), with cross-method diagnostics.
struct NormalFormReport {
  std::string kind;  // "fold" | "pd" | "ns"
  NfMethod method = NfMethod::Both;
  int L = 0, M = 0;

  // fold
  double b_direct = 0, b_efficient = 0;
  // pd
  double a_direct = 0, a_efficient = 0;
  double c_direct = 0, c_efficient = 0;
  // ns
  cplx d_direct{0, 0}, d_efficient{0, 0};
  double omega = 0;

  std::map<std::string, double> diagnostics;

  bool has_direct() const { return method != NfMethod::Efficient; }
  bool has_efficient() const { return method != NfMethod::Direct; }
  double b() const { return has_efficient() ? b_efficient : b_direct; }
  double a() const { return has_efficient() ? a_efficient : a_direct; }
  double c() const { return has_efficient() ? c_efficient : c_direct; }
  cplx d() const { return has_efficient() ? d_efficient : d_direct; }
};

struct NfOptions {
  double solvability_tol = 1e-5;  // Fredholm prechecks
  double resonance_tol = 0.05;    // |e^{i q w T} - 1| below this => refusal
  int dense_svd_cap = 1500;
  // direct pairings at the Gauss collocation nodes (superconvergent and
  // correlated with the discrete left-null route); the sigma-basis rule of
  // the constraint rows stays available for comparison
  bool pair_gauss = true;
  bool supplement_literal_ns = false;  // printed-variant NS brackets (debug)
  bool colloc_rows_only = false;       // left null from collocation rows only (debug)
  SpectralOptions spectral{};
};

struct LeftNullVector {
  CVec colloc;  // restriction to the collocation rows, complex view
  double sv1 = 0, sv2 = 0, sv3 = 0;
};

/// Left null vector of an assembled square near-singular system, restricted
/// to the collocation rows. Realified complex systems return the complex view
/// p_k = v_{2k} - i v_{2k+1}. Throws when the system is not singular or when
/// the singular-value gap is missing.
LeftNullVector left_null_vector(CollocationSystem& sys, const NfOptions& opts = {});

NormalFormReport fold_coefficient(const PeriodicOrbit& orbit,
                                  NfMethod method = NfMethod::Both,
                                  const NfOptions& opts = {});

NormalFormReport pd_coefficients(const PeriodicOrbit& orbit,
                                 NfMethod method = NfMethod::Both,
                                 const NfOptions& opts = {});

/// omega is the Floquet angular frequency of the critical pair e^{+-i w T},
/// principal branch Arg(mu)/T in (0, pi/T).
NormalFormReport ns_coefficients(const PeriodicOrbit& orbit, double omega,
                                 NfMethod method = NfMethod::Both,
                                 const NfOptions& opts = {});

}  // namespace ddenf
