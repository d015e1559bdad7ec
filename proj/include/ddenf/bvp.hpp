#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>
#include <vector>

#include "ddenf/profile.hpp"

namespace ddenf {

using SpMat = Eigen::SparseMatrix<double>;

/// One linear term C(t) y(t + shift) of a delay/advance operator
///   L y = deriv_sign * y'(t) + sum_k C_k(t) y(t + shift_k),
/// collocated on a periodic/antiperiodic mesh with mod-T wrap.
struct BvpTerm {
  double shift = 0.0;
  std::function<void(int i, int j, double t, CMat& C)> coeff;
};

/// sigma-weighted integral row  sum_g sigma_g <w(t_g), y_g> = rhs, or a raw
/// coefficient row over all profile unknowns when `raw` is nonempty.
struct BvpConstraint {
  std::function<void(double t, CVec& w)> weight;
  CVec raw;  // size n * num_basis when used
  cplx rhs = 0.0;
};

/// Extra scalar unknown with its dense column: contributes col(t) * alpha to
/// the collocation rows, `boundary` to the boundary rows and one entry per
/// constraint row.
struct BvpExtraColumn {
  std::function<void(int i, int j, double t, CVec& col)> colloc;
  CVec boundary;    // size n or empty
  CVec constraint;  // size #constraints or empty
};

struct BvpSpec {
  std::shared_ptr<const Mesh> mesh;
  int n = 1;
  bool complex_valued = false;
  double deriv_sign = 1.0;
  Boundary boundary = Boundary::Periodic;
  std::vector<BvpTerm> terms;
  std::function<void(int i, int j, double t, CVec& r)> rhs;  // collocation rows
  std::vector<BvpConstraint> constraints;
  std::vector<BvpExtraColumn> extras;

  int logical_size() const { return n * mesh->num_basis() + int(extras.size()); }
  int colloc_rows() const { return n * mesh->num_colloc(); }
};

/// Assembled square collocation system. Complex problems are realified with
/// interleaved real/imaginary unknowns; the logical view stays complex.
class CollocationSystem {
 public:
  explicit CollocationSystem(BvpSpec spec);

  const BvpSpec& spec() const { return spec_; }
  int logical_size() const { return spec_.logical_size(); }
  int real_size() const { return int(A_.rows()); }
  const SpMat& matrix() const { return A_; }

  /// Logical right-hand side from the spec (collocation rhs + boundary zeros
  /// + constraint rhs values).
  CVec spec_rhs() const;

  /// Factor and solve; throws SingularityError when the condition estimate
  /// exceeds 1/eps^0.75 (callers use this to branch into null-space work).
  CVec solve(const CVec& logical_rhs, bool check_singular = true);
  CVec solve() { return solve(spec_rhs()); }
  /// Transpose solve with the same factorization.
  CVec solve_transpose(const CVec& logical_rhs);

  /// Inverse-iteration estimate of the smallest singular value.
  double smallest_sv_estimate();

  struct NullData {
    CVec right;          // logical
    Vec left_raw;        // real row-space vector (collocation rows first)
    double sv1 = 0;      // smallest singular value
    double sv2 = 0, sv3 = 0;  // next ones (gap diagnostics)
  };
  /// Smallest singular pair: dense SVD up to `dense_cap` rows, else sparse
  /// inverse iteration with one deflated pass for the gap.
  NullData null_vectors(int dense_cap = 900);

  // logical <-> real layout helpers (public for the normal-form module)
  CVec lift(const Vec& xreal) const;
  Vec lower(const CVec& z) const;

 private:
  void assemble();
  void factorize();

  BvpSpec spec_;
  SpMat A_;
  bool factorized_ = false;
  double sv_estimate_ = -1.0;
  std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;
};

/// Solve the spec and return the profile plus extra unknowns; used by every
/// linear delay/advance boundary-value problem in the spectral module.
struct BvpResult {
  ComplexProfile profile;
  CVec extras;
};
BvpResult solve_linear_bvp(const BvpSpec& spec);

/// sum_i sum_{j=0..M} H * nc_j * fn(i, j, t_{i,j}): the composite sigma rule
/// with one-sided evaluation at shared points (safe for integrands built from
/// interpolant derivatives).
cplx integrate_basis(const Mesh& mesh,
                     const std::function<cplx(int i, int j, double t)>& fn);

/// Gauss-node quadrature sum_{i,j} H w_j fn(c_{i,j}); exact for piecewise
/// polynomials of degree <= 2M-1.
cplx integrate_colloc(const Mesh& mesh,
                      const std::function<cplx(int i, int j, double t)>& fn);

}  // namespace ddenf
