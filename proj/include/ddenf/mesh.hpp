#pragma once

#include <memory>
#include <vector>

#include "ddenf/types.hpp"

namespace ddenf {

/// M-point Gauss-Legendre rule on [0,1]; exact for polynomials of degree
/// <= 2M-1. Nodes via Newton iteration on the Legendre recurrence.
struct GaussLegendre {
  Vec nodes;    // ascending, in (0,1)
  Vec weights;  // sum = 1
  static GaussLegendre make(int M);
};

/// Legendre polynomial P_n and derivative on [-1,1] by three-term recurrence.
void legendre_eval(int n, double x, double& p, double& dp);

/// Collocation mesh on [0,T]: L uniform subintervals, degree-M piecewise
/// polynomials on uniform basis points t_{i,j} = t_i + (j/M) H, collocated at
/// the Gauss-Legendre points c_{i,j} = t_i + c_j H.
class Mesh {
 public:
  Mesh(int L, int M, double T);

  int L() const { return L_; }
  int M() const { return M_; }
  double T() const { return T_; }
  double H() const { return H_; }

  int num_basis() const { return L_ * M_ + 1; }
  int num_colloc() const { return L_ * M_; }

  // global basis index g = i*M + j, i in [0,L), j in [0,M]; shared endpoints
  double basis_time(int g) const { return T_ * g / (L_ * M_); }
  double colloc_time(int i, int j) const { return (i + gl_.nodes[j]) * H_; }

  const Vec& gl_nodes() const { return gl_.nodes; }
  const Vec& gl_weights() const { return gl_.weights; }

  // composite integration weights at the basis points (merged at shared
  // points); sum = T
  const Vec& sigma() const { return sigma_; }
  // per-node weights of int_0^1 ell_j, ell_j Lagrange basis on {0,1/M,..,1}
  const Vec& newton_cotes() const { return nc_; }

  // Lagrange basis on the uniform local nodes, barycentric form
  void basis_values(double u, Vec& out) const;
  void basis_derivs(double u, Vec& out) const;  // d/du; divide by H for d/dt

  struct Locate {
    int interval;  // i in [0, L)
    double u;      // local coordinate in [0,1]
    long wraps;    // t = (interval + u) * H + wraps * T
  };
  Locate locate(double t) const;

 private:
  int L_, M_;
  double T_, H_;
  GaussLegendre gl_;
  Vec nc_;      // size M+1
  Vec sigma_;   // size L*M+1
  Vec bary_;    // barycentric weights for uniform nodes, size M+1
};

}  // namespace ddenf
