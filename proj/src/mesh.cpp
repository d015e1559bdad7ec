#include "ddenf/mesh.hpp"

#include <cmath>

namespace ddenf {

void legendre_eval(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  // (1-x^2) P_n' = n (P_{n-1} - x P_n)
  dp = n * (p0 - x * p1) / (1.0 - x * x);
}

GaussLegendre GaussLegendre::make(int M) {
  if (M < 1 || M > 10) throw InputError("Gauss-Legendre degree out of range [1,10]");
  GaussLegendre gl;
  gl.nodes.resize(M);
  gl.weights.resize(M);
  if (M == 1) {
    gl.nodes[0] = 0.5;
    gl.weights[0] = 1.0;
    return gl;
  }
  for (int i = 0; i < (M + 1) / 2; ++i) {
    // Chebyshev-style initial guess for the i-th root (descending in x)
    double x = std::cos(M_PI * (i + 0.75) / (M + 0.5));
    double p, dp;
    for (int it = 0; it < 100; ++it) {
      legendre_eval(M, x, p, dp);
      double dx = -p / dp;
      x += dx;
      if (std::abs(dx) < 1e-15) break;
    }
    legendre_eval(M, x, p, dp);
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map [-1,1] -> [0,1]
    gl.nodes[M - 1 - i] = 0.5 * (1.0 + x);
    gl.nodes[i] = 0.5 * (1.0 - x);
    gl.weights[i] = 0.5 * w;
    gl.weights[M - 1 - i] = 0.5 * w;
  }
  if (M % 2 == 1) {
    gl.nodes[M / 2] = 0.5;
    double p, dp;
    legendre_eval(M, 0.0, p, dp);
    gl.weights[M / 2] = 1.0 / (dp * dp);
  }
  return gl;
}

Mesh::Mesh(int L, int M, double T) : L_(L), M_(M), T_(T) {
  if (L < 2) throw InputError("mesh: L must be >= 2");
  if (M < 1 || M > 10) throw InputError("mesh: M must be in [1,10]");
  if (!(T > 0)) throw InputError("mesh: T must be positive");
  H_ = T / L;
  gl_ = GaussLegendre::make(M);

  // barycentric weights for the uniform nodes u_j = j/M
  bary_.resize(M + 1);
  for (int j = 0; j <= M; ++j) {
    double w = 1.0;
    for (int k = 0; k <= M; ++k)
      if (k != j) w *= (double(j) - k) / M;
    bary_[j] = 1.0 / w;
  }

  // Newton-Cotes weights int_0^1 ell_j(u) du, computed exactly with the
  // Gauss rule of degree M (exact: ell_j has degree M <= 2M-1)
  nc_ = Vec::Zero(M + 1);
  Vec lv(M + 1);
  for (int k = 0; k < M; ++k) {
    basis_values(gl_.nodes[k], lv);
    nc_ += gl_.weights[k] * lv;
  }

  // composite sigma weights over the distinct basis points
  sigma_ = Vec::Zero(L * M + 1);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j <= M; ++j) sigma_[i * M + j] += nc_[j] * H_;
}

void Mesh::basis_values(double u, Vec& out) const {
  out.resize(M_ + 1);
  // exact-node hit: return the Kronecker column
  for (int j = 0; j <= M_; ++j) {
    double d = u - double(j) / M_;
    if (d == 0.0) {
      out.setZero();
      out[j] = 1.0;
      return;
    }
  }
  double s = 0.0;
  for (int j = 0; j <= M_; ++j) {
    out[j] = bary_[j] / (u - double(j) / M_);
    s += out[j];
  }
  out /= s;
}

void Mesh::basis_derivs(double u, Vec& out) const {
  out.resize(M_ + 1);
  // l_j'(u) via the differentiation of the barycentric form; handle node hits
  // with the exact formula l_j'(u_i) = (w_j/w_i)/(u_i-u_j), l_i'(u_i) = -sum.
  int hit = -1;
  for (int j = 0; j <= M_; ++j)
    if (u == double(j) / M_) hit = j;
  if (hit >= 0) {
    double diag = 0.0;
    for (int j = 0; j <= M_; ++j) {
      if (j == hit) continue;
      out[j] = (bary_[j] / bary_[hit]) / (double(hit) / M_ - double(j) / M_);
      diag -= out[j];
    }
    out[hit] = diag;
    return;
  }
  // generic u: differentiate l_j(u) = (w_j/(u-u_j)) / S(u), S = sum_k w_k/(u-u_k)
  Vec r(M_ + 1);
  double S = 0.0, Sp = 0.0;
  for (int j = 0; j <= M_; ++j) {
    double d = u - double(j) / M_;
    r[j] = bary_[j] / d;
    S += r[j];
    Sp -= r[j] / d;
  }
  for (int j = 0; j <= M_; ++j) {
    double d = u - double(j) / M_;
    out[j] = (-r[j] / d * S - r[j] * Sp) / (S * S);
  }
}

Mesh::Locate Mesh::locate(double t) const {
  double k = std::floor(t / T_);
  // exact period multiples close on the left so that interp(T) returns the
  // stored endpoint value
  if (t == k * T_ && k != 0) return {L_ - 1, 1.0, long(k) - 1};
  double tp = t - k * T_;
  long wraps = long(k);
  if (tp >= T_) {  // fp edge: t/T_ slightly below an integer
    tp -= T_;
    wraps += 1;
  }
  if (tp < 0) {
    tp += T_;
    wraps -= 1;
  }
  int i = int(tp / H_);
  if (i >= L_) i = L_ - 1;
  double u = tp / H_ - i;
  if (u < 0) u = 0;
  if (u > 1) {
    if (i + 1 < L_ && u > 1 + 1e-12) {
      ++i;
      u -= 1;
    } else
      u = 1;
  }
  return {i, u, wraps};
}

}  // namespace ddenf
