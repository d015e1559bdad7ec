#pragma once

#include <memory>

#include "ddenf/mesh.hpp"

namespace ddenf {

enum class Boundary : int { Periodic = +1, Antiperiodic = -1 };

/// Piecewise-polynomial function on [0,T] over a collocation mesh, with
/// periodic or antiperiodic wrap: y(t + kT) = s^k y(t), s = boundary sign.
/// Values are stored at the distinct basis points, one column per point.
template <class S>
class Profile {
 public:
  Profile() = default;
  Profile(std::shared_ptr<const Mesh> mesh, int n,
          Boundary b = Boundary::Periodic)
      : mesh_(std::move(mesh)),
        n_(n),
        boundary_(b),
        values_(Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>::Zero(
            n, mesh_->num_basis())) {}

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  int dim() const { return n_; }
  Boundary boundary() const { return boundary_; }
  int boundary_sign() const { return static_cast<int>(boundary_); }

  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& values() { return values_; }
  const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>& values() const {
    return values_;
  }

  S wrap_factor(long wraps) const {
    return (boundary_ == Boundary::Antiperiodic && (wraps & 1L)) ? S(-1) : S(1);
  }

  Eigen::Vector<S, Eigen::Dynamic> value(double t) const {
    auto loc = mesh_->locate(t);
    Vec lv;
    mesh_->basis_values(loc.u, lv);
    Eigen::Vector<S, Eigen::Dynamic> out =
        values_.middleCols(loc.interval * mesh_->M(), mesh_->M() + 1) *
        lv.cast<S>();
    return out * wrap_factor(loc.wraps);
  }

  Eigen::Vector<S, Eigen::Dynamic> derivative(double t) const {
    auto loc = mesh_->locate(t);
    Vec ld;
    mesh_->basis_derivs(loc.u, ld);
    Eigen::Vector<S, Eigen::Dynamic> out =
        values_.middleCols(loc.interval * mesh_->M(), mesh_->M() + 1) *
        ld.cast<S>();
    return out * (wrap_factor(loc.wraps) / mesh_->H());
  }

  // one-sided evaluation on a fixed subinterval (basis points are shared, but
  // the interpolant's derivative jumps there)
  Eigen::Vector<S, Eigen::Dynamic> derivative_on(int interval, double u) const {
    Vec ld;
    mesh_->basis_derivs(u, ld);
    return values_.middleCols(interval * mesh_->M(), mesh_->M() + 1) *
           ld.cast<S>() / mesh_->H();
  }

  /// The derivative as a profile on the same mesh (values at basis points,
  /// one-sided from the owning subinterval; interior shared points use the
  /// left subinterval). Same boundary class.
  Profile differentiated() const {
    Profile d(mesh_, n_, boundary_);
    const int M = mesh_->M();
    Vec ld;
    for (int i = 0; i < mesh_->L(); ++i)
      for (int j = (i == 0 ? 0 : 1); j <= M; ++j) {
        mesh_->basis_derivs(double(j) / M, ld);
        d.values_.col(i * M + j) =
            values_.middleCols(i * M, M + 1) * ld.cast<S>() / mesh_->H();
      }
    return d;
  }

  void enforce_boundary() {
    // y_{L,0} = s * y_{0,0}; keep the stored values consistent with the wrap
    values_.col(mesh_->num_basis() - 1) =
        values_.col(0) * S(double(boundary_sign()));
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
  int n_ = 0;
  Boundary boundary_ = Boundary::Periodic;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> values_;
};

using RealProfile = Profile<double>;
using ComplexProfile = Profile<cplx>;

inline ComplexProfile to_complex(const RealProfile& p) {
  ComplexProfile c(p.mesh_ptr(), p.dim(), p.boundary());
  c.values() = p.values().cast<cplx>();
  return c;
}

inline RealProfile real_part(const ComplexProfile& p) {
  RealProfile r(p.mesh_ptr(), p.dim(), p.boundary());
  r.values() = p.values().real();
  return r;
}

inline ComplexProfile conjugated(const ComplexProfile& p) {
  ComplexProfile c(p.mesh_ptr(), p.dim(), p.boundary());
  c.values() = p.values().conjugate();
  return c;
}

/// sum_g sigma_g <a(t_g), b(t_g)> over the basis points: the sigma-weighted
/// discretization of the bilinear pairing int_0^T a^T b dt (no conjugation).
template <class S1, class S2>
auto quadrature_pair(const Profile<S1>& a, const Profile<S2>& b)
    -> decltype(S1() * S2()) {
  using R = decltype(S1() * S2());
  const Mesh& mesh = b.mesh();
  R acc(0);
  if (a.mesh_ptr().get() == b.mesh_ptr().get()) {
    for (int g = 0; g < mesh.num_basis(); ++g) {
      R dot(0);
      for (int k = 0; k < b.dim(); ++k)
        dot += R(a.values()(k, g)) * R(b.values()(k, g));
      acc += mesh.sigma()[g] * dot;
    }
    return acc;
  }
  // meshes differ: resample a at b's basis points
  for (int g = 0; g < mesh.num_basis(); ++g) {
    auto av = a.value(mesh.basis_time(g));
    R dot(0);
    for (int k = 0; k < b.dim(); ++k)
      dot += R(av[k]) * R(b.values()(k, g));
    acc += mesh.sigma()[g] * dot;
  }
  return acc;
}

}  // namespace ddenf
