#include "ddenf/bvp.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseLU>
#include <cmath>
#include <limits>

namespace ddenf {

namespace {
const double kSingThreshold = std::pow(std::numeric_limits<double>::epsilon(), 0.75);
using Triplet = Eigen::Triplet<double>;

// scatter a complex coefficient into the realified (interleaved) layout
inline void push_block(std::vector<Triplet>& trip, bool cx, int row, int col,
                       cplx v) {
  if (v == cplx(0, 0)) return;
  if (!cx) {
    trip.emplace_back(row, col, v.real());
    return;
  }
  double re = v.real(), im = v.imag();
  if (re != 0) {
    trip.emplace_back(2 * row, 2 * col, re);
    trip.emplace_back(2 * row + 1, 2 * col + 1, re);
  }
  if (im != 0) {
    trip.emplace_back(2 * row, 2 * col + 1, -im);
    trip.emplace_back(2 * row + 1, 2 * col, im);
  }
}
}  // namespace

CollocationSystem::CollocationSystem(BvpSpec spec) : spec_(std::move(spec)) {
  assemble();
}

void CollocationSystem::assemble() {
  const Mesh& mesh = *spec_.mesh;
  const int n = spec_.n, M = mesh.M(), L = mesh.L();
  const int nb = mesh.num_basis();
  const int ncon = int(spec_.constraints.size());
  const int nex = int(spec_.extras.size());
  if (ncon != nex)
    throw InputError("bvp: need equally many constraints and extra unknowns");
  const int N = n * nb + nex;
  const bool cx = spec_.complex_valued;

  std::vector<Triplet> trip;
  trip.reserve(size_t(N) * (M + 2) * 2);

  Vec lv(M + 1), ld(M + 1);
  CMat C(n, n);
  CVec col(n);
  const double H = mesh.H();
  const int bsign = static_cast<int>(spec_.boundary);

  // collocation rows: k = i*M + j over Gauss points
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < M; ++j) {
      const int k = i * M + j;
      const double t = mesh.colloc_time(i, j);
      const int row0 = k * n;
      // derivative stencil on the owning subinterval
      mesh.basis_derivs(mesh.gl_nodes()[j], ld);
      for (int b = 0; b <= M; ++b) {
        double w = spec_.deriv_sign * ld[b] / H;
        int g = i * M + b;
        for (int c = 0; c < n; ++c)
          push_block(trip, cx, row0 + c, g * n + c, w);
      }
      // delay / advance terms with mod-T wrap and boundary sign
      for (const auto& term : spec_.terms) {
        term.coeff(i, j, t, C);
        auto loc = mesh.locate(t + term.shift);
        double sgn = (bsign < 0 && (loc.wraps & 1L)) ? -1.0 : 1.0;
        mesh.basis_values(loc.u, lv);
        for (int b = 0; b <= M; ++b) {
          if (lv[b] == 0.0) continue;
          int g = loc.interval * M + b;
          double w = sgn * lv[b];
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
              push_block(trip, cx, row0 + r, g * n + c, w * C(r, c));
        }
      }
      // extra columns
      for (int e = 0; e < nex; ++e) {
        spec_.extras[e].colloc(i, j, t, col);
        for (int r = 0; r < n; ++r)
          push_block(trip, cx, row0 + r, n * nb + e, col[r]);
      }
    }
  }

  // boundary rows: y_{L,0} - s y_{0,0} = 0
  const int rb = n * mesh.num_colloc();
  for (int c = 0; c < n; ++c) {
    push_block(trip, cx, rb + c, (nb - 1) * n + c, 1.0);
    push_block(trip, cx, rb + c, c, -double(bsign));
  }
  for (int e = 0; e < nex; ++e)
    if (spec_.extras[e].boundary.size() > 0)
      for (int c = 0; c < n; ++c)
        push_block(trip, cx, rb + c, n * nb + e, spec_.extras[e].boundary[c]);

  // constraint rows
  CVec w(n);
  for (int q = 0; q < ncon; ++q) {
    const int row = rb + n + q;
    if (spec_.constraints[q].raw.size() > 0) {
      const CVec& raw = spec_.constraints[q].raw;
      for (int s = 0; s < n * nb; ++s) push_block(trip, cx, row, s, raw[s]);
    } else {
      for (int g = 0; g < nb; ++g) {
        spec_.constraints[q].weight(mesh.basis_time(g), w);
        for (int c = 0; c < n; ++c)
          push_block(trip, cx, row, g * n + c, mesh.sigma()[g] * w[c]);
      }
    }
    for (int e = 0; e < nex; ++e)
      if (spec_.extras[e].constraint.size() > 0)
        push_block(trip, cx, row, n * nb + e, spec_.extras[e].constraint[q]);
  }

  const int Nr = cx ? 2 * N : N;
  A_.resize(Nr, Nr);
  A_.setFromTriplets(trip.begin(), trip.end());
  A_.makeCompressed();
}

CVec CollocationSystem::spec_rhs() const {
  const Mesh& mesh = *spec_.mesh;
  const int n = spec_.n;
  CVec r = CVec::Zero(spec_.logical_size());
  if (spec_.rhs) {
    CVec v(n);
    for (int i = 0; i < mesh.L(); ++i)
      for (int j = 0; j < mesh.M(); ++j) {
        spec_.rhs(i, j, mesh.colloc_time(i, j), v);
        r.segment((i * mesh.M() + j) * n, n) = v;
      }
  }
  for (size_t q = 0; q < spec_.constraints.size(); ++q)
    r[n * mesh.num_basis() + long(q)] = spec_.constraints[q].rhs;
  return r;
}

CVec CollocationSystem::lift(const Vec& x) const {
  const int N = spec_.logical_size();
  CVec z(N);
  if (!spec_.complex_valued) {
    for (int s = 0; s < N; ++s) z[s] = x[s];
  } else {
    for (int s = 0; s < N; ++s) z[s] = cplx(x[2 * s], x[2 * s + 1]);
  }
  return z;
}

Vec CollocationSystem::lower(const CVec& z) const {
  const int N = spec_.logical_size();
  if (!spec_.complex_valued) {
    Vec x(N);
    for (int s = 0; s < N; ++s) x[s] = z[s].real();
    return x;
  }
  Vec x(2 * N);
  for (int s = 0; s < N; ++s) {
    x[2 * s] = z[s].real();
    x[2 * s + 1] = z[s].imag();
  }
  return x;
}

void CollocationSystem::factorize() {
  if (factorized_) return;
  lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
  lu_->compute(A_);
  if (lu_->info() != Eigen::Success)
    throw SingularityError("bvp: sparse LU factorization failed (structurally singular)",
                           0.0);
  factorized_ = true;
}

double CollocationSystem::smallest_sv_estimate() {
  if (sv_estimate_ >= 0) return sv_estimate_;
  factorize();
  // power iteration on A^{-1} A^{-T}: converges to 1/sigma_min^2
  const int Nr = real_size();
  Vec x = Vec::Ones(Nr);
  x[0] = 1.2345;  // avoid exact symmetry traps, deterministic
  x.normalize();
  double norm = 0;
  for (int it = 0; it < 8; ++it) {
    Vec y = lu_->transpose().solve(x);
    Vec z = lu_->solve(y);
    norm = z.norm();
    if (norm == 0 || !z.allFinite()) {
      sv_estimate_ = 0;
      return 0;
    }
    x = z / norm;
  }
  sv_estimate_ = 1.0 / std::sqrt(norm);
  return sv_estimate_;
}

CVec CollocationSystem::solve(const CVec& logical_rhs, bool check_singular) {
  factorize();
  if (check_singular) {
    double anorm = A_.coeffs().matrix().lpNorm<Eigen::Infinity>();
    double sv = smallest_sv_estimate();
    if (sv <= kSingThreshold * anorm)
      throw SingularityError("bvp: near-singular collocation system", sv);
  }
  Vec b = lower(logical_rhs);
  Vec x = lu_->solve(b);
  return lift(x);
}

CVec CollocationSystem::solve_transpose(const CVec& logical_rhs) {
  factorize();
  Vec b = lower(logical_rhs);
  Vec x = lu_->transpose().solve(b);
  return lift(x);
}

CollocationSystem::NullData CollocationSystem::null_vectors(int dense_cap) {
  NullData out;
  const int Nr = real_size();
  Vec right(Nr), left(Nr);
  if (Nr <= dense_cap) {
    Mat D(A_);
    Eigen::BDCSVD<Mat> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    out.sv1 = sv[Nr - 1];
    out.sv2 = Nr >= 2 ? sv[Nr - 2] : 0.0;
    out.sv3 = Nr >= 3 ? sv[Nr - 3] : 0.0;
    right = svd.matrixV().col(Nr - 1);
    left = svd.matrixU().col(Nr - 1);
  } else {
    // bordered factorization: SparseLU refuses (near-)singular matrices, so
    // augment with k deterministic borders (k = 2 for realified complex
    // pairs) and read the null vectors off bordered solves
    const int k = spec_.complex_valued ? 2 : 1;
    const int Na = Nr + k;
    std::vector<Triplet> trip;
    trip.reserve(size_t(A_.nonZeros()) + size_t(2 * k) * size_t(Nr));
    for (int c = 0; c < A_.outerSize(); ++c)
      for (SpMat::InnerIterator it(A_, c); it; ++it)
        trip.emplace_back(int(it.row()), int(it.col()), it.value());
    // quasi-random unit borders, deterministic
    auto noise = [](int seed, int i) {
      double x = std::sin(12.9898 * (i + 1) + 78.233 * (seed + 1)) * 43758.5453;
      return x - std::floor(x) - 0.5;
    };
    for (int b = 0; b < k; ++b) {
      double nb = 0, nc = 0;
      for (int i = 0; i < Nr; ++i) {
        nb += noise(b, i) * noise(b, i);
        nc += noise(b + 7, i) * noise(b + 7, i);
      }
      nb = std::sqrt(nb);
      nc = std::sqrt(nc);
      for (int i = 0; i < Nr; ++i) {
        trip.emplace_back(i, Nr + b, noise(b, i) / nb);
        trip.emplace_back(Nr + b, i, noise(b + 7, i) / nc);
      }
    }
    SpMat Aug(Na, Na);
    Aug.setFromTriplets(trip.begin(), trip.end());
    Aug.makeCompressed();
    Eigen::SparseLU<SpMat> alu;
    alu.compute(Aug);
    if (alu.info() != Eigen::Success)
      throw SingularityError("bvp: bordered null-vector factorization failed", 0.0);
    Vec rhs = Vec::Zero(Na);
    rhs[Nr] = 1.0;
    Vec v = alu.solve(rhs);
    right = v.head(Nr).normalized();
    Vec u = alu.transpose().solve(rhs);
    left = u.head(Nr).normalized();
    out.sv1 = (A_ * right).norm();
    out.sv2 = -1.0;  // gap not computed on the sparse path
    out.sv3 = -1.0;
  }
  // fix the relative sign so that A * right ~ sv1 * left
  Vec Av = A_ * right;
  if (Av.dot(left) < 0) left = -left;
  out.right = lift(right);
  out.left_raw = left;
  return out;
}

BvpResult solve_linear_bvp(const BvpSpec& spec) {
  CollocationSystem sys(spec);
  CVec z = sys.solve();
  const Mesh& mesh = *spec.mesh;
  BvpResult res{ComplexProfile(spec.mesh, spec.n, spec.boundary),
                CVec(spec.extras.size())};
  for (int g = 0; g < mesh.num_basis(); ++g)
    res.profile.values().col(g) = z.segment(g * spec.n, spec.n);
  for (size_t e = 0; e < spec.extras.size(); ++e)
    res.extras[long(e)] = z[spec.n * mesh.num_basis() + long(e)];
  return res;
}

cplx integrate_basis(const Mesh& mesh,
                     const std::function<cplx(int, int, double)>& fn) {
  cplx acc(0);
  const auto& nc = mesh.newton_cotes();
  for (int i = 0; i < mesh.L(); ++i)
    for (int j = 0; j <= mesh.M(); ++j)
      acc += mesh.H() * nc[j] * fn(i, j, mesh.basis_time(i * mesh.M() + j));
  return acc;
}

cplx integrate_colloc(const Mesh& mesh,
                      const std::function<cplx(int, int, double)>& fn) {
  cplx acc(0);
  for (int i = 0; i < mesh.L(); ++i)
    for (int j = 0; j < mesh.M(); ++j)
      acc += mesh.H() * mesh.gl_weights()[j] * fn(i, j, mesh.colloc_time(i, j));
  return acc;
}

}  // namespace ddenf
