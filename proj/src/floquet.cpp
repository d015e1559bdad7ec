#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "ddenf/orbit.hpp"

namespace ddenf {

namespace {

// uniform degree-M mesh on [-span, 0] used for the history segment
struct HistoryMesh {
  double span, H;
  int L, M;
  int num_basis() const { return L * M + 1; }
  double basis_time(int g) const { return -span + span * g / (L * M); }
  // locate t in [-span, 0]
  void locate(double t, int& interval, double& u) const {
    double x = (t + span) / H;
    interval = std::min(int(x), L - 1);
    if (interval < 0) interval = 0;
    u = x - interval;
    if (u < 0) u = 0;
    if (u > 1) u = 1;
  }
};

}  // namespace

FloquetSpectrum floquet_multipliers(const CycleLinearization& lin, int count) {
  const Mesh& mesh = lin.mesh();
  const DdeModel& model = lin.model();
  const int n = model.dim(), M = mesh.M(), L = mesh.L();
  const double T = mesh.T();
  const double tau_max = std::max(model.max_delay(), 1e-3 * T);

  HistoryMesh hm;
  hm.span = tau_max;
  hm.M = M;
  hm.L = std::max(1, int(std::ceil(L * tau_max / T - 1e-9)));
  hm.H = tau_max / hm.L;

  const int NH = n * hm.num_basis();
  const int NY = n * (L * M);  // basis points g = 1..LM; g = 0 is history's end

  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> ty, th;
  Vec lv(M + 1), ld(M + 1);

  // column index helpers: main-mesh basis g -> Y column (g-1) or history end
  auto scatter_main = [&](std::vector<Triplet>& out_y, std::vector<Triplet>& out_h,
                          int row, int g, double w, const Mat* C) {
    for (int r = 0; r < n; ++r) {
      if (C) {
        for (int c = 0; c < n; ++c) {
          double v = w * (*C)(r, c);
          if (v == 0) continue;
          if (g == 0)
            out_h.emplace_back(row + r, NH - n + c, v);
          else
            out_y.emplace_back(row + r, (g - 1) * n + c, v);
        }
      } else {
        if (w == 0) continue;
        if (g == 0)
          out_h.emplace_back(row + r, NH - n + r, w);
        else
          out_y.emplace_back(row + r, (g - 1) * n + r, w);
      }
    }
  };

  for (int i = 0; i < L; ++i)
    for (int j = 0; j < M; ++j) {
      const int row = (i * M + j) * n;
      const double t = mesh.colloc_time(i, j);
      mesh.basis_derivs(mesh.gl_nodes()[j], ld);
      for (int b = 0; b <= M; ++b)
        scatter_main(ty, th, row, i * M + b, ld[b] / mesh.H(), nullptr);
      const auto& mj = lin.jac_colloc(i, j);
      for (int q = 0; q < model.num_args(); ++q) {
        Mat C = -mj[size_t(q)];
        double tl = t - model.lag(q);
        if (tl >= 0) {
          auto loc = mesh.locate(tl);
          mesh.basis_values(loc.u, lv);
          for (int b = 0; b <= M; ++b)
            if (lv[b] != 0)
              scatter_main(ty, th, row, loc.interval * M + b, lv[b], &C);
        } else {
          int hi;
          double u;
          hm.locate(tl, hi, u);
          mesh.basis_values(u, lv);
          for (int b = 0; b <= M; ++b) {
            if (lv[b] == 0) continue;
            int hg = hi * M + b;
            for (int r = 0; r < n; ++r)
              for (int c = 0; c < n; ++c)
                if (C(r, c) != 0)
                  th.emplace_back(row + r, hg * n + c, lv[b] * C(r, c));
          }
        }
      }
    }

  SpMat CY(NY, NY), CH(NY, NH);
  CY.setFromTriplets(ty.begin(), ty.end());
  CH.setFromTriplets(th.begin(), th.end());
  CY.makeCompressed();

  Eigen::SparseLU<SpMat> lu;
  lu.compute(CY);
  if (lu.info() != Eigen::Success)
    throw NumericalError("floquet: condensation solve failed");
  Mat Yhat = lu.solve(Mat(-CH));

  // period map: history values -> solution values at T + theta
  Mat Phi = Mat::Zero(NH, NH);
  for (int g = 0; g < hm.num_basis(); ++g) {
    double tout = T + hm.basis_time(g);
    if (tout >= 0) {
      auto loc = mesh.locate(tout);
      // keep t = T on the main mesh rather than wrapping to 0
      if (loc.wraps == 1 && loc.interval == 0 && loc.u == 0) {
        loc.interval = L - 1;
        loc.u = 1.0;
        loc.wraps = 0;
      }
      mesh.basis_values(loc.u, lv);
      for (int b = 0; b <= M; ++b) {
        if (lv[b] == 0) continue;
        int gg = loc.interval * M + b;
        if (gg == 0) {
          for (int r = 0; r < n; ++r) Phi(g * n + r, NH - n + r) += lv[b];
        } else {
          for (int r = 0; r < n; ++r)
            Phi.row(g * n + r) += lv[b] * Yhat.row((gg - 1) * n + r);
        }
      }
    } else {
      int hi;
      double u;
      hm.locate(tout, hi, u);
      mesh.basis_values(u, lv);
      for (int b = 0; b <= M; ++b) {
        if (lv[b] == 0) continue;
        int hg = hi * M + b;
        for (int r = 0; r < n; ++r) Phi(g * n + r, hg * n + r) += lv[b];
      }
    }
  }

  Eigen::EigenSolver<Mat> eig(Phi);
  if (eig.info() != Eigen::Success)
    throw NumericalError("floquet: eigenvalue iteration failed");

  std::vector<cplx> mu;
  for (int k = 0; k < NH; ++k) {
    cplx m = eig.eigenvalues()[k];
    if (std::abs(m) > 1e-10) mu.push_back(m);
  }
  std::sort(mu.begin(), mu.end(), [](cplx a, cplx b) {
    return std::abs(std::abs(a) - 1.0) < std::abs(std::abs(b) - 1.0);
  });
  if (int(mu.size()) > count) mu.resize(size_t(count));

  FloquetSpectrum spec;
  spec.multipliers = mu;
  for (size_t k = 0; k < mu.size(); ++k) {
    double err = std::abs(mu[k] - cplx(1.0));
    if (spec.trivial_index < 0 || err < spec.trivial_error) {
      spec.trivial_index = int(k);
      spec.trivial_error = err;
    }
  }
  return spec;
}

}  // namespace ddenf
