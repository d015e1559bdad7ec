#include "ddenf/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace ddenf {

namespace {
// cubic Hermite on [t0, t1]
Vec hermite(double t, double t0, double t1, const Vec& x0, const Vec& x1,
            const Vec& f0, const Vec& f1) {
  double h = t1 - t0, s = (t - t0) / h;
  double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * h * f0 +
         (-2 * s3 + 3 * s2) * x1 + (s3 - s2) * h * f1;
}
Vec hermite_deriv(double t, double t0, double t1, const Vec& x0, const Vec& x1,
                  const Vec& f0, const Vec& f1) {
  double h = t1 - t0, s = (t - t0) / h;
  double s2 = s * s;
  return ((6 * s2 - 6 * s) * x0 / h + (3 * s2 - 4 * s + 1) * f0 +
          (-6 * s2 + 6 * s) * x1 / h + (3 * s2 - 2 * s) * f1);
}
}  // namespace

HistorySegment::HistorySegment(std::vector<double> grid, std::vector<Vec> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.size() != values_.size() || grid_.size() < 2)
    throw InputError("history: grid/values mismatch");
  if (std::abs(grid_.back()) > 1e-12)
    throw InputError("history: grid must end at 0");
  // centered finite-difference slopes, one-sided at the ends
  size_t n = grid_.size();
  slopes_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    if (i == 0)
      slopes_[i] = (values_[1] - values_[0]) / (grid_[1] - grid_[0]);
    else if (i == n - 1)
      slopes_[i] = (values_[n - 1] - values_[n - 2]) / (grid_[n - 1] - grid_[n - 2]);
    else
      slopes_[i] = (values_[i + 1] - values_[i - 1]) / (grid_[i + 1] - grid_[i - 1]);
  }
}

HistorySegment HistorySegment::constant(const Vec& value, double h, int npts) {
  std::vector<double> grid(npts);
  std::vector<Vec> vals(npts, value);
  for (int i = 0; i < npts; ++i) grid[i] = -h + h * i / (npts - 1);
  grid.back() = 0.0;
  return HistorySegment(std::move(grid), std::move(vals));
}

HistorySegment HistorySegment::sampled(const std::function<Vec(double)>& fn,
                                       double h, int npts) {
  std::vector<double> grid(npts);
  std::vector<Vec> vals(npts);
  for (int i = 0; i < npts; ++i) {
    grid[i] = -h + h * i / (npts - 1);
    if (i == npts - 1) grid[i] = 0.0;
    vals[i] = fn(grid[i]);
  }
  return HistorySegment(std::move(grid), std::move(vals));
}

Vec HistorySegment::eval(double theta) const {
  if (theta <= grid_.front()) return values_.front();
  if (theta >= 0) return values_.back();
  auto it = std::upper_bound(grid_.begin(), grid_.end(), theta);
  size_t i = size_t(it - grid_.begin()) - 1;
  return hermite(theta, grid_[i], grid_[i + 1], values_[i], values_[i + 1],
                 slopes_[i], slopes_[i + 1]);
}

Vec Trajectory::value(double t) const {
  if (t <= t_.front()) return history_.eval(t - t_.front());
  if (t >= t_.back()) return x_.back();
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  size_t i = size_t(it - t_.begin()) - 1;
  return hermite(t, t_[i], t_[i + 1], x_[i], x_[i + 1], f_[i], f_[i + 1]);
}

Vec Trajectory::derivative(double t) const {
  if (t <= t_.front()) return f_.front();
  if (t >= t_.back()) return f_.back();
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  size_t i = size_t(it - t_.begin()) - 1;
  return hermite_deriv(t, t_[i], t_[i + 1], x_[i], x_[i + 1], f_[i], f_[i + 1]);
}

Trajectory simulate(const DdeModel& model, const HistorySegment& history,
                    double t_end, double step, double blowup_norm) {
  if (!(t_end > 0)) throw InputError("simulate: t_end must be positive");
  if (!(step > 0)) throw InputError("simulate: step must be positive");
  if (model.num_delays() > 0 && history.span() < model.max_delay() - 1e-12)
    throw InputError("simulate: history shorter than the largest delay");

  // method of steps: lag arguments must precede the active step
  double h = step;
  if (model.num_delays() > 0) h = std::min(h, model.delays().front());
  long nsteps = long(std::ceil(t_end / h - 1e-12));
  h = t_end / double(nsteps);

  Trajectory traj;
  traj.history_ = history;
  traj.t_.reserve(nsteps + 1);
  traj.x_.reserve(nsteps + 1);
  traj.f_.reserve(nsteps + 1);

  const int m1 = model.num_args();
  Mat states(model.dim(), m1);

  auto lookup = [&](double t) -> Vec {
    if (t <= 0) return history.eval(t);
    if (!traj.t_.empty() && t <= traj.t_.back()) return traj.value(t);
    return traj.x_.empty() ? history.eval(0.0) : traj.x_.back();
  };
  auto eval_f = [&](double t, const Vec& x) -> Vec {
    states.col(0) = x;
    for (int j = 1; j < m1; ++j) states.col(j) = lookup(t - model.lag(j));
    return model.rhs(states);
  };

  Vec x = history.eval(0.0);
  traj.t_.push_back(0.0);
  traj.x_.push_back(x);
  traj.f_.push_back(eval_f(0.0, x));

  for (long k = 0; k < nsteps; ++k) {
    double t = traj.t_.back();
    const Vec& xk = traj.x_.back();
    Vec k1 = traj.f_.back();
    Vec k2 = eval_f(t + h / 2, xk + (h / 2) * k1);
    Vec k3 = eval_f(t + h / 2, xk + (h / 2) * k2);
    Vec k4 = eval_f(t + h, xk + h * k3);
    Vec xn = xk + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!xn.allFinite() || xn.norm() > blowup_norm)
      throw DivergenceError("simulate: trajectory norm exceeded " +
                            std::to_string(blowup_norm) + " at t = " +
                            std::to_string(t + h));
    traj.t_.push_back(t + h);
    traj.x_.push_back(xn);
    traj.f_.push_back(eval_f(t + h, xn));
  }
  return traj;
}

double estimate_period(const Trajectory& traj, double t_from) {
  const auto& t = traj.times();
  const auto& x = traj.states();
  double mean = 0;
  long count = 0;
  for (size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t_from) {
      mean += x[i][0];
      ++count;
    }
  if (count < 8) return 0.0;
  mean /= double(count);
  std::vector<double> crossings;
  for (size_t i = 1; i < t.size(); ++i) {
    if (t[i] < t_from) continue;
    double a = x[i - 1][0] - mean, b = x[i][0] - mean;
    if (a <= 0 && b > 0) {
      double frac = -a / (b - a);
      crossings.push_back(t[i - 1] + frac * (t[i] - t[i - 1]));
    }
  }
  if (crossings.size() < 3) return 0.0;
  // average of the trailing gaps
  size_t take = std::min<size_t>(crossings.size() - 1, 5);
  double acc = 0;
  for (size_t i = crossings.size() - take; i < crossings.size(); ++i)
    acc += crossings[i] - crossings[i - 1];
  return acc / double(take);
}

}  // namespace ddenf
