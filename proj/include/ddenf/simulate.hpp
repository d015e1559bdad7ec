#pragma once

#include <functional>
#include <vector>

#include "ddenf/model.hpp"

namespace ddenf {

/// Initial data on [-h, 0] with piecewise-cubic interpolation.
class HistorySegment {
 public:
  HistorySegment() = default;
  HistorySegment(std::vector<double> grid, std::vector<Vec> values);

  static HistorySegment constant(const Vec& value, double h, int npts = 8);
  static HistorySegment sampled(const std::function<Vec(double)>& fn, double h,
                                int npts = 64);

  double span() const { return grid_.empty() ? 0.0 : -grid_.front(); }
  int dim() const { return values_.empty() ? 0 : int(values_.front().size()); }
  Vec eval(double theta) const;

 private:
  std::vector<double> grid_;   // ascending, grid_.front() = -h, grid_.back() = 0
  std::vector<Vec> values_;
  std::vector<Vec> slopes_;    // finite-difference slopes for Hermite pieces
};

/// Dense method-of-steps solution on [0, t_end]; fourth-order fixed-step
/// one-step scheme with cubic Hermite interpolation between steps.
class Trajectory {
 public:
  double t_begin() const { return t_.front(); }
  double t_end() const { return t_.back(); }
  int dim() const { return x_.empty() ? 0 : int(x_.front().size()); }
  Vec value(double t) const;        // valid on [-history span, t_end]
  Vec derivative(double t) const;

  const std::vector<double>& times() const { return t_; }
  const std::vector<Vec>& states() const { return x_; }

 private:
  friend Trajectory simulate(const DdeModel&, const HistorySegment&, double,
                             double, double);
  std::vector<double> t_;
  std::vector<Vec> x_, f_;
  HistorySegment history_;
};

Trajectory simulate(const DdeModel& model, const HistorySegment& history,
                    double t_end, double step, double blowup_norm = 1e7);

/// Crude period estimate from mean-crossings of the first state component on
/// the trailing window of a trajectory; 0 when no oscillation is found.
double estimate_period(const Trajectory& traj, double t_from);

}  // namespace ddenf
