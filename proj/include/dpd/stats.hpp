#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "dpd/errors.hpp"

namespace dpd {

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw UsageError("mean of nothing");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) throw UsageError("variance needs at least 2 samples");
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Jackknife standard error of any statistic: leave_one_out(i) must return the
// statistic recomputed without replica i.
template <typename F>
double jackknife_se(std::size_t n, F leave_one_out) {
  if (n < 2) throw UsageError("jackknife needs at least 2 replicas");
  std::vector<double> theta(n);
  double bar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    theta[i] = leave_one_out(i);
    bar += theta[i];
  }
  bar /= static_cast<double>(n);
  double s = 0.0;
  for (double t : theta) s += (t - bar) * (t - bar);
  return std::sqrt(s * static_cast<double>(n - 1) / static_cast<double>(n));
}

struct CovEstimate {
  double estimate = 0.0;
  double se = std::numeric_limits<double>::quiet_NaN();  // NaN below 3 replicas
};

// Unbiased sample covariance across replicas with a jackknife standard error,
// computed from sufficient statistics so the leave-one-out loop is O(n).
inline CovEstimate pair_covariance(const std::vector<std::pair<double, double>>& xy) {
  const std::size_t n = xy.size();
  if (n < 2) throw UsageError("pair_covariance needs at least 2 replicas");
  double sx = 0.0, sy = 0.0, sxy = 0.0;
  for (const auto& [x, y] : xy) {
    sx += x;
    sy += y;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  CovEstimate out;
  out.estimate = (sxy - sx * sy / dn) / (dn - 1.0);
  if (n >= 3) {
    out.se = jackknife_se(n, [&](std::size_t i) {
      double x = xy[i].first, y = xy[i].second;
      double m = dn - 1.0;
      return (sxy - x * y - (sx - x) * (sy - y) / m) / (m - 1.0);
    });
  }
  return out;
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw UsageError("loglog_slope: bad inputs");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw UsageError("loglog_slope: inputs must be positive");
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  double mx = mean(lx), my = mean(ly);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  if (den == 0.0) throw UsageError("loglog_slope: degenerate x grid");
  return num / den;
}

}  // namespace dpd
