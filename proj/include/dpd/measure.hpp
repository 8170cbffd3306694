#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include "dpd/errors.hpp"
#include "dpd/game.hpp"
#include "dpd/meanfield.hpp"

namespace dpd {

// Weighted atoms on (wealth x strategy x dead), keyed exactly on the lattice,
// so pooling and comparison never suffer float drift in the support. The map
// key order makes iteration deterministic.
struct EmpiricalMeasure {
  std::map<std::tuple<std::int64_t, int, bool>, double> atoms;
  std::int64_t q = 1;
  std::uint64_t samples = 0;

  double total_weight() const {
    double t = 0.0;
    for (const auto& [k, w] : atoms) t += w;
    return t;
  }
};

inline EmpiricalMeasure empirical_measure(const std::vector<ParticleState>& particles,
                                          std::int64_t q) {
  if (particles.empty()) throw UsageError("empirical_measure: no particles");
  EmpiricalMeasure m;
  m.q = q;
  m.samples = particles.size();
  const double w = 1.0 / static_cast<double>(particles.size());
  for (const auto& p : particles) {
    if (p.wealth.den != q) throw UsageError("empirical_measure: wealth off the lattice");
    m.atoms[{p.wealth.num, p.strategy, !p.alive}] += w;
  }
  return m;
}

// Sample-count weighted pooling; skip_index == size() pools everything
// (the other values give the leave-one-out pools for jackknifing).
inline EmpiricalMeasure pool_measures(const std::vector<EmpiricalMeasure>& list,
                                      std::size_t skip_index) {
  if (list.empty()) throw UsageError("pool_measures: nothing to pool");
  EmpiricalMeasure out;
  out.q = list.front().q;
  std::uint64_t total = 0;
  for (std::size_t r = 0; r < list.size(); ++r) {
    if (r == skip_index) continue;
    if (list[r].q != out.q) throw UsageError("pool_measures: mixed lattices");
    total += list[r].samples;
  }
  if (total == 0) throw UsageError("pool_measures: empty pool");
  out.samples = total;
  for (std::size_t r = 0; r < list.size(); ++r) {
    if (r == skip_index) continue;
    double scale = static_cast<double>(list[r].samples) / static_cast<double>(total);
    for (const auto& [k, w] : list[r].atoms) out.atoms[k] += scale * w;
  }
  return out;
}

inline EmpiricalMeasure pool_measures(const std::vector<EmpiricalMeasure>& list) {
  return pool_measures(list, list.size());
}

// Mean-field state as a measure. Dead mass sits at wealth 0 with the dead
// flag, matching the PD clamp rule; tiny negative transients are clamped
// here, at the reporting boundary.
inline EmpiricalMeasure mf_measure(const MeanFieldState& s, const LatticeSpec& lat) {
  EmpiricalMeasure m;
  m.q = lat.q;
  m.samples = 1;
  for (std::size_t z = 0; z < lat.wealth.size(); ++z) {
    for (std::size_t i = 0; i < lat.wealth[z].size(); ++i) {
      double w = std::max(0.0, s.alive[z][i]);
      if (w > 0.0) m.atoms[{lat.wealth[z][i], static_cast<int>(z), false}] += w;
    }
    double d = std::max(0.0, s.dead[z]);
    if (d > 0.0) m.atoms[{0, static_cast<int>(z), true}] += d;
  }
  return m;
}

// alive + dead weight carried by one strategy
inline double strategy_mass(const EmpiricalMeasure& m, int strategy) {
  double t = 0.0;
  for (const auto& [k, w] : m.atoms)
    if (std::get<1>(k) == strategy) t += w;
  return t;
}

// Wealth distribution conditioned on a strategy (or on nothing when
// conditioning = -1), normalized. Dead atoms enter at their stored wealth,
// which the PD death rule pins to 0.
struct WealthMarginal {
  std::vector<std::pair<std::int64_t, double>> atoms;  // sorted by wealth numerator
  std::int64_t q = 1;
  int conditioning = -1;
  double condition_mass = 0.0;
};

inline WealthMarginal wealth_marginal(const EmpiricalMeasure& m, int conditioning = -1) {
  WealthMarginal out;
  out.q = m.q;
  out.conditioning = conditioning;
  std::map<std::int64_t, double> agg;
  for (const auto& [k, w] : m.atoms) {
    if (conditioning >= 0 && std::get<1>(k) != conditioning) continue;
    agg[std::get<0>(k)] += w;
    out.condition_mass += w;
  }
  if (out.condition_mass > 0.0)
    for (const auto& [num, w] : agg) out.atoms.emplace_back(num, w / out.condition_mass);
  return out;
}

namespace detail {

template <typename AtStep>
void walk_cdfs(const WealthMarginal& a, const WealthMarginal& b, AtStep at_step) {
  if (a.conditioning != b.conditioning)
    throw UsageError("distance between marginals with different conditioning");
  if (a.q != b.q) throw UsageError("distance between different wealth lattices");
  if (a.atoms.empty() || b.atoms.empty()) throw UsageError("distance from an empty marginal");
  double fa = 0.0, fb = 0.0;
  std::size_t ia = 0, ib = 0;
  bool first = true;
  std::int64_t prev = 0;
  while (ia < a.atoms.size() || ib < b.atoms.size()) {
    std::int64_t x;
    if (ib == b.atoms.size() || (ia < a.atoms.size() && a.atoms[ia].first <= b.atoms[ib].first))
      x = a.atoms[ia].first;
    else
      x = b.atoms[ib].first;
    if (!first) at_step(prev, x, fa, fb);
    while (ia < a.atoms.size() && a.atoms[ia].first == x) fa += a.atoms[ia++].second;
    while (ib < b.atoms.size() && b.atoms[ib].first == x) fb += b.atoms[ib++].second;
    prev = x;
    first = false;
  }
}

}  // namespace detail

// W1 as the area between the two CDF step functions on the merged support.
inline double wasserstein1(const WealthMarginal& a, const WealthMarginal& b) {
  double w1 = 0.0;
  detail::walk_cdfs(a, b, [&](std::int64_t lo, std::int64_t hi, double fa, double fb) {
    w1 += std::abs(fa - fb) * static_cast<double>(hi - lo);
  });
  return w1 / static_cast<double>(a.q);
}

// Kolmogorov-Smirnov: the largest CDF gap on the merged support.
inline double ks_distance(const WealthMarginal& a, const WealthMarginal& b) {
  double ks = 0.0;
  detail::walk_cdfs(a, b, [&](std::int64_t, std::int64_t, double fa, double fb) {
    ks = std::max(ks, std::abs(fa - fb));
  });
  return ks;
}

}  // namespace dpd
