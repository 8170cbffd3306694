#pragma once

#include <cstdint>
#include <vector>

#include "dpd/errors.hpp"
#include "dpd/events.hpp"
#include "dpd/game.hpp"

namespace dpd {

struct Snapshot {
  double time = 0.0;
  std::vector<ParticleState> particles;
};

// Recorded run. Snapshots are right-continuous: the state at a requested time
// includes every event up to and including that instant. The dense event log
// is kept only when requested; with it, the whole path is reconstructible.
struct Trajectory {
  std::vector<Snapshot> snapshots;
  EventCounts counts;
  std::vector<std::uint64_t> games_per_particle;
  std::vector<ParticleState> initial;
  std::vector<Event> events;  // empty unless recording was on
  double horizon = 0.0;
  std::uint64_t seed = 0;
};

// Fraction of [0, horizon] that particle i spends in the site set S,
// reconstructed from the dense event log by walking move targets.
inline double occupation_fraction(const Trajectory& traj, std::uint32_t particle,
                                  const std::vector<std::uint32_t>& sites,
                                  std::uint32_t vertex_count) {
  if (traj.horizon <= 0.0) throw UsageError("occupation_fraction: empty time window");
  if (particle >= traj.initial.size()) throw UsageError("occupation_fraction: no such particle");
  std::vector<char> in_set(vertex_count, 0);
  for (std::uint32_t s : sites) {
    if (s >= vertex_count) throw UsageError("occupation_fraction: site out of range");
    in_set[s] = 1;
  }
  double t = 0.0;
  double occupied = 0.0;
  std::uint32_t pos = traj.initial[particle].position;
  for (const Event& ev : traj.events) {
    double t_next = t + ev.dt;
    if (t_next > traj.horizon) t_next = traj.horizon;
    if (in_set[pos]) occupied += t_next - t;
    t = t_next;
    if (ev.kind == EventKind::move && ev.a == particle) pos = ev.b;
  }
  if (t < traj.horizon && in_set[pos]) occupied += traj.horizon - t;
  return occupied / traj.horizon;
}

}  // namespace dpd
