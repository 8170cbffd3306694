#pragma once

#include <cstdint>

namespace dpd {

enum class EventKind : std::uint8_t { none, move, game };

// One sampled transition, self-contained for replay: applying a recorded
// event stream to the same initial state reproduces the trajectory with no
// RNG involved. Moves store the target vertex; games store the ordered pair
// (a DD coin head punishes player `a`) and the two outcome uniforms.
struct Event {
  double dt = 0.0;
  EventKind kind = EventKind::none;
  std::uint32_t a = 0;  // mover (move) or first player (game)
  std::uint32_t b = 0;  // target vertex (move) or second player (game)
  double u1 = 0.0;      // first action draw; doubles as the DD coin (u1 < 1/2 = head)
  double u2 = 0.0;      // second action draw; unused by the PD rule
};

struct EventCounts {
  std::uint64_t moves = 0;
  std::uint64_t games_cc = 0;
  std::uint64_t games_cd = 0;
  std::uint64_t games_dd = 0;
  std::uint64_t games_general = 0;

  std::uint64_t games() const { return games_cc + games_cd + games_dd + games_general; }
};

}  // namespace dpd
