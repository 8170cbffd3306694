#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "dpd/errors.hpp"
#include "dpd/rational.hpp"

namespace dpd {

// Simple undirected connected graph. Movement on a torus bypasses the
// adjacency lists (see torus_move_target); general graphs walk uniform
// neighbors.
struct Graph {
  std::uint32_t n = 0;
  std::vector<std::vector<std::uint32_t>> adj;  // sorted, deduplicated

  std::size_t edge_count() const {
    std::size_t deg_sum = 0;
    for (const auto& a : adj) deg_sum += a.size();
    return deg_sum / 2;
  }
};

inline Graph make_graph(std::uint32_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  if (n == 0) throw ConfigError("graph: vertex count must be positive");
  Graph g;
  g.n = n;
  g.adj.assign(n, {});
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) throw ConfigError("graph: edge endpoint out of range");
    if (u == v) throw ConfigError("graph: self-loop at vertex " + std::to_string(u));
    g.adj[u].push_back(v);
    g.adj[v].push_back(u);
  }
  for (std::uint32_t v = 0; v < n; ++v) {
    auto& a = g.adj[v];
    std::sort(a.begin(), a.end());
    if (std::adjacent_find(a.begin(), a.end()) != a.end())
      throw ConfigError("graph: duplicate edge at vertex " + std::to_string(v));
  }
  // connectivity
  std::vector<char> seen(n, 0);
  std::queue<std::uint32_t> q;
  q.push(0);
  seen[0] = 1;
  std::uint32_t reached = 1;
  while (!q.empty()) {
    std::uint32_t v = q.front();
    q.pop();
    for (std::uint32_t w : g.adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        q.push(w);
      }
  }
  if (reached != n) throw ConfigError("graph: not connected");
  return g;
}

// (Z/mZ)^2 as a simple graph; vertex (i,j) is i*m + j. For m in {1,2} the
// four directional neighbors coincide and collapse to the simple-graph edge
// set, but directional movement still uses all four moves.
inline Graph torus_graph(std::uint32_t m) {
  if (m == 0) throw ConfigError("torus: side must be positive");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t i = 0; i < m; ++i)
    for (std::uint32_t j = 0; j < m; ++j) {
      std::uint32_t v = i * m + j;
      std::uint32_t right = i * m + (j + 1) % m;
      std::uint32_t down = ((i + 1) % m) * m + j;
      if (right != v) edges.emplace_back(std::min(v, right), std::max(v, right));
      if (down != v) edges.emplace_back(std::min(v, down), std::max(v, down));
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return make_graph(m * m, edges);
}

// Target of one directional move on the torus; directions are +i, -i, +j, -j
// each taken at rate d/4.
inline std::uint32_t torus_move_target(std::uint32_t m, std::uint32_t v, int dir) {
  std::uint32_t i = v / m, j = v % m;
  switch (dir) {
    case 0: i = (i + 1) % m; break;
    case 1: i = (i + m - 1) % m; break;
    case 2: j = (j + 1) % m; break;
    default: j = (j + m - 1) % m; break;
  }
  return i * m + j;
}

// pi(x) = deg(x) / (2|E|), the unique invariant law of the uniform-neighbor
// walk on a connected graph. Single vertex: pi = (1).
inline std::vector<Rational> stationary_distribution(const Graph& g) {
  if (g.n == 1) return {Rational(1)};
  std::int64_t two_e = 0;
  for (const auto& a : g.adj) two_e += static_cast<std::int64_t>(a.size());
  std::vector<Rational> pi;
  pi.reserve(g.n);
  for (const auto& a : g.adj) pi.emplace_back(static_cast<std::int64_t>(a.size()), two_e);
  return pi;
}

// m = sum_x pi(x)^2: the stationary probability that two independent walkers
// share a site. Uniform pi on a torus gives 1/m^2.
inline Rational collision_mass(const Graph& g) {
  Rational total(0);
  for (const auto& p : stationary_distribution(g)) total = total + p * p;
  return total;
}

}  // namespace dpd
