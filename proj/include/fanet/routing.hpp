#pragma once

// Bellman-Ford shortest-path tree towards the ground station, plus the
// structural checks every routing tree in the pipeline must pass.

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "fanet/error.hpp"
#include "fanet/model.hpp"

namespace fanet {

inline constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

enum class EdgeWeight { distance, hops };

// Parent index per UAV (index into Topology nodes; the ground station is uav_count()).
struct RoutingTree {
  std::vector<std::size_t> parent;
  std::vector<double> path_cost;

  std::size_t uav_count() const noexcept { return parent.size(); }

  // True when `node` lies on the parent chain of `uav` (or is `uav` itself).
  // Walks at most uav_count() steps so a cyclic map cannot hang.
  bool is_ancestor_or_self(std::size_t node, std::size_t uav) const {
    std::size_t cur = uav;
    for (std::size_t steps = 0; steps <= parent.size(); ++steps) {
      if (cur == node) return true;
      if (cur >= parent.size()) return false;
      cur = parent[cur];
    }
    return false;
  }
};

struct TreeReport {
  bool single_parent = true;   // each UAV has exactly one valid parent
  bool rooted = true;          // every parent chain ends at the ground station
  bool loop_free = true;       // no cycles, no mutual parenthood
  bool admissible = true;      // every parent link is within the threshold
  std::vector<std::string> violations;

  bool ok() const noexcept { return single_parent && rooted && loop_free && admissible; }
};

inline TreeReport validate_tree(const RoutingTree& tree, const Topology& t) {
  TreeReport r;
  const std::size_t n = t.uav_count();
  const std::size_t gs = t.ground_index();
  auto id = [](std::size_t idx) { return std::to_string(idx + 1); };

  if (tree.parent.size() != n) {
    r.single_parent = false;
    r.rooted = false;
    r.violations.push_back("single parent: parent map covers " + std::to_string(tree.parent.size()) +
                           " UAVs, topology has " + std::to_string(n));
    return r;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = tree.parent[i];
    if (p == kNoParent || p > gs || p == i) {
      r.single_parent = false;
      r.violations.push_back("single parent: UAV " + id(i) + " has no valid parent");
      continue;
    }
    if (!t.admissible(i, p)) {
      r.admissible = false;
      r.violations.push_back("threshold: link " + id(i) + "->" + id(p) + " exceeds the distance threshold");
    }
    if (p < n && tree.parent[p] == i) {
      r.loop_free = false;
      if (i < p) r.violations.push_back("loop: UAVs " + id(i) + " and " + id(p) + " are mutual parents");
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t cur = i;
    std::size_t steps = 0;
    while (cur < n && steps <= n) {
      const std::size_t p = tree.parent[cur];
      if (p == kNoParent || p > gs || p == cur) break;
      cur = p;
      ++steps;
    }
    if (cur == gs) continue;
    r.rooted = false;
    if (steps > n) {
      r.loop_free = false;
      r.violations.push_back("loop: parent chain of UAV " + id(i) + " contains a cycle");
    } else {
      r.violations.push_back("rooted: parent chain of UAV " + id(i) + " does not reach the ground station");
    }
  }
  return r;
}

inline double edge_weight(const Topology& t, std::size_t i, std::size_t j, EdgeWeight w) {
  return w == EdgeWeight::hops ? 1.0 : t.distance(i, j);
}

// Shortest-path tree rooted at the ground station over admissible links.
// Ties between equally short parents go to the lower node id.
inline RoutingTree build_spt(const Topology& t, EdgeWeight weight = EdgeWeight::distance) {
  const std::size_t n = t.uav_count();
  const std::size_t gs = t.ground_index();
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> cost(n + 1, inf);
  cost[gs] = 0.0;
  // Relaxation passes until a fixed point; at most n passes are needed.
  for (std::size_t pass = 0; pass <= n; ++pass) {
    bool changed = false;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v <= n; ++v) {
        if (v == u || cost[v] == inf || !t.admissible(u, v)) continue;
        const double c = cost[v] + edge_weight(t, u, v, weight);
        if (c < cost[u]) {
          cost[u] = c;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }

  std::vector<std::size_t> stranded;
  for (std::size_t u = 0; u < n; ++u)
    if (cost[u] == inf) stranded.push_back(u + 1);
  if (!stranded.empty()) throw DisconnectedError(std::move(stranded));

  RoutingTree tree;
  tree.parent.assign(n, kNoParent);
  tree.path_cost.assign(cost.begin(), cost.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t u = 0; u < n; ++u) {
    double best = inf;
    for (std::size_t v = 0; v <= n; ++v) {
      if (v == u || !t.admissible(u, v) || !(cost[v] < cost[u])) continue;
      const double c = cost[v] + edge_weight(t, u, v, weight);
      if (c < best) {
        best = c;
        tree.parent[u] = v;
      }
    }
  }
  return tree;
}

}  // namespace fanet
