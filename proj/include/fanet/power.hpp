#pragma once

// Closed-form water-filling of a total power budget over the links of a
// routing tree, with iterative active-set clamping of links that would
// otherwise receive negative power.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "fanet/error.hpp"
#include "fanet/model.hpp"
#include "fanet/routing.hpp"

namespace fanet {

// Powers at or below this are treated as zero during active-set clamping.
inline constexpr double kClampTolerance = 1e-12;

struct PowerAllocation {
  std::vector<double> power;      // W per UAV, on its parent link
  std::vector<double> gain;       // parent-link gain used for the allocation
  double water_level_lambda = 0;  // multiplier of the budget constraint
  std::vector<bool> active;       // true where power > 0
  double throughput_bps = 0;

  std::size_t active_count() const {
    return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
  }
};

// Water-fills `budget_w` over parallel links with the given gains.
// The returned allocation has throughput filled in.
inline PowerAllocation waterfill(std::span<const double> gains, double budget_w, const ChannelParams& p) {
  if (!(budget_w > 0.0)) throw ConfigError("power budget must be positive");
  if (gains.empty()) throw ConfigError("water-filling needs at least one link");
  for (double h : gains)
    if (!(h > 0.0)) throw ConfigError("link gains must be positive");

  const std::size_t n = gains.size();
  const double bw = p.bandwidth_hz;
  const double s2 = p.noise_density_w_per_hz;

  PowerAllocation a;
  a.gain.assign(gains.begin(), gains.end());
  a.power.assign(n, 0.0);
  a.active.assign(n, true);

  // The active set only shrinks, so this runs at most n times.
  for (;;) {
    std::size_t count = 0;
    double inv_gain_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!a.active[i]) continue;
      ++count;
      inv_gain_sum += s2 / gains[i];
    }
    // Cannot happen for a positive budget: the best link alone always stays positive.
    if (count == 0) throw Error("water-filling emptied the active set");

    a.water_level_lambda = static_cast<double>(count) / (budget_w / bw + inv_gain_sum);
    bool clamped = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!a.active[i]) continue;
      const double pw = bw / a.water_level_lambda - s2 * bw / gains[i];
      if (pw <= kClampTolerance) {
        a.active[i] = false;
        a.power[i] = 0.0;
        clamped = true;
      } else {
        a.power[i] = pw;
      }
    }
    if (!clamped) break;
  }

  // Rounding residual of the budget goes to the largest active power.
  double total = 0.0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += a.power[i];
    if (a.power[i] > a.power[largest]) largest = i;
  }
  a.power[largest] += budget_w - total;

  for (std::size_t i = 0; i < n; ++i) a.throughput_bps += link_capacity(a.power[i], gains[i], p);
  return a;
}

// Water-fills the budget over each UAV's parent link in `tree`.
inline PowerAllocation allocate_power(const RoutingTree& tree, const Topology& t, double budget_w) {
  if (tree.uav_count() != t.uav_count()) throw ConfigError("tree does not match topology");
  std::vector<double> gains(tree.uav_count());
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const std::size_t par = tree.parent[i];
    if (par == kNoParent || par > t.ground_index() || par == i)
      throw ConfigError("UAV " + std::to_string(i + 1) + " has no valid parent");
    gains[i] = t.gain(i, par);
  }
  return waterfill(gains, budget_w, t.channel());
}

// Sum of parent-link capacities under the allocation's powers.
inline double network_throughput(const PowerAllocation& alloc, const RoutingTree& tree, const Topology& t) {
  if (alloc.power.size() != tree.uav_count()) throw ConfigError("allocation does not match tree");
  double total = 0.0;
  for (std::size_t i = 0; i < tree.uav_count(); ++i)
    total += link_capacity(alloc.power[i], t.gain(i, tree.parent[i]), t.channel());
  return total;
}

}  // namespace fanet
