#pragma once

// Brute-force references for small instances. Nothing here calls into the
// power or link-selection code: water-filling is redone by bisection on the
// water level and trees are enumerated directly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fanet/error.hpp"
#include "fanet/model.hpp"
#include "fanet/routing.hpp"

namespace fanet::oracle {

struct OracleResult {
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<double> best_powers;
  std::vector<std::size_t> best_parents;  // empty for the power oracle
  std::uint64_t evaluations = 0;
};

// Upper bound on grid points the power oracle will visit.
inline constexpr std::uint64_t kGridBudget = 400'000'000;

inline std::uint64_t simplex_grid_size(std::size_t links, std::uint64_t steps) {
  // C(steps + links - 1, links - 1), saturating.
  long double c = 1.0L;
  for (std::size_t j = 1; j < links; ++j) c = c * static_cast<long double>(steps + j) / static_cast<long double>(j);
  return c > 1e19L ? std::numeric_limits<std::uint64_t>::max() : static_cast<std::uint64_t>(std::llround(c));
}

// Exhaustive search over {P >= 0, sum P = budget} on a grid of spacing
// resolution * budget.
inline OracleResult grid_power_oracle(std::span<const double> gains, double budget_w, const ChannelParams& p,
                                      double resolution = 1e-3) {
  if (gains.empty()) throw ConfigError("power oracle needs at least one link");
  if (!(budget_w > 0.0)) throw ConfigError("power budget must be positive");
  if (!(resolution > 0.0 && resolution <= 1.0)) throw ConfigError("resolution must lie in (0, 1]");
  const auto steps = static_cast<std::uint64_t>(std::llround(1.0 / resolution));
  const std::size_t n = gains.size();
  if (simplex_grid_size(n, steps) > kGridBudget)
    throw ConfigError("too many links for the requested grid resolution");

  // Rate table per link and grid level; enumeration then only adds.
  const double noise = p.noise_density_w_per_hz * p.bandwidth_hz;
  std::vector<std::vector<double>> rate(n, std::vector<double>(steps + 1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint64_t s = 0; s <= steps; ++s) {
      const double pw = budget_w * static_cast<double>(s) / static_cast<double>(steps);
      rate[i][s] = p.bandwidth_hz * std::log2(1.0 + pw * gains[i] / noise);
    }

  OracleResult best;
  std::vector<std::uint64_t> level(n, 0), best_level(n, 0);
  // Depth-first over the first n-1 coordinates; the last takes the remainder.
  auto recurse = [&](auto&& self, std::size_t i, std::uint64_t left, double acc) -> void {
    if (i + 1 == n) {
      const double v = acc + rate[i][left];
      ++best.evaluations;
      level[i] = left;
      if (v > best.best_value) {
        best.best_value = v;
        best_level = level;
      }
      return;
    }
    for (std::uint64_t s = 0; s <= left; ++s) {
      level[i] = s;
      self(self, i + 1, left - s, acc + rate[i][s]);
    }
  };
  recurse(recurse, 0, steps, 0.0);

  best.best_powers.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    best.best_powers[i] = budget_w * static_cast<double>(best_level[i]) / static_cast<double>(steps);
  return best;
}

inline OracleResult grid_power_oracle(const RoutingTree& tree, const Topology& t, double budget_w,
                                      double resolution = 1e-3) {
  std::vector<double> gains(tree.uav_count());
  for (std::size_t i = 0; i < gains.size(); ++i) gains[i] = t.gain(i, tree.parent[i]);
  return grid_power_oracle(gains, budget_w, t.channel(), resolution);
}

// Optimal split by bisection on the water level W: P_i = max(0, W - noise/h_i).
inline std::vector<double> bisection_waterfill(std::span<const double> gains, double budget_w, const ChannelParams& p) {
  const double noise = p.noise_density_w_per_hz * p.bandwidth_hz;
  auto spent = [&](double level) {
    double s = 0.0;
    for (double h : gains) s += std::max(0.0, level - noise / h);
    return s;
  };
  double lo = 0.0;
  double hi = budget_w;
  for (double h : gains) hi = std::max(hi, budget_w + noise / h);
  for (int it = 0; it < 400 && lo < hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (spent(mid) < budget_w ? lo : hi) = mid;
  }
  const double level = 0.5 * (lo + hi);
  std::vector<double> powers(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) powers[i] = std::max(0.0, level - noise / gains[i]);
  return powers;
}

inline double sum_rate(std::span<const double> powers, std::span<const double> gains, const ChannelParams& p) {
  const double noise = p.noise_density_w_per_hz * p.bandwidth_hz;
  double total = 0.0;
  for (std::size_t i = 0; i < powers.size(); ++i) total += p.bandwidth_hz * std::log2(1.0 + powers[i] * gains[i] / noise);
  return total;
}

inline constexpr std::size_t kMaxEnumeratedUavs = 6;

// Every ground-rooted arborescence over admissible links, each water-filled;
// returns the best. Parent choices are enumerated as a mixed-radix counter
// and cyclic assignments are discarded.
inline OracleResult tree_enum_oracle(const Topology& t, double budget_w) {
  const std::size_t n = t.uav_count();
  if (n > kMaxEnumeratedUavs) throw ConfigError("tree enumeration is limited to 6 UAVs");
  if (!(budget_w > 0.0)) throw ConfigError("power budget must be positive");

  std::vector<std::vector<std::size_t>> choices(n);
  std::vector<std::size_t> stranded;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= n; ++j)
      if (j != i && t.admissible(i, j)) choices[i].push_back(j);
    if (choices[i].empty()) stranded.push_back(i + 1);
  }
  if (!stranded.empty()) throw DisconnectedError(std::move(stranded));

  OracleResult best;
  std::vector<std::size_t> digit(n, 0), parent(n);
  std::vector<double> gains(n);
  std::vector<int> state(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = choices[i][digit[i]];

    // 0 = unvisited, 1 = on current walk, 2 = known to reach the root.
    std::fill(state.begin(), state.end(), 0);
    bool acyclic = true;
    for (std::size_t i = 0; i < n && acyclic; ++i) {
      std::size_t cur = i;
      while (cur < n && state[cur] == 0) {
        state[cur] = 1;
        cur = parent[cur];
      }
      if (cur < n && state[cur] == 1) acyclic = false;
      for (std::size_t w = i; w < n && state[w] == 1; w = parent[w]) state[w] = 2;
    }

    if (acyclic) {
      for (std::size_t i = 0; i < n; ++i) gains[i] = t.gain(i, parent[i]);
      auto powers = bisection_waterfill(gains, budget_w, t.channel());
      const double v = sum_rate(powers, gains, t.channel());
      ++best.evaluations;
      if (v > best.best_value) {
        best.best_value = v;
        best.best_parents = parent;
        best.best_powers = std::move(powers);
      }
    }

    std::size_t pos = 0;
    while (pos < n && ++digit[pos] == choices[pos].size()) digit[pos++] = 0;
    if (pos == n) break;
  }
  if (best.best_parents.empty()) throw DisconnectedError(t.stranded_ids());
  return best;
}

// Best tree at fixed per-UAV powers: each UAV's rate depends only on its own
// parent, but acyclicity couples the choices, so this enumerates as well.
inline OracleResult tree_enum_fixed_power(const Topology& t, std::span<const double> powers) {
  const std::size_t n = t.uav_count();
  if (n > kMaxEnumeratedUavs) throw ConfigError("tree enumeration is limited to 6 UAVs");
  std::vector<std::vector<std::size_t>> choices(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= n; ++j)
      if (j != i && t.admissible(i, j)) choices[i].push_back(j);
  for (const auto& c : choices)
    if (c.empty()) throw DisconnectedError(t.stranded_ids());

  OracleResult best;
  best.best_powers.assign(powers.begin(), powers.end());
  std::vector<std::size_t> digit(n, 0), parent(n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = choices[i][digit[i]];
    bool acyclic = true;
    for (std::size_t i = 0; i < n && acyclic; ++i) {
      std::size_t cur = i;
      std::size_t steps = 0;
      while (cur < n && steps <= n) {
        cur = parent[cur];
        ++steps;
      }
      acyclic = cur == n;
    }
    if (acyclic) {
      double v = 0.0;
      const double noise = t.channel().noise_density_w_per_hz * t.channel().bandwidth_hz;
      for (std::size_t i = 0; i < n; ++i)
        v += t.channel().bandwidth_hz * std::log2(1.0 + powers[i] * t.gain(i, parent[i]) / noise);
      ++best.evaluations;
      if (v > best.best_value) {
        best.best_value = v;
        best.best_parents = parent;
      }
    }
    std::size_t pos = 0;
    while (pos < n && ++digit[pos] == choices[pos].size()) digit[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

}  // namespace fanet::oracle
