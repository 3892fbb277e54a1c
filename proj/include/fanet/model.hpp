#pragma once

// Scenario geometry, the free-space channel model and link admissibility.
//
// Indexing convention used throughout the library: UAVs occupy indices
// 0..n-1 and carry ids 1..n; the ground station is index n with id n+1.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fanet/error.hpp"

namespace fanet {

inline constexpr double kSpeedOfLight = 3.0e8;  // m/s

enum class Role : std::uint8_t { uav, ground_station };

enum class DistanceMode : std::uint8_t {
  planar,  // horizontal separation only
  full3d,  // includes the altitude difference
};

struct Node {
  std::size_t id = 0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  Role role = Role::uav;
};

// Free-space channel parameters in linear SI units.
struct ChannelParams {
  double bandwidth_hz = 10.0e6;
  double noise_density_w_per_hz = 3.981071705534985e-21;  // -174 dBm/Hz
  double ref_gain = 5.699316579881499e-4;                 // (c / 4 pi f)^2 at 1 GHz
  double pathloss_exponent = 2.0;
  double link_threshold_m = 6000.0;

  void validate() const {
    if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
    if (!(noise_density_w_per_hz > 0.0)) throw ConfigError("noise density must be positive");
    if (!(ref_gain > 0.0)) throw ConfigError("reference gain must be positive");
    if (!(pathloss_exponent >= 2.0)) throw ConfigError("path-loss exponent must be >= 2");
    if (!(link_threshold_m > 0.0)) throw ConfigError("link threshold must be positive");
  }

  // Noise power over the full band, sigma^2 * B.
  double noise_power_w() const noexcept { return noise_density_w_per_hz * bandwidth_hz; }
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1.0e-3; }

// Received power at 1 m for free-space propagation at carrier frequency f.
inline double reference_gain_for_frequency(double carrier_hz) {
  if (!(carrier_hz > 0.0)) throw ConfigError("carrier frequency must be positive");
  const double wavelength_factor = kSpeedOfLight / (4.0 * std::numbers::pi * carrier_hz);
  return wavelength_factor * wavelength_factor;
}

inline double distance(const Node& a, const Node& b, DistanceMode mode = DistanceMode::planar) {
  if (a.id == b.id) throw DomainError("distance of a node to itself is undefined");
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  double sq = dx * dx + dy * dy;
  if (mode == DistanceMode::full3d) {
    const double dz = a.z - b.z;
    sq += dz * dz;
  }
  return std::sqrt(sq);
}

inline double channel_gain(double distance_m, const ChannelParams& p) {
  if (!(distance_m > 0.0)) throw DomainError("channel gain is singular at zero distance");
  if (p.pathloss_exponent == 2.0) return p.ref_gain / (distance_m * distance_m);
  return p.ref_gain / std::pow(distance_m, p.pathloss_exponent);
}

// Shannon capacity in bits/s of a link with transmit power `power_w` and gain `gain`.
inline double link_capacity(double power_w, double gain, const ChannelParams& p) {
  if (power_w < 0.0) throw ConfigError("transmit power must be non-negative");
  if (!(gain > 0.0)) throw ConfigError("channel gain must be positive");
  return p.bandwidth_hz * std::log2(1.0 + power_w * gain / p.noise_power_w());
}

// Nodes plus the pairwise distance, gain and admissibility tables.
class Topology {
 public:
  Topology() = default;

  std::size_t uav_count() const noexcept { return uav_count_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t ground_index() const noexcept { return uav_count_; }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(std::size_t index) const { return nodes_.at(index); }
  const ChannelParams& channel() const noexcept { return channel_; }
  DistanceMode distance_mode() const noexcept { return mode_; }

  // Entries are symmetric; the diagonal is 0 / non-admissible.
  double distance(std::size_t i, std::size_t j) const { return distance_[at(i, j)]; }
  double gain(std::size_t i, std::size_t j) const { return gain_[at(i, j)]; }
  bool admissible(std::size_t i, std::size_t j) const { return incidence_[at(i, j)] != 0; }

  // Admissible neighbours of `i` (UAVs and possibly the ground station), ascending.
  std::vector<std::size_t> neighbours(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < node_count(); ++j)
      if (admissible(i, j)) out.push_back(j);
    return out;
  }

  // Ids of UAVs with no admissible path to the ground station (breadth-first).
  std::vector<std::size_t> stranded_ids() const {
    std::vector<bool> seen(node_count(), false);
    std::queue<std::size_t> frontier;
    seen[ground_index()] = true;
    frontier.push(ground_index());
    while (!frontier.empty()) {
      const auto u = frontier.front();
      frontier.pop();
      for (std::size_t v = 0; v < node_count(); ++v) {
        if (!seen[v] && admissible(u, v)) {
          seen[v] = true;
          frontier.push(v);
        }
      }
    }
    std::vector<std::size_t> stranded;
    for (std::size_t i = 0; i < uav_count_; ++i)
      if (!seen[i]) stranded.push_back(nodes_[i].id);
    return stranded;
  }

  bool connected() const { return stranded_ids().empty(); }

 private:
  friend Topology build_topology(std::vector<Node>, const ChannelParams&, DistanceMode);

  std::size_t at(std::size_t i, std::size_t j) const {
    if (i >= node_count() || j >= node_count()) throw ConfigError("node index out of range");
    return i * node_count() + j;
  }

  std::vector<Node> nodes_;
  std::size_t uav_count_ = 0;
  ChannelParams channel_;
  DistanceMode mode_ = DistanceMode::planar;
  std::vector<double> distance_;
  std::vector<double> gain_;
  std::vector<unsigned char> incidence_;
};

// Builds nodes in canonical order: UAVs with ids 1..n at altitude H, then the ground station.
inline std::vector<Node> make_nodes(std::span<const std::pair<double, double>> uav_xy,
                                    double altitude_m,
                                    std::pair<double, double> ground_xy) {
  std::vector<Node> nodes;
  nodes.reserve(uav_xy.size() + 1);
  for (std::size_t i = 0; i < uav_xy.size(); ++i)
    nodes.push_back({i + 1, uav_xy[i].first, uav_xy[i].second, altitude_m, Role::uav});
  nodes.push_back({uav_xy.size() + 1, ground_xy.first, ground_xy.second, 0.0, Role::ground_station});
  return nodes;
}

// Expects nodes in canonical order (see make_nodes).
inline Topology build_topology(std::vector<Node> nodes, const ChannelParams& p,
                               DistanceMode mode = DistanceMode::planar) {
  p.validate();
  if (nodes.size() < 2) throw ConfigError("need at least one UAV and a ground station");
  const std::size_t n = nodes.size() - 1;
  const double altitude = nodes.front().z;
  if (!(altitude > 0.0)) throw ConfigError("UAV altitude must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    const Node& u = nodes[i];
    if (u.role != Role::uav) throw ConfigError("exactly one ground station, placed last, is required");
    if (u.id != i + 1) throw ConfigError("UAV ids must be 1..n in order");
    if (u.z != altitude) throw ConfigError("all UAVs must share a single altitude");
  }
  const Node& gs = nodes.back();
  if (gs.role != Role::ground_station || gs.id != n + 1)
    throw ConfigError("ground station must be the last node with id n+1");
  if (gs.z != 0.0) throw ConfigError("ground station must sit at z = 0");

  Topology t;
  t.uav_count_ = n;
  t.channel_ = p;
  t.mode_ = mode;
  const std::size_t m = n + 1;
  t.distance_.assign(m * m, 0.0);
  t.gain_.assign(m * m, 0.0);
  t.incidence_.assign(m * m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = distance(nodes[i], nodes[j], mode);
      if (!(d > 0.0))
        throw ConfigError("nodes " + std::to_string(nodes[i].id) + " and " +
                          std::to_string(nodes[j].id) + " coincide");
      const double h = channel_gain(d, p);
      const unsigned char a = d <= p.link_threshold_m ? 1 : 0;
      t.distance_[i * m + j] = t.distance_[j * m + i] = d;
      t.gain_[i * m + j] = t.gain_[j * m + i] = h;
      t.incidence_[i * m + j] = t.incidence_[j * m + i] = a;
    }
  }
  t.nodes_ = std::move(nodes);
  return t;
}

}  // namespace fanet
