#pragma once

// Scenario sampling, the end-to-end optimisation pipeline, seeded parameter
// sweeps, and the text formats the command-line tool emits.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <system_error>
#include <span>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "fanet/error.hpp"
#include "fanet/linksel.hpp"
#include "fanet/model.hpp"
#include "fanet/power.hpp"
#include "fanet/routing.hpp"

namespace fanet {

// Shortest decimal form that round-trips; identical inputs give identical text.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct ScenarioConfig {
  double area_side_m = 20000.0;
  std::size_t n_uavs = 25;
  double altitude_m = 150.0;
  double min_separation_m = 500.0;
  std::uint64_t seed = 1;
  ChannelParams channel;
  double power_budget_w = 1.0;
  std::size_t trials = 100;
  SolverConfig solver;

  EdgeWeight spt_weight = EdgeWeight::distance;
  DistanceMode distance_mode = DistanceMode::planar;
  // Ground station; defaults to the midpoint of the square's bottom edge.
  std::optional<double> ground_x_m;
  std::optional<double> ground_y_m;
  std::size_t placement_retries = 100;  // connectivity resampling rounds
  std::size_t point_tries = 10000;      // rejection draws per UAV
  bool record_timing = false;           // wall_ms is 0 unless set

  double ground_x() const { return ground_x_m.value_or(area_side_m / 2.0); }
  double ground_y() const { return ground_y_m.value_or(0.0); }

  void validate() const {
    if (!(area_side_m > 0.0)) throw ConfigError("area side must be positive");
    if (n_uavs < 1) throw ConfigError("at least one UAV is required");
    if (!(altitude_m > 0.0)) throw ConfigError("altitude must be positive");
    if (!(min_separation_m >= 0.0 && min_separation_m < area_side_m))
      throw ConfigError("minimum separation must lie in [0, area side)");
    if (trials < 1) throw ConfigError("at least one trial is required");
    if (!(power_budget_w > 0.0)) throw ConfigError("power budget must be positive");
    if (placement_retries < 1 || point_tries < 1) throw ConfigError("retry budgets must be positive");
    channel.validate();
    solver.validate();
  }
};

struct Scenario {
  Topology topology;
  std::size_t attempts = 0;  // placement rounds used, 1 when the first draw is connected
};

// Uniform placement over the square with rejection for min separation;
// redrawn until every UAV can reach the ground station. A pure function of
// the config, and for a fixed seed the first draw of n UAVs is a prefix of
// the first draw of n+1.
inline Scenario generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> coord(0.0, cfg.area_side_m);
  const double gx = cfg.ground_x();
  const double gy = cfg.ground_y();
  const double sep2 = cfg.min_separation_m * cfg.min_separation_m;

  std::vector<std::pair<double, double>> xy;
  for (std::size_t attempt = 1; attempt <= cfg.placement_retries; ++attempt) {
    xy.clear();
    for (std::size_t i = 0; i < cfg.n_uavs; ++i) {
      bool placed = false;
      for (std::size_t tries = 0; tries < cfg.point_tries && !placed; ++tries) {
        const double x = coord(rng);
        const double y = coord(rng);
        if (x == gx && y == gy && cfg.distance_mode == DistanceMode::planar) continue;
        placed = std::all_of(xy.begin(), xy.end(), [&](const auto& q) {
          const double dx = q.first - x;
          const double dy = q.second - y;
          return dx * dx + dy * dy >= sep2;
        });
        if (placed) xy.emplace_back(x, y);
      }
      if (!placed)
        throw PlacementError("could not place UAV " + std::to_string(i + 1) + " of " + std::to_string(cfg.n_uavs) +
                             " at " + format_number(cfg.min_separation_m) +
                             " m separation; lower the UAV count or the separation");
    }
    Topology topo = build_topology(make_nodes(xy, cfg.altitude_m, {gx, gy}), cfg.channel, cfg.distance_mode);
    if (topo.connected()) return {std::move(topo), attempt};
  }
  throw PlacementError("no connected placement within " + std::to_string(cfg.placement_retries) +
                       " rounds; raise the link threshold or the UAV density");
}

struct PipelineResult {
  RoutingTree spt;
  PowerAllocation allocation;
  CandidateSet candidates;
  RelaxedLinkMatrix relaxed;
  RefinedTree refined;
  double throughput_p11_bps = 0.0;  // shortest-path tree with water-filled powers
  double throughput_p14_bps = 0.0;  // after link selection at the same powers
  std::size_t newton_iters = 0;
  double wall_ms = 0.0;
};

// Shortest-path tree, water-filling, candidate sets, barrier Newton, rounding.
inline PipelineResult run_pipeline(const Topology& t, const ScenarioConfig& cfg,
                                   std::vector<TraceRow>* trace = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  PipelineResult r;
  r.spt = build_spt(t, cfg.spt_weight);
  r.allocation = allocate_power(r.spt, t, cfg.power_budget_w);
  r.throughput_p11_bps = r.allocation.throughput_bps;
  r.candidates = build_candidates(r.spt, t, r.allocation);
  r.relaxed = newton_refine(r.candidates, r.allocation, cfg.solver, trace);
  r.refined = round_and_update(r.relaxed, r.candidates, r.spt, r.allocation, t);
  r.throughput_p14_bps = r.refined.throughput_bps;
  r.newton_iters = r.relaxed.iterations;
  if (cfg.record_timing)
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

struct SweepRow {
  double pb_watts = 0.0;
  std::size_t n_uavs = 0;
  std::uint64_t seed = 0;
  double throughput_p11_bps = 0.0;
  double throughput_p14_bps = 0.0;
  std::size_t newton_iters = 0;
  double wall_ms = 0.0;
};

struct SweepAggregate {
  double pb_watts = 0.0;
  std::size_t n_uavs = 0;
  std::size_t trials = 0;
  double mean_p11_bps = 0.0;
  double std_p11_bps = 0.0;
  double mean_p14_bps = 0.0;
  double std_p14_bps = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // grouped by (n, P_b), seeds ascending
  std::vector<SweepAggregate> aggregates;
};

struct SweepGrid {
  std::vector<double> budgets_w;
  std::vector<std::size_t> uav_counts;
};

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation; 0 for fewer than two values.
inline double stddev_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline std::vector<SweepAggregate> aggregate_rows(std::span<const SweepRow> rows) {
  std::vector<SweepAggregate> out;
  std::size_t begin = 0;
  while (begin < rows.size()) {
    std::size_t end = begin;
    while (end < rows.size() && rows[end].pb_watts == rows[begin].pb_watts && rows[end].n_uavs == rows[begin].n_uavs)
      ++end;
    std::vector<double> p11, p14;
    for (std::size_t i = begin; i < end; ++i) {
      p11.push_back(rows[i].throughput_p11_bps);
      p14.push_back(rows[i].throughput_p14_bps);
    }
    out.push_back({rows[begin].pb_watts, rows[begin].n_uavs, end - begin, mean_of(p11), stddev_of(p11),
                   mean_of(p14), stddev_of(p14)});
    begin = end;
  }
  return out;
}

namespace detail {

template <class E>
[[noreturn]] void rethrow_as(const E& e, const std::string& context) {
  if constexpr (std::is_same_v<E, ConvergenceError>) {
    throw ConvergenceError(context + ": " + e.what(), e.last_decrement());
  } else if constexpr (std::is_same_v<E, DisconnectedError>) {
    throw DisconnectedError(e.stranded());
  } else {
    throw E(context + ": " + e.what());
  }
}

inline void rethrow_with_context(std::exception_ptr ep, const std::string& context) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConvergenceError& e) {
    rethrow_as(e, context);
  } catch (const DisconnectedError& e) {
    rethrow_as(e, context);
  } catch (const PlacementError& e) {
    rethrow_as(e, context);
  } catch (const InfeasibleError& e) {
    rethrow_as(e, context);
  } catch (const DomainError& e) {
    rethrow_as(e, context);
  } catch (const ConfigError& e) {
    rethrow_as(e, context);
  }
}

}  // namespace detail

// Runs cfg.trials seeds (cfg.seed, cfg.seed + 1, ...) at every grid point.
// Placements depend only on the seed and UAV count, so all budgets at a given
// n see the same topologies. Output order is canonical for any `jobs`.
inline SweepResult sweep(const ScenarioConfig& cfg, const SweepGrid& grid, std::size_t jobs = 1) {
  cfg.validate();
  if (grid.budgets_w.empty() || grid.uav_counts.empty()) throw ConfigError("sweep ranges must be non-empty");
  for (double pb : grid.budgets_w)
    if (!(pb > 0.0)) throw ConfigError("power budgets must be positive");
  for (auto n : grid.uav_counts)
    if (n < 1) throw ConfigError("UAV counts must be positive");

  struct Job {
    std::size_t n;
    double pb;
    std::uint64_t seed;
  };
  std::vector<Job> work;
  for (auto n : grid.uav_counts)
    for (double pb : grid.budgets_w)
      for (std::size_t k = 0; k < cfg.trials; ++k) work.push_back({n, pb, cfg.seed + k});

  SweepResult result;
  result.rows.resize(work.size());
  std::vector<std::exception_ptr> failures(work.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t idx = next++; idx < work.size(); idx = next++) {
      const Job& job = work[idx];
      try {
        ScenarioConfig c = cfg;
        c.n_uavs = job.n;
        c.power_budget_w = job.pb;
        c.seed = job.seed;
        const Scenario sc = generate_scenario(c);
        const PipelineResult r = run_pipeline(sc.topology, c);
        result.rows[idx] = {job.pb, job.n, job.seed, r.throughput_p11_bps, r.throughput_p14_bps, r.newton_iters,
                            r.wall_ms};
      } catch (...) {
        failures[idx] = std::current_exception();
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, work.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  for (std::size_t idx = 0; idx < work.size(); ++idx) {
    if (!failures[idx]) continue;
    const Job& job = work[idx];
    detail::rethrow_with_context(failures[idx], "scenario n=" + std::to_string(job.n) + " pb=" +
                                                    format_number(job.pb) + " seed=" + std::to_string(job.seed));
    std::rethrow_exception(failures[idx]);
  }
  result.aggregates = aggregate_rows(result.rows);
  return result;
}

// ---------------------------------------------------------------------------
// Text formats

inline constexpr const char* kSweepCsvHeader =
    "pb_watts,n_uavs,seed,throughput_p11_bps,throughput_p14_bps,newton_iters,wall_ms";

inline constexpr const char* kAggregateCsvHeader =
    "pb_watts,n_uavs,trials,mean_p11_bps,std_p11_bps,mean_p14_bps,std_p14_bps";

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    os << format_number(r.pb_watts) << ',' << r.n_uavs << ',' << r.seed << ',' << format_number(r.throughput_p11_bps)
       << ',' << format_number(r.throughput_p14_bps) << ',' << r.newton_iters << ',' << format_number(r.wall_ms)
       << '\n';
  }
}

inline void write_aggregate_csv(std::ostream& os, std::span<const SweepAggregate> rows) {
  os << kAggregateCsvHeader << '\n';
  for (const auto& a : rows) {
    os << format_number(a.pb_watts) << ',' << a.n_uavs << ',' << a.trials << ',' << format_number(a.mean_p11_bps)
       << ',' << format_number(a.std_p11_bps) << ',' << format_number(a.mean_p14_bps) << ','
       << format_number(a.std_p14_bps) << '\n';
  }
}

// One line per UAV: uav_id,parent_id,distance_m,gain,power_w,rate_bps
inline void write_tree_dump(std::ostream& os, const RoutingTree& tree, const PowerAllocation& alloc,
                            const Topology& t) {
  for (std::size_t i = 0; i < tree.uav_count(); ++i) {
    const std::size_t p = tree.parent[i];
    const double h = t.gain(i, p);
    os << (i + 1) << ',' << (p + 1) << ',' << format_number(t.distance(i, p)) << ',' << format_number(h) << ','
       << format_number(alloc.power[i]) << ',' << format_number(link_capacity(alloc.power[i], h, t.channel()))
       << '\n';
  }
}

inline constexpr const char* kTraceCsvHeader = "uav_id,round,gamma,iteration,phi,decrement,step,residual";

inline void write_trace_csv(std::ostream& os, std::span<const TraceRow> rows) {
  os << kTraceCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.uav_id << ',' << r.round << ',' << format_number(r.gamma) << ',' << r.iteration << ','
       << format_number(r.phi) << ',' << format_number(r.decrement) << ',' << format_number(r.step) << ','
       << format_number(r.residual) << '\n';
  }
}

}  // namespace fanet
