#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fanet/fanet.hpp"

namespace {

using namespace fanet;

enum Exit : int { kOk = 0, kFailed = 1, kConfig = 2, kDisconnected = 3, kNoConvergence = 4 };

struct Options {
  ScenarioConfig cfg;
  double noise_dbm_hz = -174.0;
  double carrier_hz = 0.0;
  double alpha0 = 0.0;
  double gs_x = 0.0;
  double gs_y = 0.0;
  std::string distance_mode = "planar";
  std::string spt_weight = "distance";
};

void add_scenario_options(CLI::App& app, Options& o) {
  auto& c = o.cfg;
  app.add_option("--area", c.area_side_m, "side of the square area in metres")->capture_default_str();
  app.add_option("-n,--uavs", c.n_uavs, "number of UAVs")->capture_default_str();
  app.add_option("--altitude", c.altitude_m, "UAV altitude in metres")->capture_default_str();
  app.add_option("--separation", c.min_separation_m, "minimum UAV separation in metres")->capture_default_str();
  app.add_option("--seed", c.seed, "placement seed")->capture_default_str();
  app.add_option("--pb", c.power_budget_w, "total power budget in watts")->capture_default_str();
  app.add_option("--trials", c.trials, "seeds per sweep grid point")->capture_default_str();

  app.add_option("--bandwidth", c.channel.bandwidth_hz, "system bandwidth in Hz")->capture_default_str();
  app.add_option("--noise-dbm-hz", o.noise_dbm_hz, "noise spectral density in dBm/Hz")->capture_default_str();
  auto* carrier = app.add_option("--carrier-hz", o.carrier_hz, "carrier frequency; sets the reference gain");
  app.add_option("--alpha0", o.alpha0, "reference channel gain at 1 m")->excludes(carrier);
  app.add_option("--pathloss", c.channel.pathloss_exponent, "path-loss exponent")->capture_default_str();
  app.add_option("--dth", c.channel.link_threshold_m, "link distance threshold in metres")->capture_default_str();

  app.add_option("--gs-x", o.gs_x, "ground station x (default: area / 2)");
  app.add_option("--gs-y", o.gs_y, "ground station y (default: 0)");
  app.add_option("--distance-mode", o.distance_mode, "planar or 3d")
      ->check(CLI::IsMember({"planar", "3d"}))
      ->capture_default_str();
  app.add_option("--spt-weight", o.spt_weight, "distance or hops")
      ->check(CLI::IsMember({"distance", "hops"}))
      ->capture_default_str();
  app.add_option("--placement-retries", c.placement_retries, "connectivity resampling rounds")->capture_default_str();

  auto& s = c.solver;
  app.add_option("--gamma-init", s.gamma_init, "initial barrier gamma")->capture_default_str();
  app.add_option("--gamma-growth", s.gamma_growth, "gamma multiplier per round")->capture_default_str();
  app.add_option("--barrier-rounds", s.barrier_rounds, "barrier rounds")->capture_default_str();
  app.add_option("--epsilon", s.epsilon_decrement, "Newton decrement tolerance")->capture_default_str();
  app.add_option("--alpha", s.backtrack_alpha, "Armijo parameter")->capture_default_str();
  app.add_option("--tau-shrink", s.backtrack_tau_shrink, "backtracking shrink factor")->capture_default_str();
  app.add_option("--max-iters", s.max_newton_iters, "Newton iterations per round")->capture_default_str();
  app.add_flag("--timing", c.record_timing, "record wall_ms (output is no longer reproducible)");
}

void finalize(CLI::App& app, Options& o) {
  auto& c = o.cfg;
  c.channel.noise_density_w_per_hz = dbm_to_watts(o.noise_dbm_hz);
  if (app.count("--carrier-hz")) c.channel.ref_gain = reference_gain_for_frequency(o.carrier_hz);
  if (app.count("--alpha0")) c.channel.ref_gain = o.alpha0;
  if (app.count("--gs-x")) c.ground_x_m = o.gs_x;
  if (app.count("--gs-y")) c.ground_y_m = o.gs_y;
  c.distance_mode = o.distance_mode == "3d" ? DistanceMode::full3d : DistanceMode::planar;
  c.spt_weight = o.spt_weight == "hops" ? EdgeWeight::hops : EdgeWeight::distance;
  c.validate();
}

// "-" is stdout.
template <class F>
void with_output(const std::string& path, F&& write) {
  if (path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  write(f);
}

int cmd_run(const ScenarioConfig& cfg, const std::string& dump_tree, const std::string& dump_spt) {
  const auto sc = generate_scenario(cfg);
  const auto r = run_pipeline(sc.topology, cfg);
  const double gain = r.throughput_p11_bps > 0.0 ? r.throughput_p14_bps / r.throughput_p11_bps - 1.0 : 0.0;
  std::cout << "uavs               " << cfg.n_uavs << "\n"
            << "seed               " << cfg.seed << " (" << sc.attempts << " placement rounds)\n"
            << "power budget       " << format_number(cfg.power_budget_w) << " W\n"
            << "active links       " << r.allocation.active_count() << " of " << cfg.n_uavs << "\n"
            << "water level        " << format_number(r.allocation.water_level_lambda) << "\n"
            << "spt throughput     " << format_number(r.throughput_p11_bps) << " bit/s\n"
            << "refined throughput " << format_number(r.throughput_p14_bps) << " bit/s\n"
            << "improvement        " << std::fixed << std::setprecision(3) << 100.0 * gain << " %\n"
            << std::defaultfloat << "parent swaps       " << r.refined.swaps << "\n"
            << "newton iterations  " << r.newton_iters << "\n";
  if (cfg.record_timing) std::cout << "wall time          " << format_number(r.wall_ms) << " ms\n";
  if (!dump_spt.empty())
    with_output(dump_spt, [&](std::ostream& os) { write_tree_dump(os, r.spt, r.allocation, sc.topology); });
  if (!dump_tree.empty())
    with_output(dump_tree, [&](std::ostream& os) { write_tree_dump(os, r.refined.tree, r.allocation, sc.topology); });
  return kOk;
}

int cmd_sweep(const ScenarioConfig& cfg, SweepGrid grid, const std::string& out, const std::string& summary,
              std::size_t jobs) {
  if (grid.budgets_w.empty()) grid.budgets_w = {cfg.power_budget_w};
  if (grid.uav_counts.empty()) grid.uav_counts = {cfg.n_uavs};
  const auto res = sweep(cfg, grid, jobs);
  with_output(out, [&](std::ostream& os) { write_sweep_csv(os, res.rows); });
  if (!summary.empty()) with_output(summary, [&](std::ostream& os) { write_aggregate_csv(os, res.aggregates); });
  return kOk;
}

int cmd_trace(const ScenarioConfig& cfg, const std::string& out) {
  const auto sc = generate_scenario(cfg);
  std::vector<TraceRow> rows;
  run_pipeline(sc.topology, cfg, &rows);
  with_output(out, [&](std::ostream& os) { write_trace_csv(os, rows); });
  return kOk;
}

// Pipeline and water-filling against the brute-force oracles on small scenarios.
int cmd_validate(ScenarioConfig cfg, std::size_t seeds, std::size_t max_n) {
  if (max_n < 1 || max_n > oracle::kMaxEnumeratedUavs)
    throw ConfigError("--max-n must lie in [1, " + std::to_string(oracle::kMaxEnumeratedUavs) + "]");
  std::size_t checks = 0;
  std::size_t failures = 0;
  auto report = [&](bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
      ++failures;
      std::cout << "FAIL " << what << "\n";
    }
  };
  const std::uint64_t base = cfg.seed;
  for (std::size_t n = 1; n <= max_n; ++n) {
    cfg.n_uavs = n;
    double gap = 0.0;
    for (std::size_t k = 0; k < seeds; ++k) {
      cfg.seed = base + k;
      const auto sc = generate_scenario(cfg);
      const auto& t = sc.topology;
      const std::string tag = "n=" + std::to_string(n) + " seed=" + std::to_string(cfg.seed);
      const auto r = run_pipeline(t, cfg);
      report(validate_tree(r.refined.tree, t).ok(), tag + " refined tree is invalid");
      if (n <= 4) {
        const auto grid = oracle::grid_power_oracle(r.spt, t, cfg.power_budget_w);
        report(r.throughput_p11_bps >= grid.best_value * (1.0 - 1e-9), tag + " water-filling below grid oracle");
      }
      const auto best = oracle::tree_enum_oracle(t, cfg.power_budget_w);
      report(r.throughput_p14_bps >= r.throughput_p11_bps, tag + " refinement lost throughput");
      report(r.throughput_p14_bps <= best.best_value * (1.0 + 1e-12), tag + " pipeline above tree oracle");
      gap += std::max(0.0, 1.0 - r.throughput_p14_bps / best.best_value);
    }
    std::cout << "n=" << n << " mean gap to tree oracle " << std::fixed << std::setprecision(4)
              << 100.0 * gap / static_cast<double>(seeds) << " %\n"
              << std::defaultfloat;
  }
  std::cout << checks - failures << "/" << checks << " checks passed\n";
  return failures == 0 ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Throughput optimisation for multi-UAV relay networks"};
  app.set_config("--config", "", "TOML or INI file with option values; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  add_scenario_options(app, opt);

  auto* run = app.add_subcommand("run", "optimise one scenario and print a summary");
  std::string dump_tree, dump_spt;
  run->add_option("--dump-tree", dump_tree, "write the refined tree to a file ('-' for stdout)");
  run->add_option("--dump-spt", dump_spt, "write the shortest-path tree to a file ('-' for stdout)");

  auto* sw = app.add_subcommand("sweep", "run seeded trials over a grid of budgets and UAV counts");
  SweepGrid grid;
  std::string out = "-", summary;
  std::size_t jobs = 1;
  sw->add_option("--pb-list", grid.budgets_w, "power budgets in watts (default: --pb)")->delimiter(',');
  sw->add_option("--n-list", grid.uav_counts, "UAV counts (default: --uavs)")->delimiter(',');
  sw->add_option("-o,--out", out, "per-seed CSV ('-' for stdout)")->capture_default_str();
  sw->add_option("--summary", summary, "mean/std CSV per grid point");
  sw->add_option("-j,--jobs", jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  auto* val = app.add_subcommand("validate", "compare against the brute-force oracles on small scenarios");
  std::size_t val_seeds = 20, max_n = 5;
  val->add_option("--seeds", val_seeds, "seeds per UAV count")->capture_default_str()->check(CLI::PositiveNumber);
  val->add_option("--max-n", max_n, "largest UAV count")->capture_default_str();

  auto* tr = app.add_subcommand("trace", "emit the Newton iterates of one scenario as CSV");
  std::string trace_out = "-";
  tr->add_option("-o,--out", trace_out, "trace CSV ('-' for stdout)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    // Validation runs on a smaller square so that every small count connects.
    if (*val && !app.count("--area")) opt.cfg.area_side_m = 8000.0;
    finalize(app, opt);
    if (*run) return cmd_run(opt.cfg, dump_tree, dump_spt);
    if (*sw) return cmd_sweep(opt.cfg, grid, out, summary, jobs);
    if (*val) return cmd_validate(opt.cfg, val_seeds, max_n);
    if (*tr) return cmd_trace(opt.cfg, trace_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DisconnectedError& e) {
    std::cerr << "disconnected: " << e.what() << "\n";
    return kDisconnected;
  } catch (const PlacementError& e) {
    std::cerr << "placement failed: " << e.what() << "\n";
    return kDisconnected;
  } catch (const ConvergenceError& e) {
    std::cerr << "solver did not converge: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kOk;
}
