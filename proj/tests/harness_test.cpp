#include <gtest/gtest.h>

#include <sstream>

#include "fanet/fanet.hpp"
#include "test_support.hpp"

namespace fanet {
namespace {

TEST(GenerateScenario, SingleUavInsideSquare) {
  for (std::uint64_t seed : {1u, 99u, 12345u}) {
    ScenarioConfig cfg;
    cfg.n_uavs = 1;
    cfg.seed = seed;
    cfg.channel.link_threshold_m = 1e6;
    const auto sc = generate_scenario(cfg);
    const auto& u = sc.topology.node(0);
    EXPECT_GE(u.x, 0.0);
    EXPECT_LE(u.x, cfg.area_side_m);
    EXPECT_GE(u.y, 0.0);
    EXPECT_LE(u.y, cfg.area_side_m);
    EXPECT_EQ(u.z, 150.0);
    const auto& gs = sc.topology.node(1);
    EXPECT_EQ(gs.role, Role::ground_station);
    EXPECT_EQ(gs.x, 10000.0);
    EXPECT_EQ(gs.y, 0.0);
    EXPECT_EQ(gs.z, 0.0);
  }
}

TEST(GenerateScenario, SameSeedSameCoordinates) {
  ScenarioConfig cfg;
  cfg.seed = 77;
  const auto a = generate_scenario(cfg);
  const auto b = generate_scenario(cfg);
  ASSERT_EQ(a.topology.node_count(), b.topology.node_count());
  for (std::size_t i = 0; i < a.topology.node_count(); ++i) {
    EXPECT_EQ(a.topology.node(i).x, b.topology.node(i).x);
    EXPECT_EQ(a.topology.node(i).y, b.topology.node(i).y);
  }
  EXPECT_EQ(a.attempts, b.attempts);
}

TEST(GenerateScenario, SeparationAndConnectivity) {
  ScenarioConfig cfg;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.seed = seed;
    const auto sc = generate_scenario(cfg);
    EXPECT_TRUE(sc.topology.connected());
    for (std::size_t i = 0; i < cfg.n_uavs; ++i)
      for (std::size_t j = i + 1; j < cfg.n_uavs; ++j) EXPECT_GE(sc.topology.distance(i, j), cfg.min_separation_m);
  }
}

TEST(GenerateScenario, TwentyFiveUavsPlaceQuickly) {
  ScenarioConfig cfg;
  cfg.n_uavs = 25;
  int quick = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    cfg.seed = seed;
    if (generate_scenario(cfg).attempts <= 10) ++quick;
  }
  EXPECT_GE(quick, 990);
}

TEST(GenerateScenario, TooDenseFails) {
  ScenarioConfig cfg;
  cfg.area_side_m = 1000.0;
  cfg.min_separation_m = 900.0;
  cfg.n_uavs = 10;
  cfg.point_tries = 200;
  EXPECT_THROW(generate_scenario(cfg), PlacementError);
}

TEST(GenerateScenario, ConnectivityRetriesExhausted) {
  ScenarioConfig cfg;
  cfg.n_uavs = 5;
  cfg.channel.link_threshold_m = 10.0;
  cfg.placement_retries = 3;
  EXPECT_THROW(generate_scenario(cfg), PlacementError);
}

TEST(GenerateScenario, ConfigValidation) {
  ScenarioConfig cfg;
  cfg.n_uavs = 0;
  EXPECT_THROW(generate_scenario(cfg), ConfigError);
  cfg = {};
  cfg.min_separation_m = cfg.area_side_m;
  EXPECT_THROW(generate_scenario(cfg), ConfigError);
  cfg = {};
  cfg.area_side_m = -5.0;
  EXPECT_THROW(generate_scenario(cfg), ConfigError);
  cfg = {};
  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RunPipeline, UniqueTreeGivesEqualThroughputs) {
  const auto t = testing::topology_from_xy({{5000.0, 0.0}, {10000.0, 0.0}}, {0.0, 0.0});
  const auto r = run_pipeline(t, ScenarioConfig{});
  EXPECT_EQ(r.throughput_p11_bps, r.throughput_p14_bps);
  EXPECT_EQ(r.refined.swaps, 0u);
}

TEST(RunPipeline, RefinementNeverLoses) {
  ScenarioConfig cfg;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    cfg.seed = seed;
    const auto sc = generate_scenario(cfg);
    const auto r = run_pipeline(sc.topology, cfg);
    EXPECT_GE(r.throughput_p14_bps, r.throughput_p11_bps);
    EXPECT_TRUE(validate_tree(r.refined.tree, sc.topology).ok());
    EXPECT_EQ(r.wall_ms, 0.0);
  }
}

TEST(RunPipeline, BelowOracleAtSixUavs) {
  ScenarioConfig cfg;
  cfg.n_uavs = 6;
  cfg.area_side_m = 8000.0;
  cfg.seed = 4;
  const auto sc = generate_scenario(cfg);
  const auto r = run_pipeline(sc.topology, cfg);
  const auto best = oracle::tree_enum_oracle(sc.topology, cfg.power_budget_w);
  EXPECT_LE(r.throughput_p14_bps, best.best_value * (1.0 + 1e-12));
}

TEST(RunPipeline, TraceRowsCoverEveryRound) {
  ScenarioConfig cfg;
  cfg.seed = 3;
  const auto sc = generate_scenario(cfg);
  std::vector<TraceRow> trace;
  const auto r = run_pipeline(sc.topology, cfg, &trace);
  ASSERT_FALSE(trace.empty());
  std::size_t steps = 0;
  for (const auto& row : trace) {
    EXPECT_LT(row.round, cfg.solver.barrier_rounds);
    if (row.step > 0.0) ++steps;
  }
  EXPECT_EQ(steps, r.newton_iters);
}

TEST(Sweep, SinglePointSingleTrial) {
  ScenarioConfig cfg;
  cfg.trials = 1;
  const auto res = sweep(cfg, {{1.0}, {10}});
  ASSERT_EQ(res.rows.size(), 1u);
  ASSERT_EQ(res.aggregates.size(), 1u);
  EXPECT_EQ(res.aggregates[0].std_p11_bps, 0.0);
  EXPECT_EQ(res.aggregates[0].mean_p14_bps, res.rows[0].throughput_p14_bps);
}

TEST(Sweep, AggregatesMatchRowsAndOrderIsCanonical) {
  ScenarioConfig cfg;
  cfg.trials = 6;
  cfg.seed = 40;
  cfg.area_side_m = 8000.0;
  const SweepGrid grid{{0.5, 1.0, 2.0}, {8, 12}};
  const auto serial = sweep(cfg, grid, 1);
  const auto parallel = sweep(cfg, grid, 4);
  ASSERT_EQ(serial.rows.size(), 36u);
  for (std::size_t i = 0; i < serial.rows.size(); ++i) {
    EXPECT_EQ(serial.rows[i].seed, parallel.rows[i].seed);
    EXPECT_EQ(serial.rows[i].throughput_p14_bps, parallel.rows[i].throughput_p14_bps);
  }
  EXPECT_EQ(serial.rows[0].n_uavs, 8u);
  EXPECT_EQ(serial.rows[0].seed, 40u);
  EXPECT_EQ(serial.rows[5].seed, 45u);
  EXPECT_EQ(serial.rows[6].pb_watts, 1.0);

  const auto again = aggregate_rows(serial.rows);
  ASSERT_EQ(again.size(), serial.aggregates.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    EXPECT_EQ(again[i].mean_p11_bps, serial.aggregates[i].mean_p11_bps);
    EXPECT_EQ(again[i].std_p14_bps, serial.aggregates[i].std_p14_bps);
    EXPECT_EQ(again[i].trials, 6u);
  }
}

TEST(Sweep, MeanThroughputNondecreasingInBudget) {
  ScenarioConfig cfg;
  cfg.trials = 10;
  const auto res = sweep(cfg, {{0.25, 0.5, 1.0, 2.0, 4.0}, {15}});
  for (std::size_t i = 1; i < res.aggregates.size(); ++i) {
    EXPECT_GE(res.aggregates[i].mean_p11_bps, res.aggregates[i - 1].mean_p11_bps);
    EXPECT_GE(res.aggregates[i].mean_p14_bps, res.aggregates[i - 1].mean_p14_bps);
  }
}

TEST(Sweep, RejectsEmptyRanges) {
  ScenarioConfig cfg;
  EXPECT_THROW(sweep(cfg, {{}, {5}}), ConfigError);
  EXPECT_THROW(sweep(cfg, {{1.0}, {}}), ConfigError);
  EXPECT_THROW(sweep(cfg, {{-1.0}, {5}}), ConfigError);
}

TEST(Sweep, ErrorsCarryScenarioContext) {
  ScenarioConfig cfg;
  cfg.trials = 1;
  cfg.channel.link_threshold_m = 10.0;
  cfg.placement_retries = 2;
  try {
    sweep(cfg, {{1.0}, {3}});
    FAIL() << "expected PlacementError";
  } catch (const PlacementError& e) {
    EXPECT_NE(std::string(e.what()).find("seed=1"), std::string::npos);
  }
}

TEST(Formats, SweepCsvHeaderAndRows) {
  std::vector<SweepRow> rows{{0.5, 25, 7, 1.5e8, 2.25e8, 42, 0.0}};
  std::ostringstream os;
  write_sweep_csv(os, rows);
  EXPECT_EQ(os.str(),
            "pb_watts,n_uavs,seed,throughput_p11_bps,throughput_p14_bps,newton_iters,wall_ms\n"
            "0.5,25,7,1.5e+08,2.25e+08,42,0\n");
}

TEST(Formats, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 123456789.123, 5.699316579881499e-10}) {
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
}

TEST(Formats, TreeDump) {
  const auto t = testing::topology_from_xy({{3000.0, 4000.0}}, {0.0, 0.0});
  const auto tree = build_spt(t);
  const auto alloc = allocate_power(tree, t, 1.0);
  std::ostringstream os;
  write_tree_dump(os, tree, alloc, t);
  const std::string expected = "1,2,5000," + format_number(t.gain(0, 1)) + ",1," +
                               format_number(link_capacity(1.0, t.gain(0, 1), t.channel())) + "\n";
  EXPECT_EQ(os.str(), expected);
}

}  // namespace
}  // namespace fanet
