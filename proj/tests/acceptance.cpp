// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fanet/fanet.hpp"
#include "test_support.hpp"

namespace {

using namespace fanet;
using testing::relative_diff;

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s [%d] %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Gains of links between 100 m and 6 km under the default channel.
std::vector<double> link_gains(std::mt19937_64& rng, std::size_t n, const ChannelParams& p) {
  std::uniform_real_distribution<double> d(100.0, 6000.0);
  std::vector<double> g(n);
  for (auto& h : g) h = channel_gain(d(rng), p);
  return g;
}

double marginal_rate(double power, double gain, const ChannelParams& p) {
  return p.bandwidth_hz * gain / (p.noise_power_w() + power * gain);
}

void waterfill_vs_grid() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> size(1, 4);
  std::uniform_real_distribution<double> budget_exp(-1.0, 1.0);
  const ChannelParams p;
  double worst_gap = 0.0, worst_kkt = 0.0;
  bool below_grid = false;
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = link_gains(rng, size(rng), p);
    const double pb = std::pow(10.0, budget_exp(rng));
    const auto a = waterfill(g, pb, p);
    const auto grid = oracle::grid_power_oracle(g, pb, p);
    worst_gap = std::max(worst_gap, relative_diff(a.throughput_bps, grid.best_value));
    below_grid = below_grid || a.throughput_bps < grid.best_value * (1.0 - 1e-12);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (a.active[i])
        worst_kkt = std::max(worst_kkt, relative_diff(marginal_rate(a.power[i], g[i], p), a.water_level_lambda));
  }
  verdict(1, worst_gap <= 1e-6 && worst_kkt <= 1e-8 && !below_grid,
          fmt("water-filling vs grid oracle on 50 instances (n<=4): max rel gap %.3g (tol 1e-6), "
              "max KKT residual %.3g (tol 1e-8)",
              worst_gap, worst_kkt));
}

void clamped_branch() {
  const std::vector<double> g{1.0, 100.0};
  const auto a = waterfill(g, 0.1, testing::unit_channel());
  const bool ok = a.power[0] == 0.0 && a.power[1] == 0.1 && !a.active[0] && a.active[1];
  verdict(2, ok, fmt("h=(1,100), Pb=0.1 gives P=(%.17g, %.17g), expected exactly (0, 0.1)", a.power[0], a.power[1]));
}

void budget_conservation() {
  std::mt19937_64 rng(103);
  std::uniform_int_distribution<std::size_t> size(1, 30);
  std::uniform_real_distribution<double> budget_exp(-3.0, 2.0);
  const auto unit = testing::unit_channel();
  double worst = 0.0;
  std::size_t clamped = 0;
  bool negative = false;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = testing::random_gains(rng, size(rng), -3.0, 3.0);
    const double pb = std::pow(10.0, budget_exp(rng));
    const auto a = waterfill(g, pb, unit);
    worst = std::max(worst, relative_diff(std::accumulate(a.power.begin(), a.power.end(), 0.0), pb));
    if (a.active_count() < g.size()) ++clamped;
    negative = negative || std::any_of(a.power.begin(), a.power.end(), [](double v) { return v < 0.0; });
  }
  verdict(3, worst <= 1e-9 && clamped > 0 && !negative,
          fmt("sum P = Pb on 1000 instances (%g with clamped links): max rel error %.3g (tol 1e-9)",
              static_cast<double>(clamped), worst));
}

void rate_concavity() {
  std::mt19937_64 rng(104);
  const ChannelParams p;
  std::uniform_real_distribution<double> dist(100.0, 6000.0);
  std::uniform_real_distribution<double> pw_exp(-2.0, 1.0);
  std::size_t points = 0, negative = 0;
  double largest = -std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < 50; ++inst) {
    const double h = channel_gain(dist(rng), p);
    for (int k = 0; k < 10; ++k) {
      const double x = std::pow(10.0, pw_exp(rng));
      const double s = 1e-3 * x;
      const double second =
          (link_capacity(x + s, h, p) - 2.0 * link_capacity(x, h, p) + link_capacity(x - s, h, p)) / (s * s);
      ++points;
      if (second < 0.0) ++negative;
      largest = std::max(largest, second);
    }
  }
  verdict(4, negative == points,
          fmt("d2R/dP2 < 0 at %g of %g points (50 links x 10 powers), largest %.3g", static_cast<double>(negative),
              static_cast<double>(points), largest));
}

void solver_calculus() {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> val(0.02, 0.98);
  const double gamma = 100.0;
  double worst_g = 0.0, worst_h = 0.0;
  for (int point = 0; point < 20; ++point) {
    ScenarioConfig cfg;
    cfg.seed = 500 + static_cast<std::uint64_t>(point);
    cfg.n_uavs = 8;
    cfg.area_side_m = 8000.0;
    const auto t = generate_scenario(cfg).topology;
    const auto spt = build_spt(t);
    const auto alloc = allocate_power(spt, t, 1.0);
    const auto c = build_candidates(spt, t, alloc);
    RelaxedLinkMatrix r;
    r.per_uav.resize(c.uav_count());
    for (std::size_t i = 0; i < c.uav_count(); ++i) {
      if (c.per_uav[i].empty()) continue;
      r.per_uav[i].status = RelaxStatus::converged;
      for (std::size_t k = 0; k < c.per_uav[i].size(); ++k) r.per_uav[i].values.push_back(val(rng));
    }
    const auto d = gradient_hessian(r, c, gamma);
    for (std::size_t i = 0; i < c.uav_count(); ++i) {
      for (std::size_t k = 0; k < r.per_uav[i].values.size(); ++k) {
        double& v = r.per_uav[i].values[k];
        const double x = v;
        const double s = 1e-5 * std::min(x, 1.0 - x);
        auto phi_at = [&](double y) {
          v = y;
          return barrier_objective(r, c, gamma);
        };
        auto grad_at = [&](double y) {
          v = y;
          return gradient_hessian(r, c, gamma).gradient[i][k];
        };
        const double fd_g = (phi_at(x + s) - phi_at(x - s)) / (2.0 * s);
        const double fd_h = (grad_at(x + s) - grad_at(x - s)) / (2.0 * s);
        v = x;
        worst_g = std::max(worst_g, relative_diff(fd_g, d.gradient[i][k]));
        worst_h = std::max(worst_h, relative_diff(fd_h, d.hessian_diag[i][k]));
      }
    }
  }
  verdict(5, worst_g <= 1e-5 && worst_h <= 1e-4,
          fmt("central differences at 20 interior points: gradient rel err %.3g (tol 1e-5), "
              "Hessian diagonal rel err %.3g (tol 1e-4)",
              worst_g, worst_h));
}

void newton_convergence() {
  std::mt19937_64 rng(106);
  std::uniform_int_distribution<std::size_t> size(15, 30);
  std::uniform_real_distribution<double> budget(0.2, 10.0);
  double worst_dec = 0.0, worst_res = 0.0;
  std::size_t worst_iters = 0, blocks = 0;
  bool threw = false;
  for (int inst = 0; inst < 50; ++inst) {
    ScenarioConfig cfg;
    cfg.seed = 600 + static_cast<std::uint64_t>(inst);
    cfg.n_uavs = size(rng);
    cfg.power_budget_w = budget(rng);
    const auto t = generate_scenario(cfg).topology;
    const auto spt = build_spt(t);
    const auto alloc = allocate_power(spt, t, cfg.power_budget_w);
    const auto c = build_candidates(spt, t, alloc);
    std::vector<TraceRow> trace;
    try {
      const auto r = newton_refine(c, alloc, cfg.solver, &trace);
      for (const auto& b : r.per_uav)
        if (b.status == RelaxStatus::converged) {
          ++blocks;
          worst_dec = std::max(worst_dec, b.final_decrement);
        }
    } catch (const ConvergenceError&) {
      threw = true;
    }
    std::size_t run = 0;
    for (std::size_t j = 0; j < trace.size(); ++j) {
      worst_res = std::max(worst_res, trace[j].residual);
      const bool same = j > 0 && trace[j].uav_id == trace[j - 1].uav_id && trace[j].round == trace[j - 1].round;
      run = same ? run + 1 : 0;
      worst_iters = std::max(worst_iters, run);
    }
  }
  verdict(6, !threw && worst_dec <= 1e-8 && worst_res <= 1e-8 && worst_iters <= 100,
          fmt("50 instances, %g blocks: max final decrement %.3g (tol 1e-8), max residual %.3g (tol 1e-8)",
              static_cast<double>(blocks), worst_dec, worst_res) +
              ", max iterations per round " + std::to_string(worst_iters) + " (limit 100)");
}

void refinement_dominance() {
  ScenarioConfig cfg;
  cfg.n_uavs = 25;
  std::size_t violations = 0;
  double gain = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    cfg.seed = seed;
    const auto r = run_pipeline(generate_scenario(cfg).topology, cfg);
    if (r.throughput_p14_bps < r.throughput_p11_bps) ++violations;
    gain += (r.throughput_p14_bps - r.throughput_p11_bps) / r.throughput_p11_bps;
  }
  gain /= 100.0;
  verdict(7, violations == 0 && gain > 0.0,
          fmt("n=25, 100 seeds: refined < SPT on %g seeds, mean relative improvement %.4f%%",
              static_cast<double>(violations), 100.0 * gain));
}

void joint_near_optimality() {
  ScenarioConfig cfg;
  cfg.n_uavs = 6;
  cfg.area_side_m = 8000.0;
  std::size_t outside = 0;
  double gap = 0.0, worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    cfg.seed = seed;
    const auto t = generate_scenario(cfg).topology;
    const auto r = run_pipeline(t, cfg);
    const auto best = oracle::tree_enum_oracle(t, cfg.power_budget_w);
    if (r.throughput_p14_bps < r.throughput_p11_bps || r.throughput_p14_bps > best.best_value * (1.0 + 1e-12))
      ++outside;
    const double g = std::max(0.0, 1.0 - r.throughput_p14_bps / best.best_value);
    gap += g;
    worst = std::max(worst, g);
  }
  verdict(8, outside == 0,
          fmt("n=6, 100 seeds: %g outside [SPT, oracle]; mean gap to oracle %.4f%%, worst %.4f%%",
              static_cast<double>(outside), 100.0 * gap / 100.0, 100.0 * worst));
}

void sweep_shape() {
  ScenarioConfig cfg;
  cfg.trials = 100;
  SweepGrid grid{{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {20, 25, 30}};
  const auto res = sweep(cfg, grid, 4);
  const std::size_t nb = grid.budgets_w.size();
  auto agg = [&](std::size_t ni, std::size_t bi) -> const SweepAggregate& { return res.aggregates[ni * nb + bi]; };
  bool monotone = true, concave = true, diminishing = true;
  double worst_curv = -std::numeric_limits<double>::infinity();
  double tightest = std::numeric_limits<double>::infinity();
  const double se_scale = 1.0 / std::sqrt(static_cast<double>(cfg.trials));
  for (std::size_t ni = 0; ni < grid.uav_counts.size(); ++ni) {
    for (std::size_t bi = 1; bi < nb; ++bi) {
      monotone = monotone && agg(ni, bi).mean_p14_bps >= agg(ni, bi - 1).mean_p14_bps &&
                 agg(ni, bi).mean_p11_bps >= agg(ni, bi - 1).mean_p11_bps;
      if (bi + 1 < nb) {
        for (int which = 0; which < 2; ++which) {
          auto m = [&](std::size_t b) { return which ? agg(ni, b).mean_p14_bps : agg(ni, b).mean_p11_bps; };
          const double sd = which ? agg(ni, bi).std_p14_bps : agg(ni, bi).std_p11_bps;
          const double second = m(bi + 1) - 2.0 * m(bi) + m(bi - 1);
          concave = concave && second <= sd * se_scale;
          worst_curv = std::max(worst_curv, second / (sd * se_scale));
        }
      }
    }
  }
  for (std::size_t bi = 0; bi < nb; ++bi) {
    const double lo = agg(1, bi).mean_p14_bps - agg(0, bi).mean_p14_bps;
    const double hi = agg(2, bi).mean_p14_bps - agg(1, bi).mean_p14_bps;
    diminishing = diminishing && hi < lo;
    tightest = std::min(tightest, (lo - hi) / lo);
  }
  std::string detail = "Pb=1..10 W, n=20/25/30, 100 trials: nondecreasing ";
  detail += monotone ? "yes" : "no";
  detail += fmt(", largest second difference %.3g std-errors (tol 1)", worst_curv);
  detail += ", gain(25->30) < gain(20->25) at every Pb: ";
  detail += diminishing ? "yes" : "no";
  detail += fmt(" (smallest margin %.3f%%)", 100.0 * tightest);
  verdict(9, monotone && concave && diminishing, detail);
}

void determinism() {
  ScenarioConfig cfg;
  cfg.trials = 20;
  const SweepGrid grid{{0.5, 1.0, 4.0}, {10, 25}};
  auto csv = [&](std::size_t jobs) {
    std::ostringstream os;
    write_sweep_csv(os, sweep(cfg, grid, jobs).rows);
    return os.str();
  };
  const auto a = csv(1), b = csv(1), c = csv(4);
  verdict(10, a == b && a == c,
          "sweep CSV identical across repeated runs and thread counts (" + std::to_string(a.size()) + " bytes)");
}

}  // namespace

int main() {
  waterfill_vs_grid();
  clamped_branch();
  budget_conservation();
  rate_concavity();
  solver_calculus();
  newton_convergence();
  refinement_dominance();
  joint_near_optimality();
  sweep_shape();
  determinism();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
