#pragma once

// Link-selection refinement of a routing tree at fixed per-UAV powers.
//
// Each UAV's binary choice among alternative parents is relaxed to
// L in (0,1)^m with the linear constraint sum_k a_k L_k = b, and the
// log-barrier objective
//
//   phi(L) = sum_k w_k L_k + (1/gamma) sum_k [log L_k + log(1 - L_k)],
//   w_k    = R_k D_k / rate_unit
//
// is maximised by an equality-constrained Newton method. The constraint
// couples only entries of one UAV, so every UAV is an independent block and
// the Hessian is diagonal. The relaxed solution is then rounded back to a
// parent assignment that keeps the tree valid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fanet/error.hpp"
#include "fanet/model.hpp"
#include "fanet/power.hpp"
#include "fanet/routing.hpp"

namespace fanet {

// Orientation of a link (i, k) relative to a routing tree.
enum class Direction : int {
  reverse = -1,  // k lies in the subtree of i; taking k as parent would reverse flow
  none = 0,      // no admissible link
  toward_ground = 1,
};

struct Candidate {
  std::size_t node = 0;  // topology index of the prospective parent
  double rate_bps = 0;   // capacity of (i, node) at the UAV's fixed power
  Direction direction = Direction::toward_ground;
};

struct CandidateSet {
  std::vector<std::vector<Candidate>> per_uav;
  std::vector<double> current_rate_bps;  // rate on the present parent link
  std::vector<double> power_w;           // fixed power of each UAV
  // Rates enter the barrier objective in units of rate_unit_bps.
  double rate_unit_bps = 1.0;

  std::size_t uav_count() const noexcept { return per_uav.size(); }
};

struct SolverConfig {
  double gamma_init = 10.0;
  double gamma_growth = 10.0;
  std::size_t barrier_rounds = 3;
  double epsilon_decrement = 1e-8;
  double backtrack_alpha = 0.25;
  double backtrack_tau_shrink = 0.5;
  std::size_t max_newton_iters = 100;
  double interior_margin = 1e-6;

  void validate() const {
    if (!(gamma_init > 0.0)) throw ConfigError("gamma_init must be positive");
    if (!(gamma_growth > 1.0)) throw ConfigError("gamma_growth must exceed 1");
    if (barrier_rounds == 0) throw ConfigError("at least one barrier round is required");
    if (!(epsilon_decrement > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(backtrack_alpha > 0.0 && backtrack_alpha < 0.5)) throw ConfigError("backtrack alpha must lie in (0, 0.5)");
    if (!(backtrack_tau_shrink > 0.0 && backtrack_tau_shrink < 1.0))
      throw ConfigError("backtrack shrink must lie in (0, 1)");
    if (max_newton_iters == 0) throw ConfigError("max_newton_iters must be positive");
    if (!(interior_margin > 0.0 && interior_margin < 0.5)) throw ConfigError("interior margin must lie in (0, 0.5)");
  }

  double final_gamma() const {
    return gamma_init * std::pow(gamma_growth, static_cast<double>(barrier_rounds - 1));
  }
};

enum class RelaxStatus {
  no_candidates,  // nothing to choose; the UAV keeps its parent
  pinned,         // no strictly interior point; values hold the boundary solution
  converged,
};

struct UavRelaxation {
  std::vector<double> values;  // aligned with CandidateSet::per_uav[i]
  RelaxStatus status = RelaxStatus::no_candidates;
  std::size_t iterations = 0;
  double final_decrement = 0.0;
};

struct RelaxedLinkMatrix {
  std::vector<UavRelaxation> per_uav;
  double barrier_gamma = 0.0;
  std::size_t iterations = 0;
  double final_decrement = 0.0;  // largest last decrement over all blocks
};

// One row per Newton iteration.
struct TraceRow {
  std::size_t uav_id = 0;
  std::size_t round = 0;
  double gamma = 0.0;
  std::size_t iteration = 0;
  double phi = 0.0;
  double decrement = 0.0;
  double step = 0.0;  // accepted tau; 0 on the terminating row
  double residual = 0.0;  // |a.L - b| / |b| before the step
};

// ---------------------------------------------------------------------------
// Candidate construction

inline Direction direction_flag(const RoutingTree& tree, const Topology& t, std::size_t uav, std::size_t node) {
  if (node == uav || !t.admissible(uav, node)) return Direction::none;
  if (node < tree.uav_count() && tree.is_ancestor_or_self(uav, node)) return Direction::reverse;
  return Direction::toward_ground;
}

inline CandidateSet build_candidates(const RoutingTree& tree, const Topology& t, const PowerAllocation& alloc) {
  const std::size_t n = t.uav_count();
  if (tree.uav_count() != n || alloc.power.size() != n) throw ConfigError("tree, allocation and topology disagree");
  CandidateSet c;
  c.per_uav.resize(n);
  c.current_rate_bps.resize(n);
  c.power_w = alloc.power;
  c.rate_unit_bps = t.channel().bandwidth_hz;
  for (std::size_t i = 0; i < n; ++i) {
    const double pw = alloc.power[i];
    c.current_rate_bps[i] = link_capacity(pw, t.gain(i, tree.parent[i]), t.channel());
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == tree.parent[i]) continue;
      if (direction_flag(tree, t, i, k) != Direction::toward_ground) continue;
      c.per_uav[i].push_back({k, link_capacity(pw, t.gain(i, k), t.channel()), Direction::toward_ground});
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Barrier objective and derivatives on one block

namespace detail {

inline void require_interior(std::span<const double> values) {
  for (double v : values)
    if (!(v > 0.0 && v < 1.0)) throw DomainError("relaxed link value outside the open interval (0, 1)");
}

inline std::vector<double> block_weights(std::span<const Candidate> cands, double rate_unit) {
  std::vector<double> w(cands.size());
  for (std::size_t k = 0; k < cands.size(); ++k)
    w[k] = cands[k].rate_bps * static_cast<int>(cands[k].direction) / rate_unit;
  return w;
}

}  // namespace detail

inline double block_objective(std::span<const double> values, std::span<const double> weights, double gamma) {
  detail::require_interior(values);
  double linear = 0.0;
  double barrier = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    linear += weights[k] * values[k];
    barrier += std::log(values[k]) + std::log1p(-values[k]);
  }
  return linear + barrier / gamma;
}

inline void block_derivatives(std::span<const double> values, std::span<const double> weights, double gamma,
                              std::span<double> gradient, std::span<double> hessian_diag) {
  detail::require_interior(values);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double l = values[k];
    const double u = 1.0 - l;
    gradient[k] = weights[k] + (1.0 / l - 1.0 / u) / gamma;
    hessian_diag[k] = -(1.0 / (l * l) + 1.0 / (u * u)) / gamma;
  }
}

// phi summed over every converged block of `relaxed`.
inline double barrier_objective(const RelaxedLinkMatrix& relaxed, const CandidateSet& c, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  double total = 0.0;
  for (std::size_t i = 0; i < relaxed.per_uav.size(); ++i) {
    const auto& block = relaxed.per_uav[i];
    if (block.status != RelaxStatus::converged) continue;
    const auto w = detail::block_weights(c.per_uav.at(i), c.rate_unit_bps);
    total += block_objective(block.values, w, gamma);
  }
  return total;
}

struct BarrierDerivatives {
  std::vector<std::vector<double>> gradient;
  std::vector<std::vector<double>> hessian_diag;
};

inline BarrierDerivatives gradient_hessian(const RelaxedLinkMatrix& relaxed, const CandidateSet& c, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  BarrierDerivatives d;
  d.gradient.resize(relaxed.per_uav.size());
  d.hessian_diag.resize(relaxed.per_uav.size());
  for (std::size_t i = 0; i < relaxed.per_uav.size(); ++i) {
    const auto& block = relaxed.per_uav[i];
    if (block.status != RelaxStatus::converged) continue;
    const auto w = detail::block_weights(c.per_uav.at(i), c.rate_unit_bps);
    d.gradient[i].resize(block.values.size());
    d.hessian_diag[i].resize(block.values.size());
    block_derivatives(block.values, w, gamma, d.gradient[i], d.hessian_diag[i]);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Equality-constrained Newton on one block

struct BlockSolution {
  std::vector<double> values;
  std::size_t iterations = 0;
  double final_decrement = 0.0;
};

namespace detail {

// log1p(x) - x without cancellation for small |x|.
inline double log1p_remainder(double x) {
  if (std::abs(x) < 1e-3) return x * x * (-0.5 + x * (1.0 / 3.0 + x * (-0.25 + x * 0.2)));
  return std::log1p(x) - x;
}

}  // namespace detail

// Starting point: L_k = b / a_k clipped to the margin band, then scaled onto
// the constraint. Falls back to the uniform point when scaling leaves (0,1).
inline std::vector<double> initial_point(std::span<const double> link_power, double target, double margin) {
  const std::size_t m = link_power.size();
  std::vector<double> l(m);
  double dot = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    l[k] = std::clamp(target / link_power[k], margin, 1.0 - margin);
    dot += link_power[k] * l[k];
  }
  bool interior = true;
  for (auto& v : l) {
    v *= target / dot;
    interior = interior && v > 0.0 && v < 1.0;
  }
  if (!interior) {
    const double total = std::accumulate(link_power.begin(), link_power.end(), 0.0);
    std::fill(l.begin(), l.end(), target / total);
  }
  return l;
}

// Maximises the block objective subject to link_power . L = target, running
// cfg.barrier_rounds rounds of increasing gamma with warm starts.
// Throws InfeasibleError when no strictly interior point exists and
// ConvergenceError when a round exceeds cfg.max_newton_iters.
inline BlockSolution solve_block(std::span<const double> weights, std::span<const double> link_power, double target,
                                 const SolverConfig& cfg, std::size_t uav_id = 0,
                                 std::vector<TraceRow>* trace = nullptr) {
  cfg.validate();
  const std::size_t m = weights.size();
  if (m == 0 || link_power.size() != m) throw ConfigError("block weights and link powers must align and be non-empty");
  double capacity = 0.0;
  for (double a : link_power) {
    if (!(a > 0.0)) throw ConfigError("link powers must be positive");
    capacity += a;
  }
  if (!(target > 0.0) || !(target < capacity))
    throw InfeasibleError("no strictly interior point satisfies the link-power constraint");

  BlockSolution sol;
  sol.values = initial_point(link_power, target, cfg.interior_margin);
  std::vector<double>& l = sol.values;
  std::vector<double> grad(m), hess(m), step(m), curv(m), trial(m);

  double gamma = cfg.gamma_init;
  for (std::size_t round = 0; round < cfg.barrier_rounds; ++round, gamma *= cfg.gamma_growth) {
    bool converged = false;
    for (std::size_t iter = 0;; ++iter) {
      block_derivatives(l, weights, gamma, grad, hess);
      // curv = -H^{-1} > 0; step = curv*(g - nu*a), nu chosen so a.step = 0.
      double a_curv_g = 0.0;
      double a_curv_a = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        curv[k] = -1.0 / hess[k];
        a_curv_g += link_power[k] * curv[k] * grad[k];
        a_curv_a += link_power[k] * curv[k] * link_power[k];
      }
      const double nu = a_curv_g / a_curv_a;
      double dec2 = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        const double r = grad[k] - nu * link_power[k];
        step[k] = curv[k] * r;
        dec2 += curv[k] * r * r;
      }
      const double decrement = std::sqrt(std::max(dec2, 0.0));
      sol.final_decrement = decrement;

      TraceRow row;
      if (trace) {
        const double dot = std::inner_product(link_power.begin(), link_power.end(), l.begin(), 0.0);
        row = {uav_id, round, gamma, iter, block_objective(l, weights, gamma), decrement, 0.0,
               std::abs(dot - target) / target};
      }

      if (decrement <= cfg.epsilon_decrement) {
        if (trace) trace->push_back(row);
        converged = true;
        break;
      }
      if (iter >= cfg.max_newton_iters) {
        if (trace) trace->push_back(row);
        break;
      }

      // Largest tau keeping every entry strictly inside (0, 1).
      double tau = 1.0;
      auto inside = [&](double t) {
        for (std::size_t k = 0; k < m; ++k) {
          const double v = l[k] + t * step[k];
          if (!(v > 0.0 && v < 1.0)) return false;
        }
        return true;
      };
      while (!inside(tau)) tau *= cfg.backtrack_tau_shrink;

      // Armijo test. Along a feasible direction the linear part of the
      // increment is tau*dec2; only the barrier remainder is evaluated.
      auto increment = [&](double t) {
        double rem = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          const double d = t * step[k];
          rem += detail::log1p_remainder(d / l[k]) + detail::log1p_remainder(-d / (1.0 - l[k]));
        }
        return t * dec2 + rem / gamma;
      };
      while (increment(tau) < cfg.backtrack_alpha * tau * dec2 && tau > 1e-18) tau *= cfg.backtrack_tau_shrink;

      for (std::size_t k = 0; k < m; ++k) l[k] += tau * step[k];
      ++sol.iterations;
      if (trace) {
        row.step = tau;
        trace->push_back(row);
      }
    }
    if (!converged)
      throw ConvergenceError("Newton iteration limit reached for UAV " + std::to_string(uav_id) + " at gamma " +
                                 std::to_string(gamma),
                             sol.final_decrement);
  }
  return sol;
}

// Solves every UAV's relaxed block at its fixed power. With one power per
// UAV the constraint reduces to the unit simplex sum_k L_k = 1.
inline RelaxedLinkMatrix newton_refine(const CandidateSet& c, const PowerAllocation& alloc, const SolverConfig& cfg,
                                       std::vector<TraceRow>* trace = nullptr) {
  cfg.validate();
  if (alloc.power.size() != c.uav_count()) throw ConfigError("allocation does not match candidate set");
  RelaxedLinkMatrix out;
  out.per_uav.resize(c.uav_count());
  out.barrier_gamma = cfg.final_gamma();
  for (std::size_t i = 0; i < c.uav_count(); ++i) {
    const auto& cands = c.per_uav[i];
    auto& block = out.per_uav[i];
    if (cands.empty()) continue;
    // An idle UAV has no power to scale by; its constraint is the same simplex.
    const double pw = alloc.power[i] > 0.0 ? alloc.power[i] : 1.0;
    const std::vector<double> link_power(cands.size(), pw);
    const auto weights = detail::block_weights(cands, c.rate_unit_bps);
    try {
      auto sol = solve_block(weights, link_power, pw, cfg, i + 1, trace);
      block.values = std::move(sol.values);
      block.status = RelaxStatus::converged;
      block.iterations = sol.iterations;
      block.final_decrement = sol.final_decrement;
      out.iterations += sol.iterations;
      out.final_decrement = std::max(out.final_decrement, sol.final_decrement);
    } catch (const InfeasibleError&) {
      // Only reachable with a single candidate: the constraint forces L = 1.
      block.values.assign(cands.size(), 1.0);
      block.status = RelaxStatus::pinned;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rounding

struct RefinedTree {
  RoutingTree tree;
  double throughput_bps = 0.0;
  std::size_t swaps = 0;
};

namespace detail {

// Candidate with the largest relaxed value; ties go to the lower node index.
inline std::optional<std::size_t> preferred_candidate(const UavRelaxation& block, std::span<const Candidate> cands) {
  if (block.status == RelaxStatus::no_candidates || cands.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t k = 1; k < cands.size(); ++k) {
    if (block.values[k] > block.values[best] ||
        (block.values[k] == block.values[best] && cands[k].node < cands[best].node))
      best = k;
  }
  return best;
}

}  // namespace detail

// Visits UAVs by decreasing potential gain and moves each to its preferred
// candidate when that strictly raises its rate and keeps the tree valid.
// Powers stay fixed, so the total throughput can only grow.
inline RefinedTree round_and_update(const RelaxedLinkMatrix& relaxed, const CandidateSet& c, const RoutingTree& tree,
                                    const PowerAllocation& alloc, const Topology& t) {
  const std::size_t n = tree.uav_count();
  if (relaxed.per_uav.size() != n || c.uav_count() != n) throw ConfigError("relaxed solution does not match tree");

  struct Proposal {
    std::size_t uav;
    std::size_t slot;
    double gain;
  };
  std::vector<Proposal> proposals;
  for (std::size_t i = 0; i < n; ++i) {
    const auto slot = detail::preferred_candidate(relaxed.per_uav[i], c.per_uav[i]);
    if (!slot) continue;
    proposals.push_back({i, *slot, c.per_uav[i][*slot].rate_bps - c.current_rate_bps[i]});
  }
  std::stable_sort(proposals.begin(), proposals.end(),
                   [](const Proposal& a, const Proposal& b) { return a.gain > b.gain; });

  RefinedTree out{tree, 0.0, 0};
  for (const auto& p : proposals) {
    if (!(p.gain > 0.0)) continue;
    const std::size_t k = c.per_uav[p.uav][p.slot].node;
    if (!t.admissible(p.uav, k)) continue;
    // k must not sit in the subtree of the UAV being moved.
    if (k < n && out.tree.is_ancestor_or_self(p.uav, k)) continue;
    out.tree.parent[p.uav] = k;
    ++out.swaps;
  }
  if (out.swaps > 0) {
    // Path cost after swaps: geometric length of the new chain to the ground station.
    for (std::size_t i = 0; i < n; ++i) {
      double cost = 0.0;
      for (std::size_t cur = i; cur < n; cur = out.tree.parent[cur]) cost += t.distance(cur, out.tree.parent[cur]);
      out.tree.path_cost[i] = cost;
    }
  }
  out.throughput_bps = network_throughput(alloc, out.tree, t);
  return out;
}

}  // namespace fanet
