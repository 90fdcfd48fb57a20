#pragma once

// Equilibria of single-bottleneck roads and of parallel-road networks.
//
// A road in equilibrium carries a constant flow at a uniform autonomy level
// alpha; its prebottleneck segment may hold a congested suffix of gamma cells.
// Network equilibria are computed per candidate free-flow road q: roads
// faster than q are congested until their latency matches q's free-flow
// latency, which turns the search into one small LP per candidate.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixroute/ctm.hpp"
#include "mixroute/lp.hpp"

namespace mixroute {

template <typename Scalar>
void require_single_bottleneck(const PathSpec<Scalar>& path) {
  if (!path.is_single_bottleneck()) throw std::invalid_argument("road is not in single-bottleneck form");
  const Scalar r = path.lane_ratio();
  if (!(r > 0 && r < 1)) throw std::invalid_argument("lane ratio b_b / b_n must lie in (0, 1)");
}

template <typename Scalar>
Scalar mixed_headway(const CellParams<Scalar>& c, Scalar alpha) {
  return alpha * c.headway_auto + (Scalar(1) - alpha) * c.headway_human;
}

// Capacity of the bottleneck segment, v b_b / (alpha h_a + (1 - alpha) h_h).
template <typename Scalar>
Scalar bottleneck_capacity(const PathSpec<Scalar>& path, Scalar alpha) {
  return fundamental_diagram(path.bottleneck_cell(), alpha).capacity;
}

// Extra latency of one congested prebottleneck cell over free flow:
// (1 - r) n_jam (alpha h_a + (1 - alpha) h_h) / (r v b_n).
template <typename Scalar>
Scalar congestion_increment(const PathSpec<Scalar>& path, Scalar alpha) {
  require_single_bottleneck(path);
  if (alpha < 0 || alpha > 1) throw std::invalid_argument("autonomy level outside [0, 1]");
  const auto& c = path.normal_cell();
  const Scalar r = path.lane_ratio();
  return (Scalar(1) - r) * c.jam_density * mixed_headway(c, alpha) / (r * c.free_flow_speed * Scalar(c.lanes));
}

template <typename Scalar>
Scalar congested_cell_latency(const PathSpec<Scalar>& path, Scalar alpha) {
  return Scalar(1) / path.normal_cell().free_flow_speed + congestion_increment(path, alpha);
}

template <typename Scalar>
Scalar road_equilibrium_latency(const PathSpec<Scalar>& path, Scalar alpha, Scalar gamma) {
  require_single_bottleneck(path);
  if (gamma < 0 || gamma > Scalar(path.prebottleneck_cells))
    throw std::invalid_argument("congested length outside [0, m_n]");
  return path.free_flow_latency() + gamma * congestion_increment(path, alpha);
}

// Density of a congested prebottleneck cell, (1 - r) n_jam + r n_crit(alpha).
template <typename Scalar>
Scalar congested_density(const PathSpec<Scalar>& path, Scalar alpha) {
  require_single_bottleneck(path);
  const Scalar r = path.lane_ratio();
  const auto& c = path.normal_cell();
  return (Scalar(1) - r) * c.jam_density + r * fundamental_diagram(c, alpha).critical_density;
}

// The m_n + 1 congested-cell sets a road can hold in equilibrium: the empty
// set and every suffix of the prebottleneck segment. Cell indices are 0-based.
template <typename Scalar>
std::vector<std::vector<int>> enumerate_congestion_profiles(const PathSpec<Scalar>& path) {
  require_single_bottleneck(path);
  const int m = path.prebottleneck_cells;
  std::vector<std::vector<int>> profiles;
  for (int gamma = 0; gamma <= m; ++gamma) {
    std::vector<int> cells;
    for (int i = m - gamma; i < m; ++i) cells.push_back(i);
    profiles.push_back(std::move(cells));
  }
  return profiles;
}

// Builds the steady state of a road fed constant `demand` with the last
// `gamma` prebottleneck cells congested. gamma > 0 requires the demand to
// equal the bottleneck capacity at the demand's autonomy level.
template <typename Scalar>
PathState<Scalar> equilibrium_state(const PathSpec<Scalar>& path, const FlowTuple<Scalar>& demand, int gamma) {
  require_single_bottleneck(path);
  if (demand.human < 0 || demand.autonomous < 0) throw std::invalid_argument("negative demand");
  if (gamma < 0 || gamma > path.prebottleneck_cells) throw std::invalid_argument("gamma outside {0, ..., m_n}");
  const Scalar flow = demand.total();
  const Scalar alpha = autonomy_level(demand.human, demand.autonomous);
  const Scalar capacity = bottleneck_capacity(path, alpha);
  const Scalar tol = Scalar(1e-9) * std::max(Scalar(1), capacity);
  if (flow > capacity + tol) throw std::invalid_argument("demand exceeds bottleneck capacity");
  if (gamma > 0 && std::abs(flow - capacity) > tol)
    throw std::invalid_argument("a congested equilibrium needs demand equal to bottleneck capacity");

  PathState<Scalar> state(path);
  const Scalar congested = congested_density(path, alpha);
  for (Eigen::Index i = 0; i < state.cell_count(); ++i) {
    const auto& c = path.cells[std::size_t(i)];
    const bool is_congested = i >= path.prebottleneck_cells - gamma && i < path.prebottleneck_cells;
    const Scalar n = is_congested ? congested : flow / c.free_flow_speed;
    state.autonomous(i) = alpha * n;
    state.human(i) = n - state.autonomous(i);
  }
  return state;
}

template <typename Scalar>
struct NetworkSpec {
  std::vector<PathSpec<Scalar>> paths;

  std::size_t size() const { return paths.size(); }

  // Every road must be in single-bottleneck form and free-flow latencies
  // must be strictly increasing.
  void validate() const {
    if (paths.empty()) throw std::invalid_argument("network has no paths");
    for (std::size_t p = 0; p < paths.size(); ++p) {
      try {
        require_single_bottleneck(paths[p]);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("path " + std::to_string(p) + ": " + e.what());
      }
      if (p > 0 && !(paths[p].free_flow_latency() > paths[p - 1].free_flow_latency()))
        throw std::invalid_argument("free-flow latencies must be strictly increasing (path " + std::to_string(p) + ")");
    }
  }
};

enum class EquilibriumStatus { feasible, infeasible };

template <typename Scalar>
struct EquilibriumSolution {
  EquilibriumStatus status{EquilibriumStatus::infeasible};
  Vector<Scalar> human;       // f^h per path
  Vector<Scalar> autonomous;  // f^a per path
  Vector<Scalar> gamma;       // congested length per path
  Vector<Scalar> alpha;       // autonomy level per path
  Vector<Scalar> latency;     // equilibrium latency per path
  int free_flow_road{-1};
  Scalar common_latency{0};
  Scalar total_latency{0};

  bool feasible() const { return status == EquilibriumStatus::feasible; }
  Vector<Scalar> flow() const { return human + autonomous; }
};

namespace detail {

// Fills gamma, alpha, per-path latency and totals from the flows, given the
// free-flow road q. Roads before q are congested, q is in free flow, roads
// after q are in free flow (only controlled traffic may use them).
template <typename Scalar>
void complete_solution(const NetworkSpec<Scalar>& net, EquilibriumSolution<Scalar>& sol, int q, bool controlled) {
  const auto paths = Eigen::Index(net.size());
  sol.status = EquilibriumStatus::feasible;
  sol.free_flow_road = q;
  sol.gamma = Vector<Scalar>::Zero(paths);
  sol.alpha = Vector<Scalar>::Zero(paths);
  sol.latency = Vector<Scalar>::Zero(paths);
  const Scalar target = net.paths[std::size_t(q)].free_flow_latency();
  sol.common_latency = target;
  sol.total_latency = 0;
  for (Eigen::Index p = 0; p < paths; ++p) {
    const auto& path = net.paths[std::size_t(p)];
    const Scalar f = sol.human(p) + sol.autonomous(p);
    sol.alpha(p) = f > 0 ? sol.autonomous(p) / f : (controlled ? Scalar(1) : Scalar(0));
    if (p < q) {
      sol.gamma(p) = (target - path.free_flow_latency()) / congestion_increment(path, sol.alpha(p));
      sol.latency(p) = target;
    } else {
      sol.latency(p) = path.free_flow_latency();
    }
    sol.total_latency += f * sol.latency(p);
  }
}

// LP for candidate free-flow road q. Variables: f^h_p, f^a_p for p <= q and,
// when `controlled`, f^a_p for p > q. On congested roads the capacity
// equality f(alpha) = F_b(alpha) reads h_h f^h + h_a f^a = v b_b, and the
// congested length gamma = dL (f^h + f^a) / (c v b_b) is affine in the flows.
template <typename Scalar>
LpResult<Scalar> candidate_program(const NetworkSpec<Scalar>& net, Scalar demand_human, Scalar demand_auto, int q,
                                   bool controlled) {
  LinearProgram<Scalar> lp;
  const int paths = int(net.size());
  const Scalar target = net.paths[std::size_t(q)].free_flow_latency();
  std::vector<Eigen::Index> fh(std::size_t(paths), -1), fa(std::size_t(paths), -1);
  for (int p = 0; p <= q; ++p) {
    fh[std::size_t(p)] = lp.add_variable(0);
    fa[std::size_t(p)] = lp.add_variable(0);
  }
  if (controlled) {
    for (int p = q + 1; p < paths; ++p) {
      const auto& path = net.paths[std::size_t(p)];
      fa[std::size_t(p)] = lp.add_variable(path.free_flow_latency() - target, 0, bottleneck_capacity(path, Scalar(1)));
    }
  }

  for (int p = 0; p <= q; ++p) {
    const auto& path = net.paths[std::size_t(p)];
    const auto& b = path.bottleneck_cell();
    const Scalar throughput = b.free_flow_speed * Scalar(b.lanes);
    const std::vector<typename LinearProgram<Scalar>::Term> capacity_row{{fh[std::size_t(p)], b.headway_human},
                                                                         {fa[std::size_t(p)], b.headway_auto}};
    if (p == q) {
      lp.add_constraint(capacity_row, Sense::less_equal, throughput);
      continue;
    }
    lp.add_constraint(capacity_row, Sense::equal, throughput);
    // gamma <= m_n. Per unit of flow, congestion adds increment(alpha) per
    // cell and increment(alpha) = c * v b_b / f on a road at capacity.
    const Scalar gap = target - path.free_flow_latency();
    const Scalar c = congestion_increment(path, Scalar(0)) / b.headway_human;
    lp.add_constraint({{fh[std::size_t(p)], gap}, {fa[std::size_t(p)], gap}}, Sense::less_equal,
                      Scalar(path.prebottleneck_cells) * c * throughput);
  }

  std::vector<typename LinearProgram<Scalar>::Term> humans, autos;
  for (int p = 0; p < paths; ++p) {
    if (fh[std::size_t(p)] >= 0) humans.push_back({fh[std::size_t(p)], 1});
    if (fa[std::size_t(p)] >= 0) autos.push_back({fa[std::size_t(p)], 1});
  }
  lp.add_constraint(humans, Sense::equal, demand_human);
  lp.add_constraint(autos, Sense::equal, demand_auto);

  auto result = solve_lp(lp);
  if (!result.optimal()) return result;
  // Repack into [f^h (P), f^a (P)].
  Vector<Scalar> x = Vector<Scalar>::Zero(2 * paths);
  for (int p = 0; p < paths; ++p) {
    if (fh[std::size_t(p)] >= 0) x(p) = result.x(fh[std::size_t(p)]);
    if (fa[std::size_t(p)] >= 0) x(paths + p) = result.x(fa[std::size_t(p)]);
  }
  result.x = std::move(x);
  return result;
}

template <typename Scalar>
void check_demand(Scalar demand_human, Scalar demand_auto) {
  if (!(demand_human >= 0 && demand_auto >= 0)) throw std::invalid_argument("demand must be nonnegative");
}

}  // namespace detail

// Best equilibrium when every user routes selfishly: the smallest candidate
// free-flow road whose program is feasible.
template <typename Scalar>
EquilibriumSolution<Scalar> best_selfish_equilibrium(const NetworkSpec<Scalar>& net, Scalar demand_human,
                                                     Scalar demand_auto) {
  net.validate();
  detail::check_demand(demand_human, demand_auto);
  const auto paths = Eigen::Index(net.size());
  EquilibriumSolution<Scalar> sol;
  for (int q = 0; q < int(paths); ++q) {
    const auto lp = detail::candidate_program(net, demand_human, demand_auto, q, false);
    if (!lp.optimal()) continue;
    sol.human = lp.x.head(paths);
    sol.autonomous = lp.x.tail(paths);
    detail::complete_solution(net, sol, q, false);
    return sol;
  }
  return sol;
}

// Best equilibrium when humans are selfish and autonomous vehicles are
// routed centrally. Each candidate minimizes the extra latency of autonomous
// vehicles sent to slower free-flow roads; the candidate with least total
// latency wins, ties going to the smaller index.
template <typename Scalar>
EquilibriumSolution<Scalar> best_controlled_equilibrium(const NetworkSpec<Scalar>& net, Scalar demand_human,
                                                        Scalar demand_auto) {
  net.validate();
  detail::check_demand(demand_human, demand_auto);
  const auto paths = Eigen::Index(net.size());
  EquilibriumSolution<Scalar> best;
  for (int q = 0; q < int(paths); ++q) {
    const auto lp = detail::candidate_program(net, demand_human, demand_auto, q, true);
    if (!lp.optimal()) continue;
    EquilibriumSolution<Scalar> sol;
    sol.human = lp.x.head(paths);
    sol.autonomous = lp.x.tail(paths);
    detail::complete_solution(net, sol, q, true);
    const Scalar scale = std::max(Scalar(1), std::abs(sol.total_latency));
    if (!best.feasible() || sol.total_latency < best.total_latency - Scalar(1e-12) * scale) best = std::move(sol);
  }
  return best;
}

}  // namespace mixroute
