#pragma once

// Grid-search reference for the network equilibrium solvers. It shares the
// structural facts of a best equilibrium (one free-flow road q, faster roads
// congested to q's latency, slower roads only for controlled traffic) but
// searches autonomy levels of the congested roads on a grid with zoom-in
// refinement instead of solving a program. Latencies come from the closed
// form, capacities from the fundamental diagram.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mixroute/ctm.hpp"
#include "mixroute/equilibrium.hpp"

namespace mixroute {

enum class EquilibriumMode { selfish, controlled };

namespace detail {

template <typename Scalar>
struct GridCandidate {
  Scalar violation{std::numeric_limits<Scalar>::infinity()};
  Scalar total{std::numeric_limits<Scalar>::infinity()};
  Vector<Scalar> human, autonomous;

  bool better_than(const GridCandidate& o, Scalar feas_tol) const {
    const bool ok = violation <= feas_tol, o_ok = o.violation <= feas_tol;
    if (ok != o_ok) return ok;
    if (!ok) return violation < o.violation;
    return total < o.total;
  }
};

template <typename Scalar>
GridCandidate<Scalar> evaluate_routing(const NetworkSpec<Scalar>& net, Scalar demand_human, Scalar demand_auto, int q,
                                       const std::vector<Scalar>& alphas, EquilibriumMode mode) {
  const int paths = int(net.size());
  GridCandidate<Scalar> c;
  c.human = Vector<Scalar>::Zero(paths);
  c.autonomous = Vector<Scalar>::Zero(paths);
  Scalar violation = 0;
  const Scalar target = net.paths[std::size_t(q)].free_flow_latency();

  for (int p = 0; p < q; ++p) {
    const auto& path = net.paths[std::size_t(p)];
    const Scalar alpha = alphas[std::size_t(p)];
    const Scalar f = bottleneck_capacity(path, alpha);
    c.autonomous(p) = alpha * f;
    c.human(p) = f - c.autonomous(p);
    // Congested length needed to lift this road's latency to the target.
    const Scalar gamma = (target - path.free_flow_latency()) / congestion_increment(path, alpha);
    violation += std::max(Scalar(0), gamma - Scalar(path.prebottleneck_cells)) * f;
  }
  Scalar rest_h = demand_human - c.human.head(q).sum();
  Scalar rest_a = demand_auto - c.autonomous.head(q).sum();
  violation += std::max(Scalar(0), -rest_h) + std::max(Scalar(0), -rest_a);
  rest_h = std::max(rest_h, Scalar(0));
  rest_a = std::max(rest_a, Scalar(0));

  const auto& free_road = net.paths[std::size_t(q)];
  const Scalar demand_total = demand_human + demand_auto;
  Scalar extra = 0;
  if (mode == EquilibriumMode::selfish) {
    c.human(q) = rest_h;
    c.autonomous(q) = rest_a;
    const Scalar f = rest_h + rest_a;
    violation += std::max(Scalar(0), f - bottleneck_capacity(free_road, autonomy_level(rest_h, rest_a)));
  } else {
    // Largest autonomous load x that fits on q beside the humans:
    // rest_h + x <= F_b(x / (rest_h + x)), found by bisection.
    c.human(q) = rest_h;
    violation += std::max(Scalar(0), rest_h - bottleneck_capacity(free_road, Scalar(0)));
    auto fits = [&](Scalar x) {
      return rest_h + x <= bottleneck_capacity(free_road, autonomy_level(rest_h, x)) * (Scalar(1) + Scalar(1e-15));
    };
    Scalar room = 0;
    if (fits(rest_a)) {
      room = rest_a;
    } else if (fits(Scalar(0))) {
      Scalar lo = 0, hi = rest_a;
      for (int it = 0; it < 200 && hi - lo > Scalar(1e-15) * std::max(Scalar(1), hi); ++it) {
        const Scalar mid = (lo + hi) / 2;
        (fits(mid) ? lo : hi) = mid;
      }
      room = lo;
    }
    c.autonomous(q) = room;
    Scalar overflow = rest_a - room;
    std::vector<int> slower;
    for (int p = q + 1; p < paths; ++p) slower.push_back(p);
    std::sort(slower.begin(), slower.end(), [&](int a, int b) {
      return net.paths[std::size_t(a)].free_flow_latency() < net.paths[std::size_t(b)].free_flow_latency();
    });
    for (int p : slower) {
      const auto& path = net.paths[std::size_t(p)];
      const Scalar take = std::min(overflow, bottleneck_capacity(path, Scalar(1)));
      c.autonomous(p) = take;
      overflow -= take;
      extra += take * (path.free_flow_latency() - target);
    }
    violation += std::max(Scalar(0), overflow);
  }
  c.violation = violation;
  c.total = demand_total * target + extra;
  return c;
}

}  // namespace detail

// Reference best equilibrium for networks of at most three roads. The
// autonomy level of each congested road is searched on a grid of spacing
// `resolution`, then refined by repeated zooming around the best point.
template <typename Scalar>
EquilibriumSolution<Scalar> brute_force_equilibrium(const NetworkSpec<Scalar>& net, Scalar demand_human,
                                                    Scalar demand_auto, EquilibriumMode mode,
                                                    Scalar resolution = Scalar(1e-3)) {
  net.validate();
  detail::check_demand(demand_human, demand_auto);
  if (net.size() > 3) throw std::invalid_argument("brute-force search supports at most 3 paths");
  if (!(resolution > 0 && resolution < 1)) throw std::invalid_argument("resolution must lie in (0, 1)");
  const Scalar feas_tol = Scalar(1e-9) * std::max(Scalar(1), demand_human + demand_auto);
  const int paths = int(net.size());

  detail::GridCandidate<Scalar> best;
  int best_q = -1;
  for (int q = 0; q < paths; ++q) {
    const int dims = q;
    std::vector<Scalar> lo(std::size_t(dims), Scalar(0)), hi(std::size_t(dims), Scalar(1));
    detail::GridCandidate<Scalar> local;
    std::vector<Scalar> local_point(std::size_t(dims), Scalar(0));

    auto scan = [&](int points) {
      std::vector<int> idx(std::size_t(dims), 0);
      std::vector<Scalar> point(static_cast<std::size_t>(dims));
      const auto origin_lo = lo, origin_hi = hi;
      for (;;) {
        for (int d = 0; d < dims; ++d) {
          const Scalar t = points > 1 ? Scalar(idx[std::size_t(d)]) / Scalar(points - 1) : Scalar(0);
          point[std::size_t(d)] = origin_lo[std::size_t(d)] + t * (origin_hi[std::size_t(d)] - origin_lo[std::size_t(d)]);
        }
        auto cand = detail::evaluate_routing(net, demand_human, demand_auto, q, point, mode);
        if (cand.better_than(local, feas_tol)) {
          local = std::move(cand);
          local_point = point;
        }
        int d = 0;
        while (d < dims && ++idx[std::size_t(d)] == points) idx[std::size_t(d++)] = 0;
        if (d == dims) break;
      }
    };

    if (dims == 0) {
      local = detail::evaluate_routing(net, demand_human, demand_auto, q, {}, mode);
    } else {
      const int coarse = int(std::lround(Scalar(1) / resolution)) + 1;
      scan(coarse);
      Scalar step = Scalar(1) / Scalar(coarse - 1);
      for (int round = 0; round < 30 && step > Scalar(1e-14); ++round) {
        for (int d = 0; d < dims; ++d) {
          lo[std::size_t(d)] = std::max(Scalar(0), local_point[std::size_t(d)] - 2 * step);
          hi[std::size_t(d)] = std::min(Scalar(1), local_point[std::size_t(d)] + 2 * step);
        }
        scan(21);
        step /= 5;
      }
    }

    if (local.violation > feas_tol) continue;
    if (mode == EquilibriumMode::selfish) {
      best = std::move(local);
      best_q = q;
      break;
    }
    const Scalar scale = std::max(Scalar(1), std::abs(local.total));
    if (best_q < 0 || local.total < best.total - Scalar(1e-12) * scale) {
      best = std::move(local);
      best_q = q;
    }
  }

  EquilibriumSolution<Scalar> sol;
  if (best_q < 0) return sol;
  sol.human = best.human;
  sol.autonomous = best.autonomous;
  detail::complete_solution(net, sol, best_q, mode == EquilibriumMode::controlled);
  return sol;
}

}  // namespace mixroute
