#pragma once

// Two-class cell transmission model on a single road.
//
// Densities are stored per cell as Eigen column vectors, one per vehicle
// class. Time step and cell length are dimensionless; speeds are in
// cells/step, headways in cells/vehicle, densities in vehicles/cell.

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixroute {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct CellParams {
  Scalar free_flow_speed{1};
  int lanes{1};
  Scalar headway_human{1};
  Scalar headway_auto{1};
  Scalar jam_density{1};
};

template <typename Scalar>
struct DiagramPoint {
  Scalar critical_density{0};
  Scalar capacity{0};
  Scalar shockwave_speed{0};
};

template <typename Scalar>
struct FlowTuple {
  Scalar human{0};
  Scalar autonomous{0};

  Scalar total() const { return human + autonomous; }
};

// Throws std::invalid_argument when the parameters admit a shockwave faster
// than one cell per step or a jam density below the all-autonomous critical
// density.
template <typename Scalar>
void validate(const CellParams<Scalar>& p) {
  if (!(p.free_flow_speed > 0 && p.free_flow_speed <= 1))
    throw std::invalid_argument("free_flow_speed must lie in (0, 1]");
  if (p.lanes < 1) throw std::invalid_argument("lanes must be >= 1");
  if (!(p.headway_auto > 0 && p.headway_auto <= p.headway_human))
    throw std::invalid_argument("headways must satisfy 0 < h_a <= h_h");
  const Scalar crit_auto = Scalar(p.lanes) / p.headway_auto;
  if (!(p.jam_density > crit_auto))
    throw std::invalid_argument("jam_density must exceed lanes / h_a");
  // w(alpha) is increasing in alpha, so alpha = 1 is the binding case.
  const Scalar w_max = p.free_flow_speed * crit_auto / (p.jam_density - crit_auto);
  if (w_max > Scalar(1) + Scalar(1e-12))
    throw std::invalid_argument("shockwave speed exceeds one cell per step at alpha = 1");
}

template <typename Scalar>
Scalar effective_jam_density(const CellParams<Scalar>& p, int open_lanes) {
  return p.jam_density * Scalar(open_lanes) / Scalar(p.lanes);
}

// Critical density, capacity and shockwave speed of a cell at autonomy level
// alpha with `open_lanes` of its lanes usable. Jam and critical density both
// scale with the open-lane fraction; a fully closed cell passes no flow.
template <typename Scalar>
DiagramPoint<Scalar> fundamental_diagram(const CellParams<Scalar>& p, Scalar alpha, int open_lanes) {
  if (alpha < 0 || alpha > 1) throw std::invalid_argument("autonomy level outside [0, 1]");
  if (open_lanes <= 0) return {};
  const Scalar mixed_headway = alpha * p.headway_auto + (Scalar(1) - alpha) * p.headway_human;
  const Scalar critical = Scalar(open_lanes) / mixed_headway;
  const Scalar capacity = p.free_flow_speed * critical;
  const Scalar jam = effective_jam_density(p, open_lanes);
  return {critical, capacity, capacity / (jam - critical)};
}

template <typename Scalar>
DiagramPoint<Scalar> fundamental_diagram(const CellParams<Scalar>& p, Scalar alpha) {
  return fundamental_diagram(p, alpha, p.lanes);
}

// Fraction of autonomous vehicles; an empty cell is treated as all-human.
template <typename Scalar>
Scalar autonomy_level(Scalar human, Scalar autonomous) {
  const Scalar total = human + autonomous;
  return total > 0 ? std::clamp(autonomous / total, Scalar(0), Scalar(1)) : Scalar(0);
}

/// Road made of an ordered list of cells. Single-bottleneck roads are built
/// with `PathSpec::single_bottleneck`; arbitrary cell lists are allowed for
/// simulation but the equilibrium analysis requires the bottleneck form.
template <typename Scalar>
struct PathSpec {
  std::vector<CellParams<Scalar>> cells;
  int prebottleneck_cells{0};  // m^n; zero when the road is not in bottleneck form

  std::size_t size() const { return cells.size(); }

  Scalar free_flow_latency() const {
    Scalar total = 0;
    for (const auto& c : cells) total += Scalar(1) / c.free_flow_speed;
    return total;
  }

  // jam_density is the prebottleneck value; bottleneck cells keep the same
  // per-lane jam density, so they get jam_density * b_b / b_n.
  static PathSpec single_bottleneck(int cells, int prebottleneck, int lanes_normal, int lanes_bottleneck,
                                    Scalar speed, Scalar headway_human, Scalar headway_auto,
                                    Scalar jam_density) {
    if (prebottleneck < 1) throw std::invalid_argument("prebottleneck cell count m_n must be >= 1");
    if (cells < prebottleneck + 1)
      throw std::invalid_argument("a bottleneck road needs at least one bottleneck cell");
    if (!(lanes_bottleneck >= 1 && lanes_bottleneck < lanes_normal))
      throw std::invalid_argument("bottleneck lanes must satisfy 1 <= b_b < b_n");
    PathSpec spec;
    spec.prebottleneck_cells = prebottleneck;
    const CellParams<Scalar> normal{speed, lanes_normal, headway_human, headway_auto, jam_density};
    CellParams<Scalar> narrow = normal;
    narrow.lanes = lanes_bottleneck;
    narrow.jam_density = jam_density * Scalar(lanes_bottleneck) / Scalar(lanes_normal);
    validate(normal);
    validate(narrow);
    spec.cells.assign(static_cast<std::size_t>(prebottleneck), normal);
    spec.cells.resize(static_cast<std::size_t>(cells), narrow);
    return spec;
  }

  bool is_single_bottleneck() const { return prebottleneck_cells >= 1 && size() > std::size_t(prebottleneck_cells); }
  const CellParams<Scalar>& normal_cell() const { return cells.front(); }
  const CellParams<Scalar>& bottleneck_cell() const { return cells.back(); }
  Scalar lane_ratio() const { return Scalar(bottleneck_cell().lanes) / Scalar(normal_cell().lanes); }
};

template <typename Scalar>
struct PathState {
  PathSpec<Scalar> spec;
  Vector<Scalar> human;
  Vector<Scalar> autonomous;
  std::vector<std::vector<char>> closed;  // [cell][lane], nonzero = closed

  explicit PathState(PathSpec<Scalar> s = {})
      : spec(std::move(s)),
        human(Vector<Scalar>::Zero(Eigen::Index(spec.size()))),
        autonomous(Vector<Scalar>::Zero(Eigen::Index(spec.size()))) {
    closed.reserve(spec.size());
    for (const auto& c : spec.cells) closed.emplace_back(std::size_t(c.lanes), char(0));
  }

  Eigen::Index cell_count() const { return human.size(); }
  Vector<Scalar> total() const { return human + autonomous; }

  int open_lanes(Eigen::Index i) const {
    const auto& flags = closed[std::size_t(i)];
    return int(std::count(flags.begin(), flags.end(), char(0)));
  }
  Scalar alpha(Eigen::Index i) const { return autonomy_level(human(i), autonomous(i)); }
  DiagramPoint<Scalar> diagram(Eigen::Index i) const {
    return fundamental_diagram(spec.cells[std::size_t(i)], alpha(i), open_lanes(i));
  }
  Scalar jam_density(Eigen::Index i) const {
    return effective_jam_density(spec.cells[std::size_t(i)], open_lanes(i));
  }
};

class SupplyViolation : public std::runtime_error {
 public:
  SupplyViolation(std::size_t path, double inflow, double supply)
      : std::runtime_error("inflow " + std::to_string(inflow) + " exceeds first-cell supply " +
                           std::to_string(supply) + " on path " + std::to_string(path)),
        path_(path) {}
  std::size_t path() const { return path_; }

 private:
  std::size_t path_;
};

// Remaining admission capacity (n_jam - n) * w(alpha) of cell i; zero for
// cells at or above their effective jam density.
template <typename Scalar>
Scalar cell_supply(const PathState<Scalar>& path, Eigen::Index i) {
  const auto d = path.diagram(i);
  const Scalar room = path.jam_density(i) - (path.human(i) + path.autonomous(i));
  return room > 0 ? room * d.shockwave_speed : Scalar(0);
}

// Total flow out of cell i: min(demand, downstream supply, capacity). The
// last cell of a road is not supply-limited.
template <typename Scalar>
Scalar cell_outflow(const PathState<Scalar>& path, Eigen::Index i) {
  const Scalar n = path.human(i) + path.autonomous(i);
  if (n <= 0) return Scalar(0);
  const auto& params = path.spec.cells[std::size_t(i)];
  Scalar flow = std::min(params.free_flow_speed * n, path.diagram(i).capacity);
  if (i + 1 < path.cell_count()) flow = std::min(flow, cell_supply(path, i + 1));
  return std::max(flow, Scalar(0));
}

template <typename Scalar>
Vector<Scalar> cell_outflows(const PathState<Scalar>& path) {
  Vector<Scalar> f(path.cell_count());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = cell_outflow(path, i);
  return f;
}

// Splits a cell's outflow in proportion to its composition. With 0 <= a <= f,
// h = fl(f - a) makes f - h exactly representable, so recomputing the
// autonomous share from h gives parts that sum to f without rounding.
template <typename Scalar>
FlowTuple<Scalar> split_flow_by_type(Scalar total_flow, Scalar human, Scalar autonomous) {
  if (total_flow <= 0) return {};
  if (human + autonomous <= 0)
    throw std::invalid_argument("cannot split positive flow out of an empty cell");
  const Scalar auto_flow = autonomy_level(human, autonomous) * total_flow;
  const Scalar human_flow = total_flow - std::min(auto_flow, total_flow);
  return {human_flow, total_flow - human_flow};
}

template <typename Scalar>
struct PathStep {
  PathState<Scalar> state;
  FlowTuple<Scalar> exit;
};

// Advances one road by one step under the given inflow into its first cell.
// `path_index` only labels the SupplyViolation thrown when the inflow exceeds
// the first-cell supply.
template <typename Scalar>
PathStep<Scalar> step_path(const PathState<Scalar>& path, const FlowTuple<Scalar>& inflow,
                           std::size_t path_index = 0) {
  if (inflow.human < 0 || inflow.autonomous < 0) throw std::invalid_argument("negative inflow");
  const Eigen::Index cells = path.cell_count();
  const Scalar supply = cell_supply(path, 0);
  const Scalar slack = Scalar(1e-9) * std::max(Scalar(1), supply);
  if (inflow.total() > supply + slack)
    throw SupplyViolation(path_index, double(inflow.total()), double(supply));

  // Boundary flows: index 0 is the inflow, index i + 1 leaves cell i.
  Vector<Scalar> fh(cells + 1), fa(cells + 1);
  fh(0) = inflow.human;
  fa(0) = inflow.autonomous;
  for (Eigen::Index i = 0; i < cells; ++i) {
    const auto split = split_flow_by_type(cell_outflow(path, i), path.human(i), path.autonomous(i));
    fh(i + 1) = split.human;
    fa(i + 1) = split.autonomous;
  }

  PathStep<Scalar> out{path, {fh(cells), fa(cells)}};
  out.state.human += fh.head(cells) - fh.tail(cells);
  out.state.autonomous += fa.head(cells) - fa.tail(cells);
  // Rounding in the proportional split can leave -1e-17 behind.
  out.state.human = out.state.human.cwiseMax(Scalar(0));
  out.state.autonomous = out.state.autonomous.cwiseMax(Scalar(0));
  return out;
}

template <typename Scalar>
Scalar default_blocked_latency(const PathSpec<Scalar>& spec) {
  return Scalar(10) * spec.free_flow_latency();
}

// Frozen-field traversal time: sum over cells of density / outflow. Empty
// cells contribute 1 / v; occupied cells with no outflow contribute
// `blocked_latency` (pass a negative value for the default 10 * I / v).
template <typename Scalar>
Scalar path_latency_estimate(const PathState<Scalar>& path, Scalar blocked_latency = Scalar(-1)) {
  if (blocked_latency < 0) blocked_latency = default_blocked_latency(path.spec);
  Scalar latency = 0;
  for (Eigen::Index i = 0; i < path.cell_count(); ++i) {
    const Scalar n = path.human(i) + path.autonomous(i);
    if (n <= 0) {
      latency += Scalar(1) / path.spec.cells[std::size_t(i)].free_flow_speed;
      continue;
    }
    const Scalar f = cell_outflow(path, i);
    latency += f > 0 ? n / f : blocked_latency;
  }
  return latency;
}

template <typename Scalar>
PathState<Scalar> apply_lane_closure(PathState<Scalar> path, std::size_t cell, std::size_t lane, bool closed) {
  if (cell >= path.closed.size()) throw std::out_of_range("cell index " + std::to_string(cell) + " out of range");
  if (lane >= path.closed[cell].size())
    throw std::out_of_range("lane index " + std::to_string(lane) + " out of range for cell " + std::to_string(cell));
  path.closed[cell][lane] = closed ? 1 : 0;
  return path;
}

}  // namespace mixroute
