#pragma once

// Scenario description for the closed-loop simulator: the network, demand
// and accident processes, human route-choice schedule, episode length and
// initial condition. Scenarios are plain data; `validate` checks everything
// the environment relies on.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixroute/choice.hpp"
#include "mixroute/ctm.hpp"
#include "mixroute/equilibrium.hpp"

namespace mixroute {

// Raised for malformed or inconsistent scenarios. `where` is a JSON pointer
// into the scenario document when the error came from a file, else empty.
class ScenarioError : public std::invalid_argument {
 public:
  ScenarioError(std::string where, const std::string& what)
      : std::invalid_argument(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

enum class DemandKind { constant, uniform };

// Vehicles arriving per step. Constant: (human, autonomous) every step.
// Uniform: each class drawn i.i.d. per step from [low, high].
struct DemandSpec {
  DemandKind kind{DemandKind::constant};
  double human{0}, autonomous{0};            // constant rate, or low end of the range
  double human_high{0}, autonomous_high{0};  // high end (uniform only)

  FlowTuple<double> mean() const;
};

struct ScheduledClosure {
  int path{0};
  int cell{0};
  int lane{0};
  long start{0};     // first time index at which the lane is closed
  long duration{1};  // number of time indices it stays closed
};

enum class AccidentKind { none, scheduled, stochastic };

// Stochastic accidents: at every tick each open lane closes independently
// with probability `rate` and stays closed for `duration` time indices.
struct AccidentSpec {
  AccidentKind kind{AccidentKind::none};
  std::vector<ScheduledClosure> schedule;
  double rate{0};
  long duration{1};
};

enum class InitialKind { empty, equilibrium, state };

struct InitialCondition {
  InitialKind kind{InitialKind::empty};
  // equilibrium: per-path congested cell count and constant inflow
  std::vector<int> gamma;
  std::vector<FlowTuple<double>> flows;
  // state: explicit per-path densities plus an optional queued packet
  std::vector<std::vector<double>> human, autonomous;
  FlowTuple<double> queue;
};

enum class TrainingCost { proxy, raw };

struct Scenario {
  NetworkSpec<double> network;
  DemandSpec demand;
  LearningSchedule<double> hedge;
  AccidentSpec accidents;
  long episode_length{300};
  InitialCondition initial;
  std::optional<std::vector<double>> initial_human_routing;  // default: see initial_routing()
  std::uint64_t seed{0};
  double blocked_latency{-1};  // negative: 10 * I / v per road
  TrainingCost training_cost{TrainingCost::proxy};

  std::size_t path_count() const { return network.size(); }
  void validate() const;
};

// Human routing at time 0: the configured vector, else the human split of an
// equilibrium initial condition, else uniform.
Vector<double> initial_routing(const Scenario& s);

// The two-road instance used throughout the tests and the README: the
// canonical 5-cell road and a 10-cell copy (m_n = 8), same lanes and
// headways, constant demand.
Scenario desk_scenario(double human, double autonomous, long episode_length = 300);

// Scenario files (JSON). Errors carry the JSON pointer of the bad field.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

}  // namespace mixroute
