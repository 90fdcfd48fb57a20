#pragma once

// Episodic closed-loop simulator. One tick, in order:
//   1. enqueue this step's demand packet
//   2. disburse the queue into the roads using (mu_h, mu_a) and first-cell supplies
//   3. step every road
//   4. estimate road latencies on the new state and apply the Hedge update to mu_h
//   5. apply accident closures for the new time index
//   6. compute the stage cost J (queued plus in-network vehicles)
// The action of a tick is the autonomous routing mu_a used in step 2.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "mixroute/ctm.hpp"
#include "mixroute/queue.hpp"
#include "mixroute/scenario.hpp"

namespace mixroute {

struct StepResult {
  Vector<double> observation;
  double cost{0};           // J(k)
  double proxy_cost{0};     // J(k) - J(k-1), J(0) = 0
  double training_cost{0};  // proxy or raw J, per scenario
  Vector<double> latencies;
  bool done{false};
  FlowTuple<double> demand;  // arrived this tick
  FlowTuple<double> exit;    // left the network this tick
};

double stage_cost(const VehicleQueue<double>& queue, const std::vector<PathState<double>>& paths);

// Observation length 2 * sum_p I_p + 2 + sum_p sum_i b_{p,i}.
std::size_t observation_size(const NetworkSpec<double>& net);

// [n_h per road and cell] ++ [n_a same order] ++ [Q_h, Q_a] ++ [closure flags,
// road-major, cell-minor, lane-last; 1 = closed].
Vector<double> make_observation(const VehicleQueue<double>& queue, const std::vector<PathState<double>>& paths);

class Environment {
 public:
  explicit Environment(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  std::size_t observation_size() const { return obs_size_; }
  int action_size() const { return int(scenario_.path_count()); }
  long episode_length() const { return scenario_.episode_length; }

  // Starts an episode. Without a seed the scenario seed is used.
  Vector<double> reset(std::optional<std::uint64_t> seed = std::nullopt);

  // Throws std::invalid_argument for actions off the simplex by more than
  // 1e-6, std::logic_error when called before reset or after the last step.
  StepResult step(const Vector<double>& action);

  long time() const { return k_; }
  bool started() const { return started_; }
  bool done() const { return started_ && k_ >= scenario_.episode_length; }
  const std::vector<PathState<double>>& paths() const { return paths_; }
  const VehicleQueue<double>& queue() const { return queue_; }
  const Vector<double>& human_routing() const { return mu_h_; }
  const Vector<double>& latencies() const { return latency_; }
  double current_cost() const;
  Vector<double> observation() const { return make_observation(queue_, paths_); }

 private:
  double uniform01();
  void apply_closures();
  Vector<double> compute_latencies() const;

  Scenario scenario_;
  std::size_t obs_size_{0};
  std::mt19937_64 rng_;
  std::vector<PathState<double>> paths_;
  VehicleQueue<double> queue_;
  Vector<double> mu_h_;
  Vector<double> latency_;
  std::vector<std::vector<std::vector<long>>> closed_until_;  // stochastic accidents
  long k_{0};
  double proxy_sum_{0};
  bool started_{false};
};

}  // namespace mixroute
