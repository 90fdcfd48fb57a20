#include <stdexcept>

#include "mixroute/choice.hpp"
#include "mixroute/policies.hpp"

namespace mixroute {

Vector<double> uniform_policy(int paths) {
  if (paths < 1) throw std::invalid_argument("need at least one path");
  return uniform_routing<double>(paths);
}

Vector<double> greedy_min_latency(const Vector<double>& latencies) {
  if (latencies.size() == 0) throw std::invalid_argument("no latencies");
  Eigen::Index best = 0;
  for (Eigen::Index p = 1; p < latencies.size(); ++p)
    if (latencies(p) < latencies(best)) best = p;
  Vector<double> mu = Vector<double>::Zero(latencies.size());
  mu(best) = 1;
  return mu;
}

Vector<double> static_equilibrium_routing(const EquilibriumSolution<double>& solution) {
  if (!solution.feasible()) throw std::invalid_argument("equilibrium solution is infeasible");
  const double total = solution.autonomous.sum();
  if (!(total > 0)) return uniform_routing<double>(solution.autonomous.size());
  return solution.autonomous / total;
}

Vector<double> SelfishAvPolicy::act(const Environment& env) {
  if (mu_.size() != env.action_size() || env.time() == 0) {
    mu_ = uniform_routing<double>(env.action_size());
    return mu_;
  }
  mu_ = hedge_update(mu_, env.latencies(), learning_rate(schedule_, env.time() - 1));
  return mu_;
}

std::unique_ptr<Policy> make_policy(const std::string& name, const Scenario& scenario) {
  const int P = int(scenario.path_count());
  if (name == "uniform") return std::make_unique<ConstantPolicy>(uniform_policy(P));
  if (name == "greedy") return std::make_unique<GreedyPolicy>();
  if (name == "selfish_av") return std::make_unique<SelfishAvPolicy>(scenario.hedge);
  if (name == "static") {
    const auto mean = scenario.demand.mean();
    const auto sol = best_controlled_equilibrium(scenario.network, mean.human, mean.autonomous);
    if (!sol.feasible()) throw std::runtime_error("no controlled equilibrium for the mean demand");
    return std::make_unique<ConstantPolicy>(static_equilibrium_routing(sol));
  }
  throw std::invalid_argument("unknown policy '" + name + "' (uniform, greedy, static, selfish_av)");
}

EpisodeSummary run_episode(Environment& env, Policy& policy, std::optional<std::uint64_t> seed) {
  env.reset(seed);
  policy.reset();
  EpisodeSummary s;
  double sum = 0;
  while (!env.done()) {
    const auto r = env.step(policy.act(env));
    sum += r.cost;
    s.final_cost = r.cost;
  }
  s.mean_cost = sum / double(env.episode_length());
  return s;
}

}  // namespace mixroute
