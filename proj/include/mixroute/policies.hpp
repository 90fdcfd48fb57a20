#pragma once

// Baseline routing policies for the autonomous fleet, and the derivative-free
// search for the best constant routing.

#include <cstdint>
#include <memory>
#include <string>

#include "mixroute/env.hpp"
#include "mixroute/equilibrium.hpp"

namespace mixroute {

Vector<double> uniform_policy(int paths);

// All autonomous flow on the fastest road; ties go to the lowest index.
Vector<double> greedy_min_latency(const Vector<double>& latencies);

// Replays the autonomous split of an equilibrium solution; uniform when it
// carries no autonomous flow.
Vector<double> static_equilibrium_routing(const EquilibriumSolution<double>& solution);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset() {}
  // Called once per tick, before env.step.
  virtual Vector<double> act(const Environment& env) = 0;
};

class ConstantPolicy : public Policy {
 public:
  explicit ConstantPolicy(Vector<double> mu) : mu_(std::move(mu)) {}
  Vector<double> act(const Environment&) override { return mu_; }

 private:
  Vector<double> mu_;
};

class GreedyPolicy : public Policy {
 public:
  Vector<double> act(const Environment& env) override { return greedy_min_latency(env.latencies()); }
};

// Autonomous vehicles that route for themselves: Hedge on mu_a with the same
// timing as the humans, starting from uniform.
class SelfishAvPolicy : public Policy {
 public:
  explicit SelfishAvPolicy(LearningSchedule<double> schedule) : schedule_(schedule) {}
  void reset() override { mu_.resize(0); }
  Vector<double> act(const Environment& env) override;

 private:
  LearningSchedule<double> schedule_;
  Vector<double> mu_;
};

// uniform | greedy | static | selfish_av. `static` solves the best controlled
// equilibrium for the scenario's mean demand; throws if it is infeasible.
std::unique_ptr<Policy> make_policy(const std::string& name, const Scenario& scenario);

struct EpisodeSummary {
  double mean_cost{0};   // average J over the K ticks
  double final_cost{0};  // J(K)
};

EpisodeSummary run_episode(Environment& env, Policy& policy, std::optional<std::uint64_t> seed = std::nullopt);

struct StaticSearchOptions {
  int iterations{40};
  int population{32};
  int elites{6};
  int episodes{1};  // seeds per candidate, shared by all candidates (common random numbers)
  double initial_spread{2.0};
};

struct StaticSearchResult {
  Vector<double> routing;
  double mean_cost{0};
};

// Cross-entropy search over softmax logits for the constant autonomous
// routing with the lowest episode-average J.
StaticSearchResult optimize_static_policy(const Scenario& scenario, std::uint64_t seed,
                                          const StaticSearchOptions& options = {});

}  // namespace mixroute
