#include "mixroute/env.hpp"

#include <stdexcept>

#include "mixroute/choice.hpp"
#include "mixroute/equilibrium.hpp"

namespace mixroute {

double stage_cost(const VehicleQueue<double>& queue, const std::vector<PathState<double>>& paths) {
  double total = queue.totals().total();
  for (const auto& p : paths) total += p.human.sum() + p.autonomous.sum();
  return total;
}

std::size_t observation_size(const NetworkSpec<double>& net) {
  std::size_t cells = 0, lanes = 0;
  for (const auto& path : net.paths) {
    cells += path.size();
    for (const auto& c : path.cells) lanes += std::size_t(c.lanes);
  }
  return 2 * cells + 2 + lanes;
}

Vector<double> make_observation(const VehicleQueue<double>& queue, const std::vector<PathState<double>>& paths) {
  Eigen::Index cells = 0, lanes = 0;
  for (const auto& p : paths) {
    cells += p.cell_count();
    for (const auto& flags : p.closed) lanes += Eigen::Index(flags.size());
  }
  Vector<double> obs(2 * cells + 2 + lanes);
  Eigen::Index h = 0, a = cells, flag = 2 * cells + 2;
  for (const auto& p : paths) {
    obs.segment(h, p.cell_count()) = p.human;
    obs.segment(a, p.cell_count()) = p.autonomous;
    h += p.cell_count();
    a += p.cell_count();
    for (const auto& flags : p.closed)
      for (char c : flags) obs(flag++) = c ? 1.0 : 0.0;
  }
  const auto q = queue.totals();
  obs(2 * cells) = q.human;
  obs(2 * cells + 1) = q.autonomous;
  return obs;
}

Environment::Environment(Scenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  obs_size_ = mixroute::observation_size(scenario_.network);
}

double Environment::current_cost() const { return stage_cost(queue_, paths_); }

// 53 random bits -> [0, 1). Spelled out so the stream does not depend on the
// standard library's distribution implementation.
double Environment::uniform01() { return double(rng_() >> 11) * 0x1.0p-53; }

Vector<double> Environment::compute_latencies() const {
  Vector<double> l(Eigen::Index(paths_.size()));
  for (std::size_t p = 0; p < paths_.size(); ++p)
    l(Eigen::Index(p)) = path_latency_estimate(paths_[p], scenario_.blocked_latency);
  return l;
}

Vector<double> Environment::reset(std::optional<std::uint64_t> seed) {
  rng_.seed(seed.value_or(scenario_.seed));
  const auto& init = scenario_.initial;
  const std::size_t P = scenario_.path_count();

  paths_.clear();
  for (std::size_t p = 0; p < P; ++p) {
    const auto& spec = scenario_.network.paths[p];
    switch (init.kind) {
      case InitialKind::empty:
        paths_.emplace_back(spec);
        break;
      case InitialKind::equilibrium:
        paths_.push_back(equilibrium_state(spec, init.flows[p], init.gamma[p]));
        break;
      case InitialKind::state: {
        PathState<double> s(spec);
        const auto I = Eigen::Index(spec.size());
        s.human = Eigen::Map<const Vector<double>>(init.human[p].data(), I);
        s.autonomous = Eigen::Map<const Vector<double>>(init.autonomous[p].data(), I);
        paths_.push_back(std::move(s));
        break;
      }
    }
  }
  queue_ = VehicleQueue<double>();
  if (init.kind == InitialKind::state) queue_.enqueue(init.queue.human, init.queue.autonomous);

  mu_h_ = initial_routing(scenario_);
  closed_until_.assign(P, {});
  for (std::size_t p = 0; p < P; ++p)
    for (const auto& c : scenario_.network.paths[p].cells) closed_until_[p].emplace_back(std::size_t(c.lanes), -1L);

  k_ = 0;
  proxy_sum_ = 0;
  started_ = true;
  apply_closures();
  latency_ = compute_latencies();
  return observation();
}

void Environment::apply_closures() {
  const auto& acc = scenario_.accidents;
  if (acc.kind == AccidentKind::none) return;
  for (std::size_t p = 0; p < paths_.size(); ++p) {
    auto& flags = paths_[p].closed;
    for (std::size_t i = 0; i < flags.size(); ++i)
      for (std::size_t b = 0; b < flags[i].size(); ++b) {
        bool closed = false;
        if (acc.kind == AccidentKind::scheduled) {
          for (const auto& e : acc.schedule)
            closed = closed || (std::size_t(e.path) == p && std::size_t(e.cell) == i && std::size_t(e.lane) == b &&
                                k_ >= e.start && k_ < e.start + e.duration);
        } else {
          long& until = closed_until_[p][i][b];
          if (until < k_ && k_ > 0 && uniform01() < acc.rate) until = k_ + acc.duration - 1;
          closed = until >= k_;
        }
        if (bool(flags[i][b]) != closed) paths_[p] = apply_lane_closure(std::move(paths_[p]), i, b, closed);
      }
  }
}

StepResult Environment::step(const Vector<double>& action) {
  if (!started_) throw std::logic_error("step called before reset");
  if (done()) throw std::logic_error("episode is over; call reset");
  if (action.size() != action_size())
    throw std::invalid_argument("action has " + std::to_string(action.size()) + " entries, expected " +
                                std::to_string(action_size()));
  const Vector<double> mu_a = normalize_routing(action, 1e-6);

  // 1. demand
  StepResult r;
  const auto& d = scenario_.demand;
  if (d.kind == DemandKind::constant) {
    r.demand = {d.human, d.autonomous};
  } else {
    r.demand.human = d.human + (d.human_high - d.human) * uniform01();
    r.demand.autonomous = d.autonomous + (d.autonomous_high - d.autonomous) * uniform01();
  }
  queue_.enqueue(r.demand.human, r.demand.autonomous);

  // 2. admission
  const std::size_t P = paths_.size();
  Vector<double> supply(static_cast<Eigen::Index>(P));
  for (std::size_t p = 0; p < P; ++p) supply(Eigen::Index(p)) = cell_supply(paths_[p], 0);
  const auto admitted = disburse(queue_, supply, mu_h_, mu_a);

  // 3. flow
  for (std::size_t p = 0; p < P; ++p) {
    const auto e = Eigen::Index(p);
    auto out = step_path(paths_[p], FlowTuple<double>{admitted.human(e), admitted.autonomous(e)}, p);
    paths_[p] = std::move(out.state);
    r.exit.human += out.exit.human;
    r.exit.autonomous += out.exit.autonomous;
  }
  ++k_;

  // 4. route choice on the post-flow latencies
  latency_ = compute_latencies();
  mu_h_ = hedge_update(mu_h_, latency_, learning_rate(scenario_.hedge, k_ - 1));

  // 5. accidents for the new time index
  apply_closures();

  // 6. cost. The proxy is taken against the running sum of earlier proxies
  // rather than J(k-1); the two agree whenever that sum is exact, and this
  // way the proxies of an episode add up to J(K) without drift.
  r.cost = current_cost();
  r.proxy_cost = r.cost - proxy_sum_;
  proxy_sum_ += r.proxy_cost;
  r.training_cost = scenario_.training_cost == TrainingCost::proxy ? r.proxy_cost : r.cost;
  r.latencies = latency_;
  r.done = done();
  r.observation = observation();
  return r;
}

}  // namespace mixroute
