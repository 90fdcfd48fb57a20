#include "mixroute/scenario.hpp"

#include <cmath>

namespace mixroute {

namespace {

std::string at(const char* field, std::size_t index) { return std::string(field) + "/" + std::to_string(index); }

void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw ScenarioError(where, what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0; }

}  // namespace

FlowTuple<double> DemandSpec::mean() const {
  if (kind == DemandKind::constant) return {human, autonomous};
  return {(human + human_high) / 2, (autonomous + autonomous_high) / 2};
}

void Scenario::validate() const {
  try {
    network.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("paths", e.what());
  }
  const std::size_t P = network.size();

  require(finite_nonneg(demand.human) && finite_nonneg(demand.autonomous), "demand", "rates must be finite and >= 0");
  if (demand.kind == DemandKind::uniform) {
    require(std::isfinite(demand.human_high) && demand.human_high >= demand.human, "demand",
            "human range must satisfy low <= high");
    require(std::isfinite(demand.autonomous_high) && demand.autonomous_high >= demand.autonomous, "demand",
            "autonomous range must satisfy low <= high");
  }
  require(std::isfinite(hedge.eta0) && hedge.eta0 > 0, "hedge", "eta0 must be positive");
  require(episode_length >= 1, "episode", "episode length must be >= 1");
  require(std::isfinite(blocked_latency), "blocked_latency", "must be finite");

  switch (accidents.kind) {
    case AccidentKind::none:
      break;
    case AccidentKind::scheduled:
      for (std::size_t j = 0; j < accidents.schedule.size(); ++j) {
        const auto& c = accidents.schedule[j];
        const std::string w = at("accidents/events", j);
        require(c.path >= 0 && std::size_t(c.path) < P, w, "path index out of range");
        const auto& cells = network.paths[std::size_t(c.path)].cells;
        require(c.cell >= 0 && std::size_t(c.cell) < cells.size(), w, "cell index out of range");
        require(c.lane >= 0 && c.lane < cells[std::size_t(c.cell)].lanes, w, "lane index out of range");
        require(c.start >= 0 && c.duration >= 1, w, "need start >= 0 and duration >= 1");
      }
      break;
    case AccidentKind::stochastic:
      require(std::isfinite(accidents.rate) && accidents.rate >= 0 && accidents.rate <= 1, "accidents",
              "rate must lie in [0, 1]");
      require(accidents.duration >= 1, "accidents", "duration must be >= 1");
      break;
  }

  switch (initial.kind) {
    case InitialKind::empty:
      break;
    case InitialKind::equilibrium:
      require(initial.gamma.size() == P && initial.flows.size() == P, "initial",
              "gamma and flows need one entry per path");
      for (std::size_t p = 0; p < P; ++p) {
        try {
          (void)equilibrium_state(network.paths[p], initial.flows[p], initial.gamma[p]);
        } catch (const std::invalid_argument& e) {
          throw ScenarioError(at("initial/flows", p), e.what());
        }
      }
      break;
    case InitialKind::state:
      require(initial.human.size() == P && initial.autonomous.size() == P, "initial",
              "human and autonomous need one density list per path");
      for (std::size_t p = 0; p < P; ++p) {
        const auto& cells = network.paths[p].cells;
        require(initial.human[p].size() == cells.size() && initial.autonomous[p].size() == cells.size(),
                at("initial/human", p), "density list length must equal the cell count");
        for (std::size_t i = 0; i < cells.size(); ++i) {
          const double h = initial.human[p][i], a = initial.autonomous[p][i];
          require(finite_nonneg(h) && finite_nonneg(a), at("initial/human", p), "densities must be finite and >= 0");
          require(h + a <= cells[i].jam_density, at("initial/human", p), "density above jam density in cell " + std::to_string(i));
        }
      }
      require(finite_nonneg(initial.queue.human) && finite_nonneg(initial.queue.autonomous), "initial/queue",
              "queued vehicles must be finite and >= 0");
      break;
  }

  if (initial_human_routing) {
    require(initial_human_routing->size() == P, "initial_human_routing", "needs one entry per path");
    try {
      Vector<double> mu = Eigen::Map<const Vector<double>>(initial_human_routing->data(), Eigen::Index(P));
      (void)normalize_routing(mu, 1e-6);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError("initial_human_routing", e.what());
    }
  }
}

Vector<double> initial_routing(const Scenario& s) {
  const auto P = Eigen::Index(s.path_count());
  if (s.initial_human_routing) {
    Vector<double> mu = Eigen::Map<const Vector<double>>(s.initial_human_routing->data(), P);
    return normalize_routing(mu, 1e-6);
  }
  if (s.initial.kind == InitialKind::equilibrium) {
    Vector<double> mu(P);
    for (Eigen::Index p = 0; p < P; ++p) mu(p) = s.initial.flows[std::size_t(p)].human;
    if (mu.sum() > 0) return mu / mu.sum();
  }
  return uniform_routing<double>(P);
}

Scenario desk_scenario(double human, double autonomous, long episode_length) {
  Scenario s;
  s.network.paths = {PathSpec<double>::single_bottleneck(5, 3, 2, 1, 1.0, 1.0, 0.5, 8.0),
                     PathSpec<double>::single_bottleneck(10, 8, 2, 1, 1.0, 1.0, 0.5, 8.0)};
  s.demand.human = human;
  s.demand.autonomous = autonomous;
  s.episode_length = episode_length;
  return s;
}

}  // namespace mixroute
