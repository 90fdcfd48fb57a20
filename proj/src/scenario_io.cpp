// Scenario files. Every error names the offending field as a JSON pointer,
// e.g. "/paths/1/h_a: must be a number".

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "mixroute/scenario.hpp"

namespace mixroute {

namespace {

using nlohmann::json;

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

[[noreturn]] void fail(const std::string& ptr, const std::string& what) { throw ScenarioError(ptr.empty() ? "/" : ptr, what); }

void expect_object(const json& j, const std::string& ptr, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ptr, "must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) fail(child(ptr, key), "unknown field");
  }
}

const json& member(const json& obj, const std::string& ptr, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(child(ptr, key), "missing required field");
  return *it;
}

double number(const json& j, const std::string& ptr) {
  if (!j.is_number()) fail(ptr, "must be a number");
  return j.get<double>();
}

long integer(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) fail(ptr, "must be an integer");
  return j.get<long>();
}

std::string string(const json& j, const std::string& ptr) {
  if (!j.is_string()) fail(ptr, "must be a string");
  return j.get<std::string>();
}

const json& array(const json& j, const std::string& ptr) {
  if (!j.is_array()) fail(ptr, "must be an array");
  return j;
}

std::vector<double> numbers(const json& j, const std::string& ptr) {
  std::vector<double> out;
  for (std::size_t i = 0; i < array(j, ptr).size(); ++i) out.push_back(number(j[i], child(ptr, i)));
  return out;
}

std::pair<double, double> range(const json& j, const std::string& ptr) {
  const auto v = numbers(j, ptr);
  if (v.size() != 2) fail(ptr, "must be [low, high]");
  return {v[0], v[1]};
}

PathSpec<double> read_path(const json& j, const std::string& ptr) {
  expect_object(j, ptr, {"cells", "m_n", "b_n", "b_b", "v", "h_h", "h_a", "n_jam"});
  const long cells = integer(member(j, ptr, "cells"), child(ptr, "cells"));
  const long m_n = integer(member(j, ptr, "m_n"), child(ptr, "m_n"));
  const long b_n = integer(member(j, ptr, "b_n"), child(ptr, "b_n"));
  const long b_b = integer(member(j, ptr, "b_b"), child(ptr, "b_b"));
  const double v = number(member(j, ptr, "v"), child(ptr, "v"));
  const double h_h = number(member(j, ptr, "h_h"), child(ptr, "h_h"));
  const double h_a = number(member(j, ptr, "h_a"), child(ptr, "h_a"));
  const double jam = number(member(j, ptr, "n_jam"), child(ptr, "n_jam"));
  if (cells < 2 || cells > 100000) fail(child(ptr, "cells"), "must lie in [2, 100000]");
  if (b_n < 1 || b_n > 1000) fail(child(ptr, "b_n"), "must lie in [1, 1000]");
  try {
    return PathSpec<double>::single_bottleneck(int(cells), int(m_n), int(b_n), int(b_b), v, h_h, h_a, jam);
  } catch (const std::invalid_argument& e) {
    fail(ptr, e.what());
  }
}

DemandSpec read_demand(const json& j, const std::string& ptr) {
  expect_object(j, ptr, {"type", "human", "autonomous"});
  DemandSpec d;
  const std::string type = string(member(j, ptr, "type"), child(ptr, "type"));
  if (type == "constant") {
    d.kind = DemandKind::constant;
    d.human = number(member(j, ptr, "human"), child(ptr, "human"));
    d.autonomous = number(member(j, ptr, "autonomous"), child(ptr, "autonomous"));
  } else if (type == "uniform") {
    d.kind = DemandKind::uniform;
    std::tie(d.human, d.human_high) = range(member(j, ptr, "human"), child(ptr, "human"));
    std::tie(d.autonomous, d.autonomous_high) = range(member(j, ptr, "autonomous"), child(ptr, "autonomous"));
  } else {
    fail(child(ptr, "type"), "must be \"constant\" or \"uniform\"");
  }
  return d;
}

LearningSchedule<double> read_hedge(const json& j, const std::string& ptr) {
  expect_object(j, ptr, {"schedule", "eta0"});
  LearningSchedule<double> s;
  if (j.contains("schedule")) {
    const std::string kind = string(j["schedule"], child(ptr, "schedule"));
    if (kind == "constant")
      s.kind = ScheduleKind::constant;
    else if (kind == "inverse_sqrt")
      s.kind = ScheduleKind::inverse_sqrt;
    else
      fail(child(ptr, "schedule"), "must be \"constant\" or \"inverse_sqrt\"");
  }
  if (j.contains("eta0")) s.eta0 = number(j["eta0"], child(ptr, "eta0"));
  return s;
}

AccidentSpec read_accidents(const json& j, const std::string& ptr) {
  expect_object(j, ptr, {"type", "events", "rate", "duration"});
  AccidentSpec a;
  const std::string type = string(member(j, ptr, "type"), child(ptr, "type"));
  if (type == "none") {
    a.kind = AccidentKind::none;
  } else if (type == "scheduled") {
    a.kind = AccidentKind::scheduled;
    const std::string eptr = child(ptr, "events");
    const json& events = array(member(j, ptr, "events"), eptr);
    for (std::size_t i = 0; i < events.size(); ++i) {
      const std::string p = child(eptr, i);
      expect_object(events[i], p, {"path", "cell", "lane", "start", "duration"});
      ScheduledClosure c;
      c.path = int(integer(member(events[i], p, "path"), child(p, "path")));
      c.cell = int(integer(member(events[i], p, "cell"), child(p, "cell")));
      c.lane = int(integer(member(events[i], p, "lane"), child(p, "lane")));
      c.start = integer(member(events[i], p, "start"), child(p, "start"));
      c.duration = integer(member(events[i], p, "duration"), child(p, "duration"));
      a.schedule.push_back(c);
    }
  } else if (type == "stochastic") {
    a.kind = AccidentKind::stochastic;
    a.rate = number(member(j, ptr, "rate"), child(ptr, "rate"));
    a.duration = integer(member(j, ptr, "duration"), child(ptr, "duration"));
  } else {
    fail(child(ptr, "type"), "must be \"none\", \"scheduled\" or \"stochastic\"");
  }
  return a;
}

InitialCondition read_initial(const json& j, const std::string& ptr) {
  expect_object(j, ptr, {"type", "gamma", "flows", "human", "autonomous", "queue"});
  InitialCondition init;
  const std::string type = string(member(j, ptr, "type"), child(ptr, "type"));
  if (type == "empty") {
    init.kind = InitialKind::empty;
  } else if (type == "equilibrium") {
    init.kind = InitialKind::equilibrium;
    const std::string gptr = child(ptr, "gamma"), fptr = child(ptr, "flows");
    const json& gamma = array(member(j, ptr, "gamma"), gptr);
    for (std::size_t i = 0; i < gamma.size(); ++i) init.gamma.push_back(int(integer(gamma[i], child(gptr, i))));
    const json& flows = array(member(j, ptr, "flows"), fptr);
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const auto [h, a] = range(flows[i], child(fptr, i));
      init.flows.push_back({h, a});
    }
  } else if (type == "state") {
    init.kind = InitialKind::state;
    for (const char* key : {"human", "autonomous"}) {
      const std::string p = child(ptr, key);
      auto& dest = std::string(key) == "human" ? init.human : init.autonomous;
      const json& per_path = array(member(j, ptr, key), p);
      for (std::size_t i = 0; i < per_path.size(); ++i) dest.push_back(numbers(per_path[i], child(p, i)));
    }
    if (j.contains("queue")) {
      const auto [h, a] = range(j["queue"], child(ptr, "queue"));
      init.queue = {h, a};
    }
  } else {
    fail(child(ptr, "type"), "must be \"empty\", \"equilibrium\" or \"state\"");
  }
  return init;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("/", std::string("invalid JSON: ") + e.what());
  }
  expect_object(doc, "", {"paths", "demand", "hedge", "accidents", "episode", "initial", "initial_human_routing",
                          "seed", "blocked_latency", "training_cost"});

  Scenario s;
  const json& paths = array(member(doc, "", "paths"), "/paths");
  if (paths.empty()) fail("/paths", "needs at least one path");
  for (std::size_t i = 0; i < paths.size(); ++i) s.network.paths.push_back(read_path(paths[i], child("/paths", i)));
  s.demand = read_demand(member(doc, "", "demand"), "/demand");
  if (doc.contains("hedge")) s.hedge = read_hedge(doc["hedge"], "/hedge");
  if (doc.contains("accidents")) s.accidents = read_accidents(doc["accidents"], "/accidents");
  if (doc.contains("episode")) s.episode_length = integer(doc["episode"], "/episode");
  if (doc.contains("initial")) s.initial = read_initial(doc["initial"], "/initial");
  if (doc.contains("initial_human_routing"))
    s.initial_human_routing = numbers(doc["initial_human_routing"], "/initial_human_routing");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) fail("/seed", "must be a nonnegative integer");
    s.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("blocked_latency")) s.blocked_latency = number(doc["blocked_latency"], "/blocked_latency");
  if (doc.contains("training_cost")) {
    const std::string c = string(doc["training_cost"], "/training_cost");
    if (c == "proxy")
      s.training_cost = TrainingCost::proxy;
    else if (c == "raw")
      s.training_cost = TrainingCost::raw;
    else
      fail("/training_cost", "must be \"proxy\" or \"raw\"");
  }

  try {
    s.validate();
  } catch (const ScenarioError& e) {
    // validate() names fields loosely; anchor them under the document root.
    const std::string& where = e.where();
    std::string what = e.what();
    if (!e.where().empty()) what = what.substr(e.where().size() + 2);
    throw ScenarioError(where.empty() ? "/" : "/" + where, what);
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", "cannot open scenario file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

}  // namespace mixroute
