// mixroute: simulate scenarios, compute equilibria, serve the trainer bridge.
//
// Exit codes: 0 ok, 2 bad input, 3 infeasible demand, 4 protocol errors
// during `serve --stdio`. Diagnostics go to stderr; MIXROUTE_LOG_LEVEL
// (error, warn, info, debug) controls how chatty they are.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "mixroute/bridge.hpp"
#include "mixroute/brute_force.hpp"
#include "mixroute/env.hpp"
#include "mixroute/policies.hpp"
#include "mixroute/scenario.hpp"
#include "mixroute/series.hpp"

using namespace mixroute;
using nlohmann::json;

namespace {

enum Exit { ok = 0, input_error = 2, infeasible = 3, protocol_error = 4 };

int log_level() {
  static const int level = [] {
    const char* v = std::getenv("MIXROUTE_LOG_LEVEL");
    const std::string s = v ? v : "warn";
    if (s == "error") return 0;
    if (s == "info") return 2;
    if (s == "debug") return 3;
    return 1;
  }();
  return level;
}

template <typename... Args>
void log(int level, const char* fmt, Args... args) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level > log_level()) return;
  std::fprintf(stderr, "mixroute [%s] ", names[level]);
  if constexpr (sizeof...(Args) == 0)
    std::fputs(fmt, stderr);
  else
    std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

json solution_json(const EquilibriumSolution<double>& s) {
  json j;
  j["status"] = s.feasible() ? "feasible" : "infeasible";
  if (!s.feasible()) return j;
  j["free_flow_road"] = s.free_flow_road;
  j["common_latency"] = s.common_latency;
  j["total_latency"] = s.total_latency;
  j["paths"] = json::array();
  for (Eigen::Index p = 0; p < s.human.size(); ++p)
    j["paths"].push_back({{"human", s.human(p)},
                          {"autonomous", s.autonomous(p)},
                          {"gamma", s.gamma(p)},
                          {"alpha", s.alpha(p)},
                          {"latency", s.latency(p)}});
  return j;
}

int cmd_simulate(const std::string& file, const std::string& policy_name, const std::vector<double>& action,
                 const std::string& output, bool densities, std::optional<std::uint64_t> seed) {
  const Scenario scenario = load_scenario(file);
  Environment env(scenario);
  const int P = env.action_size();

  std::unique_ptr<Policy> policy;
  if (!action.empty()) {
    if (int(action.size()) != P) throw ScenarioError("", "--action needs " + std::to_string(P) + " entries");
    Vector<double> mu = Eigen::Map<const Vector<double>>(action.data(), P);
    policy = std::make_unique<ConstantPolicy>(normalize_routing(mu, 1e-6));
  } else {
    if (policy_name == "static") {
      const auto mean = scenario.demand.mean();
      if (!best_controlled_equilibrium(scenario.network, mean.human, mean.autonomous).feasible()) {
        std::cerr << "infeasible\n";
        return infeasible;
      }
    }
    policy = make_policy(policy_name, scenario);
  }

  std::ofstream file_out;
  if (output != "-") {
    file_out.open(output);
    if (!file_out) throw ScenarioError("", "cannot write '" + output + "'");
  }
  std::ostream& out = output == "-" ? std::cout : file_out;

  const auto summary = write_episode_csv(out, env, *policy, seed, densities);
  log(2, "episode of %ld steps, mean J %.6g", env.episode_length(), summary.mean_cost);
  return ok;
}

int cmd_equilibrium(const std::string& file, const std::string& mode, bool oracle, double resolution) {
  const Scenario scenario = load_scenario(file);
  const auto demand = scenario.demand.mean();
  if (scenario.demand.kind == DemandKind::uniform) log(1, "uniform demand: solving for the mean rates");
  if (oracle && scenario.path_count() > 3) throw ScenarioError("/paths", "--oracle supports at most 3 paths");

  json out;
  out["demand"] = {{"human", demand.human}, {"autonomous", demand.autonomous}};
  bool all_feasible = true;
  for (const std::string m : {"selfish", "controlled"}) {
    if (mode != "both" && mode != m) continue;
    const bool controlled = m == "controlled";
    const auto sol = controlled ? best_controlled_equilibrium(scenario.network, demand.human, demand.autonomous)
                                : best_selfish_equilibrium(scenario.network, demand.human, demand.autonomous);
    json j = solution_json(sol);
    all_feasible = all_feasible && sol.feasible();
    if (oracle) {
      const auto ref = brute_force_equilibrium(scenario.network, demand.human, demand.autonomous,
                                               controlled ? EquilibriumMode::controlled : EquilibriumMode::selfish,
                                               resolution);
      j["oracle"] = solution_json(ref);
      if (ref.feasible() && sol.feasible()) j["oracle_delta"] = std::abs(ref.total_latency - sol.total_latency);
      if (ref.feasible() != sol.feasible()) log(1, "%s: solver and oracle disagree on feasibility", m.c_str());
    }
    out[m] = j;
  }
  std::cout << out.dump(2) << '\n';
  if (!all_feasible) {
    std::cerr << "infeasible\n";
    return infeasible;
  }
  return ok;
}

std::atomic<bool> stop_requested{false};
extern "C" void on_signal(int) { stop_requested = true; }

int cmd_serve(const std::string& file, bool use_stdio, int port, const std::string& host) {
  const Scenario scenario = load_scenario(file);
  if (use_stdio) {
    const std::size_t errors = serve_stream(scenario, std::cin, std::cout);
    if (errors > 0) {
      log(0, "%zu request(s) answered with a protocol error", errors);
      return protocol_error;
    }
    return ok;
  }
  TcpBridgeServer server(scenario);
  server.start(host, port);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  // The bound port goes to stdout so scripts using --port 0 can find it.
  std::cout << "listening " << host << ':' << server.port() << std::endl;
  log(2, "serving on %s:%d", host.c_str(), server.port());
  while (!stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-autonomy routing on parallel roads"};
  app.require_subcommand(1);

  std::string file, policy = "static", output = "-", mode = "both", host = "127.0.0.1";
  std::vector<double> action;
  bool densities = false, oracle = false, use_stdio = false;
  double resolution = 1e-3;
  std::uint64_t seed = 0;
  int port = -1;

  auto* sim = app.add_subcommand("simulate", "Run one episode and write a CSV time series");
  sim->add_option("scenario", file, "Scenario JSON file")->required();
  sim->add_option("--policy", policy, "uniform | greedy | static | selfish_av")->capture_default_str();
  sim->add_option("--action", action, "Constant autonomous routing (overrides --policy)")->delimiter(',');
  sim->add_option("-o,--output", output, "CSV path, '-' for stdout")->capture_default_str();
  sim->add_flag("--densities", densities, "Append per-cell densities");
  auto* seed_opt = sim->add_option("--seed", seed, "Episode seed (default: scenario seed)");

  auto* eq = app.add_subcommand("equilibrium", "Best selfish / controlled equilibria for the mean demand");
  eq->add_option("scenario", file, "Scenario JSON file")->required();
  eq->add_option("--mode", mode, "selfish | controlled | both")
      ->check(CLI::IsMember({"selfish", "controlled", "both"}))
      ->capture_default_str();
  eq->add_flag("--oracle", oracle, "Cross-check with the grid-search reference (<= 3 paths)");
  eq->add_option("--resolution", resolution, "Oracle grid spacing")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Serve the newline-JSON trainer bridge");
  serve->add_option("scenario", file, "Scenario JSON file")->required();
  auto* stdio_opt = serve->add_flag("--stdio", use_stdio, "Speak the protocol on stdin/stdout");
  auto* port_opt = serve->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "IPv4 address to bind")->capture_default_str();
  stdio_opt->excludes(port_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : input_error;
  }

  try {
    if (*sim) return cmd_simulate(file, policy, action, output, densities, *seed_opt ? std::optional(seed) : std::nullopt);
    if (*eq) return cmd_equilibrium(file, mode, oracle, resolution);
    if (*serve) {
      if (!use_stdio && port < 0) {
        std::cerr << "serve: pass --stdio or --port N\n";
        return input_error;
      }
      return cmd_serve(file, use_stdio, port, host);
    }
  } catch (const std::exception& e) {
    log(0, "%s", e.what());
    return input_error;
  }
  return ok;
}
