#include "mixroute/series.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace mixroute {

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

EpisodeSummary write_episode_csv(std::ostream& out, Environment& env, Policy& policy,
                                 std::optional<std::uint64_t> seed, bool densities) {
  const int P = env.action_size();
  const auto& paths = env.scenario().network.paths;
  out << "k,J,proxy,Qh,Qa";
  for (int p = 0; p < P; ++p) out << ",lat_" << p;
  for (int p = 0; p < P; ++p) out << ",mu_h_" << p;
  for (int p = 0; p < P; ++p) out << ",mu_a_" << p;
  if (densities)
    for (const char* cls : {"nh", "na"})
      for (int p = 0; p < P; ++p)
        for (std::size_t i = 0; i < paths[std::size_t(p)].size(); ++i) out << ',' << cls << '_' << p << '_' << i;
  out << '\n';

  env.reset(seed);
  policy.reset();
  EpisodeSummary summary;
  double sum = 0;
  while (!env.done()) {
    const Vector<double> mu_h = env.human_routing();
    const Vector<double> mu_a = policy.act(env);
    const StepResult r = env.step(mu_a);
    sum += r.cost;
    summary.final_cost = r.cost;
    const auto q = env.queue().totals();
    out << env.time() << ',' << num(r.cost) << ',' << num(r.proxy_cost) << ',' << num(q.human) << ','
        << num(q.autonomous);
    for (int p = 0; p < P; ++p) out << ',' << num(r.latencies(p));
    for (int p = 0; p < P; ++p) out << ',' << num(mu_h(p));
    for (int p = 0; p < P; ++p) out << ',' << num(mu_a(p));
    if (densities) {
      for (const auto& path : env.paths())
        for (Eigen::Index i = 0; i < path.cell_count(); ++i) out << ',' << num(path.human(i));
      for (const auto& path : env.paths())
        for (Eigen::Index i = 0; i < path.cell_count(); ++i) out << ',' << num(path.autonomous(i));
    }
    out << '\n';
  }
  out.flush();
  summary.mean_cost = sum / double(env.episode_length());
  return summary;
}

}  // namespace mixroute
