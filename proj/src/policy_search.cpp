// Cross-entropy search for the best constant autonomous routing. Candidates
// are softmax(theta) with theta ~ N(mean, sigma^2) per coordinate; the elite
// fraction refits (mean, sigma) each round. All candidates are scored on the
// same episode seeds so their differences are not noise.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mixroute/policies.hpp"

namespace mixroute {

namespace {

Vector<double> softmax(const Vector<double>& theta) {
  const Vector<double> e = (theta.array() - theta.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

StaticSearchResult optimize_static_policy(const Scenario& scenario, std::uint64_t seed,
                                          const StaticSearchOptions& options) {
  if (options.iterations < 1 || options.population < 2 || options.elites < 1 ||
      options.elites > options.population || options.episodes < 1)
    throw std::invalid_argument("invalid search options");
  const Eigen::Index P = Eigen::Index(scenario.path_count());
  Environment env(scenario);

  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> episode_seeds(std::size_t(options.episodes));
  for (auto& s : episode_seeds) s = rng();

  auto score = [&](const Vector<double>& mu) {
    ConstantPolicy policy(mu);
    double total = 0;
    for (auto s : episode_seeds) total += run_episode(env, policy, s).mean_cost;
    return total / double(episode_seeds.size());
  };

  StaticSearchResult best{uniform_routing<double>(P), 0};
  best.mean_cost = score(best.routing);
  if (P == 1) return best;

  Vector<double> mean = Vector<double>::Zero(P);
  Vector<double> sigma = Vector<double>::Constant(P, options.initial_spread);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector<double>> thetas(std::size_t(options.population));
  std::vector<double> costs(std::size_t(options.population));
  std::vector<std::size_t> order(std::size_t(options.population));

  for (int it = 0; it < options.iterations; ++it) {
    for (std::size_t c = 0; c < thetas.size(); ++c) {
      thetas[c].resize(P);
      for (Eigen::Index p = 0; p < P; ++p) thetas[c](p) = mean(p) + sigma(p) * normal(rng);
      const Vector<double> mu = softmax(thetas[c]);
      costs[c] = score(mu);
      if (costs[c] < best.mean_cost) best = {mu, costs[c]};
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });

    mean.setZero();
    for (int e = 0; e < options.elites; ++e) mean += thetas[order[std::size_t(e)]];
    mean /= double(options.elites);
    Vector<double> var = Vector<double>::Zero(P);
    for (int e = 0; e < options.elites; ++e) var += (thetas[order[std::size_t(e)]] - mean).array().square().matrix();
    // A small floor keeps the search alive after the elites collapse.
    sigma = (var / double(options.elites)).cwiseSqrt().cwiseMax(1e-3);
  }
  return best;
}

}  // namespace mixroute
