#include <doctest.h>

#include <mixroute/brute_force.hpp>
#include <mixroute/equilibrium.hpp>

#include <random>

#include "fixtures.hpp"
#include "random_instances.hpp"

using namespace mixroute;

TEST_CASE("congested cell latency") {
  const auto path = fixtures::canonical_path();
  // n_c = (1 - r) n_jam + r n_crit = 4 + 1 = 5 at alpha = 0, carried at flow 1.
  CHECK(congested_cell_latency(path, 0.0) == doctest::Approx(5.0));
  CHECK(congested_density(path, 0.0) == doctest::Approx(5.0));
  CHECK(congested_density(path, 0.0) / bottleneck_capacity(path, 0.0) == doctest::Approx(5.0));
  CHECK(congested_cell_latency(path, 1.0) == doctest::Approx(3.0));

  // r close to 1: the bottleneck barely narrows.
  auto wide = PathSpec<double>::single_bottleneck(4, 2, 1000, 999, 1.0, 1.0, 0.5, 5000.0);
  CHECK(congested_cell_latency(wide, 0.5) == doctest::Approx(1.0).epsilon(1e-2));

  PathSpec<double> plain;
  plain.cells = {CellParams<double>{1.0, 2, 1.0, 0.5, 8.0}, CellParams<double>{1.0, 2, 1.0, 0.5, 8.0}};
  plain.prebottleneck_cells = 1;
  CHECK_THROWS_AS(congested_cell_latency(plain, 0.0), std::invalid_argument);
}

TEST_CASE("road equilibrium latency") {
  const auto path = fixtures::canonical_path();
  CHECK(road_equilibrium_latency(path, 0.0, 0.0) == doctest::Approx(5.0));
  CHECK(road_equilibrium_latency(path, 0.0, 2.0) == doctest::Approx(13.0));
  CHECK(road_equilibrium_latency(path, 1.0, 3.0) == doctest::Approx(11.0));
  CHECK_THROWS(road_equilibrium_latency(path, 0.0, 3.5));
  CHECK_THROWS(road_equilibrium_latency(path, 0.0, -0.1));
}

TEST_CASE("congestion profiles are prebottleneck suffixes") {
  const auto path = fixtures::canonical_path();
  const auto profiles = enumerate_congestion_profiles(path);
  REQUIRE(profiles.size() == 4);
  // 1-based {}, {3}, {2,3}, {1,2,3}.
  CHECK(profiles[0].empty());
  CHECK(profiles[1] == std::vector<int>{2});
  CHECK(profiles[2] == std::vector<int>{1, 2});
  CHECK(profiles[3] == std::vector<int>{0, 1, 2});

  const auto short_road = PathSpec<double>::single_bottleneck(2, 1, 2, 1, 1.0, 1.0, 0.5, 8.0);
  CHECK(enumerate_congestion_profiles(short_road).size() == 2);
  CHECK_THROWS(PathSpec<double>::single_bottleneck(2, 0, 2, 1, 1.0, 1.0, 0.5, 8.0));
}

TEST_CASE("equilibrium state construction") {
  const auto path = fixtures::canonical_path();
  SUBCASE("gamma = 2 at alpha = 0") {
    const auto s = equilibrium_state(path, FlowTuple<double>{1.0, 0.0}, 2);
    Vector<double> expected(5);
    expected << 1, 5, 5, 1, 1;
    CHECK((s.total() - expected).cwiseAbs().maxCoeff() <= 1e-12);
    auto x = s;
    for (int k = 0; k < 1000; ++k) x = step_path(x, FlowTuple<double>{1.0, 0.0}).state;
    CHECK((x.total() - expected).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(path_latency_estimate(x) == doctest::Approx(13.0).epsilon(1e-12));
  }
  SUBCASE("free flow below capacity") {
    const auto s = equilibrium_state(path, FlowTuple<double>{0.4, 0.2}, 0);
    CHECK((s.total().array() - 0.6).abs().maxCoeff() <= 1e-12);
    auto x = step_path(s, FlowTuple<double>{0.4, 0.2});
    CHECK((x.state.total() - s.total()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("whole prebottleneck congested") {
    const double cap = bottleneck_capacity(path, 0.5);
    const FlowTuple<double> d{0.5 * cap, 0.5 * cap};
    auto s = equilibrium_state(path, d, 3);
    const auto start = s.total();
    for (int k = 0; k < 1000; ++k) s = step_path(s, d).state;
    CHECK((s.total() - start).cwiseAbs().maxCoeff() <= 1e-9);
  }
  CHECK_THROWS(equilibrium_state(path, FlowTuple<double>{0.5, 0.0}, 1));  // congestion needs capacity demand
  CHECK_THROWS(equilibrium_state(path, FlowTuple<double>{2.0, 0.0}, 0));  // above capacity
  CHECK_THROWS(equilibrium_state(path, FlowTuple<double>{1.0, 0.0}, 4));
}

TEST_CASE("network spec validation") {
  NetworkSpec<double> same{{fixtures::canonical_path(), fixtures::canonical_path()}};
  CHECK_THROWS(same.validate());
  CHECK_THROWS(brute_force_equilibrium(same, 1.0, 0.0, EquilibriumMode::selfish));
  CHECK_NOTHROW(fixtures::desk_network().validate());
}

TEST_CASE("single path below capacity") {
  NetworkSpec<double> net{{fixtures::canonical_path()}};
  const auto s = best_selfish_equilibrium(net, 0.6, 0.2);
  REQUIRE(s.feasible());
  CHECK(s.free_flow_road == 0);
  CHECK(s.human(0) == doctest::Approx(0.6));
  CHECK(s.gamma(0) == 0.0);
  CHECK(s.common_latency == doctest::Approx(5.0));
  CHECK(s.total_latency == doctest::Approx(4.0));
  const auto o = brute_force_equilibrium(net, 0.6, 0.2, EquilibriumMode::selfish);
  REQUIRE(o.feasible());
  CHECK(o.total_latency == doctest::Approx(4.0));

  CHECK_FALSE(best_selfish_equilibrium(net, 5.0, 0.0).feasible());
  CHECK_FALSE(best_controlled_equilibrium(net, 5.0, 0.0).feasible());
  CHECK_FALSE(brute_force_equilibrium(net, 5.0, 0.0, EquilibriumMode::controlled).feasible());
}

TEST_CASE("desk instance against the grid oracle") {
  const auto net = fixtures::desk_network();
  for (auto [h, a] : {std::pair{1.2, 0.3}, std::pair{0.8, 0.6}, std::pair{1.3, 0.0}, std::pair{0.5, 0.2}}) {
    CAPTURE(h);
    CAPTURE(a);
    const auto s = best_selfish_equilibrium(net, h, a);
    const auto c = best_controlled_equilibrium(net, h, a);
    const auto os = brute_force_equilibrium(net, h, a, EquilibriumMode::selfish, 1e-3);
    const auto oc = brute_force_equilibrium(net, h, a, EquilibriumMode::controlled, 1e-3);
    REQUIRE(s.feasible());
    REQUIRE(c.feasible());
    REQUIRE(os.feasible());
    REQUIRE(oc.feasible());
    CHECK(std::abs(s.total_latency - os.total_latency) <= 1e-3);
    CHECK(std::abs(c.total_latency - oc.total_latency) <= 1e-3);
    CHECK(c.total_latency <= s.total_latency + 1e-9);
    CHECK(s.human.sum() == doctest::Approx(h));
    CHECK(s.autonomous.sum() == doctest::Approx(a));
    CHECK(c.human.sum() == doctest::Approx(h));
    CHECK(c.autonomous.sum() == doctest::Approx(a));
  }
  // lambda = (1.2, 0.3): road 1 alone is too small, so every user sees road 2's free-flow latency.
  CHECK(best_selfish_equilibrium(net, 1.2, 0.3).total_latency == doctest::Approx(15.0));
  // lambda = (0.8, 0.6): controlled keeps humans on road 1 in free flow, 0.2 AVs take road 2.
  const auto c = best_controlled_equilibrium(net, 0.8, 0.6);
  CHECK(c.free_flow_road == 0);
  CHECK(c.autonomous(1) == doctest::Approx(0.2));
  CHECK(c.total_latency == doctest::Approx(8.0));
  CHECK(best_selfish_equilibrium(net, 0.8, 0.6).total_latency == doctest::Approx(14.0));
}

TEST_CASE("no autonomous demand: controlled equals selfish") {
  const auto net = fixtures::desk_network();
  for (double h : {0.3, 0.9, 1.4, 2.2}) {
    const auto s = best_selfish_equilibrium(net, h, 0.0);
    const auto c = best_controlled_equilibrium(net, h, 0.0);
    REQUIRE(s.feasible() == c.feasible());
    if (s.feasible()) CHECK(c.total_latency == doctest::Approx(s.total_latency).epsilon(1e-12));
  }
}

TEST_CASE("solution structure on random instances") {
  std::mt19937_64 rng(31);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_instances::draw(rng, 2 + int(rng() % 3));
    const auto s = best_selfish_equilibrium(inst.net, inst.human, inst.autonomous);
    const auto c = best_controlled_equilibrium(inst.net, inst.human, inst.autonomous);
    if (!s.feasible()) continue;
    REQUIRE(c.feasible());
    ++checked;
    CHECK(c.total_latency <= s.total_latency + 1e-9);

    const int q = s.free_flow_road;
    CHECK(s.gamma(q) == 0.0);
    for (int p = 0; p < int(inst.net.size()); ++p) {
      const auto& path = inst.net.paths[std::size_t(p)];
      CHECK(s.human(p) >= 0);
      CHECK(s.autonomous(p) >= 0);
      if (p < q) {
        CHECK(s.gamma(p) > 0);
        CHECK(s.gamma(p) <= path.prebottleneck_cells + 1e-9);
        CHECK(s.flow()(p) == doctest::Approx(bottleneck_capacity(path, s.alpha(p))).epsilon(1e-9));
        CHECK(road_equilibrium_latency(path, s.alpha(p), std::min(s.gamma(p), double(path.prebottleneck_cells))) ==
              doctest::Approx(s.common_latency).epsilon(1e-9));
      } else if (p == q) {
        CHECK(s.flow()(p) <= bottleneck_capacity(path, s.alpha(p)) * (1 + 1e-9));
      } else {
        CHECK(s.flow()(p) == 0.0);
      }
    }
    // Roads used by humans in the controlled solution share one latency; the rest are no faster.
    for (int p = 0; p < int(inst.net.size()); ++p) {
      if (c.human(p) > 1e-12) CHECK(c.latency(p) == doctest::Approx(c.common_latency));
      CHECK(c.latency(p) >= c.common_latency - 1e-9);
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("more autonomy never hurts the controlled optimum") {
  std::mt19937_64 rng(77);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_instances::draw(rng, 2 + int(rng() % 3));
    const double shift = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * inst.human;
    const auto before = best_controlled_equilibrium(inst.net, inst.human, inst.autonomous);
    const auto after = best_controlled_equilibrium(inst.net, inst.human - shift, inst.autonomous + shift);
    if (!before.feasible()) continue;
    REQUIRE(after.feasible());
    CHECK(after.total_latency <= before.total_latency + 1e-9);
    ++checked;
  }
  CHECK(checked > 100);
}
