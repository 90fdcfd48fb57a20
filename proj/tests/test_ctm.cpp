#include <doctest.h>

#include <mixroute/ctm.hpp>
#include <mixroute/equilibrium.hpp>
#include <mixroute/queue.hpp>

#include <random>

#include "fixtures.hpp"

using namespace mixroute;
using Params = CellParams<double>;

namespace {

const Params kExampleCell{1.0, 2, 1.0, 0.5, 8.0};

PathState<double> single_cell(const Params& p, double human, double autonomous) {
  PathSpec<double> spec;
  spec.cells = {p};
  PathState<double> s(spec);
  s.human(0) = human;
  s.autonomous(0) = autonomous;
  return s;
}

// Random admissible state: every cell below its effective jam density.
PathState<double> random_state(const PathSpec<double>& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PathState<double> s(spec);
  for (Eigen::Index i = 0; i < s.cell_count(); ++i) {
    const double n = u(rng) * spec.cells[std::size_t(i)].jam_density;
    const double a = u(rng);
    s.autonomous(i) = a * n;
    s.human(i) = n - s.autonomous(i);
  }
  return s;
}

}  // namespace

TEST_CASE("fundamental diagram at the worked parameter set") {
  auto d0 = fundamental_diagram(kExampleCell, 0.0);
  CHECK(d0.critical_density == doctest::Approx(2.0));
  CHECK(d0.capacity == doctest::Approx(2.0));
  CHECK(d0.shockwave_speed == doctest::Approx(1.0 / 3.0));

  auto d1 = fundamental_diagram(kExampleCell, 1.0);
  CHECK(d1.critical_density == doctest::Approx(4.0));
  CHECK(d1.capacity == doctest::Approx(4.0));
  CHECK(d1.shockwave_speed == doctest::Approx(1.0));
}

TEST_CASE("equal headways give an autonomy-independent diagram") {
  const Params p{0.8, 3, 1.2, 1.2, 9.0};
  const auto ref = fundamental_diagram(p, 0.0);
  for (double a : {0.1, 0.37, 0.5, 0.99, 1.0}) {
    const auto d = fundamental_diagram(p, a);
    CHECK(d.critical_density == doctest::Approx(ref.critical_density).epsilon(1e-14));
    CHECK(d.capacity == doctest::Approx(ref.capacity).epsilon(1e-14));
    CHECK(d.shockwave_speed == doctest::Approx(ref.shockwave_speed).epsilon(1e-14));
  }
}

TEST_CASE("closed lanes shrink the diagram") {
  const auto half = fundamental_diagram(kExampleCell, 0.0, 1);
  CHECK(half.critical_density == doctest::Approx(1.0));
  CHECK(half.capacity == doctest::Approx(1.0));
  CHECK(half.shockwave_speed == doctest::Approx(1.0 / 3.0));
  const auto shut = fundamental_diagram(kExampleCell, 0.5, 0);
  CHECK(shut.critical_density == 0.0);
  CHECK(shut.capacity == 0.0);
  CHECK(shut.shockwave_speed == 0.0);
}

TEST_CASE("cell parameter validation") {
  CHECK_NOTHROW(validate(kExampleCell));
  CHECK_THROWS(validate(Params{1.2, 2, 1.0, 0.5, 8.0}));  // v > 1
  CHECK_THROWS(validate(Params{1.0, 2, 0.5, 1.0, 8.0}));  // h_a > h_h
  CHECK_THROWS(validate(Params{1.0, 2, 1.0, 0.5, 3.0}));  // jam below b / h_a
  CHECK_THROWS(validate(Params{1.0, 2, 1.0, 0.5, 6.0}));  // w(1) = 4 / 2 > 1
  CHECK_THROWS(fundamental_diagram(kExampleCell, 1.5));
}

TEST_CASE("cell outflow is min of demand, supply and capacity") {
  SUBCASE("empty cell") {
    auto s = single_cell(kExampleCell, 0, 0);
    CHECK(cell_outflow(s, 0) == 0.0);
  }
  SUBCASE("downstream at jam density") {
    auto spec = fixtures::canonical_path();
    PathState<double> s(spec);
    s.human(0) = 1.5;
    s.human(1) = spec.cells[1].jam_density;
    CHECK(cell_outflow(s, 0) == 0.0);
  }
  SUBCASE("capacity binds: min(5, 3, 1)") {
    PathSpec<double> spec;
    spec.cells = {Params{1.0, 1, 1.0, 0.5, 8.0}, Params{1.0, 3, 1.0, 0.5, 12.0}};
    PathState<double> s(spec);
    s.human(0) = 5;
    s.human(1) = 3;
    CHECK(cell_supply(s, 1) == doctest::Approx(3.0));
    CHECK(cell_outflow(s, 0) == doctest::Approx(1.0));
  }
  SUBCASE("road exit is not supply limited") {
    auto s = single_cell(kExampleCell, 1.5, 0);
    CHECK(cell_outflow(s, 0) == doctest::Approx(1.5));
  }
}

TEST_CASE("flow split follows cell composition") {
  auto a = split_flow_by_type(1.0, 3.0, 1.0);
  CHECK(a.human == doctest::Approx(0.75));
  CHECK(a.autonomous == doctest::Approx(0.25));
  auto b = split_flow_by_type(2.0, 0.0, 4.0);
  CHECK(b.human == 0.0);
  CHECK(b.autonomous == 2.0);
  auto c = split_flow_by_type(0.0, 2.0, 4.0);
  CHECK(c.total() == 0.0);
  CHECK_THROWS_AS(split_flow_by_type(1.0, 0.0, 0.0), std::invalid_argument);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int t = 0; t < 1000; ++t) {
    const double h = u(rng), au = u(rng);
    const double f = std::uniform_real_distribution<double>(0.0, h + au)(rng);
    const auto s = split_flow_by_type(f, h, au);
    CHECK(s.human + s.autonomous == f);
  }
}

TEST_CASE("step_path on trivial inputs") {
  const auto spec = fixtures::canonical_path();
  SUBCASE("empty path stays empty") {
    PathState<double> s(spec);
    auto out = step_path(s, {0, 0});
    CHECK(out.state.total().isZero());
    CHECK(out.exit.total() == 0.0);
  }
  SUBCASE("single cell held at critical density") {
    const double crit = fundamental_diagram(kExampleCell, 0.25).critical_density;
    auto s = single_cell(kExampleCell, 0.75 * crit, 0.25 * crit);
    const double cap = fundamental_diagram(kExampleCell, 0.25).capacity;
    for (int k = 0; k < 50; ++k) {
      auto out = step_path(s, {0.75 * cap, 0.25 * cap});
      CHECK(out.exit.total() == doctest::Approx(cap).epsilon(1e-12));
      s = out.state;
    }
    CHECK(s.total()(0) == doctest::Approx(crit).epsilon(1e-12));
  }
  SUBCASE("inflow above first-cell supply names the path") {
    PathState<double> s(spec);
    s.human(0) = 7.0;
    try {
      step_path(s, {1.0, 0.0}, 4);
      FAIL("expected SupplyViolation");
    } catch (const SupplyViolation& e) {
      CHECK(e.path() == 4);
    }
  }
}

TEST_CASE("equilibrium states are fixed points with the closed-form latency") {
  const auto spec = fixtures::canonical_path();
  for (double alpha : {0.0, 0.3, 1.0}) {
    const double cap = bottleneck_capacity(spec, alpha);
    const FlowTuple<double> demand{(1 - alpha) * cap, alpha * cap};
    for (int gamma = 0; gamma <= 3; ++gamma) {
      auto s = equilibrium_state(spec, demand, gamma);
      const auto start = s.total();
      CHECK(path_latency_estimate(s) == doctest::Approx(road_equilibrium_latency(spec, alpha, double(gamma))).epsilon(1e-12));
      for (int k = 0; k < 200; ++k) {
        auto out = step_path(s, demand);
        CHECK(out.exit.total() == doctest::Approx(cap).epsilon(1e-12));
        s = out.state;
      }
      CHECK((s.total() - start).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("path latency estimate") {
  const auto spec = fixtures::canonical_path();
  PathState<double> empty(spec);
  CHECK(path_latency_estimate(empty) == doctest::Approx(5.0));

  auto eq = equilibrium_state(spec, FlowTuple<double>{1.0, 0.0}, 2);
  CHECK(path_latency_estimate(eq) == doctest::Approx(13.0).epsilon(1e-12));

  SUBCASE("blocked cell uses the configured cap") {
    PathState<double> s(spec);
    s.human(3) = 1.0;
    s.human(4) = spec.cells[4].jam_density;  // cell 3 cannot move
    const double exit = cell_outflow(s, 4);
    REQUIRE(exit > 0);
    const double expected = 1 + 1 + 1 + 50.0 + s.human(4) / exit;
    CHECK(path_latency_estimate(s) == doctest::Approx(expected));
    CHECK(path_latency_estimate(s, 7.0) == doctest::Approx(expected - 50.0 + 7.0));
  }
}

TEST_CASE("lane closures") {
  const auto spec = fixtures::canonical_path();
  PathState<double> s(spec);
  s.human(1) = 6.0;
  auto closed = apply_lane_closure(s, 1, 0, true);
  CHECK(closed.open_lanes(1) == 1);
  CHECK(closed.jam_density(1) == doctest::Approx(4.0));
  CHECK(closed.human(1) == 6.0);  // densities are untouched
  CHECK(cell_supply(closed, 1) == 0.0);
  CHECK(closed.diagram(1).capacity == doctest::Approx(1.0));

  // The overfull cell drains and never grows while above its jam density.
  double prev = closed.total()(1);
  for (int k = 0; k < 20; ++k) {
    closed = step_path(closed, {0.0, 0.0}).state;
    CHECK(closed.total()(1) <= prev);
    prev = closed.total()(1);
  }

  auto reopened = apply_lane_closure(closed, 1, 0, false);
  CHECK(reopened.open_lanes(1) == 2);
  CHECK_THROWS_AS(apply_lane_closure(s, 5, 0, true), std::out_of_range);
  CHECK_THROWS_AS(apply_lane_closure(s, 4, 1, true), std::out_of_range);  // bottleneck has one lane
}

TEST_CASE("random steps conserve mass, respect bounds and flow limits") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto spec = fixtures::canonical_path();
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_state(spec, rng);
    if (u(rng) < 0.3) s = apply_lane_closure(s, std::size_t(rng() % 3), std::size_t(rng() % 2), true);
    for (int k = 0; k < 20; ++k) {
      const double supply = cell_supply(s, 0);
      const double in = u(rng) * supply;
      const double a = u(rng);
      const FlowTuple<double> inflow{(1 - a) * in, a * in};

      // Flow limits from the pre-step state.
      const auto f = cell_outflows(s);
      for (Eigen::Index i = 0; i < s.cell_count(); ++i) {
        const auto& c = spec.cells[std::size_t(i)];
        CHECK(f(i) <= c.free_flow_speed * s.total()(i) + 1e-12);
        CHECK(f(i) <= s.diagram(i).capacity + 1e-12);
        if (i + 1 < s.cell_count()) CHECK(f(i) <= cell_supply(s, i + 1) + 1e-12);
      }

      const auto out = step_path(s, inflow);
      CHECK(out.state.human.sum() - s.human.sum() == doctest::Approx(inflow.human - out.exit.human).epsilon(1e-9));
      CHECK(std::abs((out.state.human.sum() - s.human.sum()) - (inflow.human - out.exit.human)) <= 1e-9);
      CHECK(std::abs((out.state.autonomous.sum() - s.autonomous.sum()) - (inflow.autonomous - out.exit.autonomous)) <= 1e-9);
      for (Eigen::Index i = 0; i < s.cell_count(); ++i) {
        CHECK(out.state.human(i) >= 0);
        CHECK(out.state.autonomous(i) >= 0);
        // A cell already above its (closure-reduced) jam density may only shrink.
        const double bound = std::max(out.state.jam_density(i), s.total()(i));
        CHECK(out.state.total()(i) <= bound + 1e-9);
      }
      s = out.state;
    }
  }
}

TEST_CASE("equal headways: totals do not depend on the class split") {
  auto spec = PathSpec<double>::single_bottleneck(6, 4, 3, 2, 0.9, 1.0, 1.0, 9.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PathState<double> a(spec), b(spec);
  for (int k = 0; k < 300; ++k) {
    const double in = u(rng) * std::min(cell_supply(a, 0), cell_supply(b, 0));
    const double split_a = u(rng), split_b = u(rng);
    a = step_path(a, {split_a * in, (1 - split_a) * in}).state;
    b = step_path(b, {split_b * in, (1 - split_b) * in}).state;
    CHECK((a.total() - b.total()).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("constant mixed inflow homogenizes autonomy") {
  const auto spec = fixtures::canonical_path();
  const double cap = bottleneck_capacity(spec, 0.4);
  VehicleQueue<double> queue;
  PathState<double> s(spec);
  const Vector<double> one = Vector<double>::Ones(1);
  for (int k = 0; k < 2000; ++k) {
    queue.enqueue(0.6 * cap, 0.4 * cap);
    Vector<double> supply(1);
    supply << cell_supply(s, 0);
    const auto admitted = disburse(queue, supply, one, one);
    s = step_path(s, {admitted.human(0), admitted.autonomous(0)}).state;
  }
  for (Eigen::Index i = 0; i < s.cell_count(); ++i) CHECK(s.alpha(i) == doctest::Approx(0.4).epsilon(1e-9));
}
