#include <doctest.h>

#include "qoc/costs.hpp"
#include "qoc/error.hpp"
#include "qoc/fixtures.hpp"

#include <cmath>
#include <numbers>

using namespace qoc;
using std::numbers::pi;

namespace {
constexpr CostKind kAllKinds[] = {CostKind::Energy, CostKind::Length, CostKind::Area, CostKind::TimeMax};
}

TEST_CASE("cost values on elementary controls") {
  const LevelSystem sys = LevelSystem::ladder(2);
  const TimeGrid grid{pi / 2, 16};
  ControlGrid c = ControlGrid::zeros(grid, ControlFlavor::SkewH, sys.edges);
  for (CostKind k : kAllKinds) CHECK(evaluate_cost(CostSpec::from_system(sys, k), c) == 0.0);

  c.values.setConstant(std::polar(1.0, 0.4));
  for (CostKind k : kAllKinds) CHECK(evaluate_cost(CostSpec::from_system(sys, k), c) == doctest::Approx(pi / 2).epsilon(1e-14));

  CostSpec no_weights;
  CHECK_THROWS_AS(evaluate_cost(no_weights, c), Error);
  CHECK_THROWS_AS(validate_cost_spec(CostSpec::from_system(sys, CostKind::Energy, FinalTime::Free)), Error);
  CHECK_NOTHROW(validate_cost_spec(CostSpec::from_system(sys, CostKind::Length, FinalTime::Free)));
}

TEST_CASE("weighted integrands") {
  LevelSystem sys = LevelSystem::ladder(3);
  sys.edges[0].mu = 2.0;
  const TimeGrid grid{1.0, 1};
  ControlGrid c = ControlGrid::zeros(grid, ControlFlavor::SkewH, sys.edges);
  c.values(0, 0) = 2.0;  // scaled 1
  c.values(0, 1) = cdouble(0.0, 3.0);
  CHECK(evaluate_cost(CostSpec::from_system(sys, CostKind::Energy), c) == doctest::Approx(10.0));
  CHECK(evaluate_cost(CostSpec::from_system(sys, CostKind::Length), c) == doctest::Approx(std::sqrt(10.0)));
  CHECK(evaluate_cost(CostSpec::from_system(sys, CostKind::Area), c) == doctest::Approx(4.0));
  CHECK(evaluate_cost(CostSpec::from_system(sys, CostKind::TimeMax), c) == doctest::Approx(3.0));
}

TEST_CASE("constraint sets") {
  const LevelSystem two = LevelSystem::ladder(2);
  ControlGrid c = ControlGrid::zeros(TimeGrid{1.0, 2}, ControlFlavor::SkewH, two.edges);
  for (CostKind k : kAllKinds) CHECK(in_constraint_set(CostSpec::from_system(two, k), c, 0));
  c.values.setConstant(cdouble(0.0, -1.0));
  for (CostKind k : kAllKinds) CHECK(in_constraint_set(CostSpec::from_system(two, k), c, 1));

  const LevelSystem three = LevelSystem::ladder(3);
  ControlGrid d = ControlGrid::zeros(TimeGrid{1.0, 1}, ControlFlavor::SkewH, three.edges);
  d.values.setConstant(1.0);
  CHECK(in_constraint_set(CostSpec::from_system(three, CostKind::TimeMax), d, 0));
  CHECK_FALSE(in_constraint_set(CostSpec::from_system(three, CostKind::Energy), d, 0));
  CHECK_FALSE(in_constraint_set(CostSpec::from_system(three, CostKind::Area), d, 0));
}

TEST_CASE("constant speed residual") {
  const LevelSystem sys = LevelSystem::ladder(2);
  const auto spec = CostSpec::from_system(sys, CostKind::Energy);
  ControlGrid c = ControlGrid::zeros(TimeGrid{1.0, 10}, ControlFlavor::RealU, sys.edges);
  c.values.setConstant(0.3);
  CHECK(constant_speed_residual(spec, c) == doctest::Approx(0.0));
  c.values.bottomRows(5).setConstant(0.6);
  // q = {0.09, 0.36}: relative deviation 0.135/0.225 = 0.6, same as {1, 4}
  CHECK(constant_speed_residual(spec, c) == doctest::Approx(0.6));
  CHECK_THROWS_AS(constant_speed_residual(CostSpec::from_system(sys, CostKind::Area), c), Error);
}

TEST_CASE("cost properties on random controls") {
  fixtures::Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3;
    const LevelSystem sys = fixtures::random_connected_system(rng, n);
    const TimeGrid grid{fixtures::uniform(rng, 0.5, 3.0), 40};
    const auto c = fixtures::smooth_random_control(rng, grid, sys.edges, ControlFlavor::SkewH, 1.5);

    // length is invariant under uniform time rescaling of a piecewise-constant control
    const double s = fixtures::uniform(rng, 0.3, 3.0);
    ControlGrid fast = c;
    fast.grid.T = grid.T / s;
    fast.values *= s;
    const auto length = CostSpec::from_system(sys, CostKind::Length);
    CHECK(evaluate_cost(length, fast) == doctest::Approx(evaluate_cost(length, c)).epsilon(1e-10));

    // constant speed: length^2 = T * energy
    ControlGrid flat = c;
    for (int i = 0; i < grid.N; ++i) flat.values.row(i) = c.values.row(0);
    const double e = evaluate_cost(CostSpec::from_system(sys, CostKind::Energy), flat);
    const double l = evaluate_cost(length, flat);
    CHECK(std::abs(l * l - grid.T * e) < 1e-10);

    // monotone in each modulus
    ControlGrid bumped = c;
    const int step = trial % grid.N;
    bumped.values(step, 0) *= 1.1;
    for (CostKind k : kAllKinds) {
      const auto spec = CostSpec::from_system(sys, k);
      if (k == CostKind::TimeMax)
        CHECK(evaluate_cost(spec, bumped) >= evaluate_cost(spec, c));
      else
        CHECK(evaluate_cost(spec, bumped) > evaluate_cost(spec, c));
    }
  }
}
