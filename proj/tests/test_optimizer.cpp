#include <doctest.h>

#include "qoc/error.hpp"
#include "qoc/fixtures.hpp"
#include "qoc/optimizer.hpp"
#include "qoc/resonance.hpp"

#include <cmath>
#include <numbers>

using namespace qoc;
using std::numbers::pi;

namespace {

SolveOptions quick(double T, int N) {
  SolveOptions o;
  o.grid = {T, N};
  o.threads = 1;
  return o;
}

AdmissiblePair real_pair(const std::vector<Edge>& edges, const TimeGrid& grid, const Eigen::MatrixXd& U,
                         const Eigen::VectorXd& rho0) {
  ControlGrid c = ControlGrid::zeros(grid, ControlFlavor::RealU, edges);
  c.values = U.cast<cdouble>();
  return {propagate_real(c, rho0), c};
}

}  // namespace

TEST_CASE("two-level energy optimum") {
  const LevelSystem sys = LevelSystem::ladder(2);
  const auto res = solve_reduced(sys, CostSpec::from_system(sys, CostKind::Energy), BoundarySpec::eigenstate(0),
                                 BoundarySpec::eigenstate(1), quick(1.0, 100));
  CHECK(res.converged);
  CHECK(res.cost == doctest::Approx(pi * pi / 4).epsilon(1e-6));
  const auto r = pmp_residual(res.pair, res.lift, CostSpec::from_system(sys, CostKind::Energy));
  CHECK(r.worst() <= 1e-4);
}

TEST_CASE("two-level time-max optimum") {
  const LevelSystem sys = LevelSystem::ladder(2);
  const CostSpec spec = CostSpec::from_system(sys, CostKind::TimeMax, FinalTime::Free);
  const auto res = solve_reduced(sys, spec, BoundarySpec::eigenstate(0), BoundarySpec::eigenstate(1), quick(1.0, 100));
  CHECK(res.converged);
  CHECK(res.minimal_time == doctest::Approx(pi / 2).epsilon(1e-4));
  const auto r = pmp_residual(res.pair, res.lift, spec);
  CHECK(r.worst() <= 1e-4);
}

TEST_CASE("three-level ladder transfer is weakly resonant with a clean lift") {
  const LevelSystem sys = LevelSystem::ladder(3);
  const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
  const BoundarySpec src = BoundarySpec::eigenstate(0), dst = BoundarySpec::eigenstate(2);
  const auto res = solve_reduced(sys, spec, src, dst, quick(1.0, 200));
  CHECK(res.converged);
  const auto r = pmp_residual(res.pair, res.lift, spec, &src, &dst);
  CHECK(r.worst() <= 1e-4);
  CHECK(constant_speed_residual(spec, res.pair.control) <= 1e-3);
  CHECK(classify_resonance(res.pair, 1e-6, 1e-4).status != ResonanceStatus::Neither);
  // The least-squares normal lift must agree with the solver's own.
  double fit = 0.0;
  const PMPLift fitted = fit_normal_lift(res.pair, spec, &fit);
  CHECK(fit < 1e-6);
  CHECK(pmp_residual(res.pair, fitted, spec).worst() <= 1e-4);
}

TEST_CASE("adjoint gradient matches central differences") {
  fixtures::Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3;
    const LevelSystem sys = fixtures::random_connected_system(rng, n);
    const TimeGrid grid{fixtures::uniform(rng, 0.5, 2.0), 30};
    const ControlGrid c = fixtures::smooth_random_control(rng, grid, sys.edges, ControlFlavor::RealU, 2.0);
    const Eigen::VectorXd rho0 = fixtures::random_real_unit_state(rng, n);
    const AdmissiblePair pair{propagate_real(c, rho0), c};
    Eigen::VectorXd a = fixtures::random_real_unit_state(rng, n).cwiseAbs2();
    const BoundarySpec target = BoundarySpec::point(a);
    PenaltyState pen;
    pen.multipliers = Eigen::VectorXd::Random(n - 1);
    pen.weight = fixtures::uniform(rng, 1.0, 50.0);
    const CostKind kind = trial % 2 ? CostKind::Length : CostKind::Energy;
    const CostSpec spec = CostSpec::from_system(sys, kind);
    const Eigen::MatrixXd g = adjoint_gradient(spec, pair, target, pen);
    Eigen::MatrixXd fd(g.rows(), g.cols());
    const double h = 1e-5;
    for (int i = 0; i < g.rows(); ++i) {
      for (int e = 0; e < g.cols(); ++e) {
        AdmissiblePair plus = pair, minus = pair;
        plus.control.values(i, e) += h;
        minus.control.values(i, e) -= h;
        fd(i, e) = (penalized_objective(spec, plus, target, pen) - penalized_objective(spec, minus, target, pen)) / (2 * h);
      }
    }
    const double rel = (g - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff();
    CHECK(rel <= 1e-5);
  }
}

TEST_CASE("gradient vanishes at stationary configurations") {
  const LevelSystem sys = LevelSystem::ladder(2);
  const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
  const TimeGrid grid{1.0, 50};
  SUBCASE("zero control at the target eigenstate") {
    const ControlGrid c = ControlGrid::zeros(grid, ControlFlavor::RealU, sys.edges);
    const AdmissiblePair pair{propagate_real(c, Eigen::Vector2d(1.0, 0.0)), c};
    const Eigen::MatrixXd g = adjoint_gradient(spec, pair, BoundarySpec::eigenstate(0), PenaltyState{Eigen::VectorXd(), 10.0});
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("analytic optimum with its multiplier") {
    ControlGrid c = ControlGrid::zeros(grid, ControlFlavor::RealU, sys.edges);
    c.values.setConstant(pi / 2);
    const AdmissiblePair pair{propagate_real(c, Eigen::Vector2d(1.0, 0.0)), c};
    PenaltyState pen{Eigen::VectorXd::Constant(1, pi), 10.0};
    const Eigen::MatrixXd g = adjoint_gradient(spec, pair, BoundarySpec::eigenstate(1), pen);
    CHECK(g.norm() <= 1e-6);
  }
}

TEST_CASE("source equal to target gives the zero control") {
  const LevelSystem sys = LevelSystem::ladder(3);
  const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
  const auto res = solve_reduced(sys, spec, BoundarySpec::eigenstate(1), BoundarySpec::eigenstate(1), quick(1.0, 50));
  CHECK(res.converged);
  CHECK(res.cost <= 1e-12);
  CHECK(res.pair.control.values.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("solver preconditions") {
  LevelSystem sys = LevelSystem::ladder(3);
  sys.edges.pop_back();
  auto code_of = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code_of([&] {
          solve_reduced(sys, CostSpec::from_system(sys, CostKind::Energy), BoundarySpec::eigenstate(0),
                        BoundarySpec::eigenstate(2), quick(1.0, 20));
        }) == ErrorCode::NotControllable);
  const LevelSystem ok = LevelSystem::ladder(2);
  CHECK(code_of([&] {
          solve_reduced(ok, CostSpec::from_system(ok, CostKind::Energy, FinalTime::Free), BoundarySpec::eigenstate(0),
                        BoundarySpec::eigenstate(1), quick(1.0, 20));
        }) == ErrorCode::WrongKind);
}

TEST_CASE("lift residual diagnostics") {
  const LevelSystem sys = LevelSystem::ladder(2);
  const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
  SUBCASE("scaled covector breaks maximality") {
    const auto res = solve_reduced(sys, spec, BoundarySpec::eigenstate(0), BoundarySpec::eigenstate(1), quick(1.0, 100));
    PMPLift doubled = res.lift;
    doubled.P *= 2.0;
    CHECK(pmp_residual(res.pair, res.lift, spec).maximality_gap <= 1e-6);
    CHECK(pmp_residual(res.pair, doubled, spec).maximality_gap > 1.0);
  }
  SUBCASE("zero control with a constant covector") {
    const TimeGrid grid{1.0, 20};
    const ControlGrid c = ControlGrid::zeros(grid, ControlFlavor::RealU, sys.edges);
    const AdmissiblePair pair{propagate_real(c, Eigen::Vector2d(1.0, 0.0)), c};
    PMPLift lift;
    lift.P = Eigen::MatrixXcd::Constant(2, 21, cdouble(0.3));
    const auto r = pmp_residual(pair, lift, spec);
    CHECK(r.hamiltonian_mean == 0.0);
    CHECK(r.hamiltonian_constancy == 0.0);
    CHECK(r.costate == 0.0);
  }
  SUBCASE("dimension mismatch") {
    const TimeGrid grid{1.0, 20};
    const ControlGrid c = ControlGrid::zeros(grid, ControlFlavor::RealU, sys.edges);
    const AdmissiblePair pair{propagate_real(c, Eigen::Vector2d(1.0, 0.0)), c};
    PMPLift lift;
    lift.P = Eigen::MatrixXcd::Zero(2, 5);
    CHECK_THROWS_AS(pmp_residual(pair, lift, spec), Error);
  }
}

TEST_CASE("length solutions are constant-speed energy solutions") {
  const LevelSystem sys = LevelSystem::ladder(2);
  for (FinalTime ft : {FinalTime::Fixed, FinalTime::Free}) {
    const CostSpec spec = CostSpec::from_system(sys, CostKind::Length, ft);
    const auto res = solve_reduced(sys, spec, BoundarySpec::eigenstate(0), BoundarySpec::eigenstate(1), quick(1.0, 100));
    CHECK(res.converged);
    CHECK(res.cost == doctest::Approx(pi / 2).epsilon(1e-6));
    CHECK(pmp_residual(res.pair, res.lift, spec).worst() <= 1e-4);
  }
}

TEST_CASE("area and fixed-horizon time costs") {
  const LevelSystem sys = LevelSystem::ladder(2);
  SUBCASE("area, free horizon") {
    const CostSpec spec = CostSpec::from_system(sys, CostKind::Area, FinalTime::Free);
    const auto res = solve_reduced(sys, spec, BoundarySpec::eigenstate(0), BoundarySpec::eigenstate(1), quick(1.0, 100));
    CHECK(res.converged);
    CHECK(res.minimal_time == doctest::Approx(pi / 2).epsilon(1e-4));
    CHECK(pmp_residual(res.pair, res.lift, spec).worst() <= 1e-4);
  }
  SUBCASE("time-max at fixed T reparametrizes the minimal-time path") {
    const CostSpec spec = CostSpec::from_system(sys, CostKind::TimeMax);
    const auto res = solve_reduced(sys, spec, BoundarySpec::eigenstate(0), BoundarySpec::eigenstate(1), quick(3.0, 100));
    CHECK(res.converged);
    CHECK(res.pair.control.grid.T == 3.0);
    CHECK(res.cost == doctest::Approx(pi / 2).epsilon(1e-4));
    CHECK(pmp_residual(res.pair, res.lift, spec).worst() <= 1e-4);
  }
}

TEST_CASE("three-level time-max is no slower than the constant resonant pulse") {
  const LevelSystem sys = LevelSystem::ladder(3);
  const CostSpec spec = CostSpec::from_system(sys, CostKind::TimeMax, FinalTime::Free);
  const auto res = solve_reduced(sys, spec, BoundarySpec::eigenstate(0), BoundarySpec::eigenstate(2), quick(1.0, 200));
  CHECK(res.converged);
  CHECK(res.minimal_time <= pi / std::sqrt(2.0) + 1e-3);
  const auto r = pmp_residual(res.pair, res.lift, spec);
  CHECK(r.worst() <= 1e-4);
  CHECK(std::abs(r.hamiltonian_mean) <= 1e-3 * r.hamiltonian_scale);
}

TEST_CASE("moduli-set target satisfies transversality") {
  const LevelSystem sys = LevelSystem::ladder(3);
  const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
  const BoundarySpec src = BoundarySpec::eigenstate(0);
  const BoundarySpec dst = BoundarySpec::support({1, 2});
  const auto res = solve_reduced(sys, spec, src, dst, quick(1.0, 100));
  CHECK(res.converged);
  CHECK(res.pair.trajectory.populations()(0, 100) <= 1e-12);
  const auto r = pmp_residual(res.pair, res.lift, spec, &src, &dst);
  CHECK(r.worst() <= 1e-4);
  // Reaching the face through level 2 alone is optimal: pi^2/4.
  CHECK(res.cost == doctest::Approx(pi * pi / 4).epsilon(1e-6));
}

TEST_CASE("moduli-set source is optimized over its face") {
  const LevelSystem sys = LevelSystem::ladder(3);
  const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
  const BoundarySpec src = BoundarySpec::support({0, 1});
  const BoundarySpec dst = BoundarySpec::eigenstate(2);
  const auto res = solve_reduced(sys, spec, src, dst, quick(1.0, 100));
  CHECK(res.converged);
  CHECK(res.cost == doctest::Approx(pi * pi / 4).epsilon(1e-6));
  CHECK(pmp_residual(res.pair, res.lift, spec, &src, &dst).worst() <= 1e-4);
}

TEST_CASE("rotations of an embedded solution keep costs and residuals") {
  const LevelSystem sys = LevelSystem::ladder(3);
  const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
  const auto res = solve_reduced(sys, spec, BoundarySpec::eigenstate(0), BoundarySpec::eigenstate(2), quick(1.0, 100));
  const AdmissiblePair complex_pair = admissible_pair(embed_real(res.pair.control), res.pair.trajectory.states.col(0));
  const Eigen::Vector3d alpha(0.4, -1.3, 2.2);
  const AdmissiblePair rotated = rot_alpha(complex_pair, alpha);
  PMPLift lift = res.lift;
  PMPLift rlift = lift;
  for (int j = 0; j < 3; ++j) rlift.P.row(j) *= std::polar(1.0, alpha[j]);
  for (CostKind kind : {CostKind::Energy, CostKind::Length, CostKind::Area, CostKind::TimeMax}) {
    const CostSpec s = CostSpec::from_system(sys, kind);
    CHECK(std::abs(evaluate_cost(s, rotated.control) - evaluate_cost(s, complex_pair.control)) <= 1e-10);
  }
  const auto a = pmp_residual(complex_pair, lift, spec);
  const auto b = pmp_residual(rotated, rlift, spec);
  CHECK(std::abs(a.maximality_gap - b.maximality_gap) <= 1e-10);
  CHECK(std::abs(a.hamiltonian_mean - b.hamiltonian_mean) <= 1e-10);
  CHECK(std::abs(a.hamiltonian_constancy - b.hamiltonian_constancy) <= 1e-10);
  CHECK(std::abs(a.costate - b.costate) <= 1e-10);
}

TEST_CASE("abnormal probe") {
  const LevelSystem sys = LevelSystem::ladder(2);
  const auto res = solve_reduced(sys, CostSpec::from_system(sys, CostKind::Energy), BoundarySpec::eigenstate(0),
                                 BoundarySpec::eigenstate(1), quick(1.0, 100));
  CHECK_FALSE(res.lift.abnormal_candidate);
  CHECK(res.lift.abnormal_sigma > 1e-3);
  const auto ce = counterexample_pair(200);
  CHECK(abnormal_probe(ce.plain) <= 1e-7);
}

TEST_CASE("random instances: converged energy solutions are clean extremals") {
  fixtures::Rng rng(99);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 3 + trial % 2;
    const LevelSystem sys = fixtures::random_connected_system(rng, n);
    const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
    const BoundarySpec src = BoundarySpec::point(fixtures::random_real_unit_state(rng, n).cwiseAbs2());
    const BoundarySpec dst = BoundarySpec::point(fixtures::random_real_unit_state(rng, n).cwiseAbs2());
    SolveOptions o = quick(1.0, 100);
    o.seed = 5 + trial;
    const auto res = solve_reduced(sys, spec, src, dst, o);
    CHECK(res.converged);
    const auto r = pmp_residual(res.pair, res.lift, spec, &src, &dst);
    CHECK(r.worst() <= 1e-4);
    CHECK(constant_speed_residual(spec, res.pair.control) <= 1e-3);
    CHECK(classify_resonance(res.pair, 1e-6, 1e-4).status != ResonanceStatus::Neither);
  }
}
