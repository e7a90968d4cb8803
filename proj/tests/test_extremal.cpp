#include <doctest.h>

#include "qoc/error.hpp"
#include "qoc/extremal.hpp"
#include "qoc/fixtures.hpp"
#include "qoc/resonance.hpp"

#include <cmath>
#include <numbers>
#include <set>

using namespace qoc;
using std::numbers::pi;

namespace {

AdmissiblePair as_real(const AdmissiblePair& p) {
  ControlGrid c = ControlGrid::zeros(p.control.grid, ControlFlavor::RealU, p.control.edges);
  c.values = p.control.values.real().cast<cdouble>();
  return {propagate_real(c, p.trajectory.states.col(0).real()), c};
}

// (cos t, sin t) on [0, T] for the two-level system.
AdmissiblePair circle(double T, int N) {
  ControlGrid c = ControlGrid::zeros({T, N}, ControlFlavor::RealU, LevelSystem::ladder(2).edges);
  c.values.setConstant(-1.0);
  return {propagate_real(c, Eigen::Vector2d(1.0, 0.0)), c};
}

ErrorCode code_of(auto f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

// Random real pair whose levels in `I` stay exactly at zero: the initial
// state vanishes there and every edge touching them carries no control.
AdmissiblePair isolated_pair(fixtures::Rng& rng, const LevelSystem& sys, const std::vector<int>& I, int N) {
  const int n = sys.n;
  const TimeGrid grid{fixtures::uniform(rng, 0.3, 1.5), N};
  ControlGrid c = fixtures::smooth_random_control(rng, grid, sys.edges, ControlFlavor::RealU, 1.5);
  for (int e = 0; e < c.edge_count(); ++e) {
    for (int i : I) {
      if (c.edges[e].j == i || c.edges[e].k == i) c.values.col(e).setZero();
    }
  }
  Eigen::VectorXd rho0 = fixtures::random_real_unit_state(rng, n);
  for (int i : I) rho0[i] = 0.0;
  rho0.normalize();
  return {propagate_real(c, rho0), c};
}

}  // namespace

TEST_CASE("partition of the counterexample trajectory") {
  const AdmissiblePair a = as_real(counterexample_pair(400).plain);
  const TimeGrid& g = a.trajectory.grid;
  const int first = static_cast<int>(std::lround(0.1 / g.dt()));
  const int last = static_cast<int>(std::lround(1.0 / g.dt()));
  const IndexPartition p = partition_indexes(a.trajectory, a.control.edges, make_window(g, first, last));
  CHECK(p.I == std::vector<int>{2, 3});
  CHECK(p.J == std::vector<int>{0, 1});
  REQUIRE(p.classes.size() == 1);
  CHECK(p.classes[0] == std::vector<int>{0, 1});
  CHECK(p.sizes == std::vector<int>{2});
  CHECK(p.offsets == std::vector<int>{0, 2});
  CHECK(p.radii[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.tangent_dimension() == 1);
  const auto r = distribution_rank(p, a.control.edges, a.trajectory.states.col(first).real());
  CHECK(r.rank == 1);
  CHECK(r.dimension == 1);
}

TEST_CASE("partition with all levels populated follows the graph components") {
  LevelSystem sys = LevelSystem::ladder(4);
  sys.edges = {sys.edges[0], sys.edges[2]};
  ControlGrid c = ControlGrid::zeros({0.2, 40}, ControlFlavor::RealU, sys.edges);
  c.values.col(0).setConstant(0.7);
  c.values.col(1).setConstant(-0.4);
  const AdmissiblePair pair{propagate_real(c, Eigen::Vector4d(0.5, 0.5, 0.5, 0.5)), c};
  const IndexPartition p = partition_indexes(pair.trajectory, sys.edges, make_window(c.grid, 0, 40));
  CHECK(p.I.empty());
  REQUIRE(p.classes.size() == 2);
  CHECK(p.classes[0] == std::vector<int>{0, 1});
  CHECK(p.classes[1] == std::vector<int>{2, 3});
  CHECK(p.class_norm_drift <= 1e-12);
  CHECK((p.radii.array().square().sum()) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("windows around zero crossings") {
  const AdmissiblePair a = circle(pi, 400);
  const TimeGrid& g = a.trajectory.grid;
  CHECK(code_of([&] { partition_indexes(a.trajectory, a.control.edges, make_window(g, 150, 250)); }) ==
        ErrorCode::MixedWindow);
  SUBCASE("crossing time gives an adjacent window") {
    const Window w = find_clean_window(a.trajectory, pi / 2);
    CHECK((w.last < 200 || w.first > 200));
    CHECK(w.steps() == 198);
    CHECK_NOTHROW(partition_indexes(a.trajectory, a.control.edges, w));
  }
  SUBCASE("interior time gives the window containing it") {
    const Window w = find_clean_window(a.trajectory, 1.0);
    CHECK(w.first == 1);
    CHECK(w.last == 199);
    CHECK(w.t1 <= 1.0);
    CHECK(w.t2 >= 1.0);
  }
  SUBCASE("clean windows avoid the zeros") {
    const auto ws = clean_windows(a.trajectory);
    REQUIRE(ws.size() == 2);
    for (const auto& w : ws) CHECK(partition_indexes(a.trajectory, a.control.edges, w).I.empty());
  }
}

TEST_CASE("identically vanishing level lands in I everywhere") {
  const LevelSystem sys = LevelSystem::ladder(3);
  ControlGrid c = ControlGrid::zeros({0.5, 50}, ControlFlavor::RealU, sys.edges);
  c.values.col(0).setConstant(1.0);
  const AdmissiblePair pair{propagate_real(c, Eigen::Vector3d(0.8, 0.6, 0.0)), c};
  for (double t : {0.0, 0.2, 0.5}) {
    const Window w = find_clean_window(pair.trajectory, t);
    const IndexPartition p = partition_indexes(pair.trajectory, sys.edges, w);
    CHECK(p.I == std::vector<int>{2});
  }
}

TEST_CASE("clean window search fails when no run is longer than a node") {
  StateTrajectory tr{{1.0, 3}, Eigen::MatrixXcd(2, 4), true};
  tr.states << 1, 0, 1, 0, 0, 1, 0, 1;
  CHECK(code_of([&] { find_clean_window(tr, 0.5); }) == ErrorCode::NoneFound);
}

TEST_CASE("spanning trees") {
  const std::vector<Edge> tri{{0, 1}, {1, 2}, {0, 2}};
  const auto tree = spanning_tree({0, 1, 2}, tri);
  CHECK(tree.size() == 2);
  std::set<int> touched;
  for (const auto& e : tree) {
    touched.insert(e.j);
    touched.insert(e.k);
  }
  CHECK(touched.size() == 3);
  CHECK(spanning_tree({1}, tri).empty());
  CHECK(code_of([&] { spanning_tree({0, 1, 2}, {Edge{0, 1}}); }) == ErrorCode::NotConnected);
}

TEST_CASE("distribution rank examples") {
  const LevelSystem two = LevelSystem::ladder(2);
  const AdmissiblePair a = circle(1.0, 10);
  const IndexPartition p2 = partition_indexes(a.trajectory, two.edges, make_window(a.trajectory.grid, 1, 10));
  const double th = 0.4;
  CHECK(distribution_rank(p2, two.edges, Eigen::Vector2d(std::cos(th), std::sin(th))).rank == 1);

  const LevelSystem three = LevelSystem::ladder(3);
  ControlGrid c = ControlGrid::zeros({0.3, 30}, ControlFlavor::RealU, three.edges);
  c.values.setConstant(0.5);
  const AdmissiblePair b{propagate_real(c, Eigen::Vector3d(0.6, 0.6, std::sqrt(0.28))), c};
  const IndexPartition p3 = partition_indexes(b.trajectory, three.edges, make_window(c.grid, 0, 30));
  const auto r3 = distribution_rank(p3, three.edges, b.trajectory.states.col(15).real());
  CHECK(r3.rank == 2);
  CHECK(r3.dimension == 2);

  const AdmissiblePair ce = as_real(counterexample_pair(400).plain);
  const IndexPartition p4 = partition_indexes(ce.trajectory, ce.control.edges, make_window(ce.trajectory.grid, 20, 200));
  CHECK(code_of([&] { distribution_rank(p4, ce.control.edges, Eigen::Vector4d(0.5, 0.5, 0.5, 0.5)); }) ==
        ErrorCode::InconsistentState);
}

TEST_CASE("random isolated trajectories: class norms, tree families and distribution rank") {
  fixtures::Rng rng(1234);
  int windows = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + trial % 3;
    const LevelSystem sys = fixtures::random_connected_system(rng, n);
    std::vector<int> I;
    for (int j = 0; j < n; ++j) {
      if (static_cast<int>(I.size()) < n - 2 && fixtures::uniform(rng, 0.0, 1.0) < 0.3) I.push_back(j);
    }
    const AdmissiblePair pair = isolated_pair(rng, sys, I, 200);
    for (const Window& w : clean_windows(pair.trajectory)) {
      const IndexPartition p = partition_indexes(pair.trajectory, sys.edges, w);
      ++windows;
      for (int i : I) CHECK(std::find(p.I.begin(), p.I.end(), i) != p.I.end());
      CHECK(p.class_norm_drift <= 1e-8);
      for (int node = w.first; node <= w.last; node += 10) {
        const Eigen::VectorXd rho = pair.trajectory.states.col(node).real();
        for (const auto& cls : p.classes) {
          const auto tree = spanning_tree(cls, sys.edges);
          CHECK(tree.size() == cls.size() - 1);
          if (tree.empty()) continue;
          Eigen::MatrixXd F(n, static_cast<Eigen::Index>(tree.size()));
          for (int m = 0; m < static_cast<int>(tree.size()); ++m) F.col(m) = real_field(rho, tree[m].j, tree[m].k);
          CHECK(F.fullPivLu().rank() == static_cast<int>(tree.size()));
        }
        const auto r = distribution_rank(p, sys.edges, rho);
        CHECK(r.rank == r.dimension);
      }
    }
  }
  CHECK(windows >= 50);
}

TEST_CASE("classification of a two-level energy optimum") {
  const LevelSystem sys = LevelSystem::ladder(2);
  const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
  ControlGrid c = ControlGrid::zeros({1.0, 100}, ControlFlavor::RealU, sys.edges);
  c.values.setConstant(pi / 2);
  const AdmissiblePair pair{propagate_real(c, Eigen::Vector2d(1.0, 0.0)), c};
  const ExtremalReport rep = classify_extremal(pair, spec);
  REQUIRE(!rep.windows.empty());
  CHECK(rep.all_not_strictly_abnormal());
  for (const auto& w : rep.windows) {
    CHECK(w.rank == w.dimension);
    CHECK(w.lift_residual.worst() <= 1e-4);
  }
}

TEST_CASE("classification of the counterexample pair in the real reduction") {
  const AdmissiblePair a = as_real(counterexample_pair(400).plain);
  const CostSpec spec = CostSpec::from_system(LevelSystem::ladder(4), CostKind::Energy);
  const ExtremalReport rep = classify_extremal(a, spec);
  REQUIRE(rep.windows.size() == 1);
  const auto& w = rep.windows[0];
  CHECK(w.partition.window.t1 > 0.0);
  CHECK(w.partition.window.t2 < pi / 2);
  CHECK(w.partition.I == std::vector<int>{2, 3});
  CHECK(w.rank == 1);
  CHECK(w.dimension == 1);
  CHECK(w.verdict == WindowVerdict::NotStrictlyAbnormal);
}

TEST_CASE("eigenstate held by the zero control is vacuously full rank") {
  const LevelSystem sys = LevelSystem::ladder(3);
  const ControlGrid c = ControlGrid::zeros({1.0, 20}, ControlFlavor::RealU, sys.edges);
  const AdmissiblePair pair{propagate_real(c, Eigen::Vector3d(1.0, 0.0, 0.0)), c};
  const ExtremalReport rep = classify_extremal(pair, CostSpec::from_system(sys, CostKind::Energy));
  REQUIRE(rep.windows.size() == 1);
  const auto& w = rep.windows[0];
  CHECK(w.partition.I == std::vector<int>{1, 2});
  CHECK(w.dimension == 0);
  CHECK(w.rank == 0);
  CHECK(w.vacuous);
  CHECK(w.verdict == WindowVerdict::NotStrictlyAbnormal);
}

TEST_CASE("bound-active windows are inconclusive") {
  LevelSystem sys = LevelSystem::ladder(2);
  sys.edges[0].bound = 1.0;
  ControlGrid c = ControlGrid::zeros({1.0, 50}, ControlFlavor::RealU, sys.edges);
  c.values.setConstant(-1.0);
  const AdmissiblePair pair{propagate_real(c, Eigen::Vector2d(1.0, 0.0)), c};
  const ExtremalReport rep = classify_extremal(pair, CostSpec::from_system(sys, CostKind::Energy));
  REQUIRE(!rep.windows.empty());
  for (const auto& w : rep.windows) {
    CHECK(w.bound_active);
    CHECK(w.verdict == WindowVerdict::Inconclusive);
  }
}

TEST_CASE("solver outputs carry verified extended lifts") {
  SolveOptions o;
  o.grid = {1.0, 100};
  o.threads = 1;
  SUBCASE("ladder 3, first to last level") {
    const LevelSystem sys = LevelSystem::ladder(3);
    const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
    const auto res = solve_reduced(sys, spec, BoundarySpec::eigenstate(0), BoundarySpec::eigenstate(2), o);
    REQUIRE(res.converged);
    const ExtremalReport rep = classify_extremal(res.pair, spec, 1e-6, &res.lift);
    REQUIRE(!rep.windows.empty());
    CHECK(rep.all_not_strictly_abnormal());
  }
  SUBCASE("ladder 4, first to second level keeps the upper levels in I") {
    const LevelSystem sys = LevelSystem::ladder(4);
    const CostSpec spec = CostSpec::from_system(sys, CostKind::Energy);
    const auto res = solve_reduced(sys, spec, BoundarySpec::eigenstate(0), BoundarySpec::eigenstate(1), o);
    REQUIRE(res.converged);
    const ExtremalReport rep = classify_extremal(res.pair, spec, 1e-6, &res.lift);
    REQUIRE(!rep.windows.empty());
    CHECK(rep.all_not_strictly_abnormal());
    bool saw_I = false;
    for (const auto& w : rep.windows) saw_I = saw_I || w.partition.I == std::vector<int>{2, 3};
    CHECK(saw_I);
  }
}

TEST_CASE("a generic non-extremal pair gets no verified lift") {
  fixtures::Rng rng(77);
  const LevelSystem sys = LevelSystem::ladder(3);
  const ControlGrid c = fixtures::smooth_random_control(rng, {1.0, 100}, sys.edges, ControlFlavor::RealU, 2.0);
  const AdmissiblePair pair{propagate_real(c, Eigen::Vector3d(0.6, 0.6, std::sqrt(0.28))), c};
  const ExtremalReport rep = classify_extremal(pair, CostSpec::from_system(sys, CostKind::Energy));
  REQUIRE(!rep.windows.empty());
  for (const auto& w : rep.windows) {
    if (w.dimension == 0) continue;
    CHECK(w.verdict == WindowVerdict::Inconclusive);
    CHECK(w.lift_residual.worst() > 1e-4);
  }
}
