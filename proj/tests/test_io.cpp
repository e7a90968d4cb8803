#include <doctest.h>

#include "qoc/error.hpp"
#include "qoc/fixtures.hpp"
#include "qoc/io.hpp"

#include <cmath>
#include <filesystem>
#include <limits>

using namespace qoc;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

std::string message_of(auto f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("system files round-trip") {
  fixtures::Rng rng(5);
  LevelSystem sys = fixtures::random_connected_system(rng, 4);
  sys.edges[0].bound = 2.5;
  const LevelSystem back = io::system_from_json(io::parse_json(io::to_json(sys).dump(), "mem"));
  CHECK(back.n == sys.n);
  CHECK((back.energies - sys.energies).norm() == 0.0);
  REQUIRE(back.edges.size() == sys.edges.size());
  for (std::size_t e = 0; e < sys.edges.size(); ++e) {
    CHECK(back.edges[e].j == sys.edges[e].j);
    CHECK(back.edges[e].k == sys.edges[e].k);
    CHECK(back.edges[e].mu == sys.edges[e].mu);
    CHECK(back.edges[e].bound == sys.edges[e].bound);
  }
  CHECK(io::to_json(sys)["edges"][1]["bound"] == "inf");
  CHECK(io::to_json(sys)["edges"][0]["j"].get<int>() == sys.edges[0].j + 1);
}

TEST_CASE("control files round-trip for every flavor") {
  fixtures::Rng rng(6);
  const LevelSystem sys = fixtures::random_connected_system(rng, 3);
  for (ControlFlavor f : {ControlFlavor::HermitianV, ControlFlavor::SkewH, ControlFlavor::RealU}) {
    const ControlGrid c = fixtures::smooth_random_control(rng, {1.3, 17}, sys.edges, f, 1.0);
    const ControlGrid back = io::control_from_json(io::parse_json(io::to_json(c).dump(), "mem"));
    CHECK(back.flavor == f);
    CHECK(back.grid == c.grid);
    CHECK((back.values - c.values).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("mirrored control entries follow the flavor symmetry") {
  const char* h = R"({"T": 1, "N": 2, "flavor": "H", "values": {"2,1": [[1, 2], [0, -1]]}})";
  const ControlGrid c = io::control_from_json(io::parse_json(h, "mem"));
  REQUIRE(c.edges.size() == 1);
  CHECK(c.edges[0].j == 0);
  CHECK(c.values(0, 0) == cdouble(-1, 2));
  CHECK(c.values(1, 0) == cdouble(0, -1));

  const char* broken = R"({"T": 1, "N": 1, "flavor": "V", "values": {"1,2": [[1, 1]], "2,1": [[1, 1]]}})";
  const std::string msg = message_of([&] { io::control_from_json(io::parse_json(broken, "v.json"), "v.json"); });
  CHECK(msg.find("hermitian-symmetry") != std::string::npos);
  CHECK(msg.find("v.json") != std::string::npos);

  const char* consistent = R"({"T": 1, "N": 1, "flavor": "V", "values": {"1,2": [[1, 1]], "2,1": [[1, -1]]}})";
  CHECK_NOTHROW(io::control_from_json(io::parse_json(consistent, "mem")));

  const char* diag = R"({"T": 1, "N": 1, "flavor": "H", "values": {"1,1": [[0, 1]]}})";
  CHECK(code_of([&] { io::control_from_json(io::parse_json(diag, "mem")); }) == ErrorCode::InvalidControl);

  const char* complex_u = R"({"T": 1, "N": 1, "flavor": "U", "values": {"1,2": [[0, 1]]}})";
  CHECK(code_of([&] { io::control_from_json(io::parse_json(complex_u, "mem")); }) == ErrorCode::InvalidControl);
}

TEST_CASE("cost and boundary files round-trip") {
  const LevelSystem sys = LevelSystem::ladder(3, 2.0);
  CostSpec spec = CostSpec::from_system(sys, CostKind::Area, FinalTime::Free);
  const CostSpec back = io::cost_from_json(io::parse_json(io::to_json(spec).dump(), "mem"));
  CHECK(back.kind == spec.kind);
  CHECK(back.final_time == spec.final_time);
  CHECK(back.weights == spec.weights);

  const CostSpec filled = io::cost_from_json(io::parse_json(R"({"kind": "energy", "weights": {"2,1": 0.5}})", "mem"), &sys);
  CHECK(filled.weights.at({0, 1}) == 0.5);
  CHECK(filled.weights.at({1, 2}) == 2.0);

  for (const BoundarySpec& b : {BoundarySpec::eigenstate(2), BoundarySpec::point(Eigen::Vector3d(0.2, 0.3, 0.5)),
                                BoundarySpec::support({0, 2})}) {
    const BoundarySpec r = io::boundary_from_json(io::parse_json(io::to_json(b).dump(), "mem"));
    CHECK(r.kind == b.kind);
    CHECK(r.index == b.index);
    CHECK(r.levels == b.levels);
    CHECK(r.moduli.size() == b.moduli.size());
    if (b.moduli.size()) CHECK((r.moduli - b.moduli).norm() == 0.0);
  }
  CHECK(io::to_json(BoundarySpec::eigenstate(2))["level"] == 3);
}

TEST_CASE("trajectory and lift tables round-trip") {
  fixtures::Rng rng(8);
  const LevelSystem sys = fixtures::random_connected_system(rng, 3);
  const ControlGrid h = fixtures::smooth_random_control(rng, {0.7, 23}, sys.edges, ControlFlavor::SkewH, 1.0);
  const StateTrajectory tr = propagate_driftless(h, fixtures::random_unit_state(rng, 3));
  const StateTrajectory back = io::trajectory_from_csv(io::trajectory_csv(tr));
  CHECK(back.grid.N == tr.grid.N);
  CHECK(back.grid.T == tr.grid.T);
  CHECK((back.states - tr.states).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(back.real);

  PMPLift lift;
  lift.P = Eigen::MatrixXcd::Random(3, 24);
  lift.hamiltonian = Eigen::VectorXd::Random(23);
  const PMPLift lb = io::lift_from_csv(io::lift_csv(lift, h.grid));
  CHECK((lb.P - lift.P).cwiseAbs().maxCoeff() == 0.0);
  CHECK((lb.hamiltonian - lift.hamiltonian).cwiseAbs().maxCoeff() == 0.0);
  CHECK(lb.p0 == -1.0);

  const std::string pops = io::populations_csv(tr);
  CHECK(pops.substr(0, pops.find('\n')) == "t,pop1,pop2,pop3");
}

TEST_CASE("parse errors carry file and line context") {
  const std::string bad = "{\n  \"n\": 2,\n  \"energies\": [0, 1,]\n}\n";
  const std::string msg = message_of([&] { io::parse_json(bad, "sys.json"); });
  CHECK(msg.find("sys.json:3:") != std::string::npos);
  CHECK(code_of([&] { io::parse_json(bad, "sys.json"); }) == ErrorCode::Parse);

  const std::string csv = "t,pop1\n0,1\n0.5,abc\n";
  CHECK(message_of([&] { io::trajectory_from_csv(csv, "p.csv"); }).find("p.csv") != std::string::npos);
  const std::string short_row = "t,re_psi1,im_psi1,pop1\n0,1,0,1\n1,1,0\n";
  CHECK(message_of([&] { io::trajectory_from_csv(short_row, "tr.csv"); }).find("tr.csv:3") != std::string::npos);

  const std::string missing = message_of([&] { io::system_from_json(io::parse_json(R"({"n": 2})", "s.json"), "s.json"); });
  CHECK(missing.find("energies") != std::string::npos);
  CHECK(code_of([&] { io::read_json("/nonexistent/system.json"); }) == ErrorCode::Io);
  CHECK(message_of([&] { io::read_json("/nonexistent/system.json"); }).find("/nonexistent/system.json") != std::string::npos);
}

TEST_CASE("files written to disk are read back identically") {
  const fs::path dir = fs::temp_directory_path() / "qoc_io_test";
  fs::create_directories(dir);
  const LevelSystem sys = LevelSystem::ladder(2);
  io::write_json((dir / "s.json").string(), io::to_json(sys));
  const LevelSystem back = io::system_from_json(io::read_json((dir / "s.json").string()));
  CHECK(back.edges.size() == 1);
  CHECK(io::json_argument("[1, 0]").size() == 2);
  CHECK(io::state_from_json(io::json_argument("[[0.6, 0], [0, 0.8]]"))[1] == cdouble(0, 0.8));
  fs::remove_all(dir);
}
