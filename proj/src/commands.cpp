#include "qoc/commands.hpp"

#include "qoc/extremal.hpp"
#include "qoc/io.hpp"
#include "qoc/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>

namespace qoc::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;

struct Settings {
  std::string system;
  std::string control;
  std::string cost;
  std::string source = "1";
  std::string target;
  std::string psi0;
  std::string lift;
  std::string out = ".";
  std::string filter;
  std::string fixtures;
  double T = 1.0;
  int N = 200;
  int starts = 8;
  int max_iterations = 3000;
  int threads = 0;
  int steps = 400;
  double epsilon = 1e-6;
  double tol = -1.0;  ///< negative: the command's default
  unsigned long long seed = 1;
  bool restore = false;
};

double tol_or(const Settings& s, double fallback) { return s.tol >= 0.0 ? s.tol : fallback; }

std::string output_path(const Settings& s, const std::string& name) {
  std::error_code ec;
  fs::create_directories(s.out, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory " + s.out + ": " + ec.message());
  return (fs::path(s.out) / name).string();
}

void require_option(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::Parse, std::string("missing required option ") + flag);
}

LevelSystem load_system(const Settings& s) {
  require_option(s.system, "--system");
  const LevelSystem sys = io::system_from_json(io::read_json(s.system), s.system);
  require_valid(sys);
  return sys;
}

/// Control edges take their coupling strength and bound from the system.
ControlGrid load_control(const Settings& s, const LevelSystem* sys) {
  require_option(s.control, "--control");
  ControlGrid c = io::control_from_json(io::read_json(s.control), s.control);
  if (sys) {
    for (Edge& e : c.edges) {
      const int idx = sys->edge_index(e.j, e.k);
      if (idx < 0) {
        throw Error(ErrorCode::InvalidControl, s.control + ": edge " + std::to_string(e.j + 1) + "," +
                                                   std::to_string(e.k + 1) + " is not in the coupling graph");
      }
      e.mu = sys->edges[idx].mu;
      e.bound = sys->edges[idx].bound;
    }
    validate_control(*sys, c);
  }
  return c;
}

/// Inline JSON, a file, or a bare level number for an eigenstate.
Json structured_argument(const std::string& arg) {
  if (!arg.empty() && arg.find_first_not_of("0123456789") == std::string::npos) {
    return Json{{"kind", "eigenstate"}, {"level", std::stoi(arg)}};
  }
  return io::json_argument(arg);
}

BoundarySpec load_boundary(const std::string& arg, const char* flag) {
  require_option(arg, flag);
  return io::boundary_from_json(structured_argument(arg), arg);
}

Eigen::VectorXcd load_state(const Settings& s, int n) {
  if (s.psi0.empty()) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    e[0] = 1.0;
    return e;
  }
  const Json j = structured_argument(s.psi0);
  if (j.is_object()) {
    const BoundarySpec b = io::boundary_from_json(j, s.psi0);
    return b.populations(n).cwiseSqrt().cast<cdouble>();
  }
  Eigen::VectorXcd psi = io::state_from_json(j, s.psi0);
  if (psi.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "initial state has " + std::to_string(psi.size()) + " entries, expected " + std::to_string(n));
  }
  return psi;
}

LevelSystem bare_system(const ControlGrid& c, int n) {
  LevelSystem sys;
  sys.n = n;
  sys.energies = Eigen::VectorXd::Zero(n);
  sys.edges = c.edges;
  return sys;
}

int control_levels(const ControlGrid& c) {
  int n = 0;
  for (const Edge& e : c.edges) n = std::max({n, e.j + 1, e.k + 1});
  return n;
}

StateTrajectory simulate(const LevelSystem& sys, const ControlGrid& c, const Eigen::VectorXcd& psi0) {
  switch (c.flavor) {
    case ControlFlavor::HermitianV: return propagate_drift(sys, c, psi0);
    case ControlFlavor::SkewH: return propagate_driftless(c, psi0);
    case ControlFlavor::RealU:
      if (psi0.imag().cwiseAbs().maxCoeff() != 0.0) {
        throw Error(ErrorCode::InvalidControl, "real-U controls need a real initial state");
      }
      return propagate_real(c, psi0.real());
  }
  return {};
}

int cmd_simulate(const Settings& s, std::ostream& out) {
  const LevelSystem sys = load_system(s);
  const ControlGrid c = load_control(s, &sys);
  const StateTrajectory tr = simulate(sys, c, load_state(s, sys.n));
  io::write_text(output_path(s, "trajectory.csv"), io::trajectory_csv(tr));
  io::write_text(output_path(s, "populations.csv"), io::populations_csv(tr));
  Eigen::VectorXd final_pop = tr.populations().col(tr.grid.N);
  Json summary = {{"n", sys.n},
                  {"T", tr.grid.T},
                  {"N", tr.grid.N},
                  {"flavor", flavor_name(c.flavor)},
                  {"max_norm_drift", tr.max_norm_drift()},
                  {"final_populations", std::vector<double>(final_pop.data(), final_pop.data() + final_pop.size())}};
  io::write_json(output_path(s, "summary.json"), summary);
  out << summary.dump(2) << "\n";
  return Ok;
}

int cmd_eliminate_drift(const Settings& s, std::ostream& out) {
  const LevelSystem sys = load_system(s);
  const ControlGrid c = load_control(s, &sys);
  const ControlGrid converted = s.restore ? restore_drift(sys, c) : eliminate_drift(sys, c);
  const std::string path = output_path(s, "control.json");
  io::write_json(path, io::to_json(converted));
  out << "wrote " << path << " (" << flavor_name(converted.flavor) << ")\n";
  return Ok;
}

int cmd_resonate(const Settings& s, std::ostream& out) {
  std::optional<LevelSystem> sys;
  if (!s.system.empty()) sys = load_system(s);
  ControlGrid c = load_control(s, sys ? &*sys : nullptr);
  if (c.flavor == ControlFlavor::HermitianV) {
    if (!sys) throw Error(ErrorCode::Parse, "a hermitian-V control needs --system to remove the drift");
    c = eliminate_drift(*sys, c);
  }
  if (c.flavor == ControlFlavor::RealU) c = embed_real(c);
  const int n = sys ? sys->n : control_levels(c);
  const AdmissiblePair pair = admissible_pair(c, load_state(s, n));
  const ResonanceTransform rt = resonance_transform(pair, s.epsilon, tol_or(s, 1e-6));
  io::write_json(output_path(s, "control.json"), io::to_json(rt.pair.control));

  const LevelSystem weights = sys ? *sys : bare_system(c, n);
  std::string table = "kind,before,after\n";
  char line[128];
  for (CostKind kind : {CostKind::Energy, CostKind::Length, CostKind::Area, CostKind::TimeMax}) {
    const CostSpec spec = CostSpec::from_system(weights, kind);
    std::snprintf(line, sizeof line, "%s,%.17g,%.17g\n", cost_name(kind), evaluate_cost(spec, pair.control),
                  evaluate_cost(spec, rt.pair.control));
    table += line;
  }
  io::write_text(output_path(s, "costs.csv"), table);

  const double tol = tol_or(s, 1e-6);
  const ResonanceVerdict before = classify_resonance(pair, s.epsilon, tol);
  const ResonanceVerdict after = classify_resonance(rt.pair, s.epsilon, tol);
  Json verdict = {{"input", io::to_json(before)},
                  {"transformed", io::to_json(after)},
                  {"moduli_deviation", rt.moduli_deviation},
                  {"v_energy", rt.v_energy}};
  io::write_json(output_path(s, "verdict.json"), verdict);
  out << "input " << status_name(before.status) << ", transformed " << status_name(after.status) << "\n" << table;
  return Ok;
}

int cmd_check(const Settings& s, std::ostream& out) {
  require_option(s.system, "--system");
  const LevelSystem sys = io::system_from_json(io::read_json(s.system), s.system);
  const ValidationReport v = validate_system(sys);
  Json report = {{"valid", v.ok()}, {"violations", v.violations}, {"warnings", v.warnings}};
  if (v.ok()) {
    Json comps = Json::array();
    for (const auto& comp : connected_components(sys)) {
      Json levels = Json::array();
      for (int j : comp) levels.push_back(j + 1);
      comps.push_back(levels);
    }
    report["components"] = comps;
    report["controllable"] = is_controllable(sys);
    if (sys.n <= 6) {
      const LieRankResult lr = lie_rank_oracle(sys);
      report["lie_rank"] = {{"algebra_dimension", lr.algebra_dimension},
                            {"orbit_rank", lr.orbit_rank},
                            {"sphere_dimension", lr.sphere_dimension},
                            {"transitive", lr.transitive}};
    }
    if (!s.control.empty()) {
      ControlGrid c = load_control(s, &sys);
      if (c.flavor == ControlFlavor::HermitianV) c = eliminate_drift(sys, c);
      if (c.flavor == ControlFlavor::RealU) c = embed_real(c);
      const AdmissiblePair pair = admissible_pair(c, load_state(s, sys.n));
      report["admissibility_residual"] = admissibility_residual(pair);
      report["resonance"] = io::to_json(classify_resonance(pair, s.epsilon, tol_or(s, 1e-6)));
    }
  }
  io::write_json(output_path(s, "check.json"), report);
  out << report.dump(2) << "\n";
  if (!v.ok()) {
    std::string all;
    for (const auto& m : v.violations) all += (all.empty() ? "" : "; ") + m;
    throw Error(ErrorCode::InvalidSystem, all);
  }
  return Ok;
}

int cmd_solve(const Settings& s, std::ostream& out) {
  const LevelSystem sys = load_system(s);
  require_option(s.cost, "--cost");
  const CostSpec spec = io::cost_from_json(structured_argument(s.cost), &sys, s.cost);
  const BoundarySpec source = load_boundary(s.source, "--source");
  const BoundarySpec target = load_boundary(s.target, "--target");
  SolveOptions opts;
  opts.grid = {s.T, s.N};
  opts.starts = s.starts;
  opts.max_iterations = s.max_iterations;
  opts.seed = s.seed;
  opts.threads = s.threads;
  const SolveResult res = solve_reduced(sys, spec, source, target, opts);

  io::write_json(output_path(s, "control.json"), io::to_json(res.pair.control));
  io::write_text(output_path(s, "trajectory.csv"), io::trajectory_csv(res.pair.trajectory));
  io::write_text(output_path(s, "lift.csv"), io::lift_csv(res.lift, res.pair.control.grid));
  Json result = {{"converged", res.converged},
                 {"message", res.message},
                 {"cost_kind", cost_name(spec.kind)},
                 {"cost", res.cost},
                 {"T", res.pair.control.grid.T},
                 {"N", res.pair.control.grid.N},
                 {"endpoint_violation", res.endpoint_violation},
                 {"stationarity", res.stationarity},
                 {"iterations", res.iterations},
                 {"best_start", res.best_start},
                 {"p0", res.lift.p0},
                 {"abnormal_sigma", res.lift.abnormal_sigma}};
  if (spec.final_time == FinalTime::Free || spec.kind == CostKind::TimeMax || spec.kind == CostKind::Area) {
    result["minimal_time"] = res.minimal_time;
  }
  result["pmp_residual"] = io::to_json(pmp_residual(res.pair, res.lift, spec, &source, &target));
  if (spec.kind == CostKind::Energy) result["constant_speed"] = constant_speed_residual(spec, res.pair.control);
  result["resonance"] = io::to_json(classify_resonance(res.pair, s.epsilon, tol_or(s, 1e-4)));
  try {
    result["extremal"] = io::to_json(classify_extremal(res.pair, spec, s.epsilon, &res.lift, tol_or(s, 1e-4)));
  } catch (const Error& e) {
    result["extremal"] = {{"error", e.what()}};
  }
  io::write_json(output_path(s, "result.json"), result);
  out << "cost " << Json(res.cost).dump() << ", converged " << (res.converged ? "yes" : "no") << ", resonance "
      << result["resonance"]["status"].get<std::string>() << "\n";
  if (!res.converged) throw Error(ErrorCode::NoConvergence, res.message.empty() ? "tolerances not met" : res.message);
  return Ok;
}

int cmd_classify(const Settings& s, std::ostream& out) {
  std::optional<LevelSystem> sys;
  if (!s.system.empty()) sys = load_system(s);
  ControlGrid c = load_control(s, sys ? &*sys : nullptr);
  if (c.flavor == ControlFlavor::SkewH) {
    if (c.values.imag().cwiseAbs().maxCoeff() != 0.0) {
      throw Error(ErrorCode::InvalidControl, "extremal classification needs real controls");
    }
    c.flavor = ControlFlavor::RealU;
  }
  if (c.flavor != ControlFlavor::RealU) throw Error(ErrorCode::InvalidControl, "extremal classification needs real controls");
  const int n = sys ? sys->n : control_levels(c);
  const Eigen::VectorXcd psi0 = load_state(s, n);
  if (psi0.imag().cwiseAbs().maxCoeff() != 0.0) throw Error(ErrorCode::InvalidControl, "real controls need a real initial state");
  const AdmissiblePair pair{propagate_real(c, psi0.real()), c};
  const LevelSystem weights = sys ? *sys : bare_system(c, n);
  const CostSpec spec = s.cost.empty() ? CostSpec::from_system(weights, CostKind::Energy)
                                       : io::cost_from_json(structured_argument(s.cost), &weights, s.cost);
  std::optional<PMPLift> lift;
  if (!s.lift.empty()) lift = io::lift_from_csv(io::read_text(s.lift), s.lift);
  const ExtremalReport rep = classify_extremal(pair, spec, s.epsilon, lift ? &*lift : nullptr, tol_or(s, 1e-4));
  const Json j = io::to_json(rep);
  io::write_json(output_path(s, "extremal.json"), j);
  for (const WindowReport& w : rep.windows) {
    out << "window [" << Json(w.partition.window.t1).dump() << ", " << Json(w.partition.window.t2).dump() << "] rank "
        << w.rank << "/" << w.dimension << " " << verdict_name(w.verdict) << "\n";
  }
  return Ok;
}

int cmd_demo_counterexample(const Settings& s, std::ostream& out) {
  const Counterexample ce = counterexample_pair(s.steps);
  io::write_json(output_path(s, "system.json"), io::to_json(ce.system));
  io::write_json(output_path(s, "control_plain.json"), io::to_json(ce.plain.control));
  io::write_json(output_path(s, "control_switched.json"), io::to_json(ce.switched.control));
  io::write_json(output_path(s, "psi0.json"), io::state_to_json(ce.plain.trajectory.states.col(0)));
  io::write_text(output_path(s, "trajectory_plain.csv"), io::trajectory_csv(ce.plain.trajectory));
  io::write_text(output_path(s, "trajectory_switched.csv"), io::trajectory_csv(ce.switched.trajectory));
  const double tol = tol_or(s, 1e-6);
  const ResonanceVerdict a = classify_resonance(ce.plain, s.epsilon, tol);
  const ResonanceVerdict b = classify_resonance(ce.switched, s.epsilon, tol);
  Json rep = {{"trajectory_difference", (ce.plain.trajectory.states - ce.switched.trajectory.states).cwiseAbs().maxCoeff()},
              {"plain", io::to_json(a)},
              {"switched", io::to_json(b)}};
  io::write_json(output_path(s, "verdicts.json"), rep);
  out << "plain " << status_name(a.status) << ", switched " << status_name(b.status) << "\n";
  return Ok;
}

int cmd_verify(const Settings& s, std::ostream& out) {
  verify::Options opts;
  opts.filter = s.filter;
  opts.fixtures_dir = s.fixtures;
  opts.threads = s.threads;
  const auto results = verify::run(opts, [&](const verify::CriterionResult& r) {
    out << verify::format_line(r) << "\n";
    out.flush();
  });
  const Json report = verify::to_json(results);
  if (s.out != ".") io::write_json(output_path(s, "verify.json"), report);
  return report["passed"].get<bool>() ? Ok : Invariant;
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::Parse:
    case ErrorCode::MissingWeight: return Config;
    case ErrorCode::NotControllable: return Uncontrollable;
    case ErrorCode::NoConvergence: return Unconverged;
    default: return Invariant;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Quantum optimal control toolkit", "qoc"};
  app.set_config("--config", "", "TOML or INI file supplying any of the options");
  app.require_subcommand(1);

  auto add_out = [&](CLI::App* c) {
    c->add_option("--out", s.out, "Output directory")->capture_default_str();
  };
  auto add_thresholds = [&](CLI::App* c) {
    c->add_option("--epsilon", s.epsilon, "Zero threshold on state moduli")->capture_default_str();
    c->add_option("--tol", s.tol, "Verdict or residual tolerance");
  };
  auto add_state = [&](CLI::App* c) {
    c->add_option("--psi0", s.psi0, "Initial state: JSON array, file, or level number (default level 1)");
  };

  auto* sim = app.add_subcommand("simulate", "Propagate a control from an initial state");
  sim->add_option("--system", s.system, "System file");
  sim->add_option("--control", s.control, "Control file (flavor V, H or U)");
  add_state(sim);
  add_out(sim);

  auto* elim = app.add_subcommand("eliminate-drift", "Convert a V control to the driftless H control");
  elim->add_option("--system", s.system, "System file");
  elim->add_option("--control", s.control, "Control file");
  elim->add_flag("--restore", s.restore, "Map an H or U control back to V");
  add_out(elim);

  auto* res = app.add_subcommand("resonate", "Apply the resonance construction to a pair");
  res->add_option("--system", s.system, "System file (weights and drift)");
  res->add_option("--control", s.control, "Control file");
  add_state(res);
  add_thresholds(res);
  add_out(res);

  auto* chk = app.add_subcommand("check", "Validate a system and optionally a control");
  chk->add_option("--system", s.system, "System file");
  chk->add_option("--control", s.control, "Control file");
  add_state(chk);
  add_thresholds(chk);
  add_out(chk);

  auto* sol = app.add_subcommand("solve", "Solve the reduced optimal control problem");
  sol->add_option("--system", s.system, "System file");
  sol->add_option("--cost", s.cost, "Cost file or inline JSON");
  sol->add_option("--source", s.source, "Source boundary: JSON, file, or level number")->capture_default_str();
  sol->add_option("--target", s.target, "Target boundary: JSON, file, or level number");
  sol->add_option("--T", s.T, "Final time (initial bracket for free final time)")->capture_default_str();
  sol->add_option("--N", s.N, "Grid steps")->capture_default_str();
  sol->add_option("--starts", s.starts, "Random starts")->capture_default_str();
  sol->add_option("--max-iterations", s.max_iterations, "Iterations per inner solve")->capture_default_str();
  sol->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  sol->add_option("--threads", s.threads, "Worker threads (0: QOC_THREADS or all cores)");
  add_thresholds(sol);
  add_out(sol);

  auto* cls = app.add_subcommand("classify", "Classify the clean windows of a real pair");
  cls->add_option("--system", s.system, "System file");
  cls->add_option("--control", s.control, "Real control file");
  cls->add_option("--cost", s.cost, "Cost file (default energy)");
  cls->add_option("--lift", s.lift, "Covector table from solve");
  add_state(cls);
  add_thresholds(cls);
  add_out(cls);

  auto* demo = app.add_subcommand("demo-counterexample", "Write the four-level counterexample pairs");
  demo->add_option("--N", s.steps, "Grid steps (multiple of 4)")->capture_default_str();
  add_thresholds(demo);
  add_out(demo);

  auto* ver = app.add_subcommand("verify", "Run the acceptance criteria on the bundled fixtures");
  ver->add_option("--filter", s.filter, "Criterion ids, names or tags, comma separated");
  ver->add_option("--fixtures", s.fixtures, "Fixture directory");
  ver->add_option("--threads", s.threads, "Worker threads");
  add_out(ver);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return Config;
  }

  const std::vector<std::pair<CLI::App*, std::function<int(const Settings&, std::ostream&)>>> table = {
      {sim, cmd_simulate},   {elim, cmd_eliminate_drift}, {res, cmd_resonate}, {chk, cmd_check},
      {sol, cmd_solve},      {cls, cmd_classify},         {demo, cmd_demo_counterexample},
      {ver, cmd_verify}};
  try {
    for (const auto& [sub, fn] : table) {
      if (sub->parsed()) return fn(s, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return Invariant;
  }
  return Config;
}

}  // namespace qoc::cli
