#include "qoc/verify.hpp"

#include "qoc/error.hpp"
#include "qoc/extremal.hpp"
#include "qoc/fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <optional>
#include <sstream>

namespace qoc::verify {

namespace {

using std::numbers::pi;
namespace fs = std::filesystem;

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct SolveCase {
  std::string name;
  LevelSystem system;
  CostSpec spec;
  BoundarySpec source;
  BoundarySpec target;
  SolveOptions options;
};

struct Solved {
  SolveCase input;
  std::optional<SolveResult> result;
  std::string error;
};

class Suite {
 public:
  explicit Suite(const Options& opts)
      : opts_(opts), dir_(opts.fixtures_dir.empty() ? default_fixtures_dir() : opts.fixtures_dir) {}

  CriterionResult run(const CriterionInfo& info) {
    CriterionResult r;
    r.info = info;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      switch (info.id) {
        case 1: controllability(r); break;
        case 2: drift_elimination(r); break;
        case 3: resonance_construction(r); break;
        case 4: rotation_isometry(r); break;
        case 5: counterexample(r); break;
        case 6: two_level_oracles(r); break;
        case 7: gradient_check(r); break;
        case 8: pmp_consistency(r); break;
        case 9: extremal_machinery(r); break;
        case 10: solver_resonance(r); break;
        default: throw Error(ErrorCode::NoneFound, "unknown criterion " + std::to_string(info.id));
      }
    } catch (const std::exception& e) {
      r.passed = false;
      r.summary = std::string("error: ") + e.what();
      r.measured["error"] = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }

 private:
  Options opts_;
  std::string dir_;
  std::optional<std::vector<Solved>> corpus_;

  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }
  io::Json fixture(const std::string& name) const { return io::read_json(path(name)); }
  LevelSystem system(const std::string& name) const { return io::system_from_json(fixture(name), path(name)); }

  fixtures::Rng rng(unsigned long long salt) const { return fixtures::Rng(opts_.seed * 1000003ULL + salt); }

  void controllability(CriterionResult& r) {
    int graphs = 0, mismatches = 0;
    for (int n = 2; n <= 4; ++n) {
      std::vector<std::pair<int, int>> slots;
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) slots.emplace_back(j, k);
      for (unsigned mask = 0; mask < (1u << slots.size()); ++mask) {
        LevelSystem sys;
        sys.n = n;
        sys.energies = Eigen::VectorXd::LinSpaced(n, 0.0, n - 1.0);
        for (std::size_t s = 0; s < slots.size(); ++s) {
          if (mask & (1u << s)) sys.edges.push_back({slots[s].first, slots[s].second, 1.0});
        }
        ++graphs;
        if (is_controllable(sys) != lie_rank_oracle(sys).transitive) ++mismatches;
      }
    }
    r.measured = {{"graphs", graphs}, {"mismatches", mismatches}};
    r.passed = mismatches == 0 && graphs == 2 + 8 + 64;
    r.summary = std::to_string(mismatches) + " mismatches over " + std::to_string(graphs) + " graphs";
  }

  void drift_elimination(CriterionResult& r) {
    auto g = rng(2);
    const int N = 10000;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + trial % 3;
      const LevelSystem sys = fixtures::random_connected_system(g, n);
      const TimeGrid grid{fixtures::uniform(g, 0.5, 1.5), N};
      const ControlGrid v = fixtures::smooth_random_control(g, grid, sys.edges, ControlFlavor::HermitianV, 1.5);
      const Eigen::VectorXcd psi0 = fixtures::random_unit_state(g, n);
      const StateTrajectory a = propagate_drift(sys, v, psi0);
      const StateTrajectory b = propagate_driftless(eliminate_drift(sys, v), psi0);
      worst = std::max(worst, (a.moduli() - b.moduli()).cwiseAbs().maxCoeff());
    }
    r.measured = {{"instances", 100}, {"steps", N}, {"max_modulus_deviation", worst}};
    r.passed = worst <= 1e-8;
    r.summary = "max modulus deviation " + sci(worst) + " <= 1e-8 (100 instances, N=" + std::to_string(N) + ")";
  }

  // Largest phase excursion of any coordinate over a run of nodes on which
  // it stays above eps.
  static double phase_wander(const StateTrajectory& tr, double eps) {
    double worst = 0.0;
    for (int j = 0; j < tr.levels(); ++j) {
      bool inside = false;
      double ref = 0.0;
      for (int i = 0; i <= tr.grid.N; ++i) {
        if (std::abs(tr.states(j, i)) <= eps) {
          inside = false;
          continue;
        }
        const double a = std::arg(tr.states(j, i));
        if (!inside) {
          ref = a;
          inside = true;
        }
        worst = std::max(worst, std::abs(std::remainder(a - ref, 2 * pi)));
      }
    }
    return worst;
  }

  static LevelSystem bare_system(const ControlGrid& c, int n) {
    LevelSystem sys;
    sys.n = n;
    sys.energies = Eigen::VectorXd::Zero(n);
    sys.edges = c.edges;
    return sys;
  }

  static constexpr CostKind kKinds[] = {CostKind::Energy, CostKind::Length, CostKind::Area, CostKind::TimeMax};

  void resonance_construction(CriterionResult& r) {
    auto g = rng(3);
    const int N = 3000;
    double moduli = 0.0, wander = 0.0, min_drop = INFINITY;
    int not_resonant = 0, cost_increase = 0, weak_drop = 0, strict_cases = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + trial % 3;
      const LevelSystem sys = fixtures::random_connected_system(g, n);
      const ControlGrid h = fixtures::smooth_random_control(g, {1.0, N}, sys.edges, ControlFlavor::SkewH, 1.0);
      const AdmissiblePair pair = admissible_pair(h, fixtures::random_unit_state(g, n));
      const ResonanceTransform rt = resonance_transform(pair, 1e-6, 1e-6);
      moduli = std::max(moduli, (rt.pair.trajectory.moduli() - pair.trajectory.moduli()).cwiseAbs().maxCoeff());
      wander = std::max(wander, phase_wander(rt.pair.trajectory, 1e-6));
      if (classify_resonance(rt.pair).status != ResonanceStatus::Resonant) ++not_resonant;
      const LevelSystem bare = bare_system(h, n);
      for (CostKind kind : kKinds) {
        const CostSpec spec = CostSpec::from_system(bare, kind);
        if (evaluate_cost(spec, rt.pair.control) > evaluate_cost(spec, pair.control)) ++cost_increase;
      }
      if (rt.v_energy > 1e-6) {
        ++strict_cases;
        const CostSpec spec = CostSpec::from_system(bare, CostKind::Energy);
        const double drop = evaluate_cost(spec, pair.control) - evaluate_cost(spec, rt.pair.control);
        min_drop = std::min(min_drop, drop);
        if (!(drop > 1e-8)) ++weak_drop;
      }
    }
    r.measured = {{"instances", 100},
                  {"max_modulus_deviation", moduli},
                  {"max_phase_wander", wander},
                  {"not_resonant", not_resonant},
                  {"cost_increases", cost_increase},
                  {"strict_cases", strict_cases},
                  {"min_energy_drop", std::isfinite(min_drop) ? io::Json(min_drop) : io::Json(nullptr)},
                  {"insufficient_drops", weak_drop}};
    r.passed = moduli <= 1e-8 && wander <= 1e-6 && not_resonant == 0 && cost_increase == 0 && weak_drop == 0;
    r.summary = "moduli " + sci(moduli) + " <= 1e-8, phase wander " + sci(wander) + " <= 1e-6, " +
                std::to_string(not_resonant) + " non-resonant, " + std::to_string(cost_increase) +
                " cost increases, min energy drop " + sci(min_drop) + " > 1e-8 on " + std::to_string(strict_cases) +
                " instances";
  }

  void rotation_isometry(CriterionResult& r) {
    auto g = rng(4);
    double cost_gap = 0.0, residual = 0.0, moduli = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + trial % 3;
      const LevelSystem sys = fixtures::random_connected_system(g, n);
      const ControlGrid h = fixtures::smooth_random_control(g, {fixtures::uniform(g, 0.5, 2.0), 400}, sys.edges,
                                                            ControlFlavor::SkewH, 2.0);
      const AdmissiblePair pair = admissible_pair(h, fixtures::random_unit_state(g, n));
      Eigen::VectorXd alpha(n);
      for (int j = 0; j < n; ++j) alpha[j] = fixtures::uniform(g, -pi, pi);
      const AdmissiblePair rot = rot_alpha(pair, alpha);
      for (CostKind kind : kKinds) {
        const CostSpec spec = CostSpec::from_system(sys, kind);
        cost_gap = std::max(cost_gap, std::abs(evaluate_cost(spec, rot.control) - evaluate_cost(spec, pair.control)));
      }
      residual = std::max(residual, admissibility_residual(rot));
      moduli = std::max(moduli, (rot.trajectory.moduli() - pair.trajectory.moduli()).cwiseAbs().maxCoeff());
    }
    r.measured = {{"instances", 100},
                  {"max_cost_difference", cost_gap},
                  {"max_admissibility_residual", residual},
                  {"max_modulus_change", moduli}};
    r.passed = cost_gap <= 1e-12 && residual <= 1e-8;
    r.summary = "cost difference " + sci(cost_gap) + " <= 1e-12, admissibility residual " + sci(residual) + " <= 1e-8";
  }

  void counterexample(CriterionResult& r) {
    const LevelSystem sys = system("ladder4.json");
    const Eigen::VectorXcd psi0 = io::state_from_json(fixture("counterexample_psi0.json"), path("counterexample_psi0.json"));
    double deviation = 0.0;
    std::string verdicts[2];
    const char* files[2] = {"counterexample_plain.json", "counterexample_switched.json"};
    for (int which = 0; which < 2; ++which) {
      const ControlGrid h = io::control_from_json(fixture(files[which]), path(files[which]));
      validate_control(sys, h);
      const AdmissiblePair pair = admissible_pair(h, psi0);
      for (int i = 0; i <= h.grid.N; ++i) {
        const double t = h.grid.node(i);
        Eigen::Vector4cd expected(std::cos(t), std::sin(t), 0.0, 0.0);
        deviation = std::max(deviation, (pair.trajectory.states.col(i) - expected).cwiseAbs().maxCoeff());
      }
      verdicts[which] = status_name(classify_resonance(pair).status);
    }
    r.measured = {{"max_trajectory_deviation", deviation}, {"plain", verdicts[0]}, {"switched", verdicts[1]}};
    r.passed = deviation <= 1e-10 && verdicts[0] == std::string(status_name(ResonanceStatus::Resonant)) &&
               verdicts[1] == std::string(status_name(ResonanceStatus::Neither));
    r.summary = "trajectory deviation " + sci(deviation) + " <= 1e-10, plain " + verdicts[0] + ", switched " +
                verdicts[1];
  }

  SolveOptions solve_options(double T, int N, unsigned long long seed) const {
    SolveOptions o;
    o.grid = {T, N};
    o.seed = seed;
    o.threads = opts_.threads;
    return o;
  }

  void two_level_oracles(CriterionResult& r) {
    const LevelSystem sys = system("two_level.json");
    const BoundarySpec src = io::boundary_from_json(fixture("e1.json"), path("e1.json"));
    const BoundarySpec dst = io::boundary_from_json(fixture("e2.json"), path("e2.json"));
    auto timed = [&](const std::string& cost_file) {
      const CostSpec spec = io::cost_from_json(fixture(cost_file), &sys, path(cost_file));
      const auto t0 = std::chrono::steady_clock::now();
      SolveResult res = solve_reduced(sys, spec, src, dst, solve_options(1.0, 100, opts_.seed));
      return std::make_pair(res, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    };
    const auto [energy, energy_s] = timed("energy.json");
    const auto [timemax, timemax_s] = timed("time_max_free.json");
    const double energy_err = std::abs(energy.cost - pi * pi / 4);
    const double time_err = std::abs(timemax.minimal_time - pi / 2);
    r.measured = {{"energy_cost", energy.cost},         {"energy_error", energy_err}, {"energy_seconds", energy_s},
                  {"minimal_time", timemax.minimal_time}, {"time_error", time_err},     {"time_seconds", timemax_s}};
    r.passed = energy_err <= 1e-3 && time_err <= 1e-3 && energy_s < 10.0 && timemax_s < 10.0;
    r.summary = "energy error " + sci(energy_err) + " <= 1e-3 in " + sci(energy_s) + " s, minimal-time error " +
                sci(time_err) + " <= 1e-3 in " + sci(timemax_s) + " s";
  }

  void gradient_check(CriterionResult& r) {
    auto g = rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 2 + trial % 3;
      const LevelSystem sys = fixtures::random_connected_system(g, n);
      const TimeGrid grid{fixtures::uniform(g, 0.5, 2.0), 30};
      const ControlGrid c = fixtures::smooth_random_control(g, grid, sys.edges, ControlFlavor::RealU, 2.0);
      const AdmissiblePair pair{propagate_real(c, fixtures::random_real_unit_state(g, n)), c};
      const BoundarySpec target = BoundarySpec::point(fixtures::random_real_unit_state(g, n).cwiseAbs2());
      PenaltyState pen;
      pen.multipliers.resize(n - 1);
      for (int j = 0; j < n - 1; ++j) pen.multipliers[j] = fixtures::uniform(g, -1.0, 1.0);
      pen.weight = fixtures::uniform(g, 1.0, 50.0);
      const CostSpec spec = CostSpec::from_system(sys, trial % 2 ? CostKind::Length : CostKind::Energy);
      const Eigen::MatrixXd grad = adjoint_gradient(spec, pair, target, pen);
      Eigen::MatrixXd fd(grad.rows(), grad.cols());
      const double h = 1e-5;
      for (int i = 0; i < grad.rows(); ++i) {
        for (int e = 0; e < grad.cols(); ++e) {
          AdmissiblePair plus = pair, minus = pair;
          plus.control.values(i, e) += h;
          minus.control.values(i, e) -= h;
          plus.trajectory = propagate_real(plus.control, pair.trajectory.real_states().col(0));
          minus.trajectory = propagate_real(minus.control, pair.trajectory.real_states().col(0));
          fd(i, e) = (penalized_objective(spec, plus, target, pen) - penalized_objective(spec, minus, target, pen)) /
                     (2 * h);
        }
      }
      worst = std::max(worst, (grad - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
    }
    r.measured = {{"instances", 20}, {"max_relative_error", worst}};
    r.passed = worst <= 1e-5;
    r.summary = "max relative error " + sci(worst) + " <= 1e-5 (20 instances)";
  }

  const std::vector<Solved>& corpus() {
    if (corpus_) return *corpus_;
    const io::Json list = fixture("solve_corpus.json");
    std::vector<Solved> out;
    for (const auto& entry : list.at("cases")) {
      Solved s;
      SolveCase& c = s.input;
      c.name = entry.at("name").get<std::string>();
      c.system = system(entry.at("system").get<std::string>());
      const std::string cost_file = entry.at("cost").get<std::string>();
      c.spec = io::cost_from_json(fixture(cost_file), &c.system, path(cost_file));
      c.source = io::boundary_from_json(entry.at("source"), path("solve_corpus.json"));
      c.target = io::boundary_from_json(entry.at("target"), path("solve_corpus.json"));
      c.options = solve_options(entry.at("T").get<double>(), entry.at("N").get<int>(),
                                opts_.seed + entry.value("seed", 0ULL));
      try {
        s.result = solve_reduced(c.system, c.spec, c.source, c.target, c.options);
      } catch (const Error& e) {
        s.error = e.what();
      }
      out.push_back(std::move(s));
    }
    corpus_ = std::move(out);
    return *corpus_;
  }

  static bool energy_type(CostKind k) { return k == CostKind::Energy || k == CostKind::Length; }

  void pmp_consistency(CriterionResult& r) {
    double worst = 0.0, constancy = 0.0, speed = 0.0;
    int solved = 0;
    std::vector<std::string> failures;
    io::Json cases = io::Json::array();
    for (const Solved& s : corpus()) {
      const SolveCase& c = s.input;
      if (!s.result || !s.result->converged) {
        failures.push_back(c.name + " did not converge");
        cases.push_back({{"name", c.name}, {"converged", false}});
        continue;
      }
      ++solved;
      const PmpResidual res = pmp_residual(s.result->pair, s.result->lift, c.spec, &c.source, &c.target);
      const double w = std::max({res.state, res.costate, res.maximality_gap, res.transversality});
      worst = std::max(worst, w);
      constancy = std::max(constancy, res.hamiltonian_constancy);
      io::Json item = {{"name", c.name}, {"converged", true}, {"residual", io::to_json(res)}};
      bool ok = w <= 1e-4 && res.hamiltonian_constancy <= 1e-3;
      if (c.spec.kind == CostKind::Energy) {
        const double cs = constant_speed_residual(c.spec, s.result->pair.control);
        speed = std::max(speed, cs);
        item["constant_speed"] = cs;
        ok = ok && cs <= 1e-3;
      }
      if (!ok) failures.push_back(c.name);
      cases.push_back(item);
    }
    r.measured = {{"solutions", solved},          {"max_residual", worst}, {"max_constancy", constancy},
                  {"max_constant_speed", speed}, {"cases", cases}};
    r.passed = failures.empty() && solved > 0;
    r.summary = std::to_string(solved) + " solutions, residual " + sci(worst) + " <= 1e-4, constancy " +
                sci(constancy) + " <= 1e-3, constant speed " + sci(speed) + " <= 1e-3";
    if (!failures.empty()) r.summary += "; failing: " + join(failures);
  }

  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
  }

  void extremal_machinery(CriterionResult& r) {
    auto g = rng(9);
    double drift = 0.0;
    int windows = 0, tree_failures = 0, rank_failures = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 3 + trial % 3;
      const LevelSystem sys = fixtures::random_connected_system(g, n);
      std::vector<int> I;
      for (int j = 0; j < n; ++j) {
        if (static_cast<int>(I.size()) < n - 2 && fixtures::uniform(g, 0.0, 1.0) < 0.3) I.push_back(j);
      }
      const TimeGrid grid{fixtures::uniform(g, 0.3, 1.5), 200};
      ControlGrid c = fixtures::smooth_random_control(g, grid, sys.edges, ControlFlavor::RealU, 1.5);
      for (int e = 0; e < c.edge_count(); ++e) {
        for (int i : I) {
          if (c.edges[e].j == i || c.edges[e].k == i) c.values.col(e).setZero();
        }
      }
      Eigen::VectorXd rho0 = fixtures::random_real_unit_state(g, n);
      for (int i : I) rho0[i] = 0.0;
      rho0.normalize();
      const StateTrajectory tr = propagate_real(c, rho0);
      for (const Window& w : clean_windows(tr)) {
        const IndexPartition p = partition_indexes(tr, sys.edges, w, 1e-6, INFINITY);
        ++windows;
        drift = std::max(drift, p.class_norm_drift);
        for (int node = w.first; node <= w.last; ++node) {
          const Eigen::VectorXd rho = tr.states.col(node).real();
          for (const auto& cls : p.classes) {
            const auto tree = spanning_tree(cls, sys.edges);
            if (tree.size() != cls.size() - 1) {
              ++tree_failures;
              continue;
            }
            if (tree.empty()) continue;
            Eigen::MatrixXd F(n, static_cast<Eigen::Index>(tree.size()));
            for (std::size_t m = 0; m < tree.size(); ++m) F.col(m) = real_field(rho, tree[m].j, tree[m].k);
            if (F.fullPivLu().rank() != static_cast<Eigen::Index>(tree.size())) ++tree_failures;
          }
          const DistributionRank dr = distribution_rank(p, sys.edges, rho);
          if (dr.rank != dr.dimension) ++rank_failures;
        }
      }
    }

    int full_rank = 0, unverified = 0;
    io::Json minimizers = io::Json::array();
    for (const Solved& s : corpus()) {
      const SolveCase& c = s.input;
      if (!energy_type(c.spec.kind) || !s.result || !s.result->converged) continue;
      const ExtremalReport rep = classify_extremal(s.result->pair, c.spec, 1e-6, &s.result->lift);
      int bad = 0;
      for (const WindowReport& w : rep.windows) {
        if (w.vacuous || w.rank < w.dimension) continue;
        ++full_rank;
        if (w.verdict != WindowVerdict::NotStrictlyAbnormal) ++bad;
      }
      unverified += bad;
      minimizers.push_back({{"name", c.name}, {"windows", rep.windows.size()}, {"unverified", bad}});
    }

    r.measured = {{"trajectories", 50},         {"windows", windows},
                  {"max_class_norm_drift", drift}, {"tree_failures", tree_failures},
                  {"rank_failures", rank_failures}, {"full_rank_minimizer_windows", full_rank},
                  {"unverified_windows", unverified}, {"minimizers", minimizers}};
    r.passed = drift <= 1e-8 && tree_failures == 0 && rank_failures == 0 && windows >= 50 && full_rank > 0 &&
               unverified == 0;
    r.summary = "class-norm drift " + sci(drift) + " <= 1e-8 over " + std::to_string(windows) + " windows, " +
                std::to_string(tree_failures) + " tree and " + std::to_string(rank_failures) +
                " rank failures, " + std::to_string(unverified) + " of " + std::to_string(full_rank) +
                " full-rank minimizer windows without a verified normal lift";
  }

  void solver_resonance(CriterionResult& r) {
    int checked = 0, neither = 0;
    io::Json cases = io::Json::array();
    for (const Solved& s : corpus()) {
      const SolveCase& c = s.input;
      if (c.spec.kind != CostKind::Energy || !s.result || !s.result->converged) continue;
      ++checked;
      const ResonanceStatus st = classify_resonance(s.result->pair, 1e-6, 1e-4).status;
      if (st == ResonanceStatus::Neither) ++neither;
      cases.push_back({{"name", c.name}, {"status", status_name(st)}});
    }
    r.measured = {{"solutions", checked}, {"neither", neither}, {"cases", cases}};
    r.passed = checked > 0 && neither == 0;
    r.summary = std::to_string(checked - neither) + " of " + std::to_string(checked) +
                " converged energy solutions at least weakly resonant at tol 1e-4";
  }
};

}  // namespace

const std::vector<CriterionInfo>& criteria() {
  static const std::vector<CriterionInfo> list = {
      {1, "controllability-equivalence", {"system", "controllability"}},
      {2, "drift-elimination", {"dynamics", "drift"}},
      {3, "resonance-construction", {"resonance"}},
      {4, "rotation-isometry", {"resonance", "rotation"}},
      {5, "counterexample", {"resonance", "counterexample"}},
      {6, "two-level-oracles", {"optimizer", "oracle"}},
      {7, "gradient-check", {"optimizer", "gradient"}},
      {8, "pmp-consistency", {"optimizer", "pmp"}},
      {9, "extremal-machinery", {"extremal"}},
      {10, "solver-resonance", {"resonance", "optimizer"}},
  };
  return list;
}

bool selected(const CriterionInfo& c, const std::string& filter) {
  if (filter.empty()) return true;
  std::stringstream ss(filter);
  std::string token;
  while (std::getline(ss, token, ',')) {
    token.erase(0, token.find_first_not_of(' '));
    token.erase(token.find_last_not_of(' ') + 1);
    if (token.empty()) continue;
    if (token == std::to_string(c.id) || token == c.name) return true;
    if (std::find(c.tags.begin(), c.tags.end(), token) != c.tags.end()) return true;
  }
  return false;
}

std::string default_fixtures_dir() {
  if (const char* env = std::getenv("QOC_FIXTURES")) return env;
  return QOC_SOURCE_DIR "/fixtures";
}

std::vector<CriterionResult> run(const Options& opts, const std::function<void(const CriterionResult&)>& on_result) {
  Suite suite(opts);
  std::vector<CriterionResult> out;
  for (const CriterionInfo& c : criteria()) {
    if (!selected(c, opts.filter)) continue;
    out.push_back(suite.run(c));
    if (on_result) on_result(out.back());
  }
  return out;
}

std::string format_line(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] %2d %-28s", r.passed ? "PASS" : "FAIL", r.info.id, r.info.name.c_str());
  char tail[32];
  std::snprintf(tail, sizeof tail, " (%.1f s)", r.seconds);
  return head + r.summary + tail;
}

io::Json to_json(const std::vector<CriterionResult>& results) {
  io::Json list = io::Json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    list.push_back({{"id", r.info.id},
                    {"name", r.info.name},
                    {"tags", r.info.tags},
                    {"passed", r.passed},
                    {"summary", r.summary},
                    {"seconds", r.seconds},
                    {"measured", r.measured}});
  }
  return {{"passed", all}, {"criteria", list}};
}

}  // namespace qoc::verify
