#include "qoc/extremal.hpp"

#include "qoc/error.hpp"
#include "qoc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace qoc {

namespace {

std::vector<bool> zero_pattern(const StateTrajectory& traj, int node, double epsilon) {
  std::vector<bool> z(traj.levels());
  for (int j = 0; j < traj.levels(); ++j) z[j] = std::abs(traj.states(j, node)) <= epsilon;
  return z;
}

// Runs of nodes sharing a zero-pattern, including single-node runs.
std::vector<std::pair<int, int>> pattern_runs(const StateTrajectory& traj, double epsilon) {
  std::vector<std::pair<int, int>> runs;
  const int last = traj.grid.N;
  int start = 0;
  std::vector<bool> current = zero_pattern(traj, 0, epsilon);
  for (int i = 1; i <= last; ++i) {
    std::vector<bool> z = zero_pattern(traj, i, epsilon);
    if (z != current) {
      runs.emplace_back(start, i - 1);
      start = i;
      current = std::move(z);
    }
  }
  runs.emplace_back(start, last);
  return runs;
}

bool inside(const std::vector<int>& set, int j) { return std::find(set.begin(), set.end(), j) != set.end(); }

int class_of(const IndexPartition& p, int j) {
  for (int l = 0; l < static_cast<int>(p.classes.size()); ++l) {
    if (inside(p.classes[l], j)) return l;
  }
  return -1;
}

// Component of P in T J at rho: zero on I, class-radial part removed.
Eigen::VectorXd tangent_part(const IndexPartition& p, const Eigen::VectorXd& rho, const Eigen::VectorXd& P) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(P.size());
  for (const auto& cls : p.classes) {
    double pr = 0.0, rr = 0.0;
    for (int j : cls) {
      pr += P[j] * rho[j];
      rr += rho[j] * rho[j];
    }
    for (int j : cls) out[j] = P[j] - (rr > 0.0 ? pr / rr : 0.0) * rho[j];
  }
  return out;
}

bool bound_active(const AdmissiblePair& pair, const Window& w) {
  const auto& c = pair.control;
  for (int e = 0; e < c.edge_count(); ++e) {
    const double b = c.edges[e].bound;
    if (!std::isfinite(b)) continue;
    for (int i = w.first; i < w.last; ++i) {
      if (std::abs(c.values(i, e)) >= b * (1.0 - 1e-9)) return true;
    }
  }
  return false;
}

Eigen::MatrixXcd transport(const AdmissiblePair& sub, const Eigen::VectorXd& P0) {
  const auto& c = sub.control;
  const int n = static_cast<int>(P0.size());
  Eigen::MatrixXcd P(n, c.grid.N + 1);
  P.col(0) = P0.cast<cdouble>();
  for (int i = 0; i < c.grid.N; ++i) P.col(i + 1) = linalg::SkewExp(c.matrix(i, n)).apply(c.grid.dt(), P.col(i));
  return P;
}

PMPLift extended_lift(const AdmissiblePair& sub, const IndexPartition& part, const Eigen::VectorXd& P0) {
  const Eigen::VectorXd rho0 = sub.trajectory.states.col(0).real();
  PMPLift lift;
  lift.p0 = -1.0;
  lift.P = transport(sub, tangent_part(part, rho0, P0));
  lift.normal_candidate = true;
  return lift;
}

}  // namespace

Window make_window(const TimeGrid& grid, int first, int last) {
  if (first < 0 || last > grid.N || last <= first) {
    throw Error(ErrorCode::GridMismatch, "window [" + std::to_string(first) + ", " + std::to_string(last) +
                                             "] outside the grid or shorter than one step");
  }
  return Window{first, last, grid.node(first), grid.node(last)};
}

int IndexPartition::tangent_dimension() const {
  int d = 0;
  for (int m : sizes) d += m - 1;
  return d;
}

IndexPartition partition_indexes(const StateTrajectory& traj, const std::vector<Edge>& edges, const Window& window,
                                 double epsilon, double norm_tol) {
  const Window w = make_window(traj.grid, window.first, window.last);
  const int n = traj.levels();
  IndexPartition p;
  p.window = w;
  p.epsilon = epsilon;
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd m = traj.states.row(j).segment(w.first, w.last - w.first + 1).cwiseAbs().transpose();
    if (m.maxCoeff() <= epsilon) {
      p.I.push_back(j);
    } else if (m.minCoeff() > epsilon) {
      p.J.push_back(j);
    } else {
      throw Error(ErrorCode::MixedWindow, "level " + std::to_string(j + 1) + " crosses the zero threshold inside [" +
                                              std::to_string(w.t1) + ", " + std::to_string(w.t2) + "]");
    }
  }
  std::vector<bool> seen(n, false);
  for (int root : p.J) {
    if (seen[root]) continue;
    std::vector<int> cls;
    std::deque<int> queue{root};
    seen[root] = true;
    while (!queue.empty()) {
      const int a = queue.front();
      queue.pop_front();
      cls.push_back(a);
      for (const Edge& e : edges) {
        const int b = e.j == a ? e.k : (e.k == a ? e.j : -1);
        if (b < 0 || seen[b] || !inside(p.J, b)) continue;
        seen[b] = true;
        queue.push_back(b);
      }
    }
    std::sort(cls.begin(), cls.end());
    p.classes.push_back(std::move(cls));
  }
  p.offsets.push_back(0);
  p.radii.resize(static_cast<Eigen::Index>(p.classes.size()));
  for (int l = 0; l < static_cast<int>(p.classes.size()); ++l) {
    const auto& cls = p.classes[l];
    p.sizes.push_back(static_cast<int>(cls.size()));
    p.offsets.push_back(p.offsets.back() + p.sizes.back());
    auto class_norm = [&](int node) {
      double s = 0.0;
      for (int j : cls) s += std::norm(traj.states(j, node));
      return std::sqrt(s);
    };
    p.radii[l] = class_norm(w.first);
    for (int i = w.first; i <= w.last; ++i) {
      p.class_norm_drift = std::max(p.class_norm_drift, std::abs(class_norm(i) - p.radii[l]));
    }
  }
  if (p.class_norm_drift > norm_tol) {
    throw Error(ErrorCode::InconsistentState,
                "class norm drifts by " + std::to_string(p.class_norm_drift) + " on the window");
  }
  return p;
}

std::vector<Window> clean_windows(const StateTrajectory& traj, double epsilon) {
  std::vector<Window> out;
  for (const auto& [a, b] : pattern_runs(traj, epsilon)) {
    if (b > a) out.push_back(make_window(traj.grid, a, b));
  }
  return out;
}

Window find_clean_window(const StateTrajectory& traj, double t, double epsilon) {
  if (!(t >= 0.0 && t <= traj.grid.T)) throw Error(ErrorCode::GridMismatch, "time outside the domain");
  const int node = std::min(traj.grid.N, static_cast<int>(std::floor(t / traj.grid.dt() + 1e-9)));
  const auto runs = pattern_runs(traj, epsilon);
  int at = 0;
  while (runs[at].second < node) ++at;
  if (runs[at].second > runs[at].first) return make_window(traj.grid, runs[at].first, runs[at].second);
  // Outward search; on equal distance prefer the longer run.
  for (int d = 1; d < static_cast<int>(runs.size()); ++d) {
    int best = -1;
    for (int r : {at - d, at + d}) {
      if (r < 0 || r >= static_cast<int>(runs.size()) || runs[r].second == runs[r].first) continue;
      if (best < 0 || runs[r].second - runs[r].first > runs[best].second - runs[best].first) best = r;
    }
    if (best >= 0) return make_window(traj.grid, runs[best].first, runs[best].second);
  }
  throw Error(ErrorCode::NoneFound, "no clean window: every zero-pattern run is a single node");
}

std::vector<Edge> spanning_tree(const std::vector<int>& cls, const std::vector<Edge>& edges) {
  std::vector<Edge> tree;
  if (cls.empty()) return tree;
  std::vector<int> reached{cls.front()};
  std::deque<int> queue{cls.front()};
  while (!queue.empty()) {
    const int a = queue.front();
    queue.pop_front();
    for (const Edge& e : edges) {
      const int b = e.j == a ? e.k : (e.k == a ? e.j : -1);
      if (b < 0 || !inside(cls, b) || inside(reached, b)) continue;
      reached.push_back(b);
      tree.push_back(e.normalized());
      queue.push_back(b);
    }
  }
  if (reached.size() != cls.size()) throw Error(ErrorCode::NotConnected, "class is not connected by the given edges");
  return tree;
}

Eigen::VectorXd real_field(const Eigen::VectorXd& rho, int j, int k) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(rho.size());
  f[j] = rho[k];
  f[k] = -rho[j];
  return f;
}

DistributionRank distribution_rank(const IndexPartition& partition, const std::vector<Edge>& edges,
                                   const Eigen::VectorXd& rho) {
  for (int i : partition.I) {
    if (i >= rho.size() || std::abs(rho[i]) > partition.epsilon) {
      throw Error(ErrorCode::InconsistentState, "state does not vanish on level " + std::to_string(i + 1));
    }
  }
  for (int j : partition.J) {
    if (j >= rho.size()) throw Error(ErrorCode::InconsistentState, "state shorter than the partition");
  }
  DistributionRank r;
  r.dimension = partition.tangent_dimension();
  std::vector<Eigen::VectorXd> cols;
  for (const Edge& e : edges) {
    const int l = class_of(partition, e.j);
    if (l < 0 || l != class_of(partition, e.k)) continue;
    cols.push_back(real_field(rho, e.j, e.k));
  }
  if (cols.empty()) return r;
  Eigen::MatrixXd F(rho.size(), static_cast<Eigen::Index>(cols.size()));
  for (int c = 0; c < static_cast<int>(cols.size()); ++c) F.col(c) = cols[c];
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(F).singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return r;
  for (int m = 0; m < sv.size(); ++m) r.rank += sv[m] > 1e-9 * sv[0];
  return r;
}

const char* verdict_name(WindowVerdict v) {
  switch (v) {
    case WindowVerdict::NotStrictlyAbnormal: return "not-strictly-abnormal";
    case WindowVerdict::RankDeficient: return "rank-deficient";
    case WindowVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

bool ExtremalReport::all_not_strictly_abnormal() const {
  return std::all_of(windows.begin(), windows.end(),
                     [](const WindowReport& w) { return w.verdict == WindowVerdict::NotStrictlyAbnormal; });
}

AdmissiblePair window_pair(const AdmissiblePair& pair, const Window& w, const std::vector<int>& zeroed) {
  const auto& c = pair.control;
  const double dt = c.grid.dt();
  const TimeGrid grid{dt * w.steps(), w.steps()};
  ControlGrid sub = ControlGrid::zeros(grid, c.flavor, c.edges);
  sub.values = c.values.middleRows(w.first, w.steps());
  for (int e = 0; e < c.edge_count(); ++e) {
    if (inside(zeroed, c.edges[e].j) || inside(zeroed, c.edges[e].k)) sub.values.col(e).setZero();
  }
  StateTrajectory tr{grid, pair.trajectory.states.middleCols(w.first, w.steps() + 1), pair.trajectory.real};
  return AdmissiblePair{std::move(tr), std::move(sub)};
}

ExtremalReport classify_extremal(const AdmissiblePair& pair, const CostSpec& spec, double epsilon, const PMPLift* lift,
                                 double tol) {
  const auto& c = pair.control;
  if (c.flavor != ControlFlavor::RealU) throw Error(ErrorCode::InvalidControl, "extremal classification needs a real-U pair");
  const bool fittable = spec.kind == CostKind::Energy || spec.kind == CostKind::Length;
  ExtremalReport report;
  report.epsilon = epsilon;
  for (const Window& w : clean_windows(pair.trajectory, epsilon)) {
    WindowReport wr;
    try {
      wr.partition = partition_indexes(pair.trajectory, c.edges, w, epsilon);
    } catch (const Error& e) {
      wr.partition.window = w;
      wr.partition.epsilon = epsilon;
      wr.note = e.what();
      report.windows.push_back(std::move(wr));
      continue;
    }
    const IndexPartition& part = wr.partition;
    wr.dimension = part.tangent_dimension();
    wr.rank = wr.dimension;
    for (int i = w.first; i <= w.last; ++i) {
      wr.rank = std::min(wr.rank, distribution_rank(part, c.edges, pair.trajectory.states.col(i).real()).rank);
    }
    wr.vacuous = wr.dimension == 0;
    wr.bound_active = bound_active(pair, w);
    if (wr.rank < wr.dimension) {
      wr.verdict = WindowVerdict::RankDeficient;
      wr.note = "distribution rank below the manifold dimension";
      report.windows.push_back(std::move(wr));
      continue;
    }
    if (wr.bound_active) {
      wr.note = "control bound reached on the window";
      report.windows.push_back(std::move(wr));
      continue;
    }
    const AdmissiblePair sub = window_pair(pair, w, part.I);
    auto attempt = [&](const Eigen::VectorXd& P0) {
      const PMPLift ext = extended_lift(sub, part, P0);
      return pmp_residual(sub, ext, spec);
    };
    bool done = false;
    if (lift && lift->P.cols() == c.grid.N + 1 && lift->P.rows() == pair.trajectory.levels()) {
      wr.lift_residual = attempt(lift->P.col(w.first).real());
      done = wr.lift_residual.worst() <= tol;
      if (done) wr.note = "extended lift from the supplied covector";
    }
    if (!done && fittable) {
      const PMPLift fitted = fit_normal_lift(sub, spec);
      wr.lift_residual = attempt(fitted.P.col(0).real());
      done = wr.lift_residual.worst() <= tol;
      if (done) wr.note = "extended lift from a normal fit on the window";
    }
    if (done) {
      wr.verdict = WindowVerdict::NotStrictlyAbnormal;
      if (wr.vacuous) wr.note = "vacuously full rank; " + wr.note;
    } else {
      wr.note = fittable || lift ? "extended lift fails the maximum-principle check"
                                 : "no normal lift available for this cost";
    }
    report.windows.push_back(std::move(wr));
  }
  return report;
}

}  // namespace qoc
