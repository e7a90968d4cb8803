#include "qoc/resonance.hpp"

#include "qoc/error.hpp"
#include "qoc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qoc {

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre nodes and weights on [0, 1].
constexpr int kGauss = 5;
const double kGaussX[kGauss] = {0.04691007703066800, 0.23076534494715845, 0.5, 0.76923465505284155,
                                0.95308992296933200};
const double kGaussW[kGauss] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                                0.23931433524968324, 0.11846344252809454};

// Representative of x modulo pi in (-pi/2, pi/2].
double wrap_half(double x) {
  double r = std::remainder(x, kPi);
  if (r <= -kPi / 2) r += kPi;
  return r;
}

cdouble control_entry(const ControlGrid& c, int step, int e) { return c.values(step, e); }

bool coupled(const Eigen::VectorXcd& psi, const Edge& e, double eps) {
  return std::min(std::abs(psi(e.j)), std::abs(psi(e.k))) > eps;
}

double phase_difference(const Eigen::VectorXcd& psi, const Edge& e) { return std::arg(psi(e.j)) - std::arg(psi(e.k)); }

void require_driftless(const AdmissiblePair& pair, const char* what) {
  if (pair.control.flavor == ControlFlavor::HermitianV) {
    throw Error(ErrorCode::InvalidControl, std::string(what) + " expects a driftless (H or U) control");
  }
  if (!(pair.control.grid == pair.trajectory.grid)) throw Error(ErrorCode::GridMismatch, "control and trajectory grids differ");
}

// Common phase of a set of values mod pi: half the argument of sum c^2.
double principal_phase(const std::vector<cdouble>& vals) {
  cdouble s = 0.0;
  for (const auto& c : vals) s += c * c;
  return std::abs(s) > 0.0 ? std::arg(s) / 2.0 : 0.0;
}

double off_phase(cdouble c, double phi) { return std::abs((c * std::polar(1.0, -phi)).imag()); }

}  // namespace

int IntervalDecomposition::interval_of_node(int e, int node) const {
  const auto& iv = edges.at(e).intervals;
  for (int l = 0; l < static_cast<int>(iv.size()); ++l) {
    if (node >= iv[l].first && node <= iv[l].last) return l;
  }
  return -1;
}

int IntervalDecomposition::interval_of_step(int e, int step) const {
  const int l = interval_of_node(e, step);
  return l >= 0 ? l : interval_of_node(e, step + 1);
}

IntervalDecomposition decompose_intervals(const StateTrajectory& traj, const std::vector<Edge>& edges, double epsilon) {
  validate_grid(traj.grid);
  const int N = traj.grid.N;
  IntervalDecomposition dec{traj.grid, epsilon, {}};
  for (const auto& raw : edges) {
    const Edge e = raw.normalized();
    if (e.k >= traj.levels()) throw Error(ErrorCode::DimensionMismatch, "edge outside the trajectory dimension");
    EdgeIntervals out{e, {}};
    int i = 0;
    while (i <= N) {
      if (!coupled(traj.states.col(i), e, epsilon)) {
        ++i;
        continue;
      }
      int last = i;
      while (last + 1 <= N && coupled(traj.states.col(last + 1), e, epsilon)) ++last;
      if (last > i) {
        Interval iv;
        iv.first = i;
        iv.last = last;
        iv.a = i > 0 ? traj.grid.node(i - 1) : 0.0;
        iv.b = last < N ? traj.grid.node(last + 1) : traj.grid.T;
        out.intervals.push_back(iv);
      }
      i = last + 1;
    }
    dec.edges.push_back(std::move(out));
  }
  return dec;
}

UVDecomposition uv_decompose(const AdmissiblePair& pair, const IntervalDecomposition& dec) {
  require_driftless(pair, "uv_decompose");
  const auto& tr = pair.trajectory;
  const auto& c = pair.control;
  const int N = tr.grid.N;
  UVDecomposition out;
  for (const auto& ei : dec.edges) {
    const int e = c.find_edge(ei.edge.j, ei.edge.k);
    UVEdge ue{ei.edge, {}};
    for (const auto& iv : ei.intervals) {
      const int len = iv.last - iv.first + 1;
      UVInterval u{iv, Eigen::VectorXd(len), Eigen::VectorXd(len), Eigen::VectorXd(len), 0.0};
      for (int m = 0; m < len; ++m) {
        const int node = iv.first + m;
        const Eigen::VectorXcd psi = tr.states.col(node);
        if (!coupled(psi, ei.edge, dec.epsilon)) {
          throw Error(ErrorCode::PhaseUndefined, "modulus below epsilon at node " + std::to_string(node) +
                                                     " inside an interval of edge {" + std::to_string(ei.edge.j + 1) +
                                                     "," + std::to_string(ei.edge.k + 1) + "}");
        }
        const double beta = std::remainder(phase_difference(psi, ei.edge), 2 * kPi);
        const cdouble h = e >= 0 ? control_entry(c, std::min(node, N - 1), e) : cdouble(0.0);
        const cdouble w = h * std::polar(1.0, -beta);
        u.u(m) = w.real();
        u.v(m) = w.imag();
        u.beta(m) = beta;
      }
      u.anchor = u.beta(0);
      ue.intervals.push_back(std::move(u));
    }
    out.edges.push_back(std::move(ue));
  }
  return out;
}

ResonanceTransform resonance_transform(const AdmissiblePair& pair, double epsilon, double tol) {
  require_driftless(pair, "resonance_transform");
  const auto& tr = pair.trajectory;
  const auto& c = pair.control;
  const int n = tr.levels();
  const int N = c.grid.N;
  const double dt = c.grid.dt();

  ResonanceTransform out;
  out.anchor_phases = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXcd psi0 = tr.states.col(0);
  for (int j = 0; j < n; ++j) {
    if (std::abs(psi0(j)) > epsilon) out.anchor_phases(j) = std::arg(psi0(j));
  }

  ControlGrid bar = ControlGrid::zeros(c.grid, ControlFlavor::SkewH, c.edges);
  for (int i = 0; i < N; ++i) {
    const linalg::SkewExp step(c.matrix(i, n));
    Eigen::VectorXcd psi_g[kGauss];
    for (int g = 0; g < kGauss; ++g) psi_g[g] = step.apply(kGaussX[g] * dt, tr.states.col(i));
    for (int e = 0; e < c.edge_count(); ++e) {
      const Edge& ed = c.edges[e];
      const cdouble h = control_entry(c, i, e);
      double ubar = 0.0;
      for (int g = 0; g < kGauss; ++g) {
        if (!coupled(psi_g[g], ed, epsilon)) continue;
        const cdouble w = h * std::polar(1.0, -phase_difference(psi_g[g], ed));
        ubar += kGaussW[g] * w.real();
        out.v_energy += dt * kGaussW[g] * w.imag() * w.imag();
      }
      ubar = std::clamp(ubar, -std::abs(h), std::abs(h));
      bar.values(i, e) = ubar * std::polar(1.0, out.anchor_phases(ed.j) - out.anchor_phases(ed.k));
    }
  }

  out.pair = admissible_pair(bar, psi0);
  out.moduli_deviation = (out.pair.trajectory.moduli() - tr.moduli()).cwiseAbs().maxCoeff();
  if (out.moduli_deviation > tol) {
    throw Error(ErrorCode::AdmissibilityResidualExceeded,
                "resonant pair moduli deviate by " + std::to_string(out.moduli_deviation) + " (tolerance " +
                    std::to_string(tol) + "); refine the grid");
  }
  return out;
}

const char* status_name(ResonanceStatus s) {
  switch (s) {
    case ResonanceStatus::Resonant: return "resonant";
    case ResonanceStatus::WeaklyResonant: return "weakly-resonant";
    case ResonanceStatus::Neither: return "neither";
  }
  return "neither";
}

ResonanceVerdict classify_resonance(const AdmissiblePair& pair, double epsilon, double tol) {
  require_driftless(pair, "classify_resonance");
  const auto& tr = pair.trajectory;
  const auto& c = pair.control;
  const int N = c.grid.N;
  const IntervalDecomposition dec = decompose_intervals(tr, c.edges, epsilon);
  const Eigen::VectorXcd psi0 = tr.states.col(0);

  bool weak = true;
  bool resonant = true;
  ResonanceVerdict verdict;
  for (int e = 0; e < c.edge_count(); ++e) {
    const Edge& ed = c.edges[e];
    EdgeEvidence ev;
    ev.edge = ed;
    ev.interval_count = static_cast<int>(dec.edges[e].intervals.size());
    for (const auto& iv : dec.edges[e].intervals) ev.anchors.push_back(phase_difference(tr.states.col(iv.first), ed));

    std::vector<cdouble> run;
    std::vector<cdouble> all_nonzero;
    auto close_run = [&] {
      if (run.empty()) return;
      const double phi = principal_phase(run);
      for (const auto& v : run) ev.bad_phase_spread = std::max(ev.bad_phase_spread, off_phase(v, phi));
      run.clear();
    };
    for (int s = 0; s < N; ++s) {
      const cdouble h = control_entry(c, s, e);
      if (h != 0.0) all_nonzero.push_back(h);
      const int l = dec.interval_of_step(e, s);
      if (l < 0) {
        run.push_back(h);
        continue;
      }
      close_run();
      for (int node : {s, s + 1}) {
        if (dec.interval_of_node(e, node) != l) continue;
        const double beta = phase_difference(tr.states.col(node), ed);
        ev.max_v = std::max(ev.max_v, off_phase(h, beta));
        ev.max_phase_drift = std::max(ev.max_phase_drift, std::abs(wrap_half(beta - ev.anchors[l])));
      }
    }
    close_run();

    ev.reference_free = !coupled(psi0, ed, epsilon);
    if (!ev.reference_free) {
      ev.reference_phase = phase_difference(psi0, ed);
    } else if (!ev.anchors.empty()) {
      ev.reference_phase = ev.anchors.front();
    } else {
      ev.reference_phase = principal_phase(all_nonzero);
    }
    for (int s = 0; s < N; ++s) ev.max_off_phase = std::max(ev.max_off_phase, off_phase(control_entry(c, s, e), ev.reference_phase));

    weak = weak && ev.max_v <= tol && ev.bad_phase_spread <= tol;
    resonant = resonant && ev.max_off_phase <= tol;
    verdict.edges.push_back(std::move(ev));
  }
  verdict.status = weak ? (resonant ? ResonanceStatus::Resonant : ResonanceStatus::WeaklyResonant) : ResonanceStatus::Neither;
  return verdict;
}

AdmissiblePair rot_alpha(const AdmissiblePair& pair, const Eigen::VectorXd& alpha) {
  require_driftless(pair, "rot_alpha");
  const int n = pair.trajectory.levels();
  if (alpha.size() != n) throw Error(ErrorCode::DimensionMismatch, "rotation angles do not match the level count");
  AdmissiblePair out = pair;
  out.trajectory.real = false;
  for (int j = 0; j < n; ++j) out.trajectory.states.row(j) *= std::polar(1.0, alpha(j));
  out.control.flavor = ControlFlavor::SkewH;
  for (int e = 0; e < out.control.edge_count(); ++e) {
    const Edge& ed = out.control.edges[e];
    out.control.values.col(e) *= std::polar(1.0, alpha(ed.j) - alpha(ed.k));
  }
  return out;
}

Eigen::VectorXd bridge_angles(const AdmissiblePair& resonant, const Eigen::VectorXcd& psi1, const Eigen::VectorXcd& psi2,
                              double epsilon) {
  require_driftless(resonant, "eigenstate_bridge");
  const auto& tr = resonant.trajectory;
  const int n = tr.levels();
  if (psi1.size() != n || psi2.size() != n) throw Error(ErrorCode::DimensionMismatch, "endpoint states do not match the level count");
  for (int j = 0; j < n; ++j) {
    if (std::abs(psi1(j)) > epsilon && std::abs(psi2(j)) > epsilon) {
      throw Error(ErrorCode::SupportOverlap, "endpoint supports share level " + std::to_string(j + 1));
    }
  }
  const Eigen::VectorXcd start = tr.states.col(0);
  const Eigen::VectorXcd end = tr.states.col(tr.grid.N);
  const double mis = std::max((start.cwiseAbs() - psi1.cwiseAbs()).cwiseAbs().maxCoeff(),
                              (end.cwiseAbs() - psi2.cwiseAbs()).cwiseAbs().maxCoeff());
  if (mis > 1e-6) throw Error(ErrorCode::EndpointMismatch, "pair endpoint moduli differ from the states by " + std::to_string(mis));

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (std::abs(psi1(j)) > epsilon) {
      alpha(j) = std::arg(psi1(j)) - std::arg(start(j));
    } else if (std::abs(psi2(j)) > epsilon) {
      alpha(j) = std::arg(psi2(j)) - std::arg(end(j));
    }
  }
  return alpha;
}

AdmissiblePair eigenstate_bridge(const AdmissiblePair& resonant, const Eigen::VectorXcd& psi1, const Eigen::VectorXcd& psi2,
                                 double epsilon) {
  return rot_alpha(resonant, bridge_angles(resonant, psi1, psi2, epsilon));
}

Eigen::VectorXd field_F(const Eigen::VectorXcd& psi, int j, int k, double beta) {
  const int n = static_cast<int>(psi.size());
  Eigen::VectorXcd t = Eigen::VectorXcd::Zero(n);
  t(j) += std::polar(1.0, beta) * psi(k);
  t(k) -= std::polar(1.0, -beta) * psi(j);
  Eigen::VectorXd out(2 * n);
  out << t.real(), t.imag();
  return out;
}

Eigen::VectorXd field_G(const Eigen::VectorXcd& psi, int j, int k, double beta) {
  const int n = static_cast<int>(psi.size());
  const cdouble i1(0.0, 1.0);
  Eigen::VectorXcd t = Eigen::VectorXcd::Zero(n);
  t(j) += i1 * std::polar(1.0, beta) * psi(k);
  t(k) += i1 * std::polar(1.0, -beta) * psi(j);
  Eigen::VectorXd out(2 * n);
  out << t.real(), t.imag();
  return out;
}

Counterexample counterexample_pair(int steps) {
  if (steps < 4 || steps % 4 != 0) throw Error(ErrorCode::GridMismatch, "counterexample needs a step count divisible by 4");
  Counterexample ce;
  ce.system = LevelSystem::ladder(4);
  ce.system.energies.setZero();
  const TimeGrid grid{kPi / 2, steps};
  ControlGrid plain = ControlGrid::zeros(grid, ControlFlavor::SkewH, ce.system.edges);
  const int e01 = plain.find_edge(0, 1);
  const int e23 = plain.find_edge(2, 3);
  plain.values.col(e01).setConstant(-1.0);
  ControlGrid switched = plain;
  const cdouble quarter[4] = {1.0, -1.0, cdouble(0.0, 1.0), cdouble(0.0, -1.0)};
  for (int i = 0; i < steps; ++i) switched.values(i, e23) = quarter[4 * i / steps];
  Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(4);
  psi0(0) = 1.0;
  ce.plain = admissible_pair(plain, psi0);
  ce.switched = admissible_pair(switched, psi0);
  return ce;
}

}  // namespace qoc
