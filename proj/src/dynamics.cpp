#include "qoc/dynamics.hpp"

#include "qoc/error.hpp"
#include "qoc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qoc {

namespace {
const cdouble kI(0.0, 1.0);

std::string edge_name(const Edge& e) {
  return "{" + std::to_string(e.j + 1) + "," + std::to_string(e.k + 1) + "}";
}
}  // namespace

TimeGrid TimeGrid::choose(const LevelSystem& sys, double T, double max_modulus, int min_steps) {
  double rate = max_modulus;
  for (const Edge& e : sys.edges) rate = std::max(rate, std::abs(sys.energies[e.j] - sys.energies[e.k]));
  int n = std::max(min_steps, 1);
  if (rate > 0.0) n = std::max(n, static_cast<int>(std::ceil(rate * T / 0.1 - 1e-12)));
  return TimeGrid{T, n};
}

void validate_grid(const TimeGrid& grid) {
  if (!(grid.T > 0.0) || !std::isfinite(grid.T)) throw Error(ErrorCode::GridMismatch, "final time must be > 0");
  if (grid.N < 1) throw Error(ErrorCode::GridMismatch, "step count must be >= 1");
}

const char* flavor_name(ControlFlavor f) {
  switch (f) {
    case ControlFlavor::HermitianV: return "V";
    case ControlFlavor::SkewH: return "H";
    case ControlFlavor::RealU: return "U";
  }
  return "?";
}

ControlGrid ControlGrid::zeros(const TimeGrid& grid, ControlFlavor flavor, std::vector<Edge> edges) {
  ControlGrid c;
  c.grid = grid;
  c.flavor = flavor;
  for (Edge& e : edges) e = e.normalized();
  c.edges = std::move(edges);
  c.values = Eigen::MatrixXcd::Zero(grid.N, static_cast<Eigen::Index>(c.edges.size()));
  return c;
}

int ControlGrid::find_edge(int a, int b) const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].connects(a, b)) return static_cast<int>(i);
  }
  return -1;
}

cdouble ControlGrid::entry(int step, int row, int col) const {
  const int e = find_edge(row, col);
  if (e < 0 || row == col) return 0.0;
  const cdouble c = values(step, e);
  if (row == edges[e].j) return c;
  switch (flavor) {
    case ControlFlavor::HermitianV: return std::conj(c);
    case ControlFlavor::SkewH: return -std::conj(c);
    case ControlFlavor::RealU: return -c;
  }
  return 0.0;
}

Eigen::MatrixXcd ControlGrid::matrix(int step, int n) const {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (int e = 0; e < edge_count(); ++e) {
    const int j = edges[e].j, k = edges[e].k;
    const cdouble c = values(step, e);
    m(j, k) = c;
    switch (flavor) {
      case ControlFlavor::HermitianV: m(k, j) = std::conj(c); break;
      case ControlFlavor::SkewH: m(k, j) = -std::conj(c); break;
      case ControlFlavor::RealU: m(k, j) = -c; break;
    }
  }
  return m;
}

Eigen::MatrixXd ControlGrid::real_matrix(int step, int n) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < edge_count(); ++e) {
    m(edges[e].j, edges[e].k) = values(step, e).real();
    m(edges[e].k, edges[e].j) = -values(step, e).real();
  }
  return m;
}

double ControlGrid::max_modulus() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }

void validate_control(const LevelSystem& sys, const ControlGrid& ctrl) {
  validate_grid(ctrl.grid);
  if (ctrl.values.rows() != ctrl.grid.N || ctrl.values.cols() != ctrl.edge_count()) {
    throw Error(ErrorCode::GridMismatch, "values shape does not match grid and edge list");
  }
  for (int e = 0; e < ctrl.edge_count(); ++e) {
    const Edge& ce = ctrl.edges[e];
    if (ce.j == ce.k) throw Error(ErrorCode::InvalidControl, "nonzero-diagonal at level " + std::to_string(ce.j + 1));
    const int se = sys.edge_index(ce.j, ce.k);
    if (se < 0) throw Error(ErrorCode::InvalidControl, "off-edge control on " + edge_name(ce));
    const double bound = sys.edges[se].bound;
    for (int i = 0; i < ctrl.grid.N; ++i) {
      const cdouble c = ctrl.values(i, e);
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
        throw Error(ErrorCode::InvalidControl, "non-finite control on " + edge_name(ce));
      }
      if (ctrl.flavor == ControlFlavor::RealU && c.imag() != 0.0) {
        throw Error(ErrorCode::InvalidControl, "real-antisymmetry: complex entry on " + edge_name(ce));
      }
      if (std::isfinite(bound) && std::abs(c) > bound * (1.0 + 1e-12)) {
        throw Error(ErrorCode::InvalidControl, "bound exceeded on " + edge_name(ce) + " at step " + std::to_string(i));
      }
    }
  }
}

double StateTrajectory::max_norm_drift() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < states.cols(); ++i) worst = std::max(worst, std::abs(states.col(i).norm() - 1.0));
  return worst;
}

void require_unit(const Eigen::VectorXcd& psi, const char* what) {
  if (std::abs(psi.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidControl, std::string(what) + " must have unit norm");
  }
}

namespace {

void require_fits(const ControlGrid& c, int n) {
  for (const Edge& e : c.edges) {
    if (e.j < 0 || e.k < 0 || e.j >= n || e.k >= n || e.j == e.k) {
      throw Error(ErrorCode::InvalidControl, "control edge " + edge_name(e) + " incompatible with state dimension");
    }
  }
  if (c.values.rows() != c.grid.N || c.values.cols() != c.edge_count()) {
    throw Error(ErrorCode::GridMismatch, "values shape does not match grid and edge list");
  }
}

}  // namespace

StateTrajectory propagate_drift(const LevelSystem& sys, const ControlGrid& v, const Eigen::VectorXcd& psi0) {
  if (v.flavor != ControlFlavor::HermitianV) throw Error(ErrorCode::InvalidControl, "propagate_drift expects a hermitian-V control");
  validate_control(sys, v);
  require_unit(psi0, "initial state");
  const int n = sys.n;
  StateTrajectory traj{v.grid, Eigen::MatrixXcd(n, v.grid.N + 1), false};
  traj.states.col(0) = psi0;
  const Eigen::MatrixXcd d = sys.energies.cast<cdouble>().asDiagonal();
  for (int i = 0; i < v.grid.N; ++i) {
    const Eigen::MatrixXcd step = linalg::expm_hermitian(d + v.matrix(i, n), v.grid.dt());
    traj.states.col(i + 1) = step * traj.states.col(i);
  }
  return traj;
}

StateTrajectory propagate_driftless(const ControlGrid& h, const Eigen::VectorXcd& psi0) {
  if (h.flavor == ControlFlavor::HermitianV) throw Error(ErrorCode::InvalidControl, "propagate_driftless expects a skew-H or real-U control");
  validate_grid(h.grid);
  const int n = static_cast<int>(psi0.size());
  require_fits(h, n);
  require_unit(psi0, "initial state");
  StateTrajectory traj{h.grid, Eigen::MatrixXcd(n, h.grid.N + 1), false};
  traj.states.col(0) = psi0;
  for (int i = 0; i < h.grid.N; ++i) {
    traj.states.col(i + 1) = linalg::SkewExp(h.matrix(i, n)).apply(h.grid.dt(), traj.states.col(i));
  }
  return traj;
}

StateTrajectory propagate_real(const ControlGrid& u, const Eigen::VectorXd& rho0) {
  if (u.flavor != ControlFlavor::RealU) throw Error(ErrorCode::InvalidControl, "propagate_real expects a real-U control");
  validate_grid(u.grid);
  const int n = static_cast<int>(rho0.size());
  require_fits(u, n);
  if ((u.values.imag().array() != 0.0).any()) throw Error(ErrorCode::InvalidControl, "real-antisymmetry: complex entry");
  require_unit(rho0.cast<cdouble>(), "initial state");
  Eigen::MatrixXd states(n, u.grid.N + 1);
  states.col(0) = rho0;
  for (int i = 0; i < u.grid.N; ++i) {
    states.col(i + 1) = linalg::expm_antisymmetric(u.real_matrix(i, n), u.grid.dt()) * states.col(i);
  }
  return StateTrajectory{u.grid, states.cast<cdouble>(), true};
}

ControlGrid eliminate_drift(const LevelSystem& sys, const ControlGrid& v) {
  if (v.flavor != ControlFlavor::HermitianV) throw Error(ErrorCode::InvalidControl, "eliminate_drift expects a hermitian-V control");
  validate_control(sys, v);
  ControlGrid h = v;
  h.flavor = ControlFlavor::SkewH;
  for (int e = 0; e < v.edge_count(); ++e) {
    const double w = sys.energies[v.edges[e].k] - sys.energies[v.edges[e].j];
    for (int i = 0; i < v.grid.N; ++i) {
      h.values(i, e) = v.values(i, e) * std::exp(-kI * (w * v.grid.midpoint(i) + std::numbers::pi / 2));
    }
  }
  return h;
}

ControlGrid restore_drift(const LevelSystem& sys, const ControlGrid& h) {
  if (h.flavor == ControlFlavor::HermitianV) throw Error(ErrorCode::InvalidControl, "restore_drift expects a skew-H or real-U control");
  validate_control(sys, h);
  ControlGrid v = h;
  v.flavor = ControlFlavor::HermitianV;
  for (int e = 0; e < h.edge_count(); ++e) {
    const double w = sys.energies[h.edges[e].k] - sys.energies[h.edges[e].j];
    for (int i = 0; i < h.grid.N; ++i) {
      v.values(i, e) = h.values(i, e) * std::exp(kI * (w * h.grid.midpoint(i) + std::numbers::pi / 2));
    }
  }
  return v;
}

ControlGrid embed_real(const ControlGrid& u) {
  if (u.flavor != ControlFlavor::RealU) throw Error(ErrorCode::InvalidControl, "embed_real expects a real-U control");
  ControlGrid h = u;
  h.flavor = ControlFlavor::SkewH;
  return h;
}

AdmissiblePair admissible_pair(const ControlGrid& h, const Eigen::VectorXcd& psi0) {
  return AdmissiblePair{propagate_driftless(h, psi0), h};
}

double admissibility_residual(const AdmissiblePair& pair) {
  const auto& c = pair.control;
  const auto& tr = pair.trajectory;
  if (!(c.grid == tr.grid)) throw Error(ErrorCode::GridMismatch, "control and trajectory grids differ");
  if (c.flavor == ControlFlavor::HermitianV) throw Error(ErrorCode::InvalidControl, "admissibility is checked in the driftless frame");
  const int n = tr.levels();
  double worst = 0.0;
  for (int i = 0; i < c.grid.N; ++i) {
    const Eigen::VectorXcd next = linalg::SkewExp(c.matrix(i, n)).apply(c.grid.dt(), tr.states.col(i));
    worst = std::max(worst, (next - tr.states.col(i + 1)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace qoc
