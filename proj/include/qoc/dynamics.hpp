#pragma once

#include "qoc/system_model.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace qoc {

using cdouble = std::complex<double>;

/// Uniform grid t_i = i T / N.
struct TimeGrid {
  double T = 1.0;
  int N = 1;

  double dt() const { return T / N; }
  double node(int i) const { return T * i / N; }
  double midpoint(int i) const { return T * (i + 0.5) / N; }
  bool operator==(const TimeGrid& o) const { return T == o.T && N == o.N; }

  /// Smallest N >= min_steps with max |E_j - E_k| dt <= 0.1 over edges and
  /// max control modulus * dt <= 0.1.
  static TimeGrid choose(const LevelSystem& sys, double T, double max_modulus, int min_steps = 1);
};

void validate_grid(const TimeGrid& grid);

enum class ControlFlavor { HermitianV, SkewH, RealU };

const char* flavor_name(ControlFlavor f);

/// Piecewise-constant controls: values(i, e) is the (j, k) entry (j < k) of
/// the control matrix on step i for edges[e]. The (k, j) entry follows from
/// the flavor: conj for V, -conj for H, minus for U.
struct ControlGrid {
  TimeGrid grid;
  ControlFlavor flavor = ControlFlavor::SkewH;
  std::vector<Edge> edges;
  Eigen::MatrixXcd values;

  static ControlGrid zeros(const TimeGrid& grid, ControlFlavor flavor, std::vector<Edge> edges);

  int steps() const { return grid.N; }
  int edge_count() const { return static_cast<int>(edges.size()); }
  int find_edge(int a, int b) const;

  /// Entry (row, col) of the assembled matrix at `step`, honoring flavor symmetry.
  cdouble entry(int step, int row, int col) const;
  Eigen::MatrixXcd matrix(int step, int n) const;
  Eigen::MatrixXd real_matrix(int step, int n) const;

  double max_modulus() const;
};

/// Checks the flavor invariants against the system: edges belong to the
/// graph, finite values, real entries for U, moduli within finite bounds.
void validate_control(const LevelSystem& sys, const ControlGrid& ctrl);

/// Complex state history; `states.col(i)` is the state at node i. For the
/// reduced problem `real` is set and the imaginary parts are zero.
struct StateTrajectory {
  TimeGrid grid;
  Eigen::MatrixXcd states;
  bool real = false;

  int levels() const { return static_cast<int>(states.rows()); }
  Eigen::VectorXcd at(int node) const { return states.col(node); }
  Eigen::MatrixXd moduli() const { return states.cwiseAbs(); }
  Eigen::MatrixXd populations() const { return states.cwiseAbs2(); }
  Eigen::MatrixXd real_states() const { return states.real(); }
  double max_norm_drift() const;
};

struct AdmissiblePair {
  StateTrajectory trajectory;
  ControlGrid control;
};

StateTrajectory propagate_drift(const LevelSystem& sys, const ControlGrid& v, const Eigen::VectorXcd& psi0);
StateTrajectory propagate_driftless(const ControlGrid& h, const Eigen::VectorXcd& psi0);
StateTrajectory propagate_real(const ControlGrid& u, const Eigen::VectorXd& rho0);

/// H_{jk} = V_{jk} exp(-i[(E_k - E_j) t_mid + pi/2]) sampled at step midpoints.
ControlGrid eliminate_drift(const LevelSystem& sys, const ControlGrid& v);
/// Inverse phase map. Accepts skew-H or real-U input.
ControlGrid restore_drift(const LevelSystem& sys, const ControlGrid& h);

/// Real-U control viewed as a skew-H control with real entries.
ControlGrid embed_real(const ControlGrid& u);

AdmissiblePair admissible_pair(const ControlGrid& h, const Eigen::VectorXcd& psi0);

/// Sup-norm node-to-node mismatch |psi_{i+1} - exp(H_i dt) psi_i| (driftless
/// flavors only).
double admissibility_residual(const AdmissiblePair& pair);

void require_unit(const Eigen::VectorXcd& psi, const char* what);

}  // namespace qoc
