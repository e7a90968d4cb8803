#pragma once

#include "qoc/dynamics.hpp"

#include <string>
#include <utility>
#include <vector>

namespace qoc {

/// Maximal run of grid nodes [first, last] (inclusive, last > first) on
/// which both coupled moduli exceed the zero threshold.
struct Interval {
  int first = 0;
  int last = 0;
  double a = 0.0;  ///< open left end in time
  double b = 0.0;  ///< open right end in time
};

struct EdgeIntervals {
  Edge edge;
  std::vector<Interval> intervals;
};

/// Per-edge intervals I_{j,k,l}; every node outside them belongs to Bad_{j,k}.
struct IntervalDecomposition {
  TimeGrid grid;
  double epsilon = 1e-6;
  std::vector<EdgeIntervals> edges;

  /// Interval index containing `node` for edge `e`, or -1 (Bad set).
  int interval_of_node(int e, int node) const;
  /// Interval index owning `step` (either endpoint inside), or -1.
  int interval_of_step(int e, int step) const;
};

IntervalDecomposition decompose_intervals(const StateTrajectory& traj, const std::vector<Edge>& edges,
                                          double epsilon = 1e-6);

/// u + i v = H_{jk} exp(-i beta) on the nodes of one interval, with
/// beta = arg psi_j - arg psi_k. Node i reads the control of step
/// min(i, N - 1).
struct UVInterval {
  Interval nodes;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  Eigen::VectorXd beta;
  double anchor = 0.0;  ///< beta at the first interval node
};

struct UVEdge {
  Edge edge;
  std::vector<UVInterval> intervals;
};

struct UVDecomposition {
  std::vector<UVEdge> edges;
};

UVDecomposition uv_decompose(const AdmissiblePair& pair, const IntervalDecomposition& dec);

/// Result of the resonance construction: the new pair plus the certificate
/// quantities measured while building it.
struct ResonanceTransform {
  AdmissiblePair pair;
  Eigen::VectorXd anchor_phases;  ///< theta_j used for psi_j (0 where psi_j(0) vanishes)
  double moduli_deviation = 0.0;  ///< sup | |bar psi_j| - |psi_j| |
  double v_energy = 0.0;          ///< integral of sum_e |v_e|^2 removed by the construction
};

/// Drops the v-components on every interval, zeroes controls where a coupled
/// modulus is below epsilon, fixes the control phases to
/// arg psi_j(0) - arg psi_k(0) and re-propagates from psi(0). Per step the
/// new amplitude is the within-step average of u, |ubar| <= |H|. Throws
/// AdmissibilityResidualExceeded if the re-propagated moduli move by more
/// than `tol`.
ResonanceTransform resonance_transform(const AdmissiblePair& pair, double epsilon = 1e-6, double tol = 1e-6);

enum class ResonanceStatus { Resonant, WeaklyResonant, Neither };
const char* status_name(ResonanceStatus s);

struct EdgeEvidence {
  Edge edge;
  int interval_count = 0;
  double max_v = 0.0;            ///< sup |v| over interval steps
  double max_phase_drift = 0.0;  ///< sup |beta - anchor| (mod pi) over interval nodes
  double bad_phase_spread = 0.0; ///< worst deviation from a common phase on a Bad-set run
  double reference_phase = 0.0;  ///< phi_{jk} used by the resonance test
  bool reference_free = false;   ///< phi_{jk} arbitrary (a coupled initial coordinate vanishes)
  double max_off_phase = 0.0;    ///< sup_t |Im(H e^{-i phi})|
  std::vector<double> anchors;   ///< per-interval anchor phases
};

struct ResonanceVerdict {
  ResonanceStatus status = ResonanceStatus::Neither;
  std::vector<EdgeEvidence> edges;
};

/// Weakly resonant: |v| <= tol on every interval, and on every maximal run
/// of Bad-set steps the control keeps one phase (mod pi). Resonant: weakly
/// resonant and every control value is a real multiple of exp(i phi_jk),
/// phi_jk = arg psi_j(0) - arg psi_k(0) (taken from the first interval
/// anchor, or the dominant control phase, when it is arbitrary).
ResonanceVerdict classify_resonance(const AdmissiblePair& pair, double epsilon = 1e-6, double tol = 1e-6);

/// psi_j -> e^{i alpha_j} psi_j, H_jk -> H_jk e^{i(alpha_j - alpha_k)}.
AdmissiblePair rot_alpha(const AdmissiblePair& pair, const Eigen::VectorXd& alpha);

/// Rotates a resonant pair joining |psi1| to |psi2| so that it starts at
/// psi1 and ends with the phases of psi2 on its support. Requires
/// psi1_j psi2_j = 0 for every j.
AdmissiblePair eigenstate_bridge(const AdmissiblePair& resonant, const Eigen::VectorXcd& psi1,
                                 const Eigen::VectorXcd& psi2, double epsilon = 1e-9);

/// Angles used by eigenstate_bridge.
Eigen::VectorXd bridge_angles(const AdmissiblePair& resonant, const Eigen::VectorXcd& psi1, const Eigen::VectorXcd& psi2,
                              double epsilon = 1e-9);

/// Tangent vectors of the u- and v-fields for edge (j, k) at psi in the real
/// chart (Re psi_1..n, Im psi_1..n).
Eigen::VectorXd field_F(const Eigen::VectorXcd& psi, int j, int k, double beta);
Eigen::VectorXd field_G(const Eigen::VectorXcd& psi, int j, int k, double beta);

/// Four-level ladder example with two control laws producing the same
/// trajectory (cos t, sin t, 0, 0) on [0, pi/2].
struct Counterexample {
  LevelSystem system;
  AdmissiblePair plain;     ///< controls (-1, 0, 0)
  AdmissiblePair switched;  ///< controls (-1, 0, U3), U3 = 1, -1, i, -i on quarters
};

Counterexample counterexample_pair(int steps = 400);

}  // namespace qoc
