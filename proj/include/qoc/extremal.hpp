#pragma once

#include "qoc/costs.hpp"
#include "qoc/dynamics.hpp"
#include "qoc/optimizer.hpp"

#include <string>
#include <vector>

namespace qoc {

/// Grid nodes [first, last], inclusive.
struct Window {
  int first = 0;
  int last = 0;
  double t1 = 0.0;
  double t2 = 0.0;

  int steps() const { return last - first; }
};

Window make_window(const TimeGrid& grid, int first, int last);

/// Splitting of the levels on a window into vanishing coordinates I and
/// nonvanishing ones J, with J cut into classes K_l by the edges inside J.
struct IndexPartition {
  Window window;
  double epsilon = 1e-6;
  std::vector<int> I;
  std::vector<int> J;
  std::vector<std::vector<int>> classes;
  std::vector<int> sizes;    ///< m_l
  std::vector<int> offsets;  ///< M_0 = 0, M_l = m_1 + ... + m_l
  Eigen::VectorXd radii;     ///< C_l at t1
  double class_norm_drift = 0.0;  ///< sup over the window of | |rho_K_l| - C_l |

  int tangent_dimension() const;
};

/// Builds the partition for the window. Throws MixedWindow when a
/// coordinate crosses epsilon inside the window, InconsistentState when a
/// class norm drifts by more than `norm_tol`.
IndexPartition partition_indexes(const StateTrajectory& traj, const std::vector<Edge>& edges, const Window& window,
                                 double epsilon = 1e-6, double norm_tol = 1e-8);

/// Maximal runs of at least two nodes sharing one zero-pattern.
std::vector<Window> clean_windows(const StateTrajectory& traj, double epsilon = 1e-6);

/// The clean window containing t, else the nearest one (the longer of two
/// equidistant candidates). Throws NoneFound.
Window find_clean_window(const StateTrajectory& traj, double t, double epsilon = 1e-6);

/// Breadth-first spanning tree of the class in the edge subgraph; m - 1
/// edges. Throws NotConnected.
std::vector<Edge> spanning_tree(const std::vector<int>& cls, const std::vector<Edge>& edges);

/// F_{jk}(rho) = rho_k e_j - rho_j e_k.
Eigen::VectorXd real_field(const Eigen::VectorXd& rho, int j, int k);

struct DistributionRank {
  int rank = 0;
  int dimension = 0;  ///< sum_l (m_l - 1)
};

/// Rank of the fields of the edges inside the classes at rho (relative
/// singular-value threshold 1e-9). Throws InconsistentState when rho does
/// not vanish on I.
DistributionRank distribution_rank(const IndexPartition& partition, const std::vector<Edge>& edges,
                                   const Eigen::VectorXd& rho);

enum class WindowVerdict { NotStrictlyAbnormal, RankDeficient, Inconclusive };
const char* verdict_name(WindowVerdict v);

struct WindowReport {
  IndexPartition partition;
  int rank = 0;       ///< smallest rank over the window nodes
  int dimension = 0;
  bool vacuous = false;  ///< dimension zero
  bool bound_active = false;
  WindowVerdict verdict = WindowVerdict::Inconclusive;
  PmpResidual lift_residual;
  std::string note;
};

struct ExtremalReport {
  double epsilon = 1e-6;
  std::vector<WindowReport> windows;

  bool all_not_strictly_abnormal() const;
};

/// Per clean window: partition, distribution rank, and the extended normal
/// lift obtained by keeping the T J-component of a normal lift (zero on dC_l
/// and dpsi_i), checked with pmp_residual on the window with the controls
/// touching I removed. `lift` defaults to fit_normal_lift of the pair.
/// Windows where an edge bound is reached are inconclusive.
ExtremalReport classify_extremal(const AdmissiblePair& pair, const CostSpec& spec, double epsilon = 1e-6,
                                 const PMPLift* lift = nullptr, double tol = 1e-4);

/// Steps [w.first, w.last) of a real pair; controls on edges touching
/// `zeroed` are set to zero.
AdmissiblePair window_pair(const AdmissiblePair& pair, const Window& w, const std::vector<int>& zeroed = {});

}  // namespace qoc
