#pragma once

#include "qoc/costs.hpp"
#include "qoc/dynamics.hpp"

#include <string>

namespace qoc {

struct SolveOptions {
  TimeGrid grid{1.0, 200};
  int max_iterations = 3000;   ///< per inner solve
  int max_outer = 40;          ///< augmented-Lagrangian rounds
  double gradient_tol = 1e-6;  ///< sup |dL/dU| / dt
  double endpoint_tol = 1e-9;  ///< sup |c(rho(T))|
  double penalty_initial = 100.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e10;
  double time_tol = 1e-6;      ///< bisection bracket width for time-type costs
  int starts = 8;
  unsigned long long seed = 1;
  int threads = 0;  ///< 0: QOC_THREADS, else hardware concurrency
};

void validate_options(const SolveOptions& opts);

/// Covector history with multiplier p0. `P.col(i)` is the covector at node i
/// (complex chart; the real reduction has zero imaginary parts). The
/// Hamiltonian is constant on each step and stored per step.
struct PMPLift {
  double p0 = -1.0;
  Eigen::MatrixXcd P;
  Eigen::VectorXd hamiltonian;
  bool normal_candidate = false;
  bool abnormal_candidate = false;
  double abnormal_sigma = 0.0;  ///< smallest singular value of the p0 = 0 probe
};

struct SolveResult {
  AdmissiblePair pair;  ///< real-U control and real trajectory
  PMPLift lift;
  double cost = 0.0;
  double endpoint_violation = 0.0;
  double stationarity = 0.0;
  double minimal_time = 0.0;  ///< time-max and area costs
  bool converged = false;
  int iterations = 0;
  int best_start = -1;
  std::string message;
};

/// Direct transcription of the reduced real problem. Energy and length are
/// solved by an augmented Lagrangian over per-edge real controls; time-max
/// and area by bisection on T over feasibility of the constrained problem.
/// Throws NotControllable; returns the best iterate with converged = false
/// when tolerances are not met.
SolveResult solve_reduced(const LevelSystem& sys, const CostSpec& spec, const BoundarySpec& source,
                          const BoundarySpec& target, const SolveOptions& opts);

/// Endpoint residuals on the moduli: rho_j for levels outside the target
/// support, |rho_j| - sqrt(a_j) on the support of a point target (the
/// largest one omitted, fixed by the unit norm).
Eigen::VectorXd endpoint_constraints(const BoundarySpec& target, const Eigen::VectorXd& rho);
/// Rows are the gradients of endpoint_constraints.
Eigen::MatrixXd endpoint_jacobian(const BoundarySpec& target, const Eigen::VectorXd& rho);

struct PenaltyState {
  Eigen::VectorXd multipliers;  ///< empty means zero
  double weight = 0.0;
};

/// dt sum_i f0(U_i) + sum_j nu_j c_j + weight/2 |c|^2 evaluated on the pair.
double penalized_objective(const CostSpec& spec, const AdmissiblePair& pair, const BoundarySpec& target,
                           const PenaltyState& pen);

/// Gradient of penalized_objective with respect to U_e(t_i) (N x E) by the
/// backward sweep through the transposed step linearizations. Requires a
/// real-U control.
Eigen::MatrixXd adjoint_gradient(const CostSpec& spec, const AdmissiblePair& pair, const BoundarySpec& target,
                                 const PenaltyState& pen);

struct PmpResidual {
  double state = 0.0;               ///< |psi_{i+1} - exp(H dt) psi_i|
  double costate = 0.0;             ///< |P_{i+1} - exp(H dt) P_i| / |P|
  double maximality_gap = 0.0;      ///< sup_i (H_M - H)
  double hamiltonian_mean = 0.0;
  double hamiltonian_stdev = 0.0;
  double hamiltonian_scale = 0.0;   ///< mean size of the control and cost terms
  /// stdev / |mean|; stdev / scale when |mean| < 1e-3 scale (H vanishing
  /// identically, as for free final time); stdev when both are negligible
  double hamiltonian_constancy = 0.0;
  double transversality = 0.0;      ///< relative projection of P on boundary tangents

  double worst() const;
};

/// Residuals of the maximum principle for a lift along a driftless pair.
/// Maximization is over the constraint set of the cost for free final time
/// with time-max or area costs, otherwise over unconstrained controls with
/// p0 f0 in the Hamiltonian. Controls are taken real for a real-U pair.
/// Boundary pointers may be null to skip the transversality check.
PmpResidual pmp_residual(const AdmissiblePair& pair, const PMPLift& lift, const CostSpec& spec,
                         const BoundarySpec* source = nullptr, const BoundarySpec* target = nullptr);

/// Normal lift (p0 = -1) of an energy or length pair by least squares on
/// the maximality condition; the residual of that fit is in `fit_residual`.
PMPLift fit_normal_lift(const AdmissiblePair& pair, const CostSpec& spec, double* fit_residual = nullptr);

/// Searches for a covector P(0) orthogonal to rho(0) whose transport
/// annihilates every control field along the trajectory. Returns the
/// smallest singular value of that linear problem (dt-weighted).
double abnormal_probe(const AdmissiblePair& pair);

}  // namespace qoc
