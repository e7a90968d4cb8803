#pragma once

#include "qoc/dynamics.hpp"

#include <map>
#include <utility>

namespace qoc {

enum class CostKind { Energy, Length, Area, TimeMax };
enum class FinalTime { Fixed, Free };

const char* cost_name(CostKind kind);
CostKind parse_cost_kind(const std::string& name);

/// Cost functional over control moduli, weighted per edge by mu_{j,k}.
struct CostSpec {
  CostKind kind = CostKind::Energy;
  std::map<std::pair<int, int>, double> weights;  ///< keyed by (j, k), j < k
  FinalTime final_time = FinalTime::Fixed;

  static CostSpec from_system(const LevelSystem& sys, CostKind kind, FinalTime final_time = FinalTime::Fixed);
  double weight(const Edge& e) const;
};

/// Energy with a free final time has no minimizer.
void validate_cost_spec(const CostSpec& spec);

/// Integrand f0 of the scaled moduli s_e = |c_e| / mu_e.
double integrand(CostKind kind, const Eigen::VectorXd& scaled);

/// Per-step scaled moduli |c_e(t_i)| / mu_e.
Eigen::VectorXd scaled_moduli(const CostSpec& spec, const ControlGrid& ctrl, int step);

/// Left-endpoint Riemann sum of f0 over the grid.
double evaluate_cost(const CostSpec& spec, const ControlGrid& ctrl);

/// Membership of a step's controls in the equivalent time-minimization
/// constraint set: ellipsoid (energy, length), weighted cross-polytope
/// (area), box (time-max).
bool in_constraint_set(const CostSpec& spec, const ControlGrid& ctrl, int step);

/// max_i |q_i - mean q| / max(mean q, 1e-15) with q_i = sum_e |c_e|^2 / mu_e^2.
double constant_speed_residual(const CostSpec& spec, const ControlGrid& ctrl);

}  // namespace qoc
