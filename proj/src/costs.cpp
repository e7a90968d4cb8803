#include "qoc/costs.hpp"

#include "qoc/error.hpp"

#include <algorithm>
#include <cmath>

namespace qoc {

const char* cost_name(CostKind kind) {
  switch (kind) {
    case CostKind::Energy: return "energy";
    case CostKind::Length: return "length";
    case CostKind::Area: return "area";
    case CostKind::TimeMax: return "time-max";
  }
  return "?";
}

CostKind parse_cost_kind(const std::string& name) {
  if (name == "energy") return CostKind::Energy;
  if (name == "length") return CostKind::Length;
  if (name == "area") return CostKind::Area;
  if (name == "time-max" || name == "timemax" || name == "time") return CostKind::TimeMax;
  throw Error(ErrorCode::Parse, "unknown cost kind '" + name + "'");
}

CostSpec CostSpec::from_system(const LevelSystem& sys, CostKind kind, FinalTime final_time) {
  CostSpec spec;
  spec.kind = kind;
  spec.final_time = final_time;
  for (const Edge& e : sys.edges) {
    const Edge ne = e.normalized();
    spec.weights[{ne.j, ne.k}] = e.mu;
  }
  return spec;
}

double CostSpec::weight(const Edge& e) const {
  const Edge ne = e.normalized();
  const auto it = weights.find({ne.j, ne.k});
  if (it == weights.end()) {
    throw Error(ErrorCode::MissingWeight, "no weight for edge {" + std::to_string(ne.j + 1) + "," + std::to_string(ne.k + 1) + "}");
  }
  return it->second;
}

void validate_cost_spec(const CostSpec& spec) {
  if (spec.kind == CostKind::Energy && spec.final_time == FinalTime::Free) {
    throw Error(ErrorCode::WrongKind, "energy cost requires a fixed final time");
  }
  for (const auto& [key, w] : spec.weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::MissingWeight, "non-positive weight");
  }
}

double integrand(CostKind kind, const Eigen::VectorXd& s) {
  if (s.size() == 0) return 0.0;
  switch (kind) {
    case CostKind::Energy: return s.squaredNorm();
    case CostKind::Length: return s.norm();
    case CostKind::Area: return s.sum();
    case CostKind::TimeMax: return s.maxCoeff();
  }
  return 0.0;
}

Eigen::VectorXd scaled_moduli(const CostSpec& spec, const ControlGrid& ctrl, int step) {
  Eigen::VectorXd s(ctrl.edge_count());
  for (int e = 0; e < ctrl.edge_count(); ++e) s[e] = std::abs(ctrl.values(step, e)) / spec.weight(ctrl.edges[e]);
  return s;
}

double evaluate_cost(const CostSpec& spec, const ControlGrid& ctrl) {
  double total = 0.0;
  for (int i = 0; i < ctrl.grid.N; ++i) total += integrand(spec.kind, scaled_moduli(spec, ctrl, i));
  return total * ctrl.grid.dt();
}

bool in_constraint_set(const CostSpec& spec, const ControlGrid& ctrl, int step) {
  constexpr double slack = 1e-12;
  const Eigen::VectorXd s = scaled_moduli(spec, ctrl, step);
  if (s.size() == 0) return true;
  switch (spec.kind) {
    case CostKind::Energy:
    case CostKind::Length: return s.squaredNorm() <= 1.0 + slack;
    case CostKind::Area: return s.sum() <= 1.0 + slack;
    case CostKind::TimeMax: return s.maxCoeff() <= 1.0 + slack;
  }
  return false;
}

double constant_speed_residual(const CostSpec& spec, const ControlGrid& ctrl) {
  if (spec.kind != CostKind::Energy) throw Error(ErrorCode::WrongKind, "constant_speed_residual needs the energy cost");
  Eigen::VectorXd q(ctrl.grid.N);
  for (int i = 0; i < ctrl.grid.N; ++i) q[i] = scaled_moduli(spec, ctrl, i).squaredNorm();
  const double mean = q.mean();
  return (q.array() - mean).abs().maxCoeff() / std::max(mean, 1e-15);
}

}  // namespace qoc
