#pragma once

// File formats. Level indices are 1-based in every file and 0-based in
// memory. Syntax errors carry file:line:column; semantic errors name the
// file and the offending key.

#include "qoc/costs.hpp"
#include "qoc/dynamics.hpp"
#include "qoc/extremal.hpp"
#include "qoc/optimizer.hpp"
#include "qoc/resonance.hpp"
#include "qoc/system_model.hpp"

#include <json.hpp>

#include <string>

namespace qoc::io {

using Json = nlohmann::ordered_json;

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

/// Parses JSON text; `origin` labels error messages.
Json parse_json(const std::string& text, const std::string& origin);
Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);
/// Inline JSON when `arg` starts with '{' or '[', otherwise a file path.
Json json_argument(const std::string& arg);

/// {"n", "energies", "edges": [{"j", "k", "mu", "bound": number | "inf"}]}
Json to_json(const LevelSystem& sys);
LevelSystem system_from_json(const Json& j, const std::string& origin = "system");

/// {"T", "N", "flavor": "V" | "H" | "U", "values": {"j,k": [[re, im], ...]}}.
/// A key "k,j" with k > j supplies the mirrored entry and must agree with
/// the flavor symmetry; diagonal keys must be zero.
Json to_json(const ControlGrid& c);
ControlGrid control_from_json(const Json& j, const std::string& origin = "control");

/// {"kind", "weights": {"j,k": mu}, "final_time": "fixed" | "free"}.
/// Missing weights are filled from `sys` when given.
Json to_json(const CostSpec& spec);
CostSpec cost_from_json(const Json& j, const LevelSystem* sys = nullptr, const std::string& origin = "cost");

/// {"kind": "eigenstate", "level"} | {"kind": "point", "populations"} |
/// {"kind": "set", "levels"}.
Json to_json(const BoundarySpec& b);
BoundarySpec boundary_from_json(const Json& j, const std::string& origin = "boundary");

/// State vector as [re, ...] or [[re, im], ...].
Json state_to_json(const Eigen::VectorXcd& psi);
Eigen::VectorXcd state_from_json(const Json& j, const std::string& origin = "state");

/// Columns t, Re psi_1, Im psi_1, ..., |psi_1|^2, ...
std::string trajectory_csv(const StateTrajectory& traj);
StateTrajectory trajectory_from_csv(const std::string& text, const std::string& origin = "trajectory");
/// Columns t, |psi_1|^2, ...
std::string populations_csv(const StateTrajectory& traj);
/// Columns t, Re P_1, Im P_1, ..., p0, H (H of step min(i, N - 1)).
std::string lift_csv(const PMPLift& lift, const TimeGrid& grid);
PMPLift lift_from_csv(const std::string& text, const std::string& origin = "lift");

Json to_json(const ResonanceVerdict& v);
Json to_json(const PmpResidual& r);
Json to_json(const ExtremalReport& r);

}  // namespace qoc::io
