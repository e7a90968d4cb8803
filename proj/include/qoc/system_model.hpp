#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

namespace qoc {

/// Unordered coupling between two levels. Indices are 0-based internally;
/// the file formats use 1-based indices.
struct Edge {
  int j = 0;
  int k = 0;
  double mu = 1.0;
  double bound = std::numeric_limits<double>::infinity();

  /// Canonical orientation j < k.
  Edge normalized() const;
  bool connects(int a, int b) const { return (j == a && k == b) || (j == b && k == a); }
};

/// n-level system: energies E_j, coupling graph, coupling strengths and
/// control-modulus bounds.
struct LevelSystem {
  int n = 0;
  Eigen::VectorXd energies;
  std::vector<Edge> edges;

  /// Index of the edge coupling a and b, or -1.
  int edge_index(int a, int b) const;
  Eigen::MatrixXd drift() const { return energies.asDiagonal(); }

  static LevelSystem ladder(int n, double mu = 1.0);
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_system(const LevelSystem& sys);

/// Throws Error(InvalidSystem) listing every violation.
void require_valid(const LevelSystem& sys);

/// Partition of {0..n-1} into maximal connected sets, each sorted, ordered by
/// smallest member.
std::vector<std::vector<int>> connected_components(int n, const std::vector<Edge>& edges);
std::vector<std::vector<int>> connected_components(const LevelSystem& sys);

bool is_controllable(const LevelSystem& sys);

struct LieRankResult {
  int algebra_dimension = 0;  ///< real dimension of the generated Lie algebra
  int orbit_rank = 0;         ///< rank of {X psi} together with the phase direction i psi
  int sphere_dimension = 0;   ///< 2n - 1
  bool transitive = false;    ///< orbit_rank == sphere_dimension
};

/// Bracket-closure oracle. Generators per edge are the real-part and
/// imaginary-part skew-Hermitian matrices; the closure is evaluated at a
/// fixed generic point of S^{2n-1}. Throws DimensionExceeded for n > 6.
LieRankResult lie_rank_oracle(const LevelSystem& sys, double rank_tol = 1e-9);

enum class BoundaryKind { ModuliPoint, Eigenstate, ModuliSet };

/// Source/target condition on the populations |psi_j|^2.
/// ModuliSet is the face of the simplex {a : a_j = 0 for j not in levels}.
struct BoundarySpec {
  BoundaryKind kind = BoundaryKind::Eigenstate;
  Eigen::VectorXd moduli;   ///< populations a_j, sum 1 (ModuliPoint)
  int index = 0;            ///< 0-based level (Eigenstate)
  std::vector<int> levels;  ///< allowed support (ModuliSet)

  static BoundarySpec eigenstate(int index);
  static BoundarySpec point(Eigen::VectorXd populations);
  static BoundarySpec support(std::vector<int> levels);

  /// Populations of the single point this spec pins down (ModuliPoint or
  /// Eigenstate). Throws InvalidBoundary for ModuliSet.
  Eigen::VectorXd populations(int n) const;
  bool contains(const Eigen::VectorXd& populations, double tol) const;
};

void validate_boundary(const BoundarySpec& spec, int n);

}  // namespace qoc
