#include "qoc/system_model.hpp"

#include "qoc/error.hpp"
#include "qoc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

namespace qoc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidSystem: return "invalid-system";
    case ErrorCode::InvalidControl: return "invalid-control";
    case ErrorCode::InvalidBoundary: return "invalid-boundary";
    case ErrorCode::GridMismatch: return "grid-mismatch";
    case ErrorCode::DimensionExceeded: return "dimension-exceeded";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::PhaseUndefined: return "phase-undefined";
    case ErrorCode::AdmissibilityResidualExceeded: return "admissibility-residual-exceeded";
    case ErrorCode::SupportOverlap: return "support-overlap";
    case ErrorCode::EndpointMismatch: return "endpoint-mismatch";
    case ErrorCode::MissingWeight: return "missing-weight";
    case ErrorCode::WrongKind: return "wrong-kind";
    case ErrorCode::NotControllable: return "not-controllable";
    case ErrorCode::NoConvergence: return "no-convergence";
    case ErrorCode::MixedWindow: return "mixed-window";
    case ErrorCode::NoneFound: return "none-found";
    case ErrorCode::NotConnected: return "not-connected";
    case ErrorCode::InconsistentState: return "inconsistent-state";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

Edge Edge::normalized() const {
  Edge e = *this;
  if (e.j > e.k) std::swap(e.j, e.k);
  return e;
}

int LevelSystem::edge_index(int a, int b) const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].connects(a, b)) return static_cast<int>(i);
  }
  return -1;
}

LevelSystem LevelSystem::ladder(int n, double mu) {
  LevelSystem sys;
  sys.n = n;
  sys.energies = Eigen::VectorXd::Zero(n);
  for (int j = 0; j + 1 < n; ++j) sys.edges.push_back({j, j + 1, mu});
  return sys;
}

ValidationReport validate_system(const LevelSystem& sys) {
  ValidationReport report;
  auto violate = [&](std::string msg) { report.violations.push_back(std::move(msg)); };

  if (sys.n < 2) violate("level count must be >= 2");
  if (sys.energies.size() != sys.n) {
    violate("energies length " + std::to_string(sys.energies.size()) + " != n");
  } else {
    for (int j = 0; j < sys.n; ++j) {
      if (!std::isfinite(sys.energies[j])) violate("non-finite energy at level " + std::to_string(j + 1));
    }
    std::set<double> seen(sys.energies.data(), sys.energies.data() + sys.energies.size());
    if (static_cast<int>(seen.size()) < sys.n) report.warnings.push_back("coinciding energy levels");
  }

  std::set<std::pair<int, int>> pairs;
  for (const Edge& e : sys.edges) {
    const std::string name = "{" + std::to_string(e.j + 1) + "," + std::to_string(e.k + 1) + "}";
    if (e.j == e.k) violate("self-loop " + name);
    if (e.j < 0 || e.k < 0 || e.j >= sys.n || e.k >= sys.n) violate("index out of range " + name);
    if (!(e.mu > 0.0) || !std::isfinite(e.mu)) violate("non-positive coupling " + name);
    if (!(e.bound > 0.0)) violate("non-positive bound " + name);
    const auto key = std::minmax(e.j, e.k);
    if (!pairs.insert({key.first, key.second}).second) violate("duplicate edge " + name);
  }
  return report;
}

void require_valid(const LevelSystem& sys) {
  const auto report = validate_system(sys);
  if (report.ok()) return;
  std::ostringstream msg;
  for (std::size_t i = 0; i < report.violations.size(); ++i) {
    msg << (i ? "; " : "") << report.violations[i];
  }
  throw Error(ErrorCode::InvalidSystem, msg.str());
}

std::vector<std::vector<int>> connected_components(int n, const std::vector<Edge>& edges) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Edge& e : edges) {
    const int a = find(e.j), b = find(e.k);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(n, -1);
  for (int v = 0; v < n; ++v) {
    const int r = find(v);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(v);
  }
  return groups;
}

std::vector<std::vector<int>> connected_components(const LevelSystem& sys) {
  return connected_components(sys.n, sys.edges);
}

bool is_controllable(const LevelSystem& sys) { return connected_components(sys).size() == 1; }

namespace {

using Mat = Eigen::MatrixXcd;

Eigen::VectorXd flatten(const Mat& m) {
  const Eigen::Index sz = m.size();
  Eigen::VectorXd v(2 * sz);
  for (Eigen::Index i = 0; i < sz; ++i) {
    v[2 * i] = m.data()[i].real();
    v[2 * i + 1] = m.data()[i].imag();
  }
  return v;
}

// Incremental orthonormal basis; `try_add` returns true when the vector
// carries a component outside the current span.
struct SpanBuilder {
  std::vector<Eigen::VectorXd> basis;
  double tol;

  bool try_add(Eigen::VectorXd v) {
    const double scale = v.norm();
    if (scale == 0.0) return false;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) v -= b.dot(v) * b;
    }
    if (v.norm() <= tol * scale) return false;
    basis.push_back(v.normalized());
    return true;
  }
};

}  // namespace

LieRankResult lie_rank_oracle(const LevelSystem& sys, double rank_tol) {
  if (sys.n > 6) throw Error(ErrorCode::DimensionExceeded, "lie_rank_oracle supports n <= 6, got " + std::to_string(sys.n));
  const int n = sys.n;
  const std::complex<double> I(0.0, 1.0);

  std::vector<Mat> generators;
  for (const Edge& e : sys.edges) {
    Mat re = Mat::Zero(n, n), im = Mat::Zero(n, n);
    re(e.j, e.k) = 1.0;
    re(e.k, e.j) = -1.0;
    im(e.j, e.k) = I;
    im(e.k, e.j) = I;
    generators.push_back(re);
    generators.push_back(im);
  }

  SpanBuilder span{{}, rank_tol};
  std::vector<Mat> algebra;
  for (const Mat& g : generators) {
    if (span.try_add(flatten(g))) algebra.push_back(g);
  }
  // ad-closure under the generators: every iterated bracket is a combination
  // of left-nested brackets [g, [g', [...]]].
  for (std::size_t next = 0; next < algebra.size(); ++next) {
    for (const Mat& g : generators) {
      Mat br = g * algebra[next] - algebra[next] * g;
      if (span.try_add(flatten(br))) algebra.push_back(br);
    }
  }

  LieRankResult result;
  result.algebra_dimension = static_cast<int>(algebra.size());
  result.sphere_dimension = 2 * n - 1;

  Eigen::VectorXcd psi(n);
  for (int j = 0; j < n; ++j) {
    psi[j] = (1.0 + 0.37 * j + 0.11 * j * j) * std::exp(I * (0.713 + 1.37 * j));
  }
  psi.normalize();

  Eigen::MatrixXd eval(2 * n, algebra.size() + 1);
  auto put = [&](Eigen::Index col, const Eigen::VectorXcd& v) {
    eval.col(col).head(n) = v.real();
    eval.col(col).tail(n) = v.imag();
  };
  for (std::size_t a = 0; a < algebra.size(); ++a) put(static_cast<Eigen::Index>(a), algebra[a] * psi);
  put(static_cast<Eigen::Index>(algebra.size()), I * psi);
  result.orbit_rank = linalg::numerical_rank(eval, rank_tol);
  result.transitive = result.orbit_rank == result.sphere_dimension;
  return result;
}

BoundarySpec BoundarySpec::eigenstate(int index) {
  BoundarySpec b;
  b.kind = BoundaryKind::Eigenstate;
  b.index = index;
  return b;
}

BoundarySpec BoundarySpec::point(Eigen::VectorXd populations) {
  BoundarySpec b;
  b.kind = BoundaryKind::ModuliPoint;
  b.moduli = std::move(populations);
  return b;
}

BoundarySpec BoundarySpec::support(std::vector<int> levels) {
  BoundarySpec b;
  b.kind = BoundaryKind::ModuliSet;
  b.levels = std::move(levels);
  return b;
}

Eigen::VectorXd BoundarySpec::populations(int n) const {
  switch (kind) {
    case BoundaryKind::Eigenstate: {
      Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
      a[index] = 1.0;
      return a;
    }
    case BoundaryKind::ModuliPoint: return moduli;
    case BoundaryKind::ModuliSet: break;
  }
  throw Error(ErrorCode::InvalidBoundary, "moduli-set boundary does not pin a single point");
}

bool BoundarySpec::contains(const Eigen::VectorXd& pop, double tol) const {
  if (kind == BoundaryKind::ModuliSet) {
    double outside = 0.0;
    for (int j = 0; j < pop.size(); ++j) {
      if (std::find(levels.begin(), levels.end(), j) == levels.end()) outside += pop[j];
    }
    return outside <= tol;
  }
  return (pop - populations(static_cast<int>(pop.size()))).cwiseAbs().maxCoeff() <= tol;
}

void validate_boundary(const BoundarySpec& spec, int n) {
  switch (spec.kind) {
    case BoundaryKind::Eigenstate:
      if (spec.index < 0 || spec.index >= n) throw Error(ErrorCode::InvalidBoundary, "eigenstate index out of range");
      return;
    case BoundaryKind::ModuliPoint: {
      if (spec.moduli.size() != n) throw Error(ErrorCode::InvalidBoundary, "moduli length != n");
      if ((spec.moduli.array() < 0.0).any()) throw Error(ErrorCode::InvalidBoundary, "negative modulus");
      if (std::abs(spec.moduli.sum() - 1.0) > 1e-12) throw Error(ErrorCode::InvalidBoundary, "moduli do not sum to 1");
      return;
    }
    case BoundaryKind::ModuliSet:
      if (spec.levels.empty()) throw Error(ErrorCode::InvalidBoundary, "moduli-set with empty support");
      for (int j : spec.levels) {
        if (j < 0 || j >= n) throw Error(ErrorCode::InvalidBoundary, "moduli-set level out of range");
      }
      return;
  }
}

}  // namespace qoc
