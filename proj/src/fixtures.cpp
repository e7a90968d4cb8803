#include "qoc/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace qoc::fixtures {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

LevelSystem random_connected_system(Rng& rng, int n, double energy_span, double extra_edge_prob, double mu_lo,
                                    double mu_hi) {
  LevelSystem sys;
  sys.n = n;
  sys.energies.resize(n);
  for (int j = 0; j < n; ++j) sys.energies[j] = uniform(rng, -energy_span, energy_span);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int v = 1; v < n; ++v) {
    const int parent = order[std::uniform_int_distribution<int>(0, v - 1)(rng)];
    sys.edges.push_back(Edge{std::min(parent, order[v]), std::max(parent, order[v]), uniform(rng, mu_lo, mu_hi)});
  }
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      if (sys.edge_index(j, k) >= 0) continue;
      if (uniform(rng, 0.0, 1.0) < extra_edge_prob) sys.edges.push_back(Edge{j, k, uniform(rng, mu_lo, mu_hi)});
    }
  }
  return sys;
}

Eigen::VectorXcd random_unit_state(Rng& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(n);
  for (int j = 0; j < n; ++j) v[j] = {g(rng), g(rng)};
  return v.normalized();
}

Eigen::VectorXd random_real_unit_state(Rng& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (int j = 0; j < n; ++j) v[j] = g(rng);
  return v.normalized();
}

ControlGrid smooth_random_control(Rng& rng, const TimeGrid& grid, const std::vector<Edge>& edges, ControlFlavor flavor,
                                  double amplitude) {
  ControlGrid c = ControlGrid::zeros(grid, flavor, edges);
  for (int e = 0; e < c.edge_count(); ++e) {
    cdouble amp[3];
    double freq[3];
    for (int m = 0; m < 3; ++m) {
      amp[m] = std::polar(amplitude / 3.0 * uniform(rng, 0.2, 1.0), uniform(rng, -std::numbers::pi, std::numbers::pi));
      freq[m] = uniform(rng, -3.0, 3.0) / grid.T;
    }
    for (int i = 0; i < grid.N; ++i) {
      const double t = grid.midpoint(i);
      cdouble v = 0.0;
      for (int m = 0; m < 3; ++m) v += amp[m] * std::exp(cdouble(0.0, freq[m] * t));
      c.values(i, e) = flavor == ControlFlavor::RealU ? cdouble(v.real(), 0.0) : v;
    }
  }
  return c;
}

}  // namespace qoc::fixtures
