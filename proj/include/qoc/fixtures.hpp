#pragma once

// Deterministic random instance generators shared by the test suites and
// the `verify` subcommand.

#include "qoc/dynamics.hpp"

#include <random>

namespace qoc::fixtures {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);

/// Random connected graph on n levels: a random spanning tree plus each
/// remaining pair with probability `extra_edge_prob`. Energies uniform in
/// [-energy_span, energy_span], couplings uniform in [mu_lo, mu_hi].
LevelSystem random_connected_system(Rng& rng, int n, double energy_span = 1.0, double extra_edge_prob = 0.3,
                                    double mu_lo = 0.5, double mu_hi = 2.0);

Eigen::VectorXcd random_unit_state(Rng& rng, int n);
Eigen::VectorXd random_real_unit_state(Rng& rng, int n);

/// Smooth random control: each edge carries a sum of three complex
/// sinusoids with amplitudes scaled so that |c| <= amplitude, sampled at
/// step midpoints. Real-U flavor keeps the real part only.
ControlGrid smooth_random_control(Rng& rng, const TimeGrid& grid, const std::vector<Edge>& edges, ControlFlavor flavor,
                                  double amplitude);

}  // namespace qoc::fixtures
