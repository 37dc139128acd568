#pragma once

#include <optional>
#include <string>
#include <vector>

#include "esq/fields.hpp"
#include "esq/potentials.hpp"

namespace esq {

enum class SolveMethod { fixed_point, newton };

struct SolveConfig {
    double damping = 0.5;          // halved on residual increase
    int max_iterations = 2000;
    double residual_tolerance = 1e-9; // lattice L2 of (m2-Delta)phibar + f gradV(phibar + I xi)
    SolveMethod method = SolveMethod::fixed_point;
    int multistart_count = 1;
    double initial_scale = 1.0;
    double cluster_radius_factor = 1e-3; // radius = factor * (1 + sup |phibar|)
    std::uint64_t multistart_seed = 777;
};

struct SolveReport {
    Field solution; // phibar
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    double apriori_bound = 0.0;   // sup_x f(x) H(I xi (x)) / m^2, when H is available
    bool apriori_satisfied = true;
    std::vector<Field> distinct_solutions; // multistart cluster representatives
};

/// One application of the fixed-point map K(phibar, w) = -I(f gradV(phibar + I xi)).
/// Throws std::runtime_error naming the first non-finite cell on overflow.
Field fixed_point_map(const Field &phibar, const NoiseDraw &noise, const Potential &p,
                      const CutOff &f);

/// Lattice L2 residual of (m2 - Delta) phibar + f gradV(phibar + I xi),
/// evaluated from scratch (used both inside the iteration and as the final
/// certificate).
double solve_residual(const Field &phibar, const Field &Ixi, const Potential &p, const CutOff &f);

/// Damped fixed-point iteration (or spectrally preconditioned Newton under
/// Hypothesis C) for the shifted equation. Requires a QC-tagged potential.
SolveReport solve(const NoiseDraw &noise, const Potential &p, const CutOff &f,
                  const SolveConfig &cfg);

/// Multistart variant: zero start plus multistart_count Gaussian starts,
/// converged endpoints clustered by sup distance.
SolveReport count_solutions(const NoiseDraw &noise, const Potential &p, const CutOff &f,
                            const SolveConfig &cfg);

/// Brute-force shooting oracle for radially symmetric zero-noise profiles of
///   phi'' + phi'/rho = m2 phi + f(rho) V'(phi)  (scalar potentials, xi = 0):
/// returns the phi(0) amplitudes of sign-definite decaying solutions found by
/// bisection on a shooting grid. Lives here for the multiplicity tests.
std::vector<double> radial_shooting_amplitudes(const Potential &p, const CutOff &f, double m2,
                                               double s_max = 3.2, int s_samples = 120,
                                               double rho_max = 25.0);

} // namespace esq
