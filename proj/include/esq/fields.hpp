#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esq/kernels.hpp"

namespace esq {

/// Periodic N x N lattice of side L carrying R^n-valued fields.
/// Cell (0,0) sits at x = 0; coordinates are centered on the torus.
struct GridSpec {
    double L = 16.0;
    int N = 256;
    int n = 1;
    double m2 = 1.0;

    double spacing() const { return L / N; }
    /// centered coordinate of lattice index i (origin is a lattice point)
    double coord(int i) const { return spacing() * (i <= N / 2 ? i : i - N); }
    void validate() const;
    bool operator==(const GridSpec &o) const {
        return L == o.L && N == o.N && n == o.n && m2 == o.m2;
    }
};

/// Value-semantics lattice field, component-major storage [c][ix][iy].
class Field {
  public:
    Field() = default;
    explicit Field(const GridSpec &g, double fill = 0.0)
        : grid(g), values(static_cast<std::size_t>(g.n) * g.N * g.N, fill) {}

    GridSpec grid;
    std::vector<double> values;

    double &at(int c, int ix, int iy) {
        return values[(static_cast<std::size_t>(c) * grid.N + ix) * grid.N + iy];
    }
    double at(int c, int ix, int iy) const {
        return values[(static_cast<std::size_t>(c) * grid.N + ix) * grid.N + iy];
    }
    double *component(int c) { return values.data() + static_cast<std::size_t>(c) * grid.N * grid.N; }
    const double *component(int c) const {
        return values.data() + static_cast<std::size_t>(c) * grid.N * grid.N;
    }

    bool all_finite() const;
    double sup_norm() const;
    /// lattice L^2 norm: sqrt(a^2 sum values^2)
    double l2_norm() const;

    Field &operator+=(const Field &o);
    Field &operator-=(const Field &o);
    Field &operator*=(double s);

    void save(const std::string &path) const;   // self-describing binary container
    static Field load(const std::string &path);
    void export_csv_slice(const std::string &path, int c = 0) const; // row iy=0
};

struct NoiseDraw {
    Field field;
    std::uint64_t seed = 0;
    std::string scheme = "splitmix64/boxmuller-v1";
};

/// i.i.d. centered Gaussians, Var = 1/a^2 per cell per component; deterministic
/// in (grid, seed).
NoiseDraw sample_white_noise(const GridSpec &grid, std::uint64_t seed);

/// Componentwise spectral multiplication by (m^2 + |k|^2)^(-alpha),
/// k = 2 pi (integer offsets) / L. Negative alpha applies the forward symbol.
Field apply_fractional_inverse(const Field &field, double alpha);

enum class LatticeWeight { none, f, fprime };

/// a^2-weighted sum per component, optionally multiplied pointwise by f or
/// ftilde'(|x|^2) of the given cut-off (torus coordinates centered at 0).
std::vector<double> lattice_integral(const Field &field, LatticeWeight w = LatticeWeight::none,
                                     const CutOff *cutoff = nullptr);

/// Evaluate the cut-off (or its radial derivative) on the lattice as a field.
Field cutoff_on_grid(const GridSpec &grid, const CutOff &cutoff, bool prime);

/// (1/L^2) sum_k (m2 + |k|^2)^(-2 alpha): the lattice variance of
/// (m^2-Delta)^(-alpha) applied to white noise, evaluated at any point.
double lattice_symbol_sum(const GridSpec &grid, double alpha);

/// Lattice kernel column of (m^2-Delta)^(-alpha): response to a unit cell
/// value at the origin (an N x N scalar field).
Field lattice_inverse_column(const GridSpec &grid, double alpha);

/// lattice L^2 norm computed in the Fourier domain (Parseval route, tests).
double fourier_l2_norm(const Field &field);

} // namespace esq
