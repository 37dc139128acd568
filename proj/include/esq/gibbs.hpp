#pragma once

#include <functional>
#include <string>

#include "esq/numerics.hpp"
#include "esq/potentials.hpp"

namespace esq {

/// The 0-dimensional target measure
///   d(kappa)/dy = Z^-1 exp(-4 pi (m^2 |y|^2 / 2 + V(y))),  y in R^n  (n <= 3),
/// normalized and integrated by tensor Gauss-Legendre with node-doubling
/// refinement.
class GibbsMeasure {
  public:
    GibbsMeasure(Potential potential, double m2);

    double density(const Vec &y) const;
    double density1(double y) const; // n = 1 convenience

    struct Moment {
        double value = 0.0;
        double error_estimate = 0.0;
    };
    Moment moment(const std::function<double(const Vec &)> &h) const;
    Moment monomial_moment(const std::vector<int> &powers) const;
    Moment monomial_moment1(int power) const; // n = 1

    double Z() const { return Z_; }
    double truncation_radius() const { return R_; }
    int nodes_per_axis() const { return nodes_; }
    const Potential &potential() const { return pot_; }
    double m2() const { return m2_; }

    /// probability mass of [lo, hi) per axis-0 bin, marginalized (n = 1 only)
    double bin_probability(double lo, double hi) const;

    /// rejection sampler from the Gaussian envelope (V >= 0 makes it exact)
    Vec sample(NormalRng &rng) const;

    /// moments table (h-tag, value, error estimate) for monomials up to
    /// max_degree in the first component
    void export_moments_csv(const std::string &path, int max_degree = 4) const;

  private:
    double integrate(const std::function<double(const Vec &)> &f, int nodes) const;
    Potential pot_;
    double m2_;
    double R_;
    int nodes_ = 0;
    double Z_ = 0.0;
};

} // namespace esq
