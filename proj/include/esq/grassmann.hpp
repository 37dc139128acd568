#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace esq {

/// Element of the real Grassmann algebra on k generators (k <= 32), stored as
/// a sparse map from ordered generator subsets (bitmask, ascending index
/// order) to coefficients. theta_i theta_j = -theta_j theta_i, theta_i^2 = 0.
class GrassmannElement {
  public:
    explicit GrassmannElement(int generator_count = 0) : k_(generator_count) {}

    static GrassmannElement scalar(int k, double c);
    static GrassmannElement generator(int k, int index);

    int generator_count() const { return k_; }
    double coefficient(std::uint32_t mask) const;
    void set_coefficient(std::uint32_t mask, double c);
    const std::map<std::uint32_t, double> &coefficients() const { return coeff_; }

    GrassmannElement operator+(const GrassmannElement &o) const;
    GrassmannElement operator-(const GrassmannElement &o) const;
    GrassmannElement operator*(const GrassmannElement &o) const;
    GrassmannElement operator*(double s) const;
    GrassmannElement &operator+=(const GrassmannElement &o);

    bool is_zero(double tol = 0.0) const;
    double max_abs_coefficient() const;
    std::string str() const;

    /// sign of reordering the concatenation of two ordered monomials into one
    /// ordered monomial; 0 when they share a generator
    static int merge_sign(std::uint32_t a, std::uint32_t b);

  private:
    int k_;
    std::map<std::uint32_t, double> coeff_;
    void prune(std::uint32_t mask);
};

} // namespace esq
