#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "esq/numerics.hpp"

namespace esq {

/// Radial Green's function G_alpha(r) of (m^2 - Delta)^(-alpha) on R^2:
///   G_alpha(r) = (1/2pi) int_0^inf k J0(k r) / (m^2 + k^2)^alpha dk,
/// by adaptive Hankel quadrature (panels between J0 zeros, accelerated tail).
/// Requires alpha > 1 at r = 0; throws std::domain_error otherwise.
double green_kernel(double alpha, double m2, double r, double rel_tol = 1e-9);

/// Closed form of the Hankel integral at the origin, alpha > 1:
/// G_alpha(0) = 1 / (4 pi (alpha-1) m^(2(alpha-1))).
double green_kernel_origin(double alpha, double m2);

namespace detail {
/// Oscillatory route: panels between J0 zeros with accelerated summation.
/// Loses to cancellation once m r is large (value ~ e^(-m r), integrand O(1)).
double green_kernel_oscillatory(double alpha, double m2, double r, double rel_tol);
/// Proper-time route: the same integral rewritten through
/// (m^2+k^2)^-alpha = int s^(alpha-1) e^(-s(m^2+k^2)) ds / Gamma(alpha),
/// giving a positive integrand; used for m r beyond the cancellation floor and
/// as the independent node scheme in the cross-route tests.
double green_kernel_propertime(double alpha, double m2, double r, double rel_tol);
} // namespace detail

/// Relative residual of the radial gradient identity
///   d/dr G_{2+2chi}(r) = -(r varpi / 2) G_{1+2chi}(r),  varpi = 1/(1+2chi),
/// with the derivative taken by a central difference whose step balances
/// truncation against quadrature noise.
double green_gradient_identity_residual(double chi, double r);

/// Tabulated radial kernel with cubic-spline interpolation and an exponential
/// tail extrapolation beyond the last node.
class KernelTable {
  public:
    /// Geometric radius grid r_min..r_max (defaults follow the lattice usage:
    /// r_min = L/(10N), r_max = 3L). Construction checks positivity, strict
    /// decrease, the alpha = 1 BesselK0 closed form, and a negative tail slope.
    KernelTable(double alpha, double m2, double r_min, double r_max, int nodes = 512,
                int interpolation_order = 3);

    double operator()(double r) const;
    double alpha() const { return alpha_; }
    double m2() const { return m2_; }
    double at_origin() const; // needs alpha > 1
    const std::vector<double> &radii() const { return radii_; }
    const std::vector<double> &values() const { return values_; }

    void export_csv(const std::string &path) const;

  private:
    double alpha_, m2_;
    std::vector<double> radii_, values_;
    CubicSpline spline_;
    double tail_slope_ = -1.0; // log-linear slope past r_max
};

/// Radial cut-off satisfying Hypothesis CO: f(x) = ftilde(|x|^2) > 0,
/// ftilde' <= 0, exponential decay, Delta f <= b^2 f with b^2 < 4 m^2.
class CutOff {
  public:
    std::string kind;
    double b = 0.0;

    double f(double x0, double x1) const { return ft_(x0 * x0 + x1 * x1); }
    double ftilde(double s) const { return ft_(s); }
    double ftilde_prime(double s) const { return ftp_(s); }
    double fprime(double x0, double x1) const { return ftp_(x0 * x0 + x1 * x1); }

    // construction-time witnesses
    double fprime_integral = 0.0; // int_{R^2} ftilde'(|x|^2) dx, should be -pi ftilde(0)

    friend CutOff make_cutoff(const std::string &, double, double, double);

  private:
    std::function<double(double)> ft_, ftp_;
};

/// Factory for the named families:
///   "exp-sqrt"  : f = exp(-b sqrt(1+|x|^2))            (f(0) = e^-b)
///   "exp-sqrt1" : f = exp(-b (sqrt(1+|x|^2) - 1))      (f(0) = 1)
///   "flat-top"  : f = 1 for |x| <= r, exp(-b g(|x|-r)) beyond, g(u) = u - atan(u)
/// `extra` is the flat-top radius (ignored by the other families).
/// Verifies the CO conditions on a probe lattice at construction and throws
/// std::invalid_argument naming the first failing probe point.
CutOff make_cutoff(const std::string &kind, double b, double m2, double extra = 0.0);

} // namespace esq
