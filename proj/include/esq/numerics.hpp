#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace esq {

/// Raised when an adaptive quadrature fails to reach its target; carries the
/// best value and the achieved error estimate.
class QuadratureError : public std::runtime_error {
  public:
    QuadratureError(const std::string &what, double value, double error_estimate)
        : std::runtime_error(what), value(value), error_estimate(error_estimate) {}
    double value;
    double error_estimate;
};

/// Gauss-Legendre nodes/weights on [-1,1], cached per order.
const std::vector<double> &gauss_legendre_nodes(int order);
const std::vector<double> &gauss_legendre_weights(int order);

/// 16-point Gauss-Legendre on [a,b].
double gl_integrate(const std::function<double(double)> &f, double a, double b, int order = 16);

/// Adaptive 1D integral on [a,b]: composite Gauss-Legendre with panel doubling
/// until successive estimates differ by less than rel_tol (mixed with abs floor).
/// Throws QuadratureError when the panel cap is hit.
double adaptive_integrate(const std::function<double(double)> &f, double a, double b,
                          double rel_tol = 1e-9, int max_panels = 4096);

/// Natural cubic spline through (x,y); x strictly increasing.
class CubicSpline {
  public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);
    double operator()(double xq) const;
    double derivative(double xq) const;
    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }

  private:
    std::vector<double> x_, y_, m_; // m_: second derivatives
};

/// s-th positive zero of the Bessel function J0 (s >= 1), via McMahon's
/// expansion refined by one Newton step. Accurate to ~1e-12 for s >= 1.
double bessel_j0_zero(int s);

// counter-based stream derivation (scheme tag "splitmix64/boxmuller-v1")
std::uint64_t splitmix64(std::uint64_t &state);
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index);

/// Deterministic normal generator: mt19937_64 + Box-Muller on explicit
/// 53-bit uniforms (no implementation-defined distributions).
class NormalRng {
  public:
    explicit NormalRng(std::uint64_t seed);
    double uniform();     // in (0,1)
    double normal();      // standard normal
    std::uint64_t raw();

  private:
    std::uint64_t s_[4]; // xoshiro256++ state
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};
MeanSe mean_and_se(const std::vector<double> &v);

/// Jackknife standard error of the ratio estimator sum(num)/sum(den).
double jackknife_ratio_se(const std::vector<double> &num, const std::vector<double> &den);

} // namespace esq
