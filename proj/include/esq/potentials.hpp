#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace esq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class HypTag { C, QC, V_lambda, bounded };

struct VlambdaParts {
    double lambda = 0.0;
    std::function<double(const Vec &)> V_B;   // bounded part
    // V_U(y) = sum_i y_i^4 is implied
};

/// Smooth potential with gradient/Hessian callables and sampled hypothesis tags.
struct Potential {
    int n = 1;
    std::string family;
    std::function<double(const Vec &)> V;
    std::function<Vec(const Vec &)> gradV;
    std::function<Mat(const Vec &)> hessV;
    std::set<HypTag> tags;
    double growth_alpha = 0.0, growth_beta = 0.0; // |V|,|dV|,|d2V| <= e^(a|y|+b) fit
    std::optional<VlambdaParts> vlambda;
    std::optional<std::function<double(const Vec &)>> qc_bound; // H(y)
    std::vector<std::string> warnings; // probe-failure downgrades are recorded here

    // allocation-free scalar paths for n = 1 (lattice hot loops)
    std::function<double(double)> V1, gradV1, hessV1;

    bool has(HypTag t) const { return tags.count(t) > 0; }
    double operator()(double y) const { return V1 ? V1(y) : V(Vec::Constant(1, y)); }
};

struct ProbeSpec {
    double y_range = 10.0;
    double r_range = 10.0;
    int y_samples = 41;
    int r_samples = 21;
    int direction_samples = 8;
    std::uint64_t seed = 12345;
};

struct HypothesisReport {
    bool pass = true;
    std::string which;
    std::string first_counterexample;
    std::optional<std::pair<double, double>> fitted_H; // H(y) = c1 exp(c2 |y|)
    ProbeSpec probe;
};

/// Families: zero | quadratic(c) | quartic(lambda) |
/// quartic_plus_bounded(lambda, amplitude) | trig_polynomial(a0, cos_coeffs, sin_coeffs).
/// Tags are assigned from sampled probes; a failed probe downgrades the tag and
/// records a warning instead of keeping it silently.
Potential builtin_potential(const std::string &name, const std::vector<double> &params, int n = 1);

HypothesisReport check_hypothesis(const Potential &p, HypTag which,
                                  const ProbeSpec &probe = ProbeSpec{});

/// m^2-aware convexity probe: smallest eigenvalue of hessV + 2 m^2 I over the
/// probe set (Hypothesis C requires it positive).
double min_convexity_eigenvalue(const Potential &p, double m2, const ProbeSpec &probe = ProbeSpec{});

/// max |gradV - central difference of V| and |hessV - central difference of
/// gradV| over random probe points (mixed abs/rel), for the consistency tests.
std::pair<double, double> derivative_consistency(const Potential &p, int points = 1000,
                                                 std::uint64_t seed = 99);

} // namespace esq
