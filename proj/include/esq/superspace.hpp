#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "esq/grassmann.hpp"
#include "esq/kernels.hpp"

namespace esq {

/// Smooth function R^2 -> Grassmann(theta, thetabar): the quadruple
/// (f_empty, f_theta, f_thetabar, f_thetathetabar).
struct SuperFunction {
    using Scalar = std::function<double(double, double)>;
    using Gradient = std::function<std::array<double, 2>(double, double)>;

    Scalar f_empty, f_theta, f_thetabar, f_thetathetabar;
    // analytic gradients when available; central differences otherwise
    std::optional<Gradient> grad_empty, grad_theta, grad_thetabar;
    double fd_step = 1e-4;

    static Scalar zero_fn() {
        return [](double, double) { return 0.0; };
    }
    /// the supersymmetric shape g(|x|^2 + 4 theta thetabar):
    /// components (g(|x|^2), 0, 0, 4 g'(|x|^2))
    static SuperFunction radial_shape(std::function<double(double)> g,
                                      std::function<double(double)> gprime);

    std::array<double, 2> grad_component(int which, double x0, double x1) const;

    /// polynomial composition r(F) = r(f0) + r'(f0) * (nilpotent part);
    /// exact because the nilpotent part squares to zero
    SuperFunction compose(std::function<double(double)> r, std::function<double(double)> rp) const;
};

struct BerezinWeight {
    bool delta_at_origin = false;
    std::function<double(double, double)> w;
    static BerezinWeight delta() { return {true, {}}; }
    static BerezinWeight callable(std::function<double(double, double)> f) {
        return {false, std::move(f)};
    }
};

/// Berezin integral with the convention int theta thetabar dtheta dthetabar = -1:
/// returns -int f_thetathetabar(x) weight(x) dx (polar adaptive quadrature),
/// or -f_thetathetabar(0) for the delta weight.
double berezin_integral(const SuperFunction &F, const BerezinWeight &weight, double radius = 40.0,
                        double rel_tol = 1e-8);

/// Q = 2 theta grad + x d_thetabar and Qbar = 2 thetabar grad - x d_theta,
/// componentwise on the 2D index:
///   (QF)_j    =  x_j f_tb           + (2 d_j f_0 - x_j f_ttb) theta + 2 d_j f_tb theta thetabar
///   (QbarF)_j = -x_j f_t            + (2 d_j f_0 - x_j f_ttb) thetabar - 2 d_j f_t theta thetabar
/// Both annihilate |x|^2 + 4 theta thetabar.
std::array<SuperFunction, 2> apply_Q(const SuperFunction &F, bool conjugated);

struct SusyReport {
    double max_Q = 0.0;
    double max_Qbar = 0.0;
    double max_rotation = 0.0;
    bool pass = false;
    std::string first_fail;
};

/// Supersymmetry probe: max norm of QF and QbarF components over a radial-
/// angular probe set plus a rotational-invariance comparison.
SusyReport susy_check(const SuperFunction &F, double tolerance,
                      const std::vector<double> &probe_radii = {0.3, 0.7, 1.0, 1.6, 2.5, 4.0});

/// Free superfield covariance C_Phi(x, theta, thetabar)
///   = G_{2+2chi}(|x|) - varpi G_{1+2chi}(|x|) theta thetabar
/// with tabulated kernels for fast evaluation and exact origin values.
class SuperCovariance {
  public:
    SuperCovariance(double chi, double m2, double r_min = 1e-3, double r_max = 64.0,
                    int nodes = 768);

    double chi() const { return chi_; }
    double varpi() const { return varpi_; }
    double m2() const { return m2_; }
    /// bosonic two point function A = <phi phi> = G_{2+2chi}
    double A(double r) const;
    double A0() const { return A0_; }
    /// fermionic/mixed kernel B = varpi G_{1+2chi}; <psi psibar> = B, <phi omega> = -B
    double B(double r) const;
    double B0() const { return B0_; }

    /// C_Phi as a superfunction of x with direct-quadrature components (slow,
    /// accurate; for susy_check and the reduction-formula test)
    SuperFunction C_phi_superfunction() const;

  private:
    double chi_, varpi_, m2_, A0_, B0_;
    std::shared_ptr<KernelTable> tabA_, tabB_;
};

struct WickInsertion {
    double x0 = 0.0, x1 = 0.0;
    int theta_index = 0;
    int thetabar_index = 0;
};

/// Wick expectation of a product of free superfields: sum over perfect
/// pairings of C_Phi(x_i - x_j, theta_i - theta_j, thetabar_i - thetabar_j),
/// multiplied inside the Grassmann algebra (generators theta_k -> 2k,
/// thetabar_k -> 2k+1). Odd counts give 0; guard at 10 insertions.
GrassmannElement wick_superfield_expectation(const std::vector<WickInsertion> &points,
                                             const SuperCovariance &cov);

/// Theorem-style reduction check: for T = C_Phi and F = ftilde(|x|^2 + 4 t tb),
///   int T . F dx dtheta dthetabar  =  - int (4 A ftilde' - B ftilde) dx
/// against 4 pi A(0) ftilde(0). Returns (lhs, rhs).
std::pair<double, double> reduction_formula_check(const SuperCovariance &cov, const CutOff &f,
                                                  double rel_tol = 1e-7);

/// Univariate polynomial sum c_k y^k.
using Polynomial = std::vector<double>;

struct PolEqSpec {
    int radial_nodes = 96;   // per dimension of the reduced quadrature
    int angular_nodes = 96;  // relative angle nodes (n = 2 only)
    double radius = 0.0;     // 0: derive from cut-off decay
    int max_refinements = 3; // node doubling for the error estimate
    double rel_tol = 1e-4;
};

struct PolEqReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double gap_rel = 0.0;
    double quad_error_estimate = 0.0;
    int order = 0;
    double chi = 0.0;
};

/// Numerical check of the moment identity
///   < p(phi(0)) (Q_chi(P, f))^n >  =  < p(phi(0)) (-4 pi P(phi(0)))^n >
/// with Q_chi(P,f) = int [ 4 f' P(phi) + f P'(phi) omega + f P''(phi) psi psibar ] dx
/// and covariances <phi phi> = A, <phi omega> = -B, <omega omega> = 0,
/// <psi psibar> = B. LHS by Wick contraction + reduced quadrature (1D radial
/// for n = 1, (r1, r2, angle) for n = 2); RHS by scalar Isserlis moments with
/// variance A(0). The identity holds for cut-offs with ftilde(0) = 1.
PolEqReport verify_pol_eq(const Polynomial &p, const Polynomial &P, int order, double chi,
                          const CutOff &f, double m2 = 1.0, const PolEqSpec &spec = PolEqSpec{});

} // namespace esq
