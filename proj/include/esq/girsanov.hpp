#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "esq/fields.hpp"
#include "esq/potentials.hpp"

namespace esq {

struct Det2Result {
    double value = 1.0; // det(I+K) exp(-Tr K)
    int sign = 1;
    bool singular = false;
};

/// Carleman-regularized determinant det2(I+K) = det(I+K) e^(-Tr K) via LU of
/// I+K (log-scaled). Exactly 0 with the singular flag when I+K is singular.
Det2Result det2(const Mat &K);

/// Eigenvalue route for symmetric K: prod (1+lambda_i) e^(-lambda_i).
double det2_symmetric_eigen(const Mat &K);

/// Materialization of U(w) = f gradV(I w) and its H-derivative
///   (grad U)^i_j (w)[h] = f(x) d2V_ij(I w)(x) * (I h^j)(x)
/// on a lattice small enough for dense work (n N^2 <= size guard).
class ShiftOperator {
  public:
    ShiftOperator(const Potential &p, const CutOff &f, const NoiseDraw &w,
                  std::size_t size_guard = 4096);

    const Field &U() const { return U_; }
    const Field &Iw() const { return Iw_; }
    const Mat &matrix() const { return gradU_; }
    double trace() const { return trace_; }
    const NoiseDraw &noise() const { return *w_; }
    const Potential &potential() const { return *p_; }
    const CutOff &cutoff() const { return *f_; }

    /// max relative mismatch between the materialized matrix action and a
    /// directional finite difference of U along `count` random directions
    double directional_derivative_mismatch(int count = 5, std::uint64_t seed = 5150) const;

  private:
    const Potential *p_;
    const CutOff *f_;
    const NoiseDraw *w_;
    Field Iw_, U_;
    Mat gradU_;
    double trace_ = 0.0;
};

struct GirsanovEval {
    double det2_value = 1.0;
    int sign = 1;
    double skorokhod_value = 0.0; // delta(U) = <U,w> - Tr grad U
    double u_norm_sq = 0.0;       // ||U||_H^2 (lattice L2)
    double lambda_U = 1.0;        // det2 * exp(-delta - u_norm_sq/2)
    double upsilon_f = 1.0;       // exp(4 int f' V(I w)) for the density route
    double log_upsilon = 0.0;
};

/// Skorokhod integral via the trace formula: a^2 sum U.w - Tr(grad U).
double skorokhod(const ShiftOperator &shift);

GirsanovEval lambda_u(const ShiftOperator &shift);

/// Finite-dimensional (d <= 3) change-of-variables cross-check on a standard
/// Gaussian: compares (i) E[g(T(w)) |Lambda|], (ii) E[g(w) #T^-1(w)] (d = 1,
/// dense root search), (iii) E[g(T(w)) Lambda] against DEG * E[g].
struct ChangeOfVarReport {
    double est_abs = 0.0, se_abs = 0.0;
    double est_preimage = 0.0, se_preimage = 0.0;
    double est_signed = 0.0, se_signed = 0.0;
    double est_g = 0.0, se_g = 0.0;
    int unstable_roots = 0; // draws where grid refinement changed the count
};

ChangeOfVarReport finite_dim_change_of_variables_check(
    int d, const std::function<Vec(const Vec &)> &U,
    const std::function<Mat(const Vec &)> &gradU, const std::function<double(const Vec &)> &g,
    int trials, std::uint64_t seed = 31337, double root_halfwidth = 12.0, int root_grid = 4096);

} // namespace esq
