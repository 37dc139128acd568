#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace esq {

/// Trace-class kernel K_g(x, x') = g(x) S(x - x') discretized on a polar
/// quadrature grid over a disk; S radial and continuous (S = varpi G_{1+2chi}
/// in the intended use), g absolutely integrable.
class FermionKernel {
  public:
    FermionKernel(std::function<double(double, double)> g, std::function<double(double)> S,
                  double disk_radius, int radial_nodes = 40, int angular_nodes = 32);

    /// node matrix M = W^(1/2) K W^(1/2) (the symmetrized quadrature
    /// discretization of the operator)
    const Eigen::MatrixXd &node_matrix() const { return M_; }
    int node_count() const { return static_cast<int>(weights_.size()); }
    double trace_bound() const { return trace_bound_; } // sum |g| S(0) w
    double quadrature_weight(int i) const { return weights_[i]; }
    std::pair<double, double> node(int i) const { return {x_[i], y_[i]}; }

    /// rebuild with doubled node counts (refinement-stability checks)
    FermionKernel refined() const;

  private:
    std::function<double(double, double)> g_;
    std::function<double(double)> S_;
    double radius_;
    int nr_, na_;
    std::vector<double> x_, y_, weights_;
    Eigen::MatrixXd M_;
    double trace_bound_ = 0.0;
};

struct FredholmResult {
    double value = 1.0;
    double last_term = 0.0; // truncation estimate
    std::vector<double> terms;
};

/// Truncated Fredholm expansion det(I+K) = sum_n (1/n!) int det(g(x_i) S(x_i-x_j)) dx:
/// each n-fold tensor quadrature over the fixed node set equals the n-th
/// elementary symmetric function of the node matrix (determinants with a
/// repeated node vanish), evaluated through the Plemelj-Smithies recursion on
/// traces of matrix powers. Guarded at order <= 6.
FredholmResult fredholm_series(const FermionKernel &k, int order);

/// det(I + W^(1/2) K W^(1/2)) by LU factorization (the cross-route).
double kernel_determinant(const FermionKernel &k);

/// Literal tensor-quadrature evaluation of the order-n term (tiny node sets
/// only; cross-validates the trace recursion in the tests).
double fredholm_term_literal(const FermionKernel &k, int n);

} // namespace esq
