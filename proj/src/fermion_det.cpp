#include "esq/fermion_det.hpp"

#include <cmath>
#include <stdexcept>

#include "esq/numerics.hpp"

namespace esq {

FermionKernel::FermionKernel(std::function<double(double, double)> g,
                             std::function<double(double)> S, double disk_radius, int radial_nodes,
                             int angular_nodes)
    : g_(std::move(g)), S_(std::move(S)), radius_(disk_radius), nr_(radial_nodes),
      na_(angular_nodes) {
    const auto &rx = gauss_legendre_nodes(nr_);
    const auto &rw = gauss_legendre_weights(nr_);
    const int D = nr_ * na_;
    x_.resize(D);
    y_.resize(D);
    weights_.resize(D);
    for (int i = 0; i < nr_; ++i) {
        const double r = 0.5 * radius_ * (rx[i] + 1.0);
        const double wr = 0.5 * radius_ * rw[i] * r * (2.0 * M_PI / na_);
        for (int j = 0; j < na_; ++j) {
            const double th = 2.0 * M_PI * (j + 0.5) / na_;
            const int id = i * na_ + j;
            x_[id] = r * std::cos(th);
            y_[id] = r * std::sin(th);
            weights_[id] = wr;
        }
    }
    M_ = Eigen::MatrixXd(D, D);
    const double S0 = S_(0.0);
    for (int i = 0; i < D; ++i) {
        const double gi = g_(x_[i], y_[i]);
        trace_bound_ += std::abs(gi) * S0 * weights_[i];
        for (int j = 0; j < D; ++j) {
            const double d = i == j ? 0.0 : std::hypot(x_[i] - x_[j], y_[i] - y_[j]);
            M_(i, j) = std::sqrt(weights_[i]) * gi * S_(d) * std::sqrt(weights_[j]);
        }
    }
    if (!std::isfinite(trace_bound_))
        throw std::runtime_error("FermionKernel: trace bound surrogate not finite");
}

FermionKernel FermionKernel::refined() const {
    return FermionKernel(g_, S_, radius_, 2 * nr_, 2 * na_);
}

FredholmResult fredholm_series(const FermionKernel &k, int order) {
    if (order < 0 || order > 6)
        throw std::invalid_argument("fredholm_series: order guard is 0..6 (n-fold quadrature cost)");
    const Eigen::MatrixXd &M = k.node_matrix();
    // traces of powers via two cached products
    std::vector<double> T(order + 1, 0.0);
    Eigen::MatrixXd M2, M4;
    if (order >= 2) M2 = M * M;
    if (order >= 5) M4 = M2 * M2;
    for (int p = 1; p <= order; ++p) {
        switch (p) {
            case 1: T[p] = M.trace(); break;
            case 2: T[p] = M2.trace(); break;
            case 3: T[p] = (M2.cwiseProduct(M.transpose())).sum(); break;
            case 4: T[p] = (M2.cwiseProduct(M2.transpose())).sum(); break;
            case 5: T[p] = (M4.cwiseProduct(M.transpose())).sum(); break;
            case 6: T[p] = (M4.cwiseProduct(M2.transpose())).sum(); break;
        }
    }
    // Plemelj-Smithies / Newton recursion: e_j = (1/j) sum_{p=1..j} (-1)^(p+1) T_p e_{j-p}
    FredholmResult out;
    std::vector<double> e(order + 1, 0.0);
    e[0] = 1.0;
    out.terms.push_back(1.0);
    double sum = 1.0;
    for (int j = 1; j <= order; ++j) {
        double acc = 0.0;
        for (int p = 1; p <= j; ++p) acc += ((p % 2 == 1) ? 1.0 : -1.0) * T[p] * e[j - p];
        e[j] = acc / j;
        out.terms.push_back(e[j]);
        sum += e[j];
    }
    out.value = sum;
    out.last_term = std::abs(e[order]);
    return out;
}

double kernel_determinant(const FermionKernel &k) {
    const Eigen::MatrixXd &M = k.node_matrix();
    Eigen::MatrixXd IM = Eigen::MatrixXd::Identity(M.rows(), M.cols()) + M;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(IM);
    double det = lu.permutationP().determinant();
    for (Eigen::Index i = 0; i < M.rows(); ++i) det *= lu.matrixLU()(i, i);
    return det;
}

double fredholm_term_literal(const FermionKernel &k, int n) {
    const int D = k.node_count();
    if (std::pow(D, n) > 5e7)
        throw std::invalid_argument("fredholm_term_literal: tensor cost guard exceeded");
    const Eigen::MatrixXd &M = k.node_matrix();
    // (1/n!) sum over index tuples of det of the n x n minor of the symmetrized
    // matrix (weights are inside M, so the tuple sum uses M directly)
    std::vector<int> idx(n, 0);
    double total = 0.0;
    double fact = 1.0;
    for (int j = 2; j <= n; ++j) fact *= j;
    while (true) {
        Eigen::MatrixXd sub(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) sub(a, b) = M(idx[a], idx[b]);
        total += sub.determinant();
        int c = n - 1;
        while (c >= 0 && ++idx[c] == D) idx[c--] = 0;
        if (c < 0) break;
    }
    return total / fact;
}

} // namespace esq
