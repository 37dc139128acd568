#include "esq/girsanov.hpp"

#include <cmath>

#include "esq/numerics.hpp"

namespace esq {

Det2Result det2(const Mat &K) {
    Det2Result out;
    const auto D = K.rows();
    Mat IK = Mat::Identity(D, D) + K;
    Eigen::PartialPivLU<Mat> lu(IK);
    const Mat &LU = lu.matrixLU();
    double log_abs = 0.0;
    int sign = lu.permutationP().determinant();
    for (Eigen::Index i = 0; i < D; ++i) {
        const double piv = LU(i, i);
        if (piv == 0.0) {
            out.value = 0.0;
            out.sign = 0;
            out.singular = true;
            return out;
        }
        log_abs += std::log(std::abs(piv));
        if (piv < 0.0) sign = -sign;
    }
    out.sign = sign;
    out.value = sign * std::exp(log_abs - K.trace());
    return out;
}

double det2_symmetric_eigen(const Mat &K) {
    Eigen::SelfAdjointEigenSolver<Mat> es(K);
    double log_abs = 0.0;
    int sign = 1;
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
        const double l = es.eigenvalues()[i];
        const double t = 1.0 + l;
        if (t == 0.0) return 0.0;
        if (t < 0.0) sign = -sign;
        log_abs += std::log(std::abs(t)) - l;
    }
    return sign * std::exp(log_abs);
}

ShiftOperator::ShiftOperator(const Potential &p, const CutOff &f, const NoiseDraw &w,
                             std::size_t size_guard)
    : p_(&p), f_(&f), w_(&w) {
    const GridSpec &g = w.field.grid;
    const std::size_t D = static_cast<std::size_t>(g.n) * g.N * g.N;
    if (D > size_guard)
        throw std::invalid_argument("ShiftOperator: n N^2 = " + std::to_string(D) +
                                    " exceeds the materialization guard " +
                                    std::to_string(size_guard));
    Iw_ = apply_fractional_inverse(w.field, 1.0);

    // U(w) = f gradV(I w), pointwise
    U_ = Field(g);
    Vec y(g.n);
    for (int ix = 0; ix < g.N; ++ix) {
        const double x0 = g.coord(ix);
        for (int iy = 0; iy < g.N; ++iy) {
            const double x1 = g.coord(iy);
            const double fw = f.ftilde(x0 * x0 + x1 * x1);
            for (int c = 0; c < g.n; ++c) y[c] = Iw_.at(c, ix, iy);
            Vec gr = p.gradV(y);
            for (int c = 0; c < g.n; ++c) U_.at(c, ix, iy) = fw * gr[c];
        }
    }

    // grad U as a dense matrix on cell-value vectors: rows (i,x), cols (j,y):
    // f(x) d2V_ij(Iw(x)) * Kcol(x - y), Kcol the lattice column of I
    const Field col = lattice_inverse_column(g, 1.0);
    const int N = g.N, n = g.n;
    const std::size_t cells = static_cast<std::size_t>(N) * N;
    gradU_ = Mat(D, D);
    for (int ix = 0; ix < N; ++ix) {
        const double x0 = g.coord(ix);
        for (int iy = 0; iy < N; ++iy) {
            const double x1 = g.coord(iy);
            const double fw = f.ftilde(x0 * x0 + x1 * x1);
            for (int c = 0; c < n; ++c) y[c] = Iw_.at(c, ix, iy);
            Mat H = p.hessV(y);
            const std::size_t row_cell = static_cast<std::size_t>(ix) * N + iy;
            for (int jx = 0; jx < N; ++jx) {
                for (int jy = 0; jy < N; ++jy) {
                    // periodic difference
                    const int dx = (ix - jx + N) % N;
                    const int dy = (iy - jy + N) % N;
                    const double k = col.at(0, dx, dy);
                    const std::size_t col_cell = static_cast<std::size_t>(jx) * N + jy;
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j)
                            gradU_(i * cells + row_cell, j * cells + col_cell) = fw * H(i, j) * k;
                }
            }
        }
    }
    trace_ = gradU_.trace();
}

double ShiftOperator::directional_derivative_mismatch(int count, std::uint64_t seed) const {
    const GridSpec &g = w_->field.grid;
    NormalRng rng(seed);
    double worst = 0.0;
    const double eps = 1e-5;
    for (int t = 0; t < count; ++t) {
        Field h(g);
        for (double &v : h.values) v = rng.normal();
        // U(w + eps h) - U(w - eps h) over 2 eps
        auto U_of = [&](double sgn) {
            Field wp = w_->field;
            Field hs = h;
            hs *= sgn * eps;
            wp += hs;
            Field Iwp = apply_fractional_inverse(wp, 1.0);
            Field out(g);
            Vec y(g.n);
            for (int ix = 0; ix < g.N; ++ix) {
                const double x0 = g.coord(ix);
                for (int iy = 0; iy < g.N; ++iy) {
                    const double x1 = g.coord(iy);
                    const double fw = f_->ftilde(x0 * x0 + x1 * x1);
                    for (int c = 0; c < g.n; ++c) y[c] = Iwp.at(c, ix, iy);
                    Vec gr = p_->gradV(y);
                    for (int c = 0; c < g.n; ++c) out.at(c, ix, iy) = fw * gr[c];
                }
            }
            return out;
        };
        Field fd = U_of(1.0);
        fd -= U_of(-1.0);
        fd *= 1.0 / (2.0 * eps);
        Eigen::Map<const Eigen::VectorXd> hv(h.values.data(), h.values.size());
        Eigen::VectorXd mat = gradU_ * hv;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < fd.values.size(); ++i) {
            num = std::max(num, std::abs(fd.values[i] - mat[i]));
            den = std::max(den, std::abs(mat[i]));
        }
        worst = std::max(worst, num / (1.0 + den));
    }
    return worst;
}

double skorokhod(const ShiftOperator &shift) {
    const Field &U = shift.U();
    const Field &w = shift.noise().field;
    const double a2 = U.grid.spacing() * U.grid.spacing();
    double pair = 0.0;
    for (std::size_t i = 0; i < U.values.size(); ++i) pair += U.values[i] * w.values[i];
    return pair * a2 - shift.trace();
}

GirsanovEval lambda_u(const ShiftOperator &shift) {
    GirsanovEval ev;
    const double a2 = shift.U().grid.spacing() * shift.U().grid.spacing();
    Det2Result d2 = det2(shift.matrix());
    ev.det2_value = d2.value;
    ev.sign = d2.sign;
    ev.skorokhod_value = skorokhod(shift);
    double u2 = 0.0;
    for (double v : shift.U().values) u2 += v * v;
    ev.u_norm_sq = u2 * a2;
    ev.lambda_U = ev.det2_value * std::exp(-ev.skorokhod_value - 0.5 * ev.u_norm_sq);
    // Upsilon for the density route: phi = I w
    const GridSpec &g = shift.U().grid;
    const CutOff &f = shift.cutoff();
    const Potential &p = shift.potential();
    Vec y(g.n);
    double s = 0.0;
    for (int ix = 0; ix < g.N; ++ix) {
        const double x0 = g.coord(ix);
        for (int iy = 0; iy < g.N; ++iy) {
            const double x1 = g.coord(iy);
            for (int c = 0; c < g.n; ++c) y[c] = shift.Iw().at(c, ix, iy);
            s += f.ftilde_prime(x0 * x0 + x1 * x1) * p.V(y);
        }
    }
    ev.log_upsilon = 4.0 * s * a2;
    ev.upsilon_f = std::exp(ev.log_upsilon);
    return ev;
}

namespace {

// signed Lambda for the finite-dimensional standard Gaussian surrogate
double lambda_finite(const Vec &w, const std::function<Vec(const Vec &)> &U,
                     const std::function<Mat(const Vec &)> &gradU) {
    Vec u = U(w);
    Mat J = gradU(w);
    Det2Result d2 = det2(J);
    double delta = u.dot(w) - J.trace();
    return d2.value * std::exp(-delta - 0.5 * u.squaredNorm());
}

// dense 1D preimage count of T(x) = w on [-W, W]
int preimage_count_1d(double w, const std::function<Vec(const Vec &)> &U, double W, int grid) {
    auto T = [&](double x) { return x + U(Vec::Constant(1, x))[0]; };
    int count = 0;
    double prev = T(-W) - w;
    for (int i = 1; i <= grid; ++i) {
        double x = -W + 2.0 * W * i / grid;
        double cur = T(x) - w;
        if (std::signbit(cur) != std::signbit(prev)) ++count;
        prev = cur;
    }
    return count;
}

} // namespace

ChangeOfVarReport finite_dim_change_of_variables_check(
    int d, const std::function<Vec(const Vec &)> &U, const std::function<Mat(const Vec &)> &gradU,
    const std::function<double(const Vec &)> &g, int trials, std::uint64_t seed,
    double root_halfwidth, int root_grid) {
    if (d < 1 || d > 3)
        throw std::invalid_argument("finite_dim_change_of_variables_check: d must be in 1..3");
    NormalRng rng(seed);
    std::vector<double> v_abs, v_signed, v_pre, v_g;
    int unstable = 0;
    for (int t = 0; t < trials; ++t) {
        Vec w(d);
        for (int i = 0; i < d; ++i) w[i] = rng.normal();
        const double lam = lambda_finite(w, U, gradU);
        Vec Tw = w + U(w);
        v_abs.push_back(g(Tw) * std::abs(lam));
        v_signed.push_back(g(Tw) * lam);
        v_g.push_back(g(w));
        if (d == 1) {
            int n1 = preimage_count_1d(w[0], U, root_halfwidth, root_grid);
            int n2 = preimage_count_1d(w[0], U, root_halfwidth, 2 * root_grid);
            if (n1 != n2) ++unstable;
            v_pre.push_back(g(w) * n2);
        }
    }
    ChangeOfVarReport rep;
    auto [ma, sa] = mean_and_se(v_abs);
    rep.est_abs = ma;
    rep.se_abs = sa;
    auto [ms, ss] = mean_and_se(v_signed);
    rep.est_signed = ms;
    rep.se_signed = ss;
    auto [mg, sg] = mean_and_se(v_g);
    rep.est_g = mg;
    rep.se_g = sg;
    if (d == 1) {
        auto [mp, sp] = mean_and_se(v_pre);
        rep.est_preimage = mp;
        rep.se_preimage = sp;
    }
    rep.unstable_roots = unstable;
    if (d == 1 && unstable > trials / 100)
        throw std::runtime_error(
            "finite_dim_change_of_variables_check: preimage count unstable under grid refinement (" +
            std::to_string(unstable) + "/" + std::to_string(trials) + " draws)");
    return rep;
}

} // namespace esq
