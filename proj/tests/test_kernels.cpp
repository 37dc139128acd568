#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "esq/fields.hpp"
#include "esq/kernels.hpp"

using namespace esq;

namespace {

// independent BesselK0 oracle: ascending series for small x, asymptotic
// expansion for large x (Abramowitz-Stegun 9.6.13 / 9.7.2)
double k0_series(double x) {
    if (x < 8.0) {
        const double euler = 0.5772156649015328606;
        double i0 = 1.0, term = 1.0, sum = 0.0, hk = 0.0;
        const double q = 0.25 * x * x;
        for (int k = 1; k <= 60; ++k) {
            term *= q / (k * k);
            i0 += term;
            hk += 1.0 / k;
            sum += term * hk;
        }
        return -(std::log(0.5 * x) + euler) * i0 + sum;
    }
    double s = 1.0, t = 1.0;
    for (int k = 1; k <= 12; ++k) {
        t *= -(2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * x * k);
        s += t;
    }
    return std::sqrt(M_PI / (2.0 * x)) * std::exp(-x) * s;
}

// independent radial quadrature of the origin integral with a different node
// scheme: composite Simpson on [0, K] plus a three-term tail expansion
double origin_quadrature(double alpha, double m2) {
    const double K = 50.0 * std::sqrt(m2);
    const int n = 40000;
    auto g = [&](double k) { return k / std::pow(m2 + k * k, alpha); };
    double s = g(0.0) + g(K);
    const double h = K / n;
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * g(i * h);
    double head = s * h / 3.0;
    // int_K^inf k^(1-2a) (1 + m2/k^2)^-a dk, binomial in m2/k^2
    const double tail = std::pow(K, 2.0 - 2.0 * alpha) / (2.0 * alpha - 2.0) -
                        alpha * m2 * std::pow(K, -2.0 * alpha) / (2.0 * alpha) +
                        0.5 * alpha * (alpha + 1.0) * m2 * m2 *
                            std::pow(K, -2.0 - 2.0 * alpha) / (2.0 * alpha + 2.0);
    return (head + tail) / (2.0 * M_PI);
}

} // namespace

TEST_CASE("green_kernel origin values") {
    CHECK(green_kernel(2.0, 1.0, 0.0) == doctest::Approx(1.0 / (4.0 * M_PI)).epsilon(1e-9));
    CHECK(green_kernel(2.0, 4.0, 0.0) == doctest::Approx(1.0 / (16.0 * M_PI)).epsilon(1e-9));
    CHECK(green_kernel(3.0, 1.0, 0.0) == doctest::Approx(1.0 / (8.0 * M_PI)).epsilon(1e-9));
}

TEST_CASE("green_kernel alpha=1 matches the independent K0 oracle") {
    for (double r : {0.05, 0.3, 1.0, 2.5, 6.0, 10.0}) {
        const double want = k0_series(r) / (2.0 * M_PI);
        CHECK(green_kernel(1.0, 1.0, r) == doctest::Approx(want).epsilon(1e-8));
    }
    // m2 != 1 scaling: G_1(r; m2) = K0(m r)/(2 pi)
    CHECK(green_kernel(1.0, 4.0, 1.5) ==
          doctest::Approx(k0_series(3.0) / (2.0 * M_PI)).epsilon(1e-8));
}

TEST_CASE("green_kernel errors") {
    CHECK_THROWS_AS(green_kernel(1.0, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(green_kernel(0.5, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(green_kernel(-1.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(green_kernel(2.0, -1.0, 1.0), std::domain_error);
}

TEST_CASE("origin closed form vs independent quadrature, alpha > 1") {
    for (double alpha : {1.5, 2.0, 2.5, 3.0, 4.0}) {
        const double closed = 1.0 / (4.0 * M_PI * (alpha - 1.0));
        CHECK(green_kernel(alpha, 1.0, 0.0) == doctest::Approx(closed).epsilon(1e-6));
        CHECK(origin_quadrature(alpha, 1.0) == doctest::Approx(closed).epsilon(1e-6));
    }
}

TEST_CASE("oscillatory and proper-time routes agree on the overlap") {
    for (double r : {2.0, 5.0, 8.0, 11.0}) {
        for (double alpha : {1.0, 1.5, 2.0, 3.0}) {
            const double a = detail::green_kernel_oscillatory(alpha, 1.0, r, 1e-9);
            const double b = detail::green_kernel_propertime(alpha, 1.0, r, 1e-9);
            CHECK(a == doctest::Approx(b).epsilon(1e-7));
        }
    }
}

TEST_CASE("gradient identity residual with step-halving study") {
    // identity is exact; the finite-difference residual must sit at the
    // quadrature-noise floor for both h and h/2
    for (auto [chi, r] : std::vector<std::pair<double, double>>{{0.5, 1.0}, {0.25, 2.0}, {1.0, 0.5}}) {
        CHECK(green_gradient_identity_residual(chi, r) < 1e-5);
        const double varpi = 1.0 / (1.0 + 2.0 * chi);
        const double h = 0.5e-3 * std::max(r, 1.0); // halved step
        const double d = (green_kernel(2 + 2 * chi, 1.0, r + h) -
                          green_kernel(2 + 2 * chi, 1.0, r - h)) /
                         (2.0 * h);
        const double rhs = -(r * varpi / 2.0) * green_kernel(1 + 2 * chi, 1.0, r);
        CHECK(std::abs(d - rhs) / std::abs(rhs) < 1e-5);
    }
}

TEST_CASE("KernelTable invariants and interpolation accuracy") {
    KernelTable tab(2.0, 1.0, 16.0 / 2560.0, 48.0, 512);
    // positivity and monotone decrease are construction-checked; spot values
    for (double r : {0.02, 0.31, 1.7, 4.4, 9.9}) {
        CHECK(tab(r) == doctest::Approx(green_kernel(2.0, 1.0, r)).epsilon(1e-6));
    }
    // tail extrapolation stays positive and decreasing
    CHECK(tab(60.0) > 0.0);
    CHECK(tab(60.0) < tab(49.0));
    // alpha = 1 construction runs the BesselK0 cross-check internally
    CHECK_NOTHROW(KernelTable(1.0, 1.0, 0.01, 30.0, 256));
}

TEST_CASE("semigroup: lattice convolution of G1 with itself matches G2") {
    const double L = 32.0;
    const int N = 1024;
    GridSpec g{L, N, 1, 1.0};
    const double a = g.spacing();
    Field g1(g);
    KernelTable t1(1.0, 1.0, a / 20.0, 3.0 * L, 512);
    for (int ix = 0; ix < N; ++ix) {
        for (int iy = 0; iy < N; ++iy) {
            const double r = std::hypot(g.coord(ix), g.coord(iy));
            // cell average over the log-singular origin cell
            if (r == 0.0) {
                double s = 0.0;
                for (int u = 0; u < 4; ++u)
                    for (int v = 0; v < 4; ++v)
                        s += t1(std::hypot((u + 0.5) / 4.0 * a / 2, (v + 0.5) / 4.0 * a / 2));
                g1.at(0, ix, iy) = s / 16.0;
            } else {
                g1.at(0, ix, iy) = t1(r);
            }
        }
    }
    // (G1 * G1)(x) = sum_y a^2 g1(x-y) g1(y), windowed where g1 has decayed
    for (double r : {0.1, 0.5, 1.0, 2.0, 3.0}) {
        const int ix = static_cast<int>(std::lround(r / a));
        double conv = 0.0;
        // direct sum is O(N^2) per point; restrict to a window where g1 decays
        const int W = static_cast<int>(std::lround(18.0 / a));
        for (int ux = -W; ux <= W; ++ux) {
            for (int uy = -W; uy <= W; ++uy) {
                const int jx = ((ux % N) + N) % N;
                const int jy = ((uy % N) + N) % N;
                const int kx = (((ix - ux) % N) + N) % N;
                const int ky = (((-uy) % N) + N) % N;
                conv += g1.at(0, jx, jy) * g1.at(0, kx, ky);
            }
        }
        conv *= a * a;
        const double want = green_kernel(2.0, 1.0, ix * a);
        CHECK(conv == doctest::Approx(want).epsilon(0.01));
    }
}

TEST_CASE("make_cutoff examples") {
    auto f = make_cutoff("exp-sqrt", 1.0, 1.0);
    CHECK(f.f(0.0, 0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(make_cutoff("exp-sqrt", 2.1, 1.0), std::invalid_argument);
    auto fh = make_cutoff("exp-sqrt", 0.5, 1.0);
    // radial identity witness computed at construction
    CHECK(fh.fprime_integral == doctest::Approx(-M_PI * std::exp(-0.5)).epsilon(1e-8));
    CHECK_THROWS_AS(make_cutoff("no-such-family", 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("cutoff scaling: smaller b gives a pointwise larger cut-off") {
    auto f1 = make_cutoff("exp-sqrt", 1.0, 1.0);
    auto f2 = make_cutoff("exp-sqrt", 0.5, 1.0);
    for (double s = 0.0; s < 100.0; s += 0.7) CHECK(f2.ftilde(s) >= f1.ftilde(s));
}

TEST_CASE("flat-top family satisfies CO and is exactly 1 inside the top") {
    auto f = make_cutoff("flat-top", 0.5, 1.0, 3.0);
    CHECK(f.f(0.0, 0.0) == 1.0);
    CHECK(f.f(2.0, 2.0) == 1.0);      // |x| = 2.83 < 3
    CHECK(f.f(4.0, 0.0) < 1.0);
    for (double s = 0.0; s < 200.0; s += 0.3) CHECK(f.ftilde_prime(s) <= 0.0);
    CHECK(f.fprime_integral == doctest::Approx(-M_PI).epsilon(1e-7));
}
