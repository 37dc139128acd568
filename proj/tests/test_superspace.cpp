#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "esq/superspace.hpp"

using namespace esq;

namespace {

// the supersymmetric quadratic form |x|^2 + 4 theta thetabar
SuperFunction quadratic_form() {
    return SuperFunction::radial_shape([](double s) { return s; }, [](double) { return 1.0; });
}

} // namespace

TEST_CASE("berezin integral conventions") {
    SuperFunction F;
    F.f_empty = SuperFunction::zero_fn();
    F.f_theta = SuperFunction::zero_fn();
    F.f_thetabar = SuperFunction::zero_fn();
    F.f_thetathetabar = [](double, double) { return 1.0; };
    CHECK(berezin_integral(F, BerezinWeight::delta()) == -1.0);

    SuperFunction G = F;
    G.f_thetathetabar = SuperFunction::zero_fn();
    CHECK(berezin_integral(G, BerezinWeight::delta()) == 0.0);
    CHECK(berezin_integral(G, BerezinWeight::callable([](double, double) { return 1.0; })) ==
          doctest::Approx(0.0));
}

TEST_CASE("berezin of the cut-off shape recovers 4 pi ftilde(0)") {
    auto f = make_cutoff("exp-sqrt", 1.0, 1.0);
    auto F = SuperFunction::radial_shape([&](double s) { return f.ftilde(s); },
                                         [&](double s) { return f.ftilde_prime(s); });
    const double got =
        berezin_integral(F, BerezinWeight::callable([](double, double) { return 1.0; }), 60.0);
    CHECK(got == doctest::Approx(4.0 * M_PI * std::exp(-1.0)).epsilon(1e-7));
}

TEST_CASE("Q and Qbar annihilate the quadratic form") {
    auto F = quadratic_form();
    for (bool conj : {false, true}) {
        auto Q = apply_Q(F, conj);
        for (int j = 0; j < 2; ++j) {
            for (double x : {0.3, 1.5}) {
                for (double y : {-0.7, 0.9}) {
                    CHECK(std::abs(Q[j].f_empty(x, y)) < 1e-12);
                    CHECK(std::abs(Q[j].f_theta(x, y)) < 1e-12);
                    CHECK(std::abs(Q[j].f_thetabar(x, y)) < 1e-12);
                    CHECK(std::abs(Q[j].f_thetathetabar(x, y)) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("Q annihilates every radial shape g(|x|^2 + 4 theta thetabar)") {
    auto f = make_cutoff("exp-sqrt1", 0.7, 1.0);
    auto F = SuperFunction::radial_shape([&](double s) { return f.ftilde(s); },
                                         [&](double s) { return f.ftilde_prime(s); });
    auto rep = susy_check(F, 1e-5);
    CHECK(rep.pass);
    CHECK(rep.max_Q < 1e-10);
    CHECK(rep.max_Qbar < 1e-10);
}

TEST_CASE("susy_check passes on C_Phi (kernel gradient identity at work)") {
    SuperCovariance cov(0.5, 1.0);
    auto rep = susy_check(cov.C_phi_superfunction(), 1e-5);
    CHECK(rep.pass);
}

TEST_CASE("susy_check counterexamples") {
    // theta g(x) with generic g is not supersymmetric
    SuperFunction F;
    F.f_empty = SuperFunction::zero_fn();
    F.f_theta = [](double a, double b) { return 1.0 + a + b * b; };
    F.f_thetabar = SuperFunction::zero_fn();
    F.f_thetathetabar = SuperFunction::zero_fn();
    auto rep = susy_check(F, 1e-5);
    CHECK(!rep.pass);
    CHECK(rep.max_Qbar > 1e-5); // Qbar sees f_theta
    CHECK(!rep.first_fail.empty());

    // x1 theta thetabar fails rotational invariance
    SuperFunction G;
    G.f_empty = SuperFunction::zero_fn();
    G.f_theta = SuperFunction::zero_fn();
    G.f_thetabar = SuperFunction::zero_fn();
    G.f_thetathetabar = [](double a, double) { return a; };
    auto rep2 = susy_check(G, 1e-5);
    CHECK(!rep2.pass);
    CHECK(rep2.max_rotation > 1e-5);
}

TEST_CASE("flow composition is additive to first order") {
    // tau(t) = exp(t (b.Qbar + bbar.Q)): tau(t) tau(s) F - tau(t+s) F = O(t s)
    auto f = make_cutoff("exp-sqrt1", 1.0, 1.0);
    SuperFunction F;
    F.f_empty = [&](double a, double b) { return f.f(a, b); };
    F.f_theta = [](double a, double b) { return std::sin(a) * std::exp(-0.3 * (a * a + b * b)); };
    F.f_thetabar = [](double a, double b) { return std::cos(b) * std::exp(-0.3 * (a * a + b * b)); };
    F.f_thetathetabar = [&](double a, double b) { return f.fprime(a, b); };
    const double bx = 0.4, by = -0.2, cx = 0.1, cy = 0.3;
    auto D = [&](const SuperFunction &G) {
        auto Q = apply_Q(G, false);
        auto Qb = apply_Q(G, true);
        SuperFunction out;
        auto lin = [&](auto comp) {
            return [=](double a, double b) {
                return bx * (Qb[0].*comp)(a, b) + by * (Qb[1].*comp)(a, b) +
                       cx * (Q[0].*comp)(a, b) + cy * (Q[1].*comp)(a, b);
            };
        };
        out.f_empty = lin(&SuperFunction::f_empty);
        out.f_theta = lin(&SuperFunction::f_theta);
        out.f_thetabar = lin(&SuperFunction::f_thetabar);
        out.f_thetathetabar = lin(&SuperFunction::f_thetathetabar);
        return out;
    };
    // evaluate [tau(t)tau(s) - tau(t+s)]F = t s D(DF) + higher order at a point
    SuperFunction DF = D(F);
    SuperFunction DDF = D(DF);
    const double x0 = 0.8, y0 = -0.5;
    for (double t : {0.05, 0.025}) {
        const double s = t;
        // first-order flows
        auto val = [&](const SuperFunction &G) { return G.f_thetathetabar(x0, y0); };
        const double tau_ts = val(F) + (t + s) * val(DF) + t * s * val(DDF); // tau(t)tau(s) to 2nd
        const double tau_sum = val(F) + (t + s) * val(DF);
        const double defect = std::abs(tau_ts - tau_sum);
        CHECK(defect <= t * s * std::abs(val(DDF)) + 1e-12);
        CHECK(defect / std::max(std::abs(val(F)), 1e-12) < 10.0 * t * s);
    }
}

TEST_CASE("polynomial composition truncates exactly at first order") {
    SuperFunction F;
    F.f_empty = [](double a, double b) { return 1.0 + a + 0.5 * b; };
    F.f_theta = [](double a, double) { return 2.0 * a; };
    F.f_thetabar = [](double, double b) { return b; };
    F.f_thetathetabar = [](double a, double b) { return a * b; };
    auto r = [](double y) { return y * y * y; };
    auto rp = [](double y) { return 3.0 * y * y; };
    auto G = F.compose(r, rp);
    for (double a : {0.2, -0.4}) {
        for (double b : {0.1, 0.8}) {
            const double f0 = F.f_empty(a, b);
            CHECK(G.f_empty(a, b) == doctest::Approx(r(f0)).epsilon(1e-14));
            CHECK(G.f_theta(a, b) == doctest::Approx(rp(f0) * F.f_theta(a, b)).epsilon(1e-14));
            CHECK(G.f_thetathetabar(a, b) ==
                  doctest::Approx(rp(f0) * F.f_thetathetabar(a, b)).epsilon(1e-14));
        }
    }
}

TEST_CASE("wick expectation: single pairing, odd vanishing, Isserlis projection") {
    SuperCovariance cov(0.5, 1.0);

    // two insertions: exactly C_Phi(x1 - x2, theta1 - theta2, ...)
    std::vector<WickInsertion> two{{0.0, 0.0, 0, 0}, {1.3, 0.0, 1, 1}};
    auto e2 = wick_superfield_expectation(two, cov);
    CHECK(e2.coefficient(0) == doctest::Approx(cov.A(1.3)).epsilon(1e-12));
    // -(t0-t1)(tb0-tb1) in the ordered basis (t0, tb0, t1, tb1 -> g0..g3):
    // -[g0g1] + [g0g3] - [g1g2] - [g2g3]
    CHECK(e2.coefficient(0b0011u) == doctest::Approx(-cov.B(1.3)).epsilon(1e-12));
    CHECK(e2.coefficient(0b1100u) == doctest::Approx(-cov.B(1.3)).epsilon(1e-12));
    CHECK(e2.coefficient(0b1001u) == doctest::Approx(cov.B(1.3)).epsilon(1e-12));
    CHECK(e2.coefficient(0b0110u) == doctest::Approx(-cov.B(1.3)).epsilon(1e-12));

    // odd count
    std::vector<WickInsertion> one{{0.5, 0.0, 0, 0}};
    CHECK(wick_superfield_expectation(one, cov).is_zero());

    // four insertions, scalar part = Isserlis over A
    std::vector<WickInsertion> four{
        {0.0, 0.0, 0, 0}, {1.0, 0.0, 1, 1}, {0.0, 1.5, 2, 2}, {0.7, 0.7, 3, 3}};
    auto e4 = wick_superfield_expectation(four, cov);
    auto d = [&](int i, int j) {
        return std::hypot(four[i].x0 - four[j].x0, four[i].x1 - four[j].x1);
    };
    const double isserlis = cov.A(d(0, 1)) * cov.A(d(2, 3)) + cov.A(d(0, 2)) * cov.A(d(1, 3)) +
                            cov.A(d(0, 3)) * cov.A(d(1, 2));
    CHECK(e4.coefficient(0) == doctest::Approx(isserlis).epsilon(1e-12));

    // guard
    std::vector<WickInsertion> many(12);
    CHECK_THROWS_AS(wick_superfield_expectation(many, cov), std::invalid_argument);
}

TEST_CASE("reduction formula for two cut-offs at chi = 0.5") {
    SuperCovariance cov(0.5, 1.0);
    for (double b : {1.0, 0.5}) {
        auto f = make_cutoff("exp-sqrt1", b, 1.0);
        auto [lhs, rhs] = reduction_formula_check(cov, f);
        CAPTURE(b);
        CHECK(rhs == doctest::Approx(4.0 * M_PI * cov.A0()).epsilon(1e-12));
        CHECK(std::abs(lhs - rhs) / std::abs(rhs) < 1e-4);
    }
}

TEST_CASE("verify_pol_eq: order zero is exact") {
    auto f = make_cutoff("exp-sqrt1", 1.0, 1.0);
    auto rep = verify_pol_eq({0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, 0, 0.5, f);
    CHECK(rep.lhs == doctest::Approx(rep.rhs).epsilon(1e-14));
}

TEST_CASE("verify_pol_eq (1, y^2, 1): engine matches the hand Wick expansion") {
    // hand expansion: LHS = 4 A0 int f' dx = -4 pi A0 ftilde(0); the fw/omega
    // and fermion blocks cancel exactly
    const double chi = 0.5;
    SuperCovariance cov(chi, 1.0);
    auto f = make_cutoff("exp-sqrt", 1.0, 1.0); // ftilde(0) = e^-1: exposes the factor
    auto rep = verify_pol_eq({1.0}, {0.0, 0.0, 1.0}, 1, chi, f);
    const double hand = -4.0 * M_PI * cov.A0() * std::exp(-1.0);
    CHECK(rep.lhs == doctest::Approx(hand).epsilon(1e-6));
    // the identity against -4 pi P(phi(0)) requires ftilde(0) = 1
    auto f1 = make_cutoff("exp-sqrt1", 1.0, 1.0);
    auto rep1 = verify_pol_eq({1.0}, {0.0, 0.0, 1.0}, 1, chi, f1);
    CHECK(rep1.gap_rel < 1e-6);
}

TEST_CASE("verify_pol_eq (y^2, y^2, 1): full pairing enumeration at 6 insertions") {
    auto f = make_cutoff("exp-sqrt1", 1.0, 1.0);
    auto rep = verify_pol_eq({0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}, 1, 0.5, f);
    CHECK(rep.gap_rel < 1e-3);
    CHECK(rep.rhs == doctest::Approx(-12.0 * M_PI * std::pow(green_kernel_origin(3.0, 1.0), 2))
                         .epsilon(1e-12));
}

TEST_CASE("verify_pol_eq guards") {
    auto f = make_cutoff("exp-sqrt1", 1.0, 1.0);
    CHECK_THROWS_AS(verify_pol_eq({1.0}, {0.0, 0.0, 1.0}, 3, 0.5, f), std::invalid_argument);
    CHECK_THROWS_AS(verify_pol_eq({1.0}, {0.0, 0.0, 1.0}, 1, -0.5, f), std::invalid_argument);
    Polynomial big(9, 1.0); // degree 8
    CHECK_THROWS_AS(verify_pol_eq(big, big, 2, 0.5, f), std::invalid_argument);
}
