#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "esq/potentials.hpp"

using namespace esq;

TEST_CASE("zero potential carries every tag") {
    auto p = builtin_potential("zero", {});
    CHECK(p.has(HypTag::C));
    CHECK(p.has(HypTag::QC));
    CHECK(p.has(HypTag::V_lambda));
    CHECK(p.has(HypTag::bounded));
    CHECK(p.V(Vec::Constant(1, 3.0)) == 0.0);
}

TEST_CASE("quartic gradient value") {
    auto p = builtin_potential("quartic", {0.1});
    CHECK(p.gradV(Vec::Constant(1, 2.0))[0] == doctest::Approx(3.2).epsilon(1e-14));
    CHECK(p.has(HypTag::C));
    CHECK(p.has(HypTag::V_lambda));
    CHECK(p.vlambda->lambda == 0.1);
}

TEST_CASE("trig polynomial 1 + cos(y): bounded Hessian, QC with constant H") {
    auto p = builtin_potential("trig_polynomial", {1.0, 1.0, 0.0});
    for (double y = -10.0; y <= 10.0; y += 0.37) {
        CHECK(p.V(Vec::Constant(1, y)) == doctest::Approx(1.0 + std::cos(y)).epsilon(1e-12));
        CHECK(std::abs(p.hessV(Vec::Constant(1, y))(0, 0)) <= 1.0 + 1e-12);
    }
    CHECK(p.has(HypTag::QC));
    REQUIRE(p.qc_bound.has_value());
    // sampled probe over y in [-10,10], r in [0,10] directly
    auto rep = check_hypothesis(p, HypTag::QC);
    CHECK(rep.pass);
}

TEST_CASE("check_hypothesis examples") {
    auto convex = builtin_potential("quadratic", {2.0}); // V = y^2
    CHECK(check_hypothesis(convex, HypTag::C).pass);

    auto illegal = builtin_potential("quadratic", {-2.0}); // V = -y^2, not positive
    CHECK(illegal.tags.empty());
    CHECK(!illegal.warnings.empty());
    auto rep = check_hypothesis(illegal, HypTag::C);
    CHECK(!rep.pass);
    CHECK(rep.which == "positivity");
    CHECK(!rep.first_counterexample.empty());

    // V = sin(y) + 0.1 y^4: QC holds with a fitted exponential H
    Potential p;
    p.n = 1;
    p.family = "custom";
    p.V = [](const Vec &y) { return std::sin(y[0]) + 0.1 * std::pow(y[0], 4); };
    p.gradV = [](const Vec &y) {
        return Vec(Vec::Constant(1, std::cos(y[0]) + 0.4 * std::pow(y[0], 3)));
    };
    p.hessV = [](const Vec &y) {
        return Mat(Mat::Constant(1, 1, -std::sin(y[0]) + 1.2 * y[0] * y[0]));
    };
    auto qc = check_hypothesis(p, HypTag::QC);
    CHECK(qc.pass);
    REQUIRE(qc.fitted_H.has_value());
    CHECK(qc.fitted_H->first > 0.0);
}

TEST_CASE("derivative consistency per family") {
    for (auto [name, params] :
         std::vector<std::pair<std::string, std::vector<double>>>{
             {"quadratic", {0.7}},
             {"quartic", {0.2}},
             {"quartic_plus_bounded", {0.1, 0.5}},
             {"trig_polynomial", {2.0, 1.0, 0.5, 0.3, -0.2}}}) {
        auto p = builtin_potential(name, params);
        auto [gerr, herr] = derivative_consistency(p, 1000);
        CAPTURE(name);
        CHECK(gerr < 1e-6);
        CHECK(herr < 1e-6);
    }
}

TEST_CASE("tag monotonicity: C potentials pass QC with H = |gradV| + 1") {
    for (auto [name, params] : std::vector<std::pair<std::string, std::vector<double>>>{
             {"zero", {}}, {"quadratic", {1.0}}, {"quartic", {0.3}}}) {
        auto p = builtin_potential(name, params);
        REQUIRE(p.has(HypTag::C));
        Potential q = p;
        q.qc_bound = [&p](const Vec &y) { return p.gradV(y).norm() + 1.0; };
        auto rep = check_hypothesis(q, HypTag::QC);
        CAPTURE(name);
        CHECK(rep.pass);
    }
}

TEST_CASE("quartic_plus_bounded is V_lambda but loses C for large bounded part") {
    auto p = builtin_potential("quartic_plus_bounded", {0.05, 3.0});
    CHECK(p.has(HypTag::QC));
    CHECK(p.has(HypTag::V_lambda));
    // hess = -3 cos(y) + 0.6 y^2 dips below -2 m^2 = -2 near y = 0
    CHECK(!p.has(HypTag::C));
    CHECK(check_hypothesis(p, HypTag::V_lambda).pass);
}

TEST_CASE("probe failure downgrades tags with a warning, not silently") {
    auto p = builtin_potential("quadratic", {-1.0});
    CHECK(!p.has(HypTag::C));
    CHECK(!p.has(HypTag::QC));
    bool found = false;
    for (const auto &w : p.warnings)
        if (w.find("not positive") != std::string::npos || w.find("downgraded") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("min convexity eigenvalue scales with m2") {
    auto p = builtin_potential("trig_polynomial", {1.5, 0.0, 1.5, 0.0, 0.0}); // 1.5(1+cos 2y)
    // hessV = -6 cos(2y): needs 2 m^2 > 6 for Hypothesis C
    CHECK(min_convexity_eigenvalue(p, 1.0) < 0.0);
    CHECK(min_convexity_eigenvalue(p, 4.0) > 0.0);
}

TEST_CASE("unknown family throws") {
    CHECK_THROWS_AS(builtin_potential("pentatonic", {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(builtin_potential("quartic", {}), std::invalid_argument);
}
