#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

#include "esq/harness.hpp"

using namespace esq;
using nlohmann::json;

namespace {

ExperimentConfig small_zero_config() {
    ExperimentConfig c;
    c.grid = {16.0, 32, 1, 1.0};
    c.potential_family = "zero";
    c.potential_params = {};
    c.replicas = 400;
    c.master_seed = 321;
    return c;
}

} // namespace

TEST_CASE("config validation reports field paths") {
    ExperimentConfig c = small_zero_config();
    CHECK_NOTHROW(c.validate());

    ExperimentConfig bad = c;
    bad.grid.N = 33;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("grid:"), std::invalid_argument);

    bad = c;
    bad.potential_family = "unknown";
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("potential:"), std::invalid_argument);

    bad = c;
    bad.cutoff_b = 3.0; // b^2 >= 4 m^2
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("cutoff:"), std::invalid_argument);

    bad = c;
    bad.replicas = 10;
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("replicas"), std::invalid_argument);
}

TEST_CASE("config JSON round trip") {
    ExperimentConfig c = small_zero_config();
    c.solver.method = SolveMethod::newton;
    c.cutoff_kind = "exp-sqrt";
    auto j = c.to_json();
    auto back = ExperimentConfig::from_json(j);
    CHECK(back.to_json() == j);
    CHECK(back.grid.N == 32);
    CHECK(back.solver.method == SolveMethod::newton);

    json malformed = j;
    malformed["solver"]["method"] = "leapfrog";
    CHECK_THROWS_AS(ExperimentConfig::from_json(malformed), std::invalid_argument);
}

TEST_CASE("determinism: identical config and seed give identical reports") {
    ExperimentConfig c = small_zero_config();
    auto r1 = run_reduction_experiment(c);
    auto r2 = run_reduction_experiment(c);
    CHECK(r1.to_json().dump() == r2.to_json().dump()); // bitwise on serialized values
}

TEST_CASE("self-normalization: the h = 1 row is exactly 1") {
    ExperimentConfig c = small_zero_config();
    auto r = run_reduction_experiment(c);
    REQUIRE(!r.rows.empty());
    CHECK(r.rows[0].h_tag == "1");
    CHECK(r.rows[0].estimate == 1.0);
    CHECK(r.rows[0].se == 0.0);
}

TEST_CASE("linear case: weighted estimate matches the lattice sum within 4 SE") {
    ExperimentConfig c = small_zero_config();
    c.grid = {16.0, 64, 1, 1.0};
    c.replicas = 800;
    auto r = run_reduction_experiment(c);
    CHECK(r.replicas_converged == c.replicas);
    CHECK(r.Zf_estimate == 1.0); // V = 0: all weights one
    double est = 0.0, se = 0.0;
    for (const auto &row : r.rows)
        if (row.h_tag == "y^2") {
            est = row.estimate;
            se = row.se;
        }
    const double lattice = lattice_symbol_sum(c.grid, 1.0);
    CHECK(std::abs(est - lattice) < 4.0 * se);
    // and kappa targets land within the MC noise (continuum vs lattice bias is
    // below the criterion-1 1% tolerance)
    CHECK(r.max_abs_z < 4.5);
}

TEST_CASE("jackknife SE shrinks like M^(-1/2) within a factor 2") {
    double se_prev = 0.0;
    for (int M : {400, 1600, 6400}) {
        ExperimentConfig c = small_zero_config();
        c.grid = {16.0, 16, 1, 1.0};
        c.replicas = M;
        auto r = run_reduction_experiment(c);
        double se = 0.0;
        for (const auto &row : r.rows)
            if (row.h_tag == "y^2") se = row.se;
        if (se_prev > 0.0) {
            const double ratio = se_prev / se; // expect ~2
            CHECK(ratio > 1.0);
            CHECK(ratio < 4.0);
        }
        se_prev = se;
    }
}

TEST_CASE("quartic weighted reduction at desk scale matches gibbs within 4 SE") {
    ExperimentConfig c;
    c.grid = {16.0, 64, 1, 1.0};
    c.potential_family = "quartic";
    c.potential_params = {0.2};
    c.cutoff_kind = "exp-sqrt1";
    c.cutoff_b = 1.0;
    c.replicas = 600;
    c.master_seed = 99;
    c.solver.residual_tolerance = 1e-8;
    auto r = run_reduction_experiment(c);
    CHECK(r.replicas_converged == c.replicas);
    CHECK(!r.nonuniqueness_flag);
    CHECK(r.Zf_estimate < 1.0); // log Upsilon <= 0
    CHECK(r.Zf_estimate > 0.0);
    // odd moments vanish by symmetry; y^2, y^4 hit the gibbs targets
    for (const auto &row : r.rows)
        if (row.h_tag == "y" || row.h_tag == "y^2" || row.h_tag == "y^3" || row.h_tag == "y^4") {
            CAPTURE(row.h_tag);
            CHECK(std::abs(row.z) < 4.0);
        }
}

TEST_CASE("excessive non-convergence aborts with diagnostics") {
    ExperimentConfig c;
    c.grid = {16.0, 16, 1, 1.0};
    c.potential_family = "quartic";
    c.potential_params = {0.2};
    c.replicas = 100;
    c.solver.max_iterations = 1; // force failure
    c.solver.residual_tolerance = 1e-12;
    CHECK_THROWS_WITH_AS(run_reduction_experiment(c), doctest::Contains("non-convergence"),
                         std::runtime_error);
}

TEST_CASE("decorrelation probe: exact sum, MC agreement, decay in the radius") {
    ExperimentConfig c = small_zero_config();
    c.grid = {16.0, 64, 1, 1.0};
    c.cutoff_b = 0.5;
    c.replicas = 600;
    auto rep = run_decorrelation_probe(c, {0.0, 2.0, 5.0});
    REQUIRE(rep.rows.size() == 3);
    // r = 0: full overlap, nonzero
    CHECK(std::abs(rep.rows[0].exact_covariance) > 1e-3);
    // sampled covariance matches the exact lattice sum within 4 SE
    for (const auto &row : rep.rows) {
        CAPTURE(row.flat_top_radius);
        CHECK(std::abs(row.sampled_covariance - row.exact_covariance) < 4.0 * row.sampled_se);
    }
    // decay as the flat top grows
    CHECK(std::abs(rep.rows[2].exact_covariance) < std::abs(rep.rows[0].exact_covariance));
    // far top: support of f' misses the kernel mass entirely
    ExperimentConfig cw = c;
    cw.grid = {32.0, 128, 1, 1.0};
    auto far = run_decorrelation_probe(cw, {13.0});
    CHECK(std::abs(far.rows[0].exact_covariance) < 1e-6);
}

TEST_CASE("density route comparison on a small grid") {
    ExperimentConfig c;
    c.grid = {16.0, 8, 1, 1.0};
    c.potential_family = "quartic";
    c.potential_params = {0.2};
    c.replicas = 800;
    c.master_seed = 2026;
    auto rep = run_density_route_comparison(c);
    CHECK(rep.negative_lambda_draws == 0);
    CHECK(std::abs(rep.lambda_mean - 1.0) < 4.0 * rep.lambda_se);
    for (double z : rep.route_z) CHECK(std::abs(z) < 4.0);
}

TEST_CASE("trend machinery on the linear case sits at the statistical floor") {
    ExperimentConfig c = small_zero_config();
    c.replicas = 400;
    auto rep = run_cutoff_removal_trend(c, {1.0, 0.5}, {{16.0, 32}, {32.0, 64}});
    REQUIRE(rep.rows.size() == 2);
    for (const auto &row : rep.rows) CHECK(row.max_abs_z < 4.5);
    // degenerate single-b sequence reduces to one row
    auto one = run_cutoff_removal_trend(c, {1.0}, {{16.0, 32}});
    CHECK(one.rows.size() == 1);
    CHECK(one.nonincreasing_within_2se);
}

TEST_CASE("trend rejects non-C potentials and out-of-bound b") {
    ExperimentConfig c = small_zero_config();
    c.potential_family = "trig_polynomial";
    c.potential_params = {1.5, 0.0, 1.5, 0.0, 0.0};
    CHECK_THROWS_AS(run_cutoff_removal_trend(c, {1.0}, {{16.0, 32}}), std::invalid_argument);
    ExperimentConfig z = small_zero_config();
    CHECK_THROWS_AS(run_cutoff_removal_trend(z, {2.5}, {{16.0, 32}}), std::invalid_argument);
}

TEST_CASE("config file loading and validation errors") {
    const char *path = "test_harness_cfg.json";
    {
        std::ofstream out(path);
        out << small_zero_config().to_json().dump(2);
    }
    auto c = ExperimentConfig::from_file(path);
    CHECK_NOTHROW(c.validate());
    std::remove(path);
    CHECK_THROWS_AS(ExperimentConfig::from_file("no_such_file.json"), std::invalid_argument);
}
