#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "esq/fields.hpp"
#include "esq/gibbs.hpp"
#include "esq/girsanov.hpp"
#include "esq/solver.hpp"

namespace esq {

/// Run `body(i)` for i in [0, n) on a worker pool; worker count from
/// ESQ_WORKERS when set, hardware concurrency otherwise. Each index owns its
/// output slot, so results are deterministic regardless of scheduling.
void parallel_for(int n, const std::function<void(int)> &body);

struct ExperimentConfig {
    int schema_version = 1;
    GridSpec grid;
    std::string potential_family = "quartic";
    std::vector<double> potential_params = {0.2};
    std::string cutoff_kind = "exp-sqrt1";
    double cutoff_b = 1.0;
    double cutoff_flat_top_radius = 0.0;
    SolveConfig solver;
    int replicas = 400;
    std::uint64_t master_seed = 1;
    int h_max_degree = 4;
    int histogram_bins = 32;
    std::string output_dir = "out";

    void validate() const; // throws std::invalid_argument with a field path
    Potential build_potential() const;
    CutOff build_cutoff() const;

    static ExperimentConfig from_json(const nlohmann::json &j);
    static ExperimentConfig from_file(const std::string &path);
    nlohmann::json to_json() const;
};

struct WeightedSample {
    Vec phi0;               // (I xi + phibar)(0)
    double log_upsilon = 0; // 4 a^2 sum ftilde' V(phi), always <= 0
    std::uint64_t seed = 0;
    bool converged = false;
    int solution_count = 1; // from multistart when enabled
    int iterations = 0;
};

struct MomentRow {
    std::string h_tag;
    double estimate = 0.0;
    double se = 0.0;
    double target = 0.0;
    double target_error = 0.0;
    double z = 0.0;
};

struct ReductionReport {
    std::vector<MomentRow> rows;
    double Zf_estimate = 1.0;
    double Zf_se = 0.0;
    int replicas_total = 0;
    int replicas_converged = 0;
    bool nonuniqueness_flag = false; // QC-only run with > 1 cluster on some draw
    double tv_surrogate = 0.0;       // 32-bin weighted histogram vs kappa bins
    double max_abs_z = 0.0;
    nlohmann::json to_json() const;
    void write_csv(const std::string &path) const;
};

/// Monte Carlo over noise draws: solve, weight by Upsilon_f, compare the
/// self-normalized moments of phi(0) against gibbs quadrature (weighted=false
/// drops the weight, as in the cut-off-removal statement). Aborts when more
/// than 5% of replicas fail to converge.
ReductionReport run_reduction_experiment(const ExperimentConfig &cfg, bool weighted = true);

struct TrendRow {
    double b = 0.0;
    double L = 0.0;
    int N = 0;
    double max_abs_z = 0.0;
    double tv_surrogate = 0.0;
    double distance = 0.0; // max(|z|) combined diagnostic
    double distance_se = 0.0;
};

struct TrendReport {
    std::vector<TrendRow> rows;
    bool nonincreasing_within_2se = true;
    nlohmann::json to_json() const;
};

/// Unweighted phi(0) statistics along a decreasing cut-off rate sequence;
/// grids are scaled so exp(-b L / 2) stays below the torus guard.
TrendReport run_cutoff_removal_trend(const ExperimentConfig &cfg,
                                     const std::vector<double> &b_sequence,
                                     const std::vector<std::pair<double, int>> &grids);

struct DecorrelationRow {
    double flat_top_radius = 0.0;
    double exact_covariance = 0.0;   // V = 0 lattice sum
    double sampled_covariance = 0.0; // MC (V = 0) or Cov(h(phi0), log Upsilon)
    double sampled_se = 0.0;
};

struct DecorrelationReport {
    std::vector<DecorrelationRow> rows;
    nlohmann::json to_json() const;
};

/// Flat-top cut-offs of growing top radius: the covariance between the origin
/// observable and the boundary weight decays as the top widens.
DecorrelationReport run_decorrelation_probe(const ExperimentConfig &cfg,
                                            const std::vector<double> &radii);

struct GirsanovDrawRow {
    std::uint64_t seed = 0;
    double det2 = 0.0;
    double delta = 0.0;
    double norm_sq = 0.0;
    double lambda = 0.0;
    double upsilon = 0.0;
};

struct DensityRouteReport {
    double lambda_mean = 0.0;
    double lambda_se = 0.0;
    std::vector<MomentRow> density_rows; // E[h Ups Lambda]/E[Ups Lambda]
    std::vector<MomentRow> strong_rows;  // E[h Ups]/E[Ups]
    std::vector<double> route_z;         // per h, combined-SE z between routes
    int negative_lambda_draws = 0;
    std::vector<GirsanovDrawRow> draws;  // per-draw CSV surface
    nlohmann::json to_json() const;
    void write_draws_csv(const std::string &path) const;
};

/// Criterion-3 machinery: Gaussian MC with the Lambda_U density versus the
/// strong-solution pushforward on the same (coarse) lattice.
DensityRouteReport run_density_route_comparison(const ExperimentConfig &cfg);

/// Scalar part of a SolveReport (field dumps go through Field::save).
nlohmann::json solve_report_scalars(const SolveReport &rep);

} // namespace esq
