#include "esq/harness.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "esq/numerics.hpp"

namespace esq {

using nlohmann::json;

void parallel_for(int n, const std::function<void(int)> &body) {
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    if (const char *env = std::getenv("ESQ_WORKERS")) workers = std::max(1, std::atoi(env));
    workers = std::clamp(workers, 1, std::max(1, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto &t : pool) t.join();
}

void ExperimentConfig::validate() const {
    if (schema_version != 1)
        throw std::invalid_argument("schema_version: unsupported value " +
                                    std::to_string(schema_version));
    try {
        grid.validate();
    } catch (const std::exception &e) {
        throw std::invalid_argument(std::string("grid: ") + e.what());
    }
    try {
        build_potential();
    } catch (const std::exception &e) {
        throw std::invalid_argument(std::string("potential: ") + e.what());
    }
    try {
        build_cutoff();
    } catch (const std::exception &e) {
        throw std::invalid_argument(std::string("cutoff: ") + e.what());
    }
    if (replicas < 100)
        throw std::invalid_argument("replicas: statistical claims need at least 100");
    if (h_max_degree < 1 || h_max_degree > 4)
        throw std::invalid_argument("h_max_degree: supported range is 1..4");
    if (histogram_bins < 4) throw std::invalid_argument("histogram_bins: need at least 4");
}

Potential ExperimentConfig::build_potential() const {
    return builtin_potential(potential_family, potential_params, grid.n);
}

CutOff ExperimentConfig::build_cutoff() const {
    return make_cutoff(cutoff_kind, cutoff_b, grid.m2, cutoff_flat_top_radius);
}

ExperimentConfig ExperimentConfig::from_json(const json &j) {
    ExperimentConfig c;
    c.schema_version = j.value("schema_version", 1);
    if (j.contains("grid")) {
        const auto &g = j.at("grid");
        c.grid.L = g.value("L", c.grid.L);
        c.grid.N = g.value("N", c.grid.N);
        c.grid.n = g.value("n", c.grid.n);
        c.grid.m2 = g.value("m2", c.grid.m2);
    }
    if (j.contains("potential")) {
        c.potential_family = j.at("potential").value("family", c.potential_family);
        c.potential_params =
            j.at("potential").value("params", c.potential_params);
    }
    if (j.contains("cutoff")) {
        c.cutoff_kind = j.at("cutoff").value("kind", c.cutoff_kind);
        c.cutoff_b = j.at("cutoff").value("b", c.cutoff_b);
        c.cutoff_flat_top_radius =
            j.at("cutoff").value("flat_top_radius", c.cutoff_flat_top_radius);
    }
    if (j.contains("solver")) {
        const auto &s = j.at("solver");
        std::string method = s.value("method", std::string("fixed_point"));
        if (method == "newton")
            c.solver.method = SolveMethod::newton;
        else if (method == "fixed_point")
            c.solver.method = SolveMethod::fixed_point;
        else
            throw std::invalid_argument("solver.method: unknown '" + method + "'");
        c.solver.damping = s.value("damping", c.solver.damping);
        c.solver.max_iterations = s.value("max_iterations", c.solver.max_iterations);
        c.solver.residual_tolerance = s.value("residual_tolerance", c.solver.residual_tolerance);
        c.solver.multistart_count = s.value("multistart_count", c.solver.multistart_count);
        c.solver.initial_scale = s.value("initial_scale", c.solver.initial_scale);
    }
    c.replicas = j.value("replicas", c.replicas);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.h_max_degree = j.value("h_max_degree", c.h_max_degree);
    c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    json j;
    in >> j;
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["grid"] = {{"L", grid.L}, {"N", grid.N}, {"n", grid.n}, {"m2", grid.m2}};
    j["potential"] = {{"family", potential_family}, {"params", potential_params}};
    j["cutoff"] = {{"kind", cutoff_kind},
                   {"b", cutoff_b},
                   {"flat_top_radius", cutoff_flat_top_radius}};
    j["solver"] = {{"method", solver.method == SolveMethod::newton ? "newton" : "fixed_point"},
                   {"damping", solver.damping},
                   {"max_iterations", solver.max_iterations},
                   {"residual_tolerance", solver.residual_tolerance},
                   {"multistart_count", solver.multistart_count},
                   {"initial_scale", solver.initial_scale}};
    j["replicas"] = replicas;
    j["master_seed"] = master_seed;
    j["h_max_degree"] = h_max_degree;
    j["histogram_bins"] = histogram_bins;
    j["output_dir"] = output_dir;
    return j;
}

namespace {

double log_upsilon_of(const Field &phi, const Potential &pot, const CutOff &f) {
    const GridSpec &g = phi.grid;
    const double a2 = g.spacing() * g.spacing();
    Vec y(g.n);
    double s = 0.0;
    for (int ix = 0; ix < g.N; ++ix) {
        const double x0 = g.coord(ix);
        for (int iy = 0; iy < g.N; ++iy) {
            const double x1 = g.coord(iy);
            for (int c = 0; c < g.n; ++c) y[c] = phi.at(c, ix, iy);
            s += f.ftilde_prime(x0 * x0 + x1 * x1) * pot.V(y);
        }
    }
    return 4.0 * s * a2;
}

struct HFunction {
    std::string tag;
    std::function<double(const Vec &)> h;
};

std::vector<HFunction> h_list(int n, int max_degree) {
    std::vector<HFunction> out;
    out.push_back({"1", [](const Vec &) { return 1.0; }});
    for (int d = 1; d <= max_degree; ++d) {
        std::string tag = d == 1 ? "y" : "y^" + std::to_string(d);
        out.push_back({tag, [d](const Vec &y) { return std::pow(y[0], d); }});
    }
    if (n >= 2) out.push_back({"|y|^2", [](const Vec &y) { return y.squaredNorm(); }});
    return out;
}

MomentRow make_row(const std::string &tag, const std::vector<double> &hw,
                   const std::vector<double> &w, GibbsMeasure::Moment target) {
    MomentRow row;
    row.h_tag = tag;
    double Sn = 0.0, Sd = 0.0;
    for (std::size_t i = 0; i < hw.size(); ++i) {
        Sn += hw[i];
        Sd += w[i];
    }
    row.estimate = Sn / Sd;
    row.se = jackknife_ratio_se(hw, w);
    row.target = target.value;
    row.target_error = target.error_estimate;
    const double denom = std::sqrt(row.se * row.se + target.error_estimate * target.error_estimate);
    row.z = denom > 0.0 ? (row.estimate - row.target) / denom : 0.0;
    return row;
}

} // namespace

ReductionReport run_reduction_experiment(const ExperimentConfig &cfg, bool weighted) {
    cfg.validate();
    const Potential pot = cfg.build_potential();
    const CutOff f = cfg.build_cutoff();
    if (!pot.has(HypTag::QC))
        throw std::invalid_argument("run_reduction_experiment: potential must be QC at least");
    const bool is_C = pot.has(HypTag::C);
    const bool multistart = !is_C && cfg.solver.multistart_count >= 2;

    const int M = cfg.replicas;
    std::vector<WeightedSample> samples(M);
    parallel_for(M, [&](int i) {
        NoiseDraw noise = sample_white_noise(cfg.grid, derive_stream_seed(cfg.master_seed, i));
        WeightedSample s;
        s.seed = noise.seed;
        SolveReport rep = multistart ? count_solutions(noise, pot, f, cfg.solver)
                                     : solve(noise, pot, f, cfg.solver);
        s.converged = rep.converged;
        s.iterations = rep.iterations;
        s.solution_count = multistart ? static_cast<int>(rep.distinct_solutions.size()) : 1;
        if (rep.converged) {
            Field phi = apply_fractional_inverse(noise.field, 1.0);
            phi += rep.solution;
            s.phi0 = Vec(cfg.grid.n);
            for (int c = 0; c < cfg.grid.n; ++c) s.phi0[c] = phi.at(c, 0, 0);
            s.log_upsilon = weighted ? log_upsilon_of(phi, pot, f) : 0.0;
        }
        samples[i] = std::move(s);
    });

    ReductionReport rep;
    rep.replicas_total = M;
    std::vector<const WeightedSample *> ok;
    for (const auto &s : samples) {
        if (s.converged) ok.push_back(&s);
        if (s.solution_count > 1) rep.nonuniqueness_flag = true;
    }
    rep.replicas_converged = static_cast<int>(ok.size());
    if (rep.replicas_converged < 0.95 * M)
        throw std::runtime_error("run_reduction_experiment: excessive non-convergence (" +
                                 std::to_string(M - rep.replicas_converged) + "/" +
                                 std::to_string(M) + " replicas failed)");

    const GibbsMeasure kappa(pot, cfg.grid.m2);
    std::vector<double> w(ok.size());
    for (std::size_t i = 0; i < ok.size(); ++i) w[i] = std::exp(ok[i]->log_upsilon);
    auto [zf, zf_se] = mean_and_se(w);
    rep.Zf_estimate = zf;
    rep.Zf_se = zf_se;

    for (const auto &hf : h_list(cfg.grid.n, cfg.h_max_degree)) {
        std::vector<double> hw(ok.size());
        for (std::size_t i = 0; i < ok.size(); ++i) hw[i] = hf.h(ok[i]->phi0) * w[i];
        GibbsMeasure::Moment target =
            hf.tag == "1" ? GibbsMeasure::Moment{1.0, 0.0} : kappa.moment(hf.h);
        MomentRow row = make_row(hf.tag, hw, w, target);
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(row.z));
        rep.rows.push_back(row);
    }

    // 32-bin histogram TV surrogate on the first component (n = 1 focus)
    if (cfg.grid.n == 1) {
        const double sigma = std::sqrt(std::max(kappa.monomial_moment1(2).value, 1e-12));
        const double lo = -4.0 * sigma, hi = 4.0 * sigma;
        const int B = cfg.histogram_bins;
        std::vector<double> emp(B + 1, 0.0); // last slot: out of range
        double wsum = 0.0;
        for (std::size_t i = 0; i < ok.size(); ++i) {
            const double y = ok[i]->phi0[0];
            int b = static_cast<int>((y - lo) / (hi - lo) * B);
            if (y < lo || b >= B) emp[B] += w[i];
            else emp[b] += w[i];
            wsum += w[i];
        }
        double tv = 0.0, covered = 0.0;
        for (int b = 0; b < B; ++b) {
            const double pb = kappa.bin_probability(lo + (hi - lo) * b / B,
                                                    lo + (hi - lo) * (b + 1) / B);
            covered += pb;
            tv += std::abs(emp[b] / wsum - pb);
        }
        tv += std::abs(emp[B] / wsum - (1.0 - covered));
        rep.tv_surrogate = 0.5 * tv;
    }
    return rep;
}

json ReductionReport::to_json() const {
    json rows_j = json::array();
    for (const auto &r : rows)
        rows_j.push_back({{"h", r.h_tag},
                          {"estimate", r.estimate},
                          {"se", r.se},
                          {"target", r.target},
                          {"target_error", r.target_error},
                          {"z", r.z}});
    return json{{"schema_version", 1},
                {"rows", rows_j},
                {"Zf_estimate", Zf_estimate},
                {"Zf_se", Zf_se},
                {"replicas_total", replicas_total},
                {"replicas_converged", replicas_converged},
                {"nonuniqueness_flag", nonuniqueness_flag},
                {"tv_surrogate", tv_surrogate},
                {"max_abs_z", max_abs_z}};
}

void ReductionReport::write_csv(const std::string &path) const {
    std::ofstream out(path);
    out << "h,estimate,se,target,target_error,z\n";
    for (const auto &r : rows)
        out << r.h_tag << "," << r.estimate << "," << r.se << "," << r.target << ","
            << r.target_error << "," << r.z << "\n";
}

TrendReport run_cutoff_removal_trend(const ExperimentConfig &cfg,
                                     const std::vector<double> &b_sequence,
                                     const std::vector<std::pair<double, int>> &grids) {
    if (grids.size() != b_sequence.size())
        throw std::invalid_argument("run_cutoff_removal_trend: one (L, N) pair per b");
    const Potential pot = cfg.build_potential();
    if (!pot.has(HypTag::C))
        throw std::invalid_argument("run_cutoff_removal_trend: potential must be C-tagged");
    TrendReport trend;
    for (std::size_t i = 0; i < b_sequence.size(); ++i) {
        ExperimentConfig c = cfg;
        c.cutoff_b = b_sequence[i];
        c.grid.L = grids[i].first;
        c.grid.N = grids[i].second;
        if (c.cutoff_b * c.cutoff_b >= 4.0 * c.grid.m2)
            throw std::invalid_argument("run_cutoff_removal_trend: b outside the CO bound");
        ReductionReport rr = run_reduction_experiment(c, /*weighted=*/false);
        TrendRow row;
        row.b = c.cutoff_b;
        row.L = c.grid.L;
        row.N = c.grid.N;
        row.max_abs_z = rr.max_abs_z;
        row.tv_surrogate = rr.tv_surrogate;
        row.distance = rr.max_abs_z;
        row.distance_se = 1.0; // |z| carries its own unit scale
        trend.rows.push_back(row);
    }
    for (std::size_t i = 1; i < trend.rows.size(); ++i)
        if (trend.rows[i].distance >
            trend.rows[i - 1].distance + 2.0 * trend.rows[i].distance_se)
            trend.nonincreasing_within_2se = false;
    return trend;
}

json TrendReport::to_json() const {
    json rows_j = json::array();
    for (const auto &r : rows)
        rows_j.push_back({{"b", r.b},
                          {"L", r.L},
                          {"N", r.N},
                          {"max_abs_z", r.max_abs_z},
                          {"tv_surrogate", r.tv_surrogate},
                          {"distance", r.distance}});
    return json{{"schema_version", 1},
                {"rows", rows_j},
                {"nonincreasing_within_2se", nonincreasing_within_2se}};
}

DecorrelationReport run_decorrelation_probe(const ExperimentConfig &cfg,
                                            const std::vector<double> &radii) {
    cfg.validate();
    const Potential pot = cfg.build_potential();
    const bool linear_case = cfg.potential_family == "zero";
    DecorrelationReport out;
    for (double r : radii) {
        CutOff f = make_cutoff("flat-top", cfg.cutoff_b, cfg.grid.m2, r);
        DecorrelationRow row;
        row.flat_top_radius = r;
        // exact lattice sum for the Gaussian case: sum_x f'(x) G2_lattice(x)
        GridSpec g1 = cfg.grid;
        g1.n = 1;
        Field col2 = lattice_inverse_column(g1, 2.0);
        Field fp = cutoff_on_grid(g1, f, /*prime=*/true);
        double exact = 0.0;
        for (std::size_t i = 0; i < col2.values.size(); ++i)
            exact += fp.values[i] * col2.values[i];
        row.exact_covariance = exact;

        const int M = cfg.replicas;
        std::vector<double> xs(M), ys(M);
        if (linear_case) {
            parallel_for(M, [&](int i) {
                NoiseDraw noise =
                    sample_white_noise(cfg.grid, derive_stream_seed(cfg.master_seed, i));
                Field Ixi = apply_fractional_inverse(noise.field, 1.0);
                xs[i] = Ixi.at(0, 0, 0);
                ys[i] = lattice_integral(Ixi, LatticeWeight::fprime, &f)[0];
            });
        } else {
            const CutOff fc = f;
            parallel_for(M, [&](int i) {
                NoiseDraw noise =
                    sample_white_noise(cfg.grid, derive_stream_seed(cfg.master_seed, i));
                SolveReport rep = solve(noise, pot, fc, cfg.solver);
                Field phi = apply_fractional_inverse(noise.field, 1.0);
                phi += rep.solution;
                xs[i] = phi.at(0, 0, 0) * phi.at(0, 0, 0); // h = y^2 observable
                ys[i] = log_upsilon_of(phi, pot, fc);
            });
        }
        // sample covariance and its jackknife SE
        double mx = 0.0, my = 0.0;
        for (int i = 0; i < M; ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= M;
        my /= M;
        std::vector<double> prod(M);
        for (int i = 0; i < M; ++i) prod[i] = (xs[i] - mx) * (ys[i] - my);
        auto [cov, cov_se] = mean_and_se(prod);
        row.sampled_covariance = cov * M / (M - 1.0);
        row.sampled_se = cov_se;
        out.rows.push_back(row);
    }
    return out;
}

json DecorrelationReport::to_json() const {
    json rows_j = json::array();
    for (const auto &r : rows)
        rows_j.push_back({{"flat_top_radius", r.flat_top_radius},
                          {"exact_covariance", r.exact_covariance},
                          {"sampled_covariance", r.sampled_covariance},
                          {"sampled_se", r.sampled_se}});
    return json{{"schema_version", 1}, {"rows", rows_j}};
}

DensityRouteReport run_density_route_comparison(const ExperimentConfig &cfg) {
    cfg.validate();
    const Potential pot = cfg.build_potential();
    const CutOff f = cfg.build_cutoff();
    const int M = cfg.replicas;
    const int n = cfg.grid.n;

    struct Draw {
        double lambda = 0.0, ups_density = 0.0;
        Vec phi0_density, phi0_strong;
        double ups_strong = 0.0;
        bool converged = false;
        GirsanovDrawRow row;
    };
    std::vector<Draw> draws(M);
    parallel_for(M, [&](int i) {
        NoiseDraw noise = sample_white_noise(cfg.grid, derive_stream_seed(cfg.master_seed, i));
        Draw d;
        ShiftOperator shift(pot, f, noise);
        GirsanovEval ev = lambda_u(shift);
        d.row = {noise.seed, ev.det2_value, ev.skorokhod_value, ev.u_norm_sq, ev.lambda_U,
                 ev.upsilon_f};
        d.lambda = ev.lambda_U;
        d.ups_density = ev.upsilon_f;
        d.phi0_density = Vec(n);
        for (int c = 0; c < n; ++c) d.phi0_density[c] = shift.Iw().at(c, 0, 0);
        SolveReport rep = solve(noise, pot, f, cfg.solver);
        d.converged = rep.converged;
        if (rep.converged) {
            Field phi = apply_fractional_inverse(noise.field, 1.0);
            phi += rep.solution;
            d.phi0_strong = Vec(n);
            for (int c = 0; c < n; ++c) d.phi0_strong[c] = phi.at(c, 0, 0);
            d.ups_strong = std::exp(log_upsilon_of(phi, pot, f));
        }
        draws[i] = std::move(d);
    });

    DensityRouteReport rep;
    rep.draws.reserve(M);
    std::vector<double> lam(M);
    for (int i = 0; i < M; ++i) {
        lam[i] = draws[i].lambda;
        rep.draws.push_back(draws[i].row);
        if (draws[i].lambda < 0.0) ++rep.negative_lambda_draws;
    }
    auto [lm, ls] = mean_and_se(lam);
    rep.lambda_mean = lm;
    rep.lambda_se = ls;

    std::vector<const Draw *> ok;
    for (const auto &d : draws)
        if (d.converged) ok.push_back(&d);

    for (const auto &hf : h_list(n, cfg.h_max_degree)) {
        std::vector<double> dw(M), dhw(M);
        for (int i = 0; i < M; ++i) {
            dw[i] = draws[i].ups_density * draws[i].lambda;
            dhw[i] = hf.h(draws[i].phi0_density) * dw[i];
        }
        MomentRow drow = make_row(hf.tag, dhw, dw, {0.0, 0.0});
        std::vector<double> sw(ok.size()), shw(ok.size());
        for (std::size_t i = 0; i < ok.size(); ++i) {
            sw[i] = ok[i]->ups_strong;
            shw[i] = hf.h(ok[i]->phi0_strong) * sw[i];
        }
        MomentRow srow = make_row(hf.tag, shw, sw, {0.0, 0.0});
        const double comb = std::sqrt(drow.se * drow.se + srow.se * srow.se);
        rep.route_z.push_back(comb > 0.0 ? (drow.estimate - srow.estimate) / comb : 0.0);
        rep.density_rows.push_back(drow);
        rep.strong_rows.push_back(srow);
    }
    return rep;
}

void DensityRouteReport::write_draws_csv(const std::string &path) const {
    std::ofstream out(path);
    out << "seed,det2,delta,norm,lambda,upsilon\n";
    for (const auto &d : draws)
        out << d.seed << "," << d.det2 << "," << d.delta << "," << d.norm_sq << "," << d.lambda
            << "," << d.upsilon << "\n";
}

json solve_report_scalars(const SolveReport &rep) {
    return json{{"residual_norm", rep.residual_norm},
                {"iterations", rep.iterations},
                {"converged", rep.converged},
                {"apriori_bound", rep.apriori_bound},
                {"apriori_satisfied", rep.apriori_satisfied},
                {"distinct_solutions", rep.distinct_solutions.size()},
                {"solution_sup_norm", rep.solution.values.empty() ? 0.0 : rep.solution.sup_norm()}};
}

json DensityRouteReport::to_json() const {
    json dens = json::array(), strong = json::array();
    for (const auto &r : density_rows)
        dens.push_back({{"h", r.h_tag}, {"estimate", r.estimate}, {"se", r.se}});
    for (const auto &r : strong_rows)
        strong.push_back({{"h", r.h_tag}, {"estimate", r.estimate}, {"se", r.se}});
    return json{{"schema_version", 1},
                {"lambda_mean", lambda_mean},
                {"lambda_se", lambda_se},
                {"density_rows", dens},
                {"strong_rows", strong},
                {"route_z", route_z},
                {"negative_lambda_draws", negative_lambda_draws}};
}

} // namespace esq
