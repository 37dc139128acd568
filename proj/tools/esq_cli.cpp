#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "esq/fermion_det.hpp"
#include "esq/harness.hpp"
#include "esq/superspace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// outputs go to temporaries first so an abort never leaves partial files
class OutputDir {
  public:
    explicit OutputDir(const std::string &dir) : dir_(dir) { fs::create_directories(dir_); }
    ~OutputDir() {
        for (const auto &t : pending_) std::remove(t.c_str());
    }
    void write_json(const std::string &name, const json &j) {
        const std::string tmp = (dir_ / (name + ".tmp")).string();
        std::ofstream(tmp) << j.dump(2) << "\n";
        pending_.push_back(tmp);
        finals_.push_back((dir_ / name).string());
    }
    void write_text(const std::string &name, const std::string &text) {
        const std::string tmp = (dir_ / (name + ".tmp")).string();
        std::ofstream(tmp) << text;
        pending_.push_back(tmp);
        finals_.push_back((dir_ / name).string());
    }
    void commit() {
        for (std::size_t i = 0; i < pending_.size(); ++i)
            fs::rename(pending_[i], finals_[i]);
        pending_.clear();
        finals_.clear();
    }

  private:
    fs::path dir_;
    std::vector<std::string> pending_, finals_;
};

std::string rows_csv(const std::vector<esq::MomentRow> &rows) {
    std::string s = "h,estimate,se,target,target_error,z\n";
    for (const auto &r : rows)
        s += r.h_tag + "," + std::to_string(r.estimate) + "," + std::to_string(r.se) + "," +
             std::to_string(r.target) + "," + std::to_string(r.target_error) + "," +
             std::to_string(r.z) + "\n";
    return s;
}

int run_reduce(const std::string &config, const std::string &out, bool verify) {
    auto cfg = esq::ExperimentConfig::from_file(config);
    cfg.validate();
    OutputDir od(out.empty() ? cfg.output_dir : out);
    auto rep = esq::run_reduction_experiment(cfg);
    od.write_json("reduce_summary.json", rep.to_json());
    std::string csv = rows_csv(rep.rows);
    od.write_text("reduce_moments.csv", csv);
    od.commit();
    esq::GibbsMeasure(cfg.build_potential(), cfg.grid.m2)
        .export_moments_csv((std::filesystem::path(out.empty() ? cfg.output_dir : out) /
                             "gibbs_moments.csv")
                                .string(),
                            cfg.h_max_degree);
    std::cout << "reduce: max |z| = " << rep.max_abs_z << ", Zf = " << rep.Zf_estimate
              << " (converged " << rep.replicas_converged << "/" << rep.replicas_total << ")\n";
    if (verify && rep.max_abs_z > 4.0) return 1;
    return 0;
}

int run_trend(const std::string &config, const std::string &out, std::vector<double> bs,
              std::vector<std::string> grids, bool verify) {
    auto cfg = esq::ExperimentConfig::from_file(config);
    std::vector<std::pair<double, int>> gs;
    for (const auto &g : grids) {
        auto pos = g.find(':');
        if (pos == std::string::npos) throw std::invalid_argument("grid spec must be L:N");
        gs.emplace_back(std::stod(g.substr(0, pos)), std::stoi(g.substr(pos + 1)));
    }
    OutputDir od(out.empty() ? cfg.output_dir : out);
    auto rep = esq::run_cutoff_removal_trend(cfg, bs, gs);
    od.write_json("trend_summary.json", rep.to_json());
    std::string csv = "b,L,N,max_abs_z,tv_surrogate,distance\n";
    for (const auto &r : rep.rows)
        csv += std::to_string(r.b) + "," + std::to_string(r.L) + "," + std::to_string(r.N) + "," +
               std::to_string(r.max_abs_z) + "," + std::to_string(r.tv_surrogate) + "," +
               std::to_string(r.distance) + "\n";
    od.write_text("trend_rows.csv", csv);
    od.commit();
    std::cout << "trend: nonincreasing within 2 SE = " << rep.nonincreasing_within_2se << "\n";
    return verify && !rep.nonincreasing_within_2se ? 1 : 0;
}

int run_decorrelate(const std::string &config, const std::string &out, std::vector<double> radii) {
    auto cfg = esq::ExperimentConfig::from_file(config);
    OutputDir od(out.empty() ? cfg.output_dir : out);
    auto rep = esq::run_decorrelation_probe(cfg, radii);
    od.write_json("decorrelate_summary.json", rep.to_json());
    std::string csv = "flat_top_radius,exact_covariance,sampled_covariance,sampled_se\n";
    for (const auto &r : rep.rows)
        csv += std::to_string(r.flat_top_radius) + "," + std::to_string(r.exact_covariance) + "," +
               std::to_string(r.sampled_covariance) + "," + std::to_string(r.sampled_se) + "\n";
    od.write_text("decorrelate_rows.csv", csv);
    od.commit();
    for (const auto &r : rep.rows)
        std::cout << "r=" << r.flat_top_radius << ": exact " << r.exact_covariance << ", sampled "
                  << r.sampled_covariance << " +- " << r.sampled_se << "\n";
    return 0;
}

int run_girsanov_check(const std::string &config, const std::string &out, bool verify) {
    auto cfg = esq::ExperimentConfig::from_file(config);
    OutputDir od(out.empty() ? cfg.output_dir : out);
    auto rep = esq::run_density_route_comparison(cfg);
    od.write_json("girsanov_summary.json", rep.to_json());
    {
        std::string csv = "seed,det2,delta,norm,lambda,upsilon\n";
        for (const auto &d : rep.draws)
            csv += std::to_string(d.seed) + "," + std::to_string(d.det2) + "," +
                   std::to_string(d.delta) + "," + std::to_string(d.norm_sq) + "," +
                   std::to_string(d.lambda) + "," + std::to_string(d.upsilon) + "\n";
        od.write_text("girsanov_draws.csv", csv);
    }
    std::string csv = "h,density_estimate,density_se,strong_estimate,strong_se,route_z\n";
    for (std::size_t i = 0; i < rep.density_rows.size(); ++i)
        csv += rep.density_rows[i].h_tag + "," + std::to_string(rep.density_rows[i].estimate) +
               "," + std::to_string(rep.density_rows[i].se) + "," +
               std::to_string(rep.strong_rows[i].estimate) + "," +
               std::to_string(rep.strong_rows[i].se) + "," + std::to_string(rep.route_z[i]) + "\n";
    od.write_text("girsanov_rows.csv", csv);
    od.commit();
    double maxz = 0.0;
    for (double z : rep.route_z) maxz = std::max(maxz, std::abs(z));
    const double lam_z = std::abs(rep.lambda_mean - 1.0) / std::max(rep.lambda_se, 1e-300);
    std::cout << "girsanov-check: E[Lambda] = " << rep.lambda_mean << " +- " << rep.lambda_se
              << ", max route |z| = " << maxz << "\n";
    return verify && (maxz > 4.0 || lam_z > 4.0) ? 1 : 0;
}

int run_susy_check(double chi, double tol, const std::string &out, bool verify) {
    OutputDir od(out);
    esq::SuperCovariance cov(chi, 1.0);
    json j;
    bool all_pass = true;

    auto rep_c = esq::susy_check(cov.C_phi_superfunction(), tol);
    j["C_phi"] = {{"max_Q", rep_c.max_Q}, {"max_Qbar", rep_c.max_Qbar},
                  {"max_rotation", rep_c.max_rotation}, {"pass", rep_c.pass}};
    all_pass = all_pass && rep_c.pass;

    auto f = esq::make_cutoff("exp-sqrt1", 1.0, 1.0);
    auto F = esq::SuperFunction::radial_shape([&](double s) { return f.ftilde(s); },
                                              [&](double s) { return f.ftilde_prime(s); });
    auto rep_f = esq::susy_check(F, tol);
    j["cutoff_shape"] = {{"max_Q", rep_f.max_Q}, {"max_Qbar", rep_f.max_Qbar},
                         {"max_rotation", rep_f.max_rotation}, {"pass", rep_f.pass}};
    all_pass = all_pass && rep_f.pass;

    // designed counterexample x1 * theta thetabar must fail
    esq::SuperFunction bad;
    bad.f_empty = esq::SuperFunction::zero_fn();
    bad.f_theta = esq::SuperFunction::zero_fn();
    bad.f_thetabar = esq::SuperFunction::zero_fn();
    bad.f_thetathetabar = [](double a, double) { return a; };
    auto rep_b = esq::susy_check(bad, tol);
    j["counterexample_fails"] = !rep_b.pass;
    all_pass = all_pass && !rep_b.pass;

    auto [lhs, rhs] = esq::reduction_formula_check(cov, f);
    j["reduction_formula"] = {{"lhs", lhs}, {"rhs", rhs},
                              {"rel_gap", std::abs(lhs - rhs) / std::abs(rhs)}};
    all_pass = all_pass && std::abs(lhs - rhs) / std::abs(rhs) < 1e-4;

    od.write_json("susy_summary.json", j);
    od.commit();
    std::cout << "susy-check: " << (all_pass ? "pass" : "FAIL") << "\n";
    return verify && !all_pass ? 1 : 0;
}

int run_pol_eq(double chi, const std::string &out, bool verify) {
    OutputDir od(out);
    auto f = esq::make_cutoff("exp-sqrt1", 1.0, 1.0);
    using esq::Polynomial;
    const Polynomial one{1.0}, y2{0.0, 0.0, 1.0}, y4{0.0, 0.0, 0.0, 0.0, 1.0};
    struct Case {
        const char *tag;
        Polynomial p, P;
        int n;
    };
    std::vector<Case> cases = {{"(1,y^2,1)", one, y2, 1},
                               {"(y^2,y^2,1)", y2, y2, 1},
                               {"(1,y^4,1)", one, y4, 1},
                               {"(1,y^2,2)", one, y2, 2}};
    json rows = json::array();
    bool all = true;
    for (const auto &c : cases) {
        auto r = esq::verify_pol_eq(c.p, c.P, c.n, chi, f);
        rows.push_back({{"case", c.tag}, {"p", c.p}, {"P", c.P}, {"n", c.n}, {"chi", chi},
                        {"lhs", r.lhs}, {"rhs", r.rhs}, {"gap_rel", r.gap_rel},
                        {"quad_error", r.quad_error_estimate}});
        std::cout << c.tag << ": lhs=" << r.lhs << " rhs=" << r.rhs << " gap=" << r.gap_rel
                  << "\n";
        all = all && r.gap_rel < 1e-3;
    }
    od.write_json("pol_eq_summary.json", json{{"chi", chi}, {"rows", rows}, {"pass", all}});
    od.commit();
    return verify && !all ? 1 : 0;
}

int run_fermion_det(double chi, const std::string &out, bool verify) {
    OutputDir od(out);
    auto f = esq::make_cutoff("exp-sqrt1", 1.0, 1.0);
    esq::SuperCovariance cov(chi, 1.0);
    std::string csv = "amplitude,series,determinant,gap,truncation_estimate\n";
    bool all = true;
    for (double amp = 0.0; amp <= 1.0001; amp += 0.1) {
        esq::FermionKernel k([amp, &f](double a, double b) { return amp * f.f(a, b); },
                             [&cov](double r) { return cov.B(r); }, 30.0);
        auto series = esq::fredholm_series(k, 5);
        double det = esq::kernel_determinant(k);
        double gap = std::abs(series.value - det);
        all = all && gap <= 2.0 * std::max(series.last_term, 1e-12);
        csv += std::to_string(amp) + "," + std::to_string(series.value) + "," +
               std::to_string(det) + "," + std::to_string(gap) + "," +
               std::to_string(series.last_term) + "\n";
    }
    od.write_text("fermion_det_sweep.csv", csv);
    od.write_json("fermion_det_summary.json", json{{"chi", chi}, {"pass", all}});
    od.commit();
    std::cout << "fermion-det sweep: " << (all ? "pass" : "FAIL") << "\n";
    return verify && !all ? 1 : 0;
}

int run_kernels_dump(double alpha, double m2, const std::string &out) {
    OutputDir od(out);
    esq::KernelTable tab(alpha, m2, 1e-3, 48.0, 512);
    std::string csv = "radius,value\n";
    for (std::size_t i = 0; i < tab.radii().size(); ++i)
        csv += std::to_string(tab.radii()[i]) + "," + std::to_string(tab.values()[i]) + "\n";
    od.write_text("kernel_alpha" + std::to_string(alpha) + ".csv", csv);
    od.commit();
    std::cout << "wrote kernel table, alpha=" << alpha << " m2=" << m2 << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"elliptic stochastic quantization laboratory"};
    app.require_subcommand(1);

    std::string config, out;
    bool verify = false;
    double chi = 0.5, tol = 1e-5, alpha = 2.0, m2 = 1.0;
    std::vector<double> bs{1.0, 0.5, 0.25};
    std::vector<std::string> grids{"32:128", "64:256", "128:512"};
    std::vector<double> radii{0.0, 2.0, 4.0, 6.0};

    auto add_common = [&](CLI::App *sub, bool needs_config) {
        if (needs_config) sub->add_option("--config", config, "config JSON path")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_flag("--verify", verify, "nonzero exit on acceptance failure");
    };

    add_common(app.add_subcommand("reduce", "weighted dimensional-reduction run"), true);
    auto *trend = app.add_subcommand("trend", "cut-off removal trend");
    add_common(trend, true);
    trend->add_option("--b", bs, "decreasing b sequence");
    trend->add_option("--grids", grids, "L:N per b");
    auto *dec = app.add_subcommand("decorrelate", "flat-top decorrelation probe");
    add_common(dec, true);
    dec->add_option("--radii", radii, "flat-top radii");
    add_common(app.add_subcommand("girsanov-check", "density route vs strong route"), true);
    auto *susy = app.add_subcommand("susy-check", "supersymmetry checks");
    add_common(susy, false);
    susy->add_option("--chi", chi, "regularization exponent");
    susy->add_option("--tol", tol, "pass tolerance");
    auto *pol = app.add_subcommand("pol-eq", "polynomial moment identity matrix");
    add_common(pol, false);
    pol->add_option("--chi", chi, "regularization exponent");
    auto *fd = app.add_subcommand("fermion-det", "Fredholm series vs determinant sweep");
    add_common(fd, false);
    fd->add_option("--chi", chi, "regularization exponent");
    auto *kd = app.add_subcommand("kernels-dump", "export a kernel table as CSV");
    add_common(kd, false);
    kd->add_option("--alpha", alpha, "kernel exponent");
    kd->add_option("--m2", m2, "mass squared");

    CLI11_PARSE(app, argc, argv);
    if (out.empty()) out = "out";

    try {
        if (app.got_subcommand("reduce")) return run_reduce(config, out, verify);
        if (app.got_subcommand("trend")) return run_trend(config, out, bs, grids, verify);
        if (app.got_subcommand("decorrelate")) return run_decorrelate(config, out, radii);
        if (app.got_subcommand("girsanov-check")) return run_girsanov_check(config, out, verify);
        if (app.got_subcommand("susy-check")) return run_susy_check(chi, tol, out, verify);
        if (app.got_subcommand("pol-eq")) return run_pol_eq(chi, out, verify);
        if (app.got_subcommand("fermion-det")) return run_fermion_det(chi, out, verify);
        if (app.got_subcommand("kernels-dump")) return run_kernels_dump(alpha, m2, out);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
