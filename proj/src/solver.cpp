#include "esq/solver.hpp"

#include <cmath>
#include <sstream>

#include "esq/numerics.hpp"

namespace esq {

namespace {

// pointwise fgrid * gradV(phi); fgrid is the cut-off sampled on the lattice
Field weighted_gradient(const Field &phi, const Potential &p, const Field &fgrid) {
    const GridSpec &g = phi.grid;
    Field out(g);
    const std::size_t cells = static_cast<std::size_t>(g.N) * g.N;
    if (g.n == 1 && p.gradV1) {
        const double *ph = phi.component(0);
        const double *fw = fgrid.component(0);
        double *o = out.component(0);
        for (std::size_t i = 0; i < cells; ++i) o[i] = fw[i] * p.gradV1(ph[i]);
        return out;
    }
    Vec y(g.n);
    for (std::size_t i = 0; i < cells; ++i) {
        for (int c = 0; c < g.n; ++c) y[c] = phi.values[c * cells + i];
        Vec gr = p.gradV(y);
        const double fw = fgrid.values[i];
        for (int c = 0; c < g.n; ++c) out.values[c * cells + i] = fw * gr[c];
    }
    return out;
}

Field apply_forward(const Field &u) { return apply_fractional_inverse(u, -1.0); }

void check_finite(const Field &f, const char *where) {
    const GridSpec &g = f.grid;
    for (int c = 0; c < g.n; ++c)
        for (int ix = 0; ix < g.N; ++ix)
            for (int iy = 0; iy < g.N; ++iy)
                if (!std::isfinite(f.at(c, ix, iy))) {
                    std::ostringstream os;
                    os << where << ": non-finite value at component " << c << ", cell (" << ix
                       << "," << iy << ") — potential overflow";
                    throw std::runtime_error(os.str());
                }
}

double apriori_rhs(const Field &Ixi, const Potential &p, const Field &fgrid, double m2) {
    if (!p.qc_bound) return 0.0;
    const GridSpec &g = Ixi.grid;
    const std::size_t cells = static_cast<std::size_t>(g.N) * g.N;
    double sup = 0.0;
    Vec y(g.n);
    for (std::size_t i = 0; i < cells; ++i) {
        for (int c = 0; c < g.n; ++c) y[c] = Ixi.values[c * cells + i];
        sup = std::max(sup, fgrid.values[i] * (*p.qc_bound)(y));
    }
    return sup / m2;
}

double residual_norm_of(const Field &phibar, const Field &Ixi, const Potential &p,
                        const Field &fgrid) {
    Field phi = phibar;
    phi += Ixi;
    Field r = apply_forward(phibar);
    r += weighted_gradient(phi, p, fgrid);
    return r.l2_norm();
}

// preconditioned CG for (m2 - Delta + f hessV(phi)) delta = rhs with the
// spectral inverse as preconditioner; relative residual 1e-10
Field newton_linear_solve(const Field &rhs, const Field &phi, const Potential &p,
                          const Field &fgrid) {
    const GridSpec &g = rhs.grid;
    const std::size_t cells = static_cast<std::size_t>(g.N) * g.N;
    auto applyA = [&](const Field &u) {
        Field out = apply_forward(u);
        if (g.n == 1 && p.hessV1) {
            const double *ph = phi.component(0);
            const double *fw = fgrid.component(0);
            const double *uu = u.component(0);
            double *o = out.component(0);
            for (std::size_t i = 0; i < cells; ++i) o[i] += fw[i] * p.hessV1(ph[i]) * uu[i];
            return out;
        }
        Vec y(g.n), v(g.n);
        for (std::size_t i = 0; i < cells; ++i) {
            for (int c = 0; c < g.n; ++c) {
                y[c] = phi.values[c * cells + i];
                v[c] = u.values[c * cells + i];
            }
            Vec hv = p.hessV(y) * v;
            for (int c = 0; c < g.n; ++c) out.values[c * cells + i] += fgrid.values[i] * hv[c];
        }
        return out;
    };
    auto dot = [](const Field &a, const Field &b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
        return s;
    };
    Field x(g), r = rhs;
    Field z = apply_fractional_inverse(r, 1.0);
    Field pdir = z;
    double rz = dot(r, z);
    const double rhs_norm = std::sqrt(dot(rhs, rhs));
    for (int it = 0; it < 500; ++it) {
        Field Ap = applyA(pdir);
        double pAp = dot(pdir, Ap);
        if (!(pAp > 0.0))
            throw std::runtime_error("newton_linear_solve: lost positive definiteness");
        double alpha = rz / pAp;
        for (std::size_t i = 0; i < x.values.size(); ++i) {
            x.values[i] += alpha * pdir.values[i];
            r.values[i] -= alpha * Ap.values[i];
        }
        if (std::sqrt(dot(r, r)) <= 1e-10 * rhs_norm) break;
        z = apply_fractional_inverse(r, 1.0);
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < pdir.values.size(); ++i)
            pdir.values[i] = z.values[i] + beta * pdir.values[i];
    }
    return x;
}

SolveReport solve_from(const Field &start, const Potential &p, const Field &fgrid,
                       const SolveConfig &cfg, const Field &Ixi) {
    const GridSpec &g = Ixi.grid;
    SolveReport rep;
    rep.solution = start;
    double rho = cfg.damping;
    double res = residual_norm_of(rep.solution, Ixi, p, fgrid);
    int it = 0;
    if (cfg.method == SolveMethod::newton) {
        if (!p.has(HypTag::C))
            throw std::invalid_argument("solve: Newton method requires a C-tagged potential");
        for (; it < cfg.max_iterations && res > cfg.residual_tolerance; ++it) {
            Field phi = rep.solution;
            phi += Ixi;
            Field resid = apply_forward(rep.solution);
            resid += weighted_gradient(phi, p, fgrid);
            Field delta = newton_linear_solve(resid, phi, p, fgrid);
            double step = 1.0;
            bool improved = false;
            for (int ls = 0; ls < 30 && !improved; ++ls) {
                Field cand = rep.solution;
                Field scaled = delta;
                scaled *= -step;
                cand += scaled;
                double rc = residual_norm_of(cand, Ixi, p, fgrid);
                if (rc < res) {
                    rep.solution = cand;
                    res = rc;
                    improved = true;
                }
                step *= 0.5;
            }
            if (!improved) break; // line search stagnated at this residual
        }
    } else {
        for (; it < cfg.max_iterations && res > cfg.residual_tolerance; ++it) {
            Field phi = rep.solution;
            phi += Ixi;
            Field u = weighted_gradient(phi, p, fgrid);
            check_finite(u, "fixed_point_map");
            Field k = apply_fractional_inverse(u, 1.0);
            k *= -1.0;
            Field cand(g);
            for (std::size_t i = 0; i < cand.values.size(); ++i)
                cand.values[i] = (1.0 - rho) * rep.solution.values[i] + rho * k.values[i];
            double rc = residual_norm_of(cand, Ixi, p, fgrid);
            if (rc > res) {
                rho = std::max(rho * 0.5, 1e-4);
            } else {
                rep.solution = cand;
                res = rc;
            }
        }
    }
    rep.iterations = it;
    // final certificate, recomputed from scratch
    rep.residual_norm = residual_norm_of(rep.solution, Ixi, p, fgrid);
    rep.converged = rep.residual_norm <= cfg.residual_tolerance;
    rep.apriori_bound = apriori_rhs(Ixi, p, fgrid, g.m2);
    if (p.qc_bound && rep.converged)
        rep.apriori_satisfied = rep.solution.sup_norm() <= rep.apriori_bound * 1.1;
    return rep;
}

} // namespace

Field fixed_point_map(const Field &phibar, const NoiseDraw &noise, const Potential &p,
                      const CutOff &f) {
    Field phi = apply_fractional_inverse(noise.field, 1.0);
    phi += phibar;
    const Field fgrid = cutoff_on_grid(noise.field.grid, f, /*prime=*/false);
    Field u = weighted_gradient(phi, p, fgrid);
    check_finite(u, "fixed_point_map");
    Field out = apply_fractional_inverse(u, 1.0);
    out *= -1.0;
    return out;
}

double solve_residual(const Field &phibar, const Field &Ixi, const Potential &p, const CutOff &f) {
    return residual_norm_of(phibar, Ixi, p, cutoff_on_grid(phibar.grid, f, false));
}

SolveReport solve(const NoiseDraw &noise, const Potential &p, const CutOff &f,
                  const SolveConfig &cfg) {
    if (!p.has(HypTag::QC))
        throw std::invalid_argument("solve: potential must be QC-tagged at least");
    const Field Ixi = apply_fractional_inverse(noise.field, 1.0);
    const Field fgrid = cutoff_on_grid(noise.field.grid, f, false);
    return solve_from(Field(noise.field.grid), p, fgrid, cfg, Ixi);
}

SolveReport count_solutions(const NoiseDraw &noise, const Potential &p, const CutOff &f,
                            const SolveConfig &cfg) {
    if (cfg.multistart_count < 2)
        throw std::invalid_argument("count_solutions: multistart_count must be >= 2");
    const GridSpec &g = noise.field.grid;
    const Field Ixi = apply_fractional_inverse(noise.field, 1.0);
    const Field fgrid = cutoff_on_grid(g, f, false);
    SolveReport best;
    bool have_best = false;
    std::vector<Field> clusters;
    for (int s = 0; s <= cfg.multistart_count; ++s) {
        Field start(g);
        if (s > 0) {
            NormalRng rng(derive_stream_seed(cfg.multistart_seed, s));
            for (double &v : start.values) v = cfg.initial_scale * rng.normal();
        }
        SolveReport rep = solve_from(start, p, fgrid, cfg, Ixi);
        if (!rep.converged) continue;
        if (!have_best || rep.residual_norm < best.residual_norm) {
            best = rep;
            have_best = true;
        }
        const double radius = cfg.cluster_radius_factor * (1.0 + rep.solution.sup_norm());
        bool found = false;
        for (const Field &c : clusters) {
            Field d = rep.solution;
            d -= c;
            if (d.sup_norm() < radius) {
                found = true;
                break;
            }
        }
        if (!found) clusters.push_back(rep.solution);
    }
    if (!have_best) {
        best.solution = Field(g);
        best.converged = false;
    }
    best.distinct_solutions = std::move(clusters);
    return best;
}

std::vector<double> radial_shooting_amplitudes(const Potential &p, const CutOff &f, double m2,
                                               double s_max, int s_samples, double rho_max) {
    if (p.n != 1) throw std::invalid_argument("radial_shooting_amplitudes: scalar potentials only");
    // RK4 on [eps, rho_max] for phi'' + phi'/rho = m2 phi + f(rho) V'(phi)
    auto grad1 = [&](double y) {
        return p.gradV1 ? p.gradV1(y) : p.gradV(Vec::Constant(1, y))[0];
    };
    auto shoot = [&](double s) {
        double rho = 1e-8, phi = s, dphi = 0.0;
        const double step = std::min(1e-2, rho_max / 4000.0);
        auto rhs = [&](double r, double ph, double dp, double &dph, double &ddp) {
            dph = dp;
            ddp = m2 * ph + f.ftilde(r * r) * grad1(ph) - dp / std::max(r, 1e-12);
        };
        while (rho < rho_max) {
            double k1p, k1d, k2p, k2d, k3p, k3d, k4p, k4d;
            rhs(rho, phi, dphi, k1p, k1d);
            rhs(rho + step / 2, phi + step / 2 * k1p, dphi + step / 2 * k1d, k2p, k2d);
            rhs(rho + step / 2, phi + step / 2 * k2p, dphi + step / 2 * k2d, k3p, k3d);
            rhs(rho + step, phi + step * k3p, dphi + step * k3d, k4p, k4d);
            phi += step / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
            dphi += step / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
            rho += step;
            if (std::abs(phi) > 100.0) return phi; // blown up; sign is what matters
        }
        return phi;
    };
    std::vector<double> roots;
    double prev_s = s_max / s_samples, prev_v = shoot(prev_s);
    for (int i = 2; i <= s_samples; ++i) {
        double s = s_max * i / s_samples;
        double v = shoot(s);
        if (std::signbit(v) != std::signbit(prev_v)) {
            double lo = prev_s, hi = s, vlo = prev_v;
            for (int b = 0; b < 60; ++b) {
                double mid = 0.5 * (lo + hi);
                double vm = shoot(mid);
                if (std::signbit(vm) == std::signbit(vlo)) {
                    lo = mid;
                    vlo = vm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_s = s;
        prev_v = v;
    }
    return roots;
}

} // namespace esq
