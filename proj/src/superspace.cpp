#include "esq/superspace.hpp"

#include <cmath>

#include "esq/numerics.hpp"

namespace esq {

SuperFunction SuperFunction::radial_shape(std::function<double(double)> g,
                                          std::function<double(double)> gprime) {
    SuperFunction F;
    F.f_empty = [g](double x0, double x1) { return g(x0 * x0 + x1 * x1); };
    F.f_theta = zero_fn();
    F.f_thetabar = zero_fn();
    F.f_thetathetabar = [gprime](double x0, double x1) {
        return 4.0 * gprime(x0 * x0 + x1 * x1);
    };
    F.grad_empty = [gprime](double x0, double x1) {
        const double gp = gprime(x0 * x0 + x1 * x1);
        return std::array<double, 2>{2.0 * x0 * gp, 2.0 * x1 * gp};
    };
    F.grad_theta = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
    F.grad_thetabar = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
    return F;
}

std::array<double, 2> SuperFunction::grad_component(int which, double x0, double x1) const {
    const std::optional<Gradient> *g = nullptr;
    const Scalar *f = nullptr;
    switch (which) {
        case 0: g = &grad_empty; f = &f_empty; break;
        case 1: g = &grad_theta; f = &f_theta; break;
        case 2: g = &grad_thetabar; f = &f_thetabar; break;
        default: throw std::invalid_argument("grad_component: which must be 0..2");
    }
    if (*g) return (**g)(x0, x1);
    const double h = fd_step;
    return {((*f)(x0 + h, x1) - (*f)(x0 - h, x1)) / (2.0 * h),
            ((*f)(x0, x1 + h) - (*f)(x0, x1 - h)) / (2.0 * h)};
}

SuperFunction SuperFunction::compose(std::function<double(double)> r,
                                     std::function<double(double)> rp) const {
    SuperFunction out;
    auto f0 = f_empty;
    out.f_empty = [r, f0](double a, double b) { return r(f0(a, b)); };
    auto mk = [rp, f0](Scalar comp) {
        return [rp, f0, comp](double a, double b) { return rp(f0(a, b)) * comp(a, b); };
    };
    out.f_theta = mk(f_theta);
    out.f_thetabar = mk(f_thetabar);
    out.f_thetathetabar = mk(f_thetathetabar);
    return out;
}

double berezin_integral(const SuperFunction &F, const BerezinWeight &weight, double radius,
                        double rel_tol) {
    if (weight.delta_at_origin) return -F.f_thetathetabar(0.0, 0.0);
    // polar quadrature, angular GL x radial adaptive
    const int na = 32;
    const auto &ax = gauss_legendre_nodes(na);
    const auto &aw = gauss_legendre_weights(na);
    auto ring = [&](double r) {
        double s = 0.0;
        for (int i = 0; i < na; ++i) {
            const double th = M_PI * (ax[i] + 1.0);
            const double c = std::cos(th), sn = std::sin(th);
            s += aw[i] * F.f_thetathetabar(r * c, r * sn) * weight.w(r * c, r * sn);
        }
        return s * M_PI * r;
    };
    return -adaptive_integrate(ring, 0.0, radius, rel_tol);
}

std::array<SuperFunction, 2> apply_Q(const SuperFunction &F, bool conjugated) {
    std::array<SuperFunction, 2> out;
    // the grad components below capture F by value (small shared callables)
    SuperFunction Fc = F;
    for (int j = 0; j < 2; ++j) {
        SuperFunction q;
        if (!conjugated) {
            q.f_empty = [Fc, j](double a, double b) {
                const double xj = j == 0 ? a : b;
                return xj * Fc.f_thetabar(a, b);
            };
            q.f_theta = [Fc, j](double a, double b) {
                const double xj = j == 0 ? a : b;
                return 2.0 * Fc.grad_component(0, a, b)[j] - xj * Fc.f_thetathetabar(a, b);
            };
            q.f_thetabar = SuperFunction::zero_fn();
            q.f_thetathetabar = [Fc, j](double a, double b) {
                return 2.0 * Fc.grad_component(2, a, b)[j];
            };
        } else {
            q.f_empty = [Fc, j](double a, double b) {
                const double xj = j == 0 ? a : b;
                return -xj * Fc.f_theta(a, b);
            };
            q.f_thetabar = [Fc, j](double a, double b) {
                const double xj = j == 0 ? a : b;
                return 2.0 * Fc.grad_component(0, a, b)[j] - xj * Fc.f_thetathetabar(a, b);
            };
            q.f_theta = SuperFunction::zero_fn();
            q.f_thetathetabar = [Fc, j](double a, double b) {
                return -2.0 * Fc.grad_component(1, a, b)[j];
            };
        }
        out[j] = std::move(q);
    }
    return out;
}

SusyReport susy_check(const SuperFunction &F, double tolerance,
                      const std::vector<double> &probe_radii) {
    SusyReport rep;
    auto Q = apply_Q(F, false);
    auto Qb = apply_Q(F, true);
    const int nang = 8;
    auto eval_all = [&](const SuperFunction &G, double a, double b) {
        return std::max(std::max(std::abs(G.f_empty(a, b)), std::abs(G.f_theta(a, b))),
                        std::max(std::abs(G.f_thetabar(a, b)), std::abs(G.f_thetathetabar(a, b))));
    };
    for (double r : probe_radii) {
        for (int ia = 0; ia < nang; ++ia) {
            const double th = 2.0 * M_PI * ia / nang;
            const double a = r * std::cos(th), b = r * std::sin(th);
            for (int j = 0; j < 2; ++j) {
                double q = eval_all(Q[j], a, b);
                double qb = eval_all(Qb[j], a, b);
                if (q > rep.max_Q) {
                    rep.max_Q = q;
                    if (q > tolerance && rep.first_fail.empty())
                        rep.first_fail = "Q component " + std::to_string(j) + " = " +
                                         std::to_string(q) + " at r=" + std::to_string(r);
                }
                if (qb > rep.max_Qbar) {
                    rep.max_Qbar = qb;
                    if (qb > tolerance && rep.first_fail.empty())
                        rep.first_fail = "Qbar component " + std::to_string(j) + " = " +
                                         std::to_string(qb) + " at r=" + std::to_string(r);
                }
            }
            // rotation invariance against the reference angle 0
            auto dev = [&](const SuperFunction::Scalar &f) {
                return std::abs(f(a, b) - f(r, 0.0));
            };
            double rot = std::max(std::max(dev(F.f_empty), dev(F.f_theta)),
                                  std::max(dev(F.f_thetabar), dev(F.f_thetathetabar)));
            if (rot > rep.max_rotation) {
                rep.max_rotation = rot;
                if (rot > tolerance && rep.first_fail.empty())
                    rep.first_fail =
                        "rotation deviation " + std::to_string(rot) + " at r=" + std::to_string(r);
            }
        }
    }
    rep.pass = rep.max_Q <= tolerance && rep.max_Qbar <= tolerance && rep.max_rotation <= tolerance;
    return rep;
}

SuperCovariance::SuperCovariance(double chi, double m2, double r_min, double r_max, int nodes)
    : chi_(chi), varpi_(1.0 / (1.0 + 2.0 * chi)), m2_(m2) {
    if (!(chi > 0.0)) throw std::invalid_argument("SuperCovariance: chi must be positive");
    tabA_ = std::make_shared<KernelTable>(2.0 + 2.0 * chi, m2, r_min, r_max, nodes);
    tabB_ = std::make_shared<KernelTable>(1.0 + 2.0 * chi, m2, r_min, r_max, nodes);
    A0_ = green_kernel_origin(2.0 + 2.0 * chi, m2);
    B0_ = varpi_ * green_kernel_origin(1.0 + 2.0 * chi, m2);
}

double SuperCovariance::A(double r) const {
    if (r < tabA_->radii().front()) return r == 0.0 ? A0_ : (*tabA_)(r);
    return (*tabA_)(r);
}

double SuperCovariance::B(double r) const {
    if (r == 0.0) return B0_;
    return varpi_ * (*tabB_)(r);
}

SuperFunction SuperCovariance::C_phi_superfunction() const {
    SuperFunction F;
    const double alphaA = 2.0 + 2.0 * chi_;
    const double alphaB = 1.0 + 2.0 * chi_;
    const double vp = varpi_;
    const double m2 = m2_;
    F.f_empty = [alphaA, m2](double a, double b) {
        const double r = std::hypot(a, b);
        return r == 0.0 ? green_kernel_origin(alphaA, m2) : green_kernel(alphaA, m2, r);
    };
    F.f_theta = SuperFunction::zero_fn();
    F.f_thetabar = SuperFunction::zero_fn();
    F.f_thetathetabar = [alphaB, vp, m2](double a, double b) {
        const double r = std::hypot(a, b);
        return -vp * (r == 0.0 ? green_kernel_origin(alphaB, m2) : green_kernel(alphaB, m2, r));
    };
    F.grad_theta = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
    F.grad_thetabar = [](double, double) { return std::array<double, 2>{0.0, 0.0}; };
    F.fd_step = 1e-3; // balanced against the 1e-9 kernel quadrature tolerance
    return F;
}

GrassmannElement wick_superfield_expectation(const std::vector<WickInsertion> &points,
                                             const SuperCovariance &cov) {
    const std::size_t m = points.size();
    if (m > 10) throw std::invalid_argument("wick_superfield_expectation: insertions > 10");
    int max_idx = -1;
    for (const auto &p : points) max_idx = std::max({max_idx, p.theta_index, p.thetabar_index});
    const int k = 2 * (max_idx + 1);
    if (m % 2 == 1) return GrassmannElement(k);

    // pairing covariance C(i,j) as a Grassmann element
    auto pair_cov = [&](const WickInsertion &a, const WickInsertion &b) {
        const double dx0 = a.x0 - b.x0, dx1 = a.x1 - b.x1;
        const double r = std::hypot(dx0, dx1);
        GrassmannElement e = GrassmannElement::scalar(k, cov.A(r));
        // -B(r) (theta_a - theta_b)(thetabar_a - thetabar_b)
        GrassmannElement th = GrassmannElement::generator(k, 2 * a.theta_index) -
                              GrassmannElement::generator(k, 2 * b.theta_index);
        GrassmannElement tb = GrassmannElement::generator(k, 2 * a.thetabar_index + 1) -
                              GrassmannElement::generator(k, 2 * b.thetabar_index + 1);
        e += (th * tb) * (-cov.B(r));
        return e;
    };

    // recursive sum over perfect matchings; factors are even, so order is free
    std::vector<int> alive(m);
    for (std::size_t i = 0; i < m; ++i) alive[i] = static_cast<int>(i);
    std::function<GrassmannElement(std::vector<int> &)> rec = [&](std::vector<int> &idx) {
        if (idx.empty()) return GrassmannElement::scalar(k, 1.0);
        GrassmannElement total(k);
        const int first = idx[0];
        for (std::size_t j = 1; j < idx.size(); ++j) {
            const int partner = idx[j];
            std::vector<int> rest;
            rest.reserve(idx.size() - 2);
            for (std::size_t t = 1; t < idx.size(); ++t)
                if (t != j) rest.push_back(idx[t]);
            GrassmannElement sub = rec(rest);
            total += pair_cov(points[first], points[partner]) * sub;
        }
        return total;
    };
    return rec(alive);
}

std::pair<double, double> reduction_formula_check(const SuperCovariance &cov, const CutOff &f,
                                                  double rel_tol) {
    // (C_Phi . F)_{t tb} = 4 A ftilde' - B ftilde; Berezin flips the sign
    auto integrand = [&](double r) {
        const double s = r * r;
        const double A = r == 0.0 ? cov.A0()
                                  : green_kernel(2.0 + 2.0 * cov.chi(), cov.m2(), r);
        const double B = r == 0.0 ? cov.B0()
                                  : cov.varpi() * green_kernel(1.0 + 2.0 * cov.chi(), cov.m2(), r);
        return -(4.0 * A * f.ftilde_prime(s) - B * f.ftilde(s)) * 2.0 * M_PI * r;
    };
    double R = 8.0;
    while (f.ftilde(R * R) > 1e-13 * f.ftilde(0.0) && R < 4000.0) R *= 2.0;
    const double lhs = adaptive_integrate(integrand, 0.0, R, rel_tol, 1 << 14);
    const double rhs = 4.0 * M_PI * cov.A0() * f.ftilde(0.0);
    return {lhs, rhs};
}

namespace {

// bosonic insertion kinds for the moment engine
enum class BosKind { phi, omega };

struct BosIns {
    int pos;  // 0 = origin, 1..n = integration variables
    BosKind kind;
};

// Isserlis sum over pairings; cov(i,j) supplied by the caller
double isserlis(std::vector<int> &idx, const std::vector<BosIns> &ins,
                const std::function<double(const BosIns &, const BosIns &)> &cov) {
    if (idx.empty()) return 1.0;
    if (idx.size() % 2 == 1) return 0.0;
    double total = 0.0;
    const int first = idx[0];
    for (std::size_t j = 1; j < idx.size(); ++j) {
        const double c = cov(ins[first], ins[idx[j]]);
        if (c == 0.0) continue;
        std::vector<int> rest;
        rest.reserve(idx.size() - 2);
        for (std::size_t t = 1; t < idx.size(); ++t)
            if (t != j) rest.push_back(idx[t]);
        total += c * isserlis(rest, ins, cov);
    }
    return total;
}

// fermionic Wick over an ordered list of psi(pos)/psibar(pos) operators with
// <psi(x) psibar(y)> = B(|x-y|), crossing signs from the list order
struct FermIns {
    int pos;
    bool bar;
};

double fermionic_wick(const std::vector<FermIns> &ops,
                      const std::function<double(int, int)> &Bdist) {
    if (ops.empty()) return 1.0;
    if (ops.size() % 2 == 1) return 0.0;
    std::function<double(std::vector<int> &)> rec = [&](std::vector<int> &idx) -> double {
        if (idx.empty()) return 1.0;
        double total = 0.0;
        const int a = idx[0];
        for (std::size_t j = 1; j < idx.size(); ++j) {
            const int b = idx[j];
            if (ops[a].bar == ops[b].bar) continue;
            double c = Bdist(ops[a].pos, ops[b].pos);
            if (ops[a].bar) c = -c; // <psibar psi> = -<psi psibar>
            const int sign = (j % 2 == 1) ? 1 : -1; // crossing parity of (0, j)
            std::vector<int> rest;
            rest.reserve(idx.size() - 2);
            for (std::size_t t = 1; t < idx.size(); ++t)
                if (t != j) rest.push_back(idx[t]);
            total += sign * c * rec(rest);
        }
        return total;
    };
    std::vector<int> idx(ops.size());
    for (std::size_t i = 0; i < ops.size(); ++i) idx[i] = static_cast<int>(i);
    return rec(idx);
}

// Gaussian moment E[y^d] with variance v
double gaussian_moment(int d, double v) {
    if (d % 2 == 1) return 0.0;
    double m = 1.0;
    for (int j = d - 1; j > 1; j -= 2) m *= j;
    return m * std::pow(v, d / 2);
}

Polynomial poly_mul(const Polynomial &a, const Polynomial &b) {
    Polynomial c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

} // namespace

PolEqReport verify_pol_eq(const Polynomial &p, const Polynomial &P, int order, double chi,
                          const CutOff &f, double m2, const PolEqSpec &spec) {
    if (order < 0 || order > 2)
        throw std::invalid_argument("verify_pol_eq: order must be 0, 1 or 2");
    if (!(chi > 0.0)) throw std::invalid_argument("verify_pol_eq: chi must be positive");
    PolEqReport rep;
    rep.order = order;
    rep.chi = chi;

    const SuperCovariance cov(chi, m2);
    const double A0 = cov.A0();

    // insertion-count guard
    const int deg_p = static_cast<int>(p.size()) - 1;
    const int deg_P = static_cast<int>(P.size()) - 1;
    if (deg_p + order * (deg_P + 1) > 10)
        throw std::invalid_argument("verify_pol_eq: insertion count guard exceeded");

    // ---- RHS: scalar Isserlis with variance A0
    {
        Polynomial rhs_poly{1.0};
        for (int i = 0; i < order; ++i) rhs_poly = poly_mul(rhs_poly, P);
        rhs_poly = poly_mul(rhs_poly, p);
        double rhs = 0.0;
        for (std::size_t d = 0; d < rhs_poly.size(); ++d)
            rhs += rhs_poly[d] * gaussian_moment(static_cast<int>(d), A0);
        rep.rhs = std::pow(-4.0 * M_PI, order) * rhs;
    }

    // ---- LHS
    // per-factor vertex types: 0: 4 f' phi^d | 1: f d phi^(d-1) omega | 2: f d(d-1) phi^(d-2) psi psibar
    // integrand at fixed positions: sum over monomials of p and vertex choices
    auto integrand = [&](const std::vector<std::array<double, 2>> &pos,
                         const std::vector<double> &fw, const std::vector<double> &fpw) {
        const int n = order;
        // distance matrix over 0..n (0 is the origin)
        std::vector<std::vector<double>> dist(n + 1, std::vector<double>(n + 1, 0.0));
        for (int a = 0; a <= n; ++a)
            for (int b = 0; b <= n; ++b)
                dist[a][b] = std::hypot(pos[a][0] - pos[b][0], pos[a][1] - pos[b][1]);
        auto Bd = [&](int a, int b) { return cov.B(dist[a][b]); };
        auto bos_cov = [&](const BosIns &a, const BosIns &b) -> double {
            if (a.kind == BosKind::phi && b.kind == BosKind::phi) return cov.A(dist[a.pos][b.pos]);
            if (a.kind == BosKind::omega && b.kind == BosKind::omega) return 0.0;
            return -cov.B(dist[a.pos][b.pos]);
        };

        double total = 0.0;
        std::vector<int> type(n, 0);
        for (std::size_t dp = 0; dp < p.size(); ++dp) {
            if (p[dp] == 0.0) continue;
            // iterate vertex type combinations in base 3
            const int combos = static_cast<int>(std::pow(3, n));
            for (int cmb = 0; cmb < combos; ++cmb) {
                int t = cmb;
                for (int i = 0; i < n; ++i) {
                    type[i] = t % 3;
                    t /= 3;
                }
                // iterate monomials of P at every factor
                std::vector<int> deg(n, 0);
                std::function<void(int, double)> loop = [&](int i, double coeff) {
                    if (coeff == 0.0) return;
                    if (i == n) {
                        // assemble insertions
                        std::vector<BosIns> bos;
                        std::vector<FermIns> ferm;
                        for (std::size_t q = 0; q < dp; ++q) bos.push_back({0, BosKind::phi});
                        double weight = 1.0;
                        for (int q = 0; q < n; ++q) {
                            const int d = deg[q];
                            if (type[q] == 0) {
                                weight *= 4.0 * fpw[q];
                                for (int r = 0; r < d; ++r) bos.push_back({q + 1, BosKind::phi});
                            } else if (type[q] == 1) {
                                if (d < 1) return;
                                weight *= fw[q] * d;
                                for (int r = 0; r < d - 1; ++r) bos.push_back({q + 1, BosKind::phi});
                                bos.push_back({q + 1, BosKind::omega});
                            } else {
                                if (d < 2) return;
                                weight *= fw[q] * d * (d - 1);
                                for (int r = 0; r < d - 2; ++r) bos.push_back({q + 1, BosKind::phi});
                                ferm.push_back({q + 1, false});
                                ferm.push_back({q + 1, true});
                            }
                        }
                        if (bos.size() % 2 == 1) return;
                        std::vector<int> idx(bos.size());
                        for (std::size_t r = 0; r < bos.size(); ++r) idx[r] = static_cast<int>(r);
                        const double eb = isserlis(idx, bos, bos_cov);
                        const double ef = fermionic_wick(ferm, Bd);
                        total += coeff * weight * eb * ef;
                        return;
                    }
                    for (std::size_t d = 0; d < P.size(); ++d) {
                        deg[i] = static_cast<int>(d);
                        loop(i + 1, coeff * P[d]);
                    }
                };
                loop(0, p[dp]);
            }
        }
        return total;
    };

    double R = spec.radius;
    if (R <= 0.0) {
        R = 8.0;
        while (f.ftilde(R * R) > 1e-12 * f.ftilde(0.0) && R < 4000.0) R *= 2.0;
    }

    auto evaluate = [&](int nr, int na) -> double {
        if (order == 0) {
            std::vector<std::array<double, 2>> pos{{0.0, 0.0}};
            return integrand(pos, {}, {});
        }
        const auto &xn = gauss_legendre_nodes(nr);
        const auto &wn = gauss_legendre_weights(nr);
        if (order == 1) {
            double s = 0.0;
            for (int i = 0; i < nr; ++i) {
                const double r = 0.5 * R * (xn[i] + 1.0);
                const double w = 0.5 * R * wn[i] * 2.0 * M_PI * r;
                std::vector<std::array<double, 2>> pos{{0.0, 0.0}, {r, 0.0}};
                const double s2 = r * r;
                s += w * integrand(pos, {f.ftilde(s2)}, {f.ftilde_prime(s2)});
            }
            return s;
        }
        // order == 2: reduce by overall rotation, positions (r1, 0), (r2 cos, r2 sin)
        const auto &an = gauss_legendre_nodes(na);
        const auto &aw = gauss_legendre_weights(na);
        double s = 0.0;
        for (int i = 0; i < nr; ++i) {
            const double r1 = 0.5 * R * (xn[i] + 1.0);
            const double w1 = 0.5 * R * wn[i] * 2.0 * M_PI * r1;
            const double f1 = f.ftilde(r1 * r1), fp1 = f.ftilde_prime(r1 * r1);
            for (int j = 0; j < nr; ++j) {
                const double r2 = 0.5 * R * (xn[j] + 1.0);
                const double w2 = 0.5 * R * wn[j] * r2;
                const double f2 = f.ftilde(r2 * r2), fp2 = f.ftilde_prime(r2 * r2);
                for (int l = 0; l < na; ++l) {
                    const double phi = M_PI * (an[l] + 1.0);
                    const double wphi = M_PI * aw[l];
                    std::vector<std::array<double, 2>> pos{
                        {0.0, 0.0}, {r1, 0.0}, {r2 * std::cos(phi), r2 * std::sin(phi)}};
                    s += w1 * w2 * wphi * integrand(pos, {f1, f2}, {fp1, fp2});
                }
            }
        }
        return s;
    };

    double prev = evaluate(spec.radial_nodes / 2, std::max(spec.angular_nodes / 2, 8));
    rep.lhs = evaluate(spec.radial_nodes, spec.angular_nodes);
    rep.quad_error_estimate = std::abs(rep.lhs - prev);
    rep.gap_rel = std::abs(rep.lhs - rep.rhs) / std::max(std::abs(rep.rhs), 1e-300);
    return rep;
}

} // namespace esq
