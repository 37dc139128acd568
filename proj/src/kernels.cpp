#include "esq/kernels.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace esq {

namespace {

// Sum an alternating sequence of panel integrals by repeated averaging of the
// partial sums (each averaging level gains roughly one power of decay).
double accelerated_panel_sum(const std::vector<double> &partial) {
    std::vector<double> arr(partial.end() - std::min<std::size_t>(partial.size(), 48), partial.end());
    while (arr.size() > 1) {
        for (std::size_t i = 0; i + 1 < arr.size(); ++i) arr[i] = 0.5 * (arr[i] + arr[i + 1]);
        arr.pop_back();
    }
    return arr[0];
}

double hankel_origin(double alpha, double m2, double rel_tol);

} // namespace

namespace detail {

double green_kernel_oscillatory(double alpha, double m2, double r, double rel_tol) {
    const auto integrand = [&](double k) {
        return k * std::cyl_bessel_j(0.0, k * r) / std::pow(m2 + k * k, alpha);
    };
    // the first zero can sit far beyond the decay scale of (m2+k^2)^-alpha when
    // r is small, so that panel is integrated adaptively; the rest span half
    // oscillations each and 16-point GL resolves them
    double prev = 0.0;
    for (int npanels = 48; npanels <= 384; npanels *= 2) {
        std::vector<double> partial;
        partial.reserve(npanels);
        double sum = adaptive_integrate(integrand, 0.0, bessel_j0_zero(1) / r, rel_tol * 0.1);
        partial.push_back(sum);
        double lo = bessel_j0_zero(1) / r;
        for (int s = 2; s <= npanels; ++s) {
            double hi = bessel_j0_zero(s) / r;
            sum += gl_integrate(integrand, lo, hi, 16);
            partial.push_back(sum);
            lo = hi;
        }
        double val = accelerated_panel_sum(partial) / (2.0 * M_PI);
        if (npanels > 48 && std::abs(val - prev) <= rel_tol * std::max(std::abs(val), 1e-300))
            return val;
        prev = val;
    }
    // panel cap: report achieved error
    throw QuadratureError("green_kernel: Hankel quadrature did not converge", prev, rel_tol);
}

double green_kernel_propertime(double alpha, double m2, double r, double rel_tol) {
    // G = (r/(2m))^(alpha-1) / (4 pi Gamma(alpha)) e^(-m r)
    //       int exp((alpha-1) t - m r (cosh t - 1)) dt
    const double m = std::sqrt(m2);
    const double mr = m * r;
    const double a1 = alpha - 1.0;
    const auto integrand = [&](double t) {
        return std::exp(a1 * t - mr * (std::cosh(t) - 1.0));
    };
    // expand the window until the endpoints are negligible against the peak
    double T = 4.0;
    const double t_peak = std::asinh(a1 / std::max(mr, 1e-300));
    while (a1 * (t_peak + T) - mr * (std::cosh(t_peak + T) - 1.0) >
               a1 * t_peak - mr * (std::cosh(t_peak) - 1.0) - 120.0 ||
           a1 * (t_peak - T) - mr * (std::cosh(t_peak - T) - 1.0) >
               a1 * t_peak - mr * (std::cosh(t_peak) - 1.0) - 120.0)
        T *= 1.5;
    const double body =
        adaptive_integrate(integrand, t_peak - T, t_peak + T, rel_tol * 0.1, 1 << 14);
    const double lg = std::lgamma(alpha);
    return std::exp(a1 * std::log(r / (2.0 * m)) - lg - mr) * body / (4.0 * M_PI);
}

} // namespace detail

namespace {

double hankel_origin(double alpha, double m2, double rel_tol) {
    // integrand k (m^2+k^2)^-alpha is monotone; finite part by adaptive GL,
    // analytic tail int_K^inf k^(1-2a) (1 + m^2/k^2)^-a dk expanded to two terms
    const auto integrand = [&](double k) { return k / std::pow(m2 + k * k, alpha); };
    double prev = 0.0;
    for (double K = 16.0 * std::sqrt(m2); K <= 1e7; K *= 2.0) {
        double head = adaptive_integrate(integrand, 0.0, K, rel_tol * 0.1);
        double tail = std::pow(K, 2.0 - 2.0 * alpha) / (2.0 * alpha - 2.0) -
                      alpha * m2 * std::pow(K, -2.0 * alpha) / (2.0 * alpha);
        double val = (head + tail) / (2.0 * M_PI);
        if (prev != 0.0 && std::abs(val - prev) <= rel_tol * std::abs(val)) return val;
        prev = val;
    }
    throw QuadratureError("green_kernel: origin quadrature did not converge", prev, rel_tol);
}

} // namespace

double green_kernel_origin(double alpha, double m2) {
    if (alpha <= 1.0) throw std::domain_error("green_kernel_origin: needs alpha > 1");
    return 1.0 / (4.0 * M_PI * (alpha - 1.0) * std::pow(m2, alpha - 1.0));
}

double green_kernel(double alpha, double m2, double r, double rel_tol) {
    if (alpha <= 0.0 || m2 <= 0.0 || r < 0.0)
        throw std::domain_error("green_kernel: need alpha > 0, m2 > 0, r >= 0");
    if (r == 0.0) {
        if (alpha <= 1.0)
            throw std::domain_error("green_kernel: divergent at origin for alpha <= 1 in 2D");
        return hankel_origin(alpha, m2, rel_tol);
    }
    // the oscillatory form cancels down to ~e^(-m r); switch representation
    // once that falls toward the double floor
    if (std::sqrt(m2) * r > 12.0) return detail::green_kernel_propertime(alpha, m2, r, rel_tol);
    return detail::green_kernel_oscillatory(alpha, m2, r, rel_tol);
}

double green_gradient_identity_residual(double chi, double r) {
    if (chi <= 0.0 || r <= 0.0)
        throw std::domain_error("green_gradient_identity_residual: need chi > 0, r > 0");
    const double varpi = 1.0 / (1.0 + 2.0 * chi);
    // central difference; quadrature tol ~1e-9 relative, so h ~ tol^(1/3)
    const double h = 1e-3 * std::max(r, 1.0);
    const double d = (green_kernel(2.0 + 2.0 * chi, 1.0, r + h) -
                      green_kernel(2.0 + 2.0 * chi, 1.0, r - h)) /
                     (2.0 * h);
    const double rhs = -(r * varpi / 2.0) * green_kernel(1.0 + 2.0 * chi, 1.0, r);
    return std::abs(d - rhs) / std::abs(rhs);
}

KernelTable::KernelTable(double alpha, double m2, double r_min, double r_max, int nodes,
                         int /*interpolation_order*/)
    : alpha_(alpha), m2_(m2) {
    if (r_min <= 0.0 || r_max <= r_min || nodes < 8)
        throw std::invalid_argument("KernelTable: bad radius grid");
    radii_.resize(nodes);
    values_.resize(nodes);
    const double lr = std::log(r_max / r_min);
    for (int i = 0; i < nodes; ++i) {
        radii_[i] = r_min * std::exp(lr * i / (nodes - 1.0));
        values_[i] = green_kernel(alpha, m2, radii_[i]);
    }
    for (int i = 0; i < nodes; ++i) {
        if (!(values_[i] > 0.0))
            throw std::runtime_error("KernelTable: kernel not positive at r=" +
                                     std::to_string(radii_[i]));
        // strict decrease, with an allowance for quadrature noise where the
        // kernel is flat (the true decrement can sit below the 1e-9 tolerance)
        if (i > 0 && !(values_[i] < values_[i - 1] * (1.0 + 1e-7)))
            throw std::runtime_error("KernelTable: kernel not decreasing at r=" +
                                     std::to_string(radii_[i]));
    }
    if (std::abs(alpha - 1.0) < 1e-14) {
        for (int i = 0; i < nodes; ++i) {
            double ref = std::cyl_bessel_k(0.0, std::sqrt(m2) * radii_[i]) / (2.0 * M_PI);
            if (std::abs(values_[i] - ref) > 1e-8 * ref)
                throw std::runtime_error("KernelTable: alpha=1 BesselK0 check failed");
        }
    }
    // monotone log-linear tail fit over the last decade of nodes
    const int ntail = std::max(4, nodes / 16);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = nodes - ntail; i < nodes; ++i) {
        sx += radii_[i];
        sy += std::log(values_[i]);
        sxx += radii_[i] * radii_[i];
        sxy += radii_[i] * std::log(values_[i]);
    }
    tail_slope_ = (ntail * sxy - sx * sy) / (ntail * sxx - sx * sx);
    if (!(tail_slope_ < 0.0)) throw std::runtime_error("KernelTable: tail not exponentially decaying");
    spline_ = CubicSpline(radii_, values_);
}

double KernelTable::operator()(double r) const {
    if (r <= radii_.front()) {
        if (alpha_ > 1.0) {
            // blend towards the finite origin value
            double v0 = green_kernel_origin(alpha_, m2_);
            double t = r / radii_.front();
            return v0 + t * (values_.front() - v0);
        }
        return values_.front();
    }
    if (r >= radii_.back()) return values_.back() * std::exp(tail_slope_ * (r - radii_.back()));
    return spline_(r);
}

double KernelTable::at_origin() const { return green_kernel_origin(alpha_, m2_); }

void KernelTable::export_csv(const std::string &path) const {
    std::ofstream out(path);
    out << "radius,value\n";
    for (std::size_t i = 0; i < radii_.size(); ++i)
        out << radii_[i] << "," << values_[i] << "\n";
}

namespace {

void verify_co(CutOff &c, double m2) {
    if (!(c.b * c.b < 4.0 * m2))
        throw std::invalid_argument("make_cutoff: requires b^2 < 4 m^2 (got b=" +
                                    std::to_string(c.b) + ", m2=" + std::to_string(m2) + ")");
    // radial ftilde' <= 0 and f > 0 probes
    for (double s = 0.0; s <= 400.0; s += 0.5) {
        if (!(c.ftilde(s) > 0.0))
            throw std::invalid_argument("make_cutoff: CO violated, f <= 0 at |x|^2=" +
                                        std::to_string(s));
        if (c.ftilde_prime(s) > 0.0)
            throw std::invalid_argument("make_cutoff: CO violated, ftilde' > 0 at |x|^2=" +
                                        std::to_string(s));
    }
    // sampled Laplacian bound on a probe lattice, tolerance ~ h^2 scale
    const double h = 0.05;
    const double half = 12.0 / std::max(c.b, 0.25);
    const int np = 41;
    for (int i = 0; i < np; ++i) {
        for (int j = 0; j < np; ++j) {
            double x = -half + 2.0 * half * i / (np - 1.0);
            double y = -half + 2.0 * half * j / (np - 1.0);
            double f0 = c.f(x, y);
            double lap = (c.f(x + h, y) + c.f(x - h, y) + c.f(x, y + h) + c.f(x, y - h) -
                          4.0 * f0) /
                         (h * h);
            if (lap > c.b * c.b * f0 + 10.0 * h * h * std::max(f0, 1.0)) {
                std::ostringstream os;
                os << "make_cutoff: CO violated, Delta f = " << lap << " > b^2 f = "
                   << c.b * c.b * f0 << " at (" << x << "," << y << ")";
                throw std::invalid_argument(os.str());
            }
        }
    }
    // radial identity int ftilde'(|x|^2) dx = -pi ftilde(0)
    double R = 4.0;
    while (c.ftilde(R * R) > 1e-14 * c.ftilde(0.0) && R < 1e5) R *= 2.0;
    c.fprime_integral = adaptive_integrate(
        [&](double r) { return 2.0 * M_PI * r * c.ftilde_prime(r * r); }, 0.0, R, 1e-10);
    if (std::abs(c.fprime_integral + M_PI * c.ftilde(0.0)) > 1e-8 * M_PI * c.ftilde(0.0))
        throw std::invalid_argument("make_cutoff: radial identity int f' = -pi f(0) failed");
}

} // namespace

CutOff make_cutoff(const std::string &kind, double b, double m2, double extra) {
    if (b <= 0.0) throw std::invalid_argument("make_cutoff: b must be positive");
    CutOff c;
    c.kind = kind;
    c.b = b;
    if (kind == "exp-sqrt") {
        c.ft_ = [b](double s) { return std::exp(-b * std::sqrt(1.0 + s)); };
        c.ftp_ = [b](double s) {
            double q = std::sqrt(1.0 + s);
            return -b / (2.0 * q) * std::exp(-b * q);
        };
    } else if (kind == "exp-sqrt1") {
        c.ft_ = [b](double s) { return std::exp(-b * (std::sqrt(1.0 + s) - 1.0)); };
        c.ftp_ = [b](double s) {
            double q = std::sqrt(1.0 + s);
            return -b / (2.0 * q) * std::exp(-b * (q - 1.0));
        };
    } else if (kind == "flat-top") {
        // f = 1 inside radius rtop, skirt exp(-b g(u)), g = u - atan(u):
        // g' in [0,1), g'' >= 0, so Delta f <= b^2 f pointwise.
        const double rtop = extra;
        if (rtop < 0.0) throw std::invalid_argument("make_cutoff: flat-top radius must be >= 0");
        c.ft_ = [b, rtop](double s) {
            double u = std::sqrt(std::max(s, 0.0)) - rtop;
            if (u <= 0.0) return 1.0;
            return std::exp(-b * (u - std::atan(u)));
        };
        c.ftp_ = [b, rtop](double s) {
            double r = std::sqrt(std::max(s, 0.0));
            double u = r - rtop;
            if (u <= 0.0 || r == 0.0) return 0.0;
            double gp = u * u / (1.0 + u * u);
            return -b * gp / (2.0 * r) * std::exp(-b * (u - std::atan(u)));
        };
    } else {
        throw std::invalid_argument("make_cutoff: unknown family '" + kind + "'");
    }
    verify_co(c, m2);
    return c;
}

} // namespace esq
