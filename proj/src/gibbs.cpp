#include "esq/gibbs.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace esq {

GibbsMeasure::GibbsMeasure(Potential potential, double m2) : pot_(std::move(potential)), m2_(m2) {
    if (pot_.n > 3) throw std::invalid_argument("GibbsMeasure: tensor quadrature limited to n <= 3");
    if (!(m2 > 0.0)) throw std::invalid_argument("GibbsMeasure: m2 must be positive");
    // truncation: 4 pi m^2 R^2 / 2 >= 60 puts the Gaussian tail below underflow noise
    R_ = std::sqrt(60.0 / (2.0 * M_PI * m2_));
    // Richardson-style node doubling until Z and the second moment stabilize
    double prevZ = 0.0, prevM2 = 0.0;
    for (int nodes = 32; nodes <= 1024; nodes *= 2) {
        double Z = integrate([](const Vec &) { return 1.0; }, nodes);
        double M2 = integrate([](const Vec &y) { return y.squaredNorm(); }, nodes);
        if (prevZ > 0.0 && std::abs(Z - prevZ) <= 1e-8 * Z &&
            std::abs(M2 - prevM2) <= 1e-8 * std::max(M2, 1e-30)) {
            nodes_ = nodes;
            Z_ = Z;
            return;
        }
        prevZ = Z;
        prevM2 = M2;
    }
    throw QuadratureError("GibbsMeasure: normalization did not stabilize", prevZ, 1e-8);
}

double GibbsMeasure::integrate(const std::function<double(const Vec &)> &f, int nodes) const {
    const auto &x = gauss_legendre_nodes(nodes);
    const auto &w = gauss_legendre_weights(nodes);
    const int n = pot_.n;
    auto weight = [&](const Vec &y) {
        return std::exp(-4.0 * M_PI * (0.5 * m2_ * y.squaredNorm() + pot_.V(y)));
    };
    double total = 0.0;
    Vec y(n);
    if (n == 1) {
        for (int i = 0; i < nodes; ++i) {
            y[0] = R_ * x[i];
            total += w[i] * weight(y) * f(y);
        }
        return total * R_;
    }
    if (n == 2) {
        for (int i = 0; i < nodes; ++i) {
            y[0] = R_ * x[i];
            double row = 0.0;
            for (int j = 0; j < nodes; ++j) {
                y[1] = R_ * x[j];
                row += w[j] * weight(y) * f(y);
            }
            total += w[i] * row;
        }
        return total * R_ * R_;
    }
    for (int i = 0; i < nodes; ++i) {
        y[0] = R_ * x[i];
        double plane = 0.0;
        for (int j = 0; j < nodes; ++j) {
            y[1] = R_ * x[j];
            double row = 0.0;
            for (int k = 0; k < nodes; ++k) {
                y[2] = R_ * x[k];
                row += w[k] * weight(y) * f(y);
            }
            plane += w[j] * row;
        }
        total += w[i] * plane;
    }
    return total * R_ * R_ * R_;
}

double GibbsMeasure::density(const Vec &y) const {
    return std::exp(-4.0 * M_PI * (0.5 * m2_ * y.squaredNorm() + pot_.V(y))) / Z_;
}

double GibbsMeasure::density1(double y) const { return density(Vec::Constant(1, y)); }

GibbsMeasure::Moment GibbsMeasure::moment(const std::function<double(const Vec &)> &h) const {
    Moment m;
    double coarse = integrate(h, nodes_ / 2) / Z_;
    m.value = integrate(h, nodes_) / Z_;
    m.error_estimate = std::abs(m.value - coarse);
    return m;
}

GibbsMeasure::Moment GibbsMeasure::monomial_moment(const std::vector<int> &powers) const {
    if (static_cast<int>(powers.size()) != pot_.n)
        throw std::invalid_argument("monomial_moment: powers size must match n");
    return moment([&](const Vec &y) {
        double v = 1.0;
        for (int i = 0; i < pot_.n; ++i) v *= std::pow(y[i], powers[i]);
        return v;
    });
}

GibbsMeasure::Moment GibbsMeasure::monomial_moment1(int power) const {
    return monomial_moment({power});
}

double GibbsMeasure::bin_probability(double lo, double hi) const {
    if (pot_.n != 1) throw std::invalid_argument("bin_probability: n = 1 only");
    lo = std::max(lo, -R_);
    hi = std::min(hi, R_);
    if (hi <= lo) return 0.0;
    // integrate the smooth weight over the bin rather than an indicator moment
    auto w = [&](double y) {
        return std::exp(-4.0 * M_PI * (0.5 * m2_ * y * y + pot_.V(Vec::Constant(1, y))));
    };
    return adaptive_integrate(w, lo, hi, 1e-10) / Z_;
}

void GibbsMeasure::export_moments_csv(const std::string &path, int max_degree) const {
    std::ofstream out(path);
    out << "h,value,error_estimate\n";
    for (int d = 0; d <= max_degree; ++d) {
        std::vector<int> powers(pot_.n, 0);
        powers[0] = d;
        auto m = monomial_moment(powers);
        out << "y^" << d << "," << m.value << "," << m.error_estimate << "\n";
    }
}

Vec GibbsMeasure::sample(NormalRng &rng) const {
    // proposal: Gaussian with variance 1/(4 pi m^2); accept with prob e^(-4 pi V)
    const double sd = 1.0 / std::sqrt(4.0 * M_PI * m2_);
    Vec y(pot_.n);
    for (int it = 0; it < 100000; ++it) {
        for (int i = 0; i < pot_.n; ++i) y[i] = sd * rng.normal();
        if (rng.uniform() <= std::exp(-4.0 * M_PI * pot_.V(y))) return y;
    }
    throw std::runtime_error("GibbsMeasure::sample: acceptance too low");
}

} // namespace esq
