#include "esq/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace esq {

namespace {

// Newton iteration on Legendre polynomials, standard Golub-Welsch-free scheme.
void compute_gl(int n, std::vector<double> &x, std::vector<double> &w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p0 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

std::mutex gl_mutex;
std::map<int, std::pair<std::vector<double>, std::vector<double>>> gl_cache;

const std::pair<std::vector<double>, std::vector<double>> &gl_pair(int order) {
    std::lock_guard<std::mutex> lock(gl_mutex);
    auto it = gl_cache.find(order);
    if (it == gl_cache.end()) {
        std::vector<double> x, w;
        compute_gl(order, x, w);
        it = gl_cache.emplace(order, std::make_pair(std::move(x), std::move(w))).first;
    }
    return it->second;
}

} // namespace

const std::vector<double> &gauss_legendre_nodes(int order) { return gl_pair(order).first; }
const std::vector<double> &gauss_legendre_weights(int order) { return gl_pair(order).second; }

double gl_integrate(const std::function<double(double)> &f, double a, double b, int order) {
    const auto &x = gauss_legendre_nodes(order);
    const auto &w = gauss_legendre_weights(order);
    const double c = 0.5 * (b - a), m = 0.5 * (a + b);
    double s = 0.0;
    for (int i = 0; i < order; ++i) s += w[i] * f(m + c * x[i]);
    return c * s;
}

double adaptive_integrate(const std::function<double(double)> &f, double a, double b,
                          double rel_tol, int max_panels) {
    double prev = gl_integrate(f, a, b);
    for (int panels = 2; panels <= max_panels; panels *= 2) {
        double s = 0.0;
        const double h = (b - a) / panels;
        for (int i = 0; i < panels; ++i) s += gl_integrate(f, a + i * h, a + (i + 1) * h);
        double err = std::abs(s - prev);
        if (err <= rel_tol * std::max(std::abs(s), 1e-300) || err < 1e-300) return s;
        prev = s;
        if (panels == max_panels)
            throw QuadratureError("adaptive_integrate: panel cap reached", s, err);
    }
    return prev;
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const int n = static_cast<int>(x_.size());
    if (n < 3) throw std::invalid_argument("CubicSpline: need at least 3 nodes");
    m_.assign(n, 0.0);
    std::vector<double> u(n, 0.0);
    for (int i = 1; i < n - 1; ++i) {
        double sig = (x_[i] - x_[i - 1]) / (x_[i + 1] - x_[i - 1]);
        double p = sig * m_[i - 1] + 2.0;
        m_[i] = (sig - 1.0) / p;
        u[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]) - (y_[i] - y_[i - 1]) / (x_[i] - x_[i - 1]);
        u[i] = (6.0 * u[i] / (x_[i + 1] - x_[i - 1]) - sig * u[i - 1]) / p;
    }
    for (int i = n - 2; i >= 0; --i) m_[i] = m_[i] * m_[i + 1] + u[i];
}

double CubicSpline::operator()(double xq) const {
    const int n = static_cast<int>(x_.size());
    int lo = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) - 1;
    lo = std::clamp(lo, 0, n - 2);
    const double h = x_[lo + 1] - x_[lo];
    const double A = (x_[lo + 1] - xq) / h, B = (xq - x_[lo]) / h;
    return A * y_[lo] + B * y_[lo + 1] +
           ((A * A * A - A) * m_[lo] + (B * B * B - B) * m_[lo + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double xq) const {
    const int n = static_cast<int>(x_.size());
    int lo = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), xq) - x_.begin()) - 1;
    lo = std::clamp(lo, 0, n - 2);
    const double h = x_[lo + 1] - x_[lo];
    const double A = (x_[lo + 1] - xq) / h, B = (xq - x_[lo]) / h;
    return (y_[lo + 1] - y_[lo]) / h +
           ((3.0 * B * B - 1.0) * m_[lo + 1] - (3.0 * A * A - 1.0) * m_[lo]) * h / 6.0;
}

double bessel_j0_zero(int s) {
    // McMahon expansion
    const double beta = (s - 0.25) * M_PI;
    const double b2 = beta * beta;
    double z = beta + 1.0 / (8.0 * beta) * (1.0 - (124.0 / 3.0) / (8.0 * b2) * 0.0);
    z = beta + 1.0 / (8.0 * beta) - 124.0 / (3.0 * std::pow(8.0 * beta, 3)) +
        120928.0 / (15.0 * std::pow(8.0 * beta, 5));
    // one Newton polish: J0' = -J1
    for (int it = 0; it < 2; ++it) {
        double j0 = std::cyl_bessel_j(0.0, z);
        double j1 = std::cyl_bessel_j(1.0, z);
        z += j0 / j1;
    }
    return z;
}

std::uint64_t splitmix64(std::uint64_t &state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t st = master;
    std::uint64_t a = splitmix64(st);
    st = a ^ (index * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL);
    std::uint64_t b = splitmix64(st);
    st = b;
    return splitmix64(st);
}

NormalRng::NormalRng(std::uint64_t seed) {
    std::uint64_t st = seed;
    for (auto &si : s_) si = splitmix64(st);
}

std::uint64_t NormalRng::raw() {
    auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double NormalRng::uniform() {
    // 53-bit mantissa, strictly inside (0,1)
    return ((raw() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalRng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

MeanSe mean_and_se(const std::vector<double> &v) {
    MeanSe out;
    if (v.empty()) return out;
    double s = 0.0;
    for (double x : v) s += x;
    out.mean = s / v.size();
    double q = 0.0;
    for (double x : v) q += (x - out.mean) * (x - out.mean);
    if (v.size() > 1) out.se = std::sqrt(q / (v.size() - 1.0) / v.size());
    return out;
}

double jackknife_ratio_se(const std::vector<double> &num, const std::vector<double> &den) {
    const std::size_t M = num.size();
    if (M < 2 || den.size() != M) return 0.0;
    double Sn = 0.0, Sd = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        Sn += num[i];
        Sd += den[i];
    }
    double mean = 0.0;
    std::vector<double> theta(M);
    for (std::size_t i = 0; i < M; ++i) {
        theta[i] = (Sn - num[i]) / (Sd - den[i]);
        mean += theta[i];
    }
    mean /= M;
    double q = 0.0;
    for (double t : theta) q += (t - mean) * (t - mean);
    return std::sqrt((M - 1.0) / M * q);
}

} // namespace esq
