#include "esq/fields.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>

#include "esq/numerics.hpp"

namespace esq {

void GridSpec::validate() const {
    if (!(L > 0.0)) throw std::invalid_argument("GridSpec: L must be positive");
    if (N < 8 || (N & (N - 1)) != 0)
        throw std::invalid_argument("GridSpec: N must be a power of two >= 8");
    if (n < 1) throw std::invalid_argument("GridSpec: n must be >= 1");
    if (!(m2 > 0.0)) throw std::invalid_argument("GridSpec: m2 must be positive");
}

bool Field::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

double Field::sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double Field::l2_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s) * grid.spacing();
}

Field &Field::operator+=(const Field &o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
}
Field &Field::operator-=(const Field &o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
}
Field &Field::operator*=(double s) {
    for (double &v : values) v *= s;
    return *this;
}

namespace {

constexpr char kMagic[8] = {'E', 'S', 'Q', 'F', 'L', 'D', '0', '1'};

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// FFTW plan creation is not thread safe; executions via the new-array API are.
std::mutex plan_mutex;
std::map<int, PlanPair> plan_cache;

PlanPair get_plans(int N) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto it = plan_cache.find(N);
    if (it != plan_cache.end()) return it->second;
    double *in = fftw_alloc_real(static_cast<std::size_t>(N) * N);
    fftw_complex *out = fftw_alloc_complex(static_cast<std::size_t>(N) * (N / 2 + 1));
    PlanPair p;
    p.fwd = fftw_plan_dft_r2c_2d(N, N, in, out, FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_c2r_2d(N, N, out, in, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plan_cache[N] = p;
    return p;
}

} // namespace

void Field::save(const std::string &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("Field::save: cannot open " + path);
    out.write(kMagic, 8);
    const std::uint32_t endian = 1;
    std::int32_t n = grid.n, N = grid.N;
    out.write(reinterpret_cast<const char *>(&endian), 4);
    out.write(reinterpret_cast<const char *>(&n), 4);
    out.write(reinterpret_cast<const char *>(&N), 4);
    out.write(reinterpret_cast<const char *>(&grid.L), 8);
    out.write(reinterpret_cast<const char *>(&grid.m2), 8);
    out.write(reinterpret_cast<const char *>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

Field Field::load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("Field::load: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("Field::load: bad magic");
    std::uint32_t endian;
    std::int32_t n, N;
    GridSpec g;
    in.read(reinterpret_cast<char *>(&endian), 4);
    in.read(reinterpret_cast<char *>(&n), 4);
    in.read(reinterpret_cast<char *>(&N), 4);
    in.read(reinterpret_cast<char *>(&g.L), 8);
    in.read(reinterpret_cast<char *>(&g.m2), 8);
    if (endian != 1) throw std::runtime_error("Field::load: foreign endianness");
    g.n = n;
    g.N = N;
    Field f(g);
    in.read(reinterpret_cast<char *>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!in) throw std::runtime_error("Field::load: truncated file");
    return f;
}

void Field::export_csv_slice(const std::string &path, int c) const {
    std::ofstream out(path);
    out << "x,value\n";
    for (int ix = 0; ix < grid.N; ++ix) out << grid.coord(ix) << "," << at(c, ix, 0) << "\n";
}

NoiseDraw sample_white_noise(const GridSpec &grid, std::uint64_t seed) {
    grid.validate();
    NoiseDraw draw;
    draw.field = Field(grid);
    draw.seed = seed;
    NormalRng rng(derive_stream_seed(seed, 0));
    const double sd = 1.0 / grid.spacing();
    for (double &v : draw.field.values) v = sd * rng.normal();
    return draw;
}

Field apply_fractional_inverse(const Field &field, double alpha) {
    const GridSpec &g = field.grid;
    const int N = g.N;
    const int nc = N / 2 + 1;
    PlanPair plans = get_plans(N);
    Field out(g);
    double *buf = fftw_alloc_real(static_cast<std::size_t>(N) * N);
    fftw_complex *spec = fftw_alloc_complex(static_cast<std::size_t>(N) * nc);
    const double two_pi_over_L = 2.0 * M_PI / g.L;
    for (int c = 0; c < g.n; ++c) {
        std::memcpy(buf, field.component(c), sizeof(double) * N * N);
        fftw_execute_dft_r2c(plans.fwd, buf, spec);
        for (int ix = 0; ix < N; ++ix) {
            const int kxi = ix <= N / 2 ? ix : ix - N;
            const double kx = two_pi_over_L * kxi;
            for (int iy = 0; iy < nc; ++iy) {
                const double ky = two_pi_over_L * iy;
                const double mult =
                    std::pow(g.m2 + kx * kx + ky * ky, -alpha) / (static_cast<double>(N) * N);
                spec[static_cast<std::size_t>(ix) * nc + iy][0] *= mult;
                spec[static_cast<std::size_t>(ix) * nc + iy][1] *= mult;
            }
        }
        fftw_execute_dft_c2r(plans.bwd, spec, buf);
        std::memcpy(out.component(c), buf, sizeof(double) * N * N);
    }
    fftw_free(buf);
    fftw_free(spec);
    return out;
}

std::vector<double> lattice_integral(const Field &field, LatticeWeight w, const CutOff *cutoff) {
    const GridSpec &g = field.grid;
    if (w != LatticeWeight::none && cutoff == nullptr)
        throw std::invalid_argument("lattice_integral: weighted form needs a cut-off");
    std::vector<double> out(g.n, 0.0);
    const double a2 = g.spacing() * g.spacing();
    for (int c = 0; c < g.n; ++c) {
        double s = 0.0;
        for (int ix = 0; ix < g.N; ++ix) {
            const double x = g.coord(ix);
            for (int iy = 0; iy < g.N; ++iy) {
                const double y = g.coord(iy);
                double v = field.at(c, ix, iy);
                if (w == LatticeWeight::f)
                    v *= cutoff->ftilde(x * x + y * y);
                else if (w == LatticeWeight::fprime)
                    v *= cutoff->ftilde_prime(x * x + y * y);
                s += v;
            }
        }
        out[c] = s * a2;
    }
    return out;
}

Field cutoff_on_grid(const GridSpec &grid, const CutOff &cutoff, bool prime) {
    GridSpec g1 = grid;
    g1.n = 1;
    Field f(g1);
    for (int ix = 0; ix < grid.N; ++ix) {
        const double x = grid.coord(ix);
        for (int iy = 0; iy < grid.N; ++iy) {
            const double y = grid.coord(iy);
            const double s = x * x + y * y;
            f.at(0, ix, iy) = prime ? cutoff.ftilde_prime(s) : cutoff.ftilde(s);
        }
    }
    return f;
}

double lattice_symbol_sum(const GridSpec &grid, double alpha) {
    const double two_pi_over_L = 2.0 * M_PI / grid.L;
    double s = 0.0;
    for (int ix = 0; ix < grid.N; ++ix) {
        const int kxi = ix <= grid.N / 2 ? ix : ix - grid.N;
        const double kx = two_pi_over_L * kxi;
        for (int iy = 0; iy < grid.N; ++iy) {
            const int kyi = iy <= grid.N / 2 ? iy : iy - grid.N;
            const double ky = two_pi_over_L * kyi;
            s += std::pow(grid.m2 + kx * kx + ky * ky, -2.0 * alpha);
        }
    }
    return s / (grid.L * grid.L);
}

Field lattice_inverse_column(const GridSpec &grid, double alpha) {
    GridSpec g1 = grid;
    g1.n = 1;
    Field e(g1);
    e.at(0, 0, 0) = 1.0;
    return apply_fractional_inverse(e, alpha);
}

double fourier_l2_norm(const Field &field) {
    const GridSpec &g = field.grid;
    const int N = g.N;
    const int nc = N / 2 + 1;
    PlanPair plans = get_plans(N);
    double *buf = fftw_alloc_real(static_cast<std::size_t>(N) * N);
    fftw_complex *spec = fftw_alloc_complex(static_cast<std::size_t>(N) * nc);
    double total = 0.0;
    for (int c = 0; c < g.n; ++c) {
        std::memcpy(buf, field.component(c), sizeof(double) * N * N);
        fftw_execute_dft_r2c(plans.fwd, buf, spec);
        // Parseval for r2c layout: columns 0 and N/2 are unique, others doubled
        for (int ix = 0; ix < N; ++ix) {
            for (int iy = 0; iy < nc; ++iy) {
                const double re = spec[static_cast<std::size_t>(ix) * nc + iy][0];
                const double im = spec[static_cast<std::size_t>(ix) * nc + iy][1];
                const double mag = re * re + im * im;
                total += (iy == 0 || iy == N / 2) ? mag : 2.0 * mag;
            }
        }
    }
    fftw_free(buf);
    fftw_free(spec);
    // |hat u|^2 summed over modes equals N^2 sum |u|^2; lattice L2 adds a^2
    return std::sqrt(total) / N * g.spacing();
}

} // namespace esq
