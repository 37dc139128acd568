#include "esq/grassmann.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace esq {

GrassmannElement GrassmannElement::scalar(int k, double c) {
    GrassmannElement e(k);
    if (c != 0.0) e.coeff_[0] = c;
    return e;
}

GrassmannElement GrassmannElement::generator(int k, int index) {
    if (index < 0 || index >= k) throw std::invalid_argument("GrassmannElement: bad generator index");
    GrassmannElement e(k);
    e.coeff_[1u << index] = 1.0;
    return e;
}

double GrassmannElement::coefficient(std::uint32_t mask) const {
    auto it = coeff_.find(mask);
    return it == coeff_.end() ? 0.0 : it->second;
}

void GrassmannElement::set_coefficient(std::uint32_t mask, double c) {
    if (c == 0.0)
        coeff_.erase(mask);
    else
        coeff_[mask] = c;
}

void GrassmannElement::prune(std::uint32_t mask) {
    auto it = coeff_.find(mask);
    if (it != coeff_.end() && it->second == 0.0) coeff_.erase(it);
}

int GrassmannElement::merge_sign(std::uint32_t a, std::uint32_t b) {
    if (a & b) return 0;
    // count inversions: pairs (i in a, j in b) with i > j
    int inversions = 0;
    std::uint32_t bb = b;
    while (bb) {
        const int j = std::countr_zero(bb);
        bb &= bb - 1;
        const std::uint32_t higher = a & ~((2u << j) - 1u);
        inversions += std::popcount(higher);
    }
    return (inversions & 1) ? -1 : 1;
}

GrassmannElement GrassmannElement::operator+(const GrassmannElement &o) const {
    GrassmannElement out = *this;
    out += o;
    return out;
}

GrassmannElement &GrassmannElement::operator+=(const GrassmannElement &o) {
    if (k_ != o.k_) throw std::invalid_argument("GrassmannElement: generator count mismatch");
    for (const auto &[m, c] : o.coeff_) {
        coeff_[m] += c;
        prune(m);
    }
    return *this;
}

GrassmannElement GrassmannElement::operator-(const GrassmannElement &o) const {
    return *this + o * (-1.0);
}

GrassmannElement GrassmannElement::operator*(double s) const {
    GrassmannElement out(k_);
    if (s == 0.0) return out;
    for (const auto &[m, c] : coeff_) out.coeff_[m] = c * s;
    return out;
}

GrassmannElement GrassmannElement::operator*(const GrassmannElement &o) const {
    if (k_ != o.k_) throw std::invalid_argument("GrassmannElement: generator count mismatch");
    GrassmannElement out(k_);
    for (const auto &[ma, ca] : coeff_) {
        for (const auto &[mb, cb] : o.coeff_) {
            const int s = merge_sign(ma, mb);
            if (s == 0) continue;
            const std::uint32_t m = ma | mb;
            out.coeff_[m] += s * ca * cb;
        }
    }
    for (auto it = out.coeff_.begin(); it != out.coeff_.end();)
        it = it->second == 0.0 ? out.coeff_.erase(it) : std::next(it);
    return out;
}

bool GrassmannElement::is_zero(double tol) const {
    for (const auto &[m, c] : coeff_)
        if (std::abs(c) > tol) return false;
    return true;
}

double GrassmannElement::max_abs_coefficient() const {
    double mx = 0.0;
    for (const auto &[m, c] : coeff_) mx = std::max(mx, std::abs(c));
    return mx;
}

std::string GrassmannElement::str() const {
    std::ostringstream os;
    bool first = true;
    for (const auto &[m, c] : coeff_) {
        os << (first ? "" : " + ") << c;
        for (int i = 0; i < k_; ++i)
            if (m & (1u << i)) os << "*t" << i;
        first = false;
    }
    if (first) os << "0";
    return os.str();
}

} // namespace esq
