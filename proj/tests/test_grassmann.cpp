#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "esq/grassmann.hpp"
#include "esq/numerics.hpp"

using namespace esq;

namespace {

// independent sign oracle: multiply ordered index lists with explicit
// bubble-sort swap counting
int bubble_sign(std::vector<int> a, const std::vector<int> &b) {
    for (int x : b) a.push_back(x);
    int swaps = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j + 1 < a.size() - i; ++j)
            if (a[j] > a[j + 1]) {
                std::swap(a[j], a[j + 1]);
                ++swaps;
            }
    for (std::size_t i = 0; i + 1 < a.size(); ++i)
        if (a[i] == a[i + 1]) return 0;
    return swaps % 2 ? -1 : 1;
}

std::vector<int> mask_to_list(std::uint32_t m) {
    std::vector<int> out;
    for (int i = 0; i < 32; ++i)
        if (m & (1u << i)) out.push_back(i);
    return out;
}

} // namespace

TEST_CASE("generator relations") {
    const int k = 4;
    auto t0 = GrassmannElement::generator(k, 0);
    auto t1 = GrassmannElement::generator(k, 1);
    CHECK((t0 * t0).is_zero());
    CHECK((t0 * t1 + t1 * t0).is_zero());
    CHECK((t0 * t1).coefficient(0b0011u) == 1.0);
    CHECK((t1 * t0).coefficient(0b0011u) == -1.0);
}

TEST_CASE("exhaustive monomial products against the bubble-sort oracle, k <= 6") {
    for (int k = 2; k <= 6; ++k) {
        for (std::uint32_t ma = 0; ma < (1u << k); ++ma) {
            for (std::uint32_t mb = 0; mb < (1u << k); ++mb) {
                GrassmannElement a(k), b(k);
                a.set_coefficient(ma, 1.0);
                b.set_coefficient(mb, 1.0);
                auto prod = a * b;
                const int sign = bubble_sign(mask_to_list(ma), mask_to_list(mb));
                if (sign == 0) {
                    CHECK(prod.is_zero());
                } else {
                    CHECK(prod.coefficient(ma | mb) == sign);
                }
            }
        }
    }
}

TEST_CASE("associativity on random sparse elements") {
    const int k = 6;
    NormalRng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        GrassmannElement a(k), b(k), c(k);
        for (int t = 0; t < 5; ++t) {
            a.set_coefficient(rng.raw() & 63u, rng.normal());
            b.set_coefficient(rng.raw() & 63u, rng.normal());
            c.set_coefficient(rng.raw() & 63u, rng.normal());
        }
        auto lhs = (a * b) * c;
        auto rhs = a * (b * c);
        auto diff = lhs - rhs;
        CHECK(diff.max_abs_coefficient() < 1e-12);
    }
}

TEST_CASE("distributivity and scalar arithmetic") {
    const int k = 3;
    auto t0 = GrassmannElement::generator(k, 0);
    auto t1 = GrassmannElement::generator(k, 1);
    auto t2 = GrassmannElement::generator(k, 2);
    auto lhs = t0 * (t1 + t2);
    auto rhs = t0 * t1 + t0 * t2;
    CHECK((lhs - rhs).is_zero(1e-15));
    auto s = GrassmannElement::scalar(k, 2.5);
    CHECK((s * t0).coefficient(1u) == 2.5);
    CHECK((t0 * s).coefficient(1u) == 2.5);
}

TEST_CASE("merge_sign edge cases") {
    CHECK(GrassmannElement::merge_sign(0b01u, 0b10u) == 1);  // t0 t1 ordered
    CHECK(GrassmannElement::merge_sign(0b10u, 0b01u) == -1); // t1 t0 swaps once
    CHECK(GrassmannElement::merge_sign(0b01u, 0b01u) == 0);  // repeated generator
    CHECK(GrassmannElement::merge_sign(0u, 0b11u) == 1);
}
