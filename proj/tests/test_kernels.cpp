#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "vroute/kernels.hpp"
#include "vroute/random.hpp"

using namespace vroute;
using namespace vroute::kernels;

namespace {

std::vector<const KernelTable*> simd_tables() {
    std::vector<const KernelTable*> out;
    for (Isa isa : {Isa::avx2, Isa::neon})
        if (const KernelTable* t = table_for(isa)) out.push_back(t);
    return out;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar table is always available and selectable") {
    REQUIRE(table_for(Isa::scalar) != nullptr);
    CHECK(table_for(Isa::scalar)->isa == Isa::scalar);
    const Isa before = active().isa;
    CHECK(select(Isa::scalar));
    CHECK(active().isa == Isa::scalar);
    CHECK(select(before));
    CHECK(isa_name(Isa::avx2) == "avx2");
}

TEST_CASE("scalar reference kernels on hand-computed inputs") {
    const KernelTable& k = scalar_table();
    const double a[] = {1, 2, 3};
    const double b[] = {4, -5, 6};
    CHECK(k.dot(a, b, 3) == doctest::Approx(12.0));
    CHECK(k.sum(a, 3) == 6.0);
    double y[] = {1, 1, 1};
    k.axpy(2.0, a, y, 3);
    CHECK(y[0] == 3.0);
    CHECK(y[2] == 7.0);
    const double rows[] = {1, 0, 0, 1, 1, 1};
    double out[3];
    const double x[] = {2, 3};
    k.gemv(rows, 3, 2, x, out);
    CHECK(out[0] == 2.0);
    CHECK(out[1] == 3.0);
    CHECK(out[2] == 5.0);
    const std::uint8_t px[] = {0, 0, 100, 100};
    std::uint64_t s = 0, sq = 0;
    k.u8_moments(px, 4, &s, &sq);
    CHECK(s == 200);
    CHECK(sq == 20000);
}

TEST_CASE("adam step matches the textbook update") {
    const KernelTable& k = scalar_table();
    double w[] = {1.0}, m[] = {0.0}, v[] = {0.0};
    const double g[] = {0.5};
    const AdamParams p{0.1, 0.9, 0.999, 1e-8};
    k.adam_step(w, m, v, g, 1, p);
    const double m1 = 0.1 * 0.5;
    const double v1 = 0.001 * 0.25;
    CHECK(m[0] == doctest::Approx(m1));
    CHECK(v[0] == doctest::Approx(v1));
    CHECK(w[0] == doctest::Approx(1.0 - 0.1 * m1 / (std::sqrt(v1) + 1e-8)));
}

TEST_CASE("SIMD kernels agree with the scalar reference") {
    const auto tables = simd_tables();
    if (tables.empty()) {
        MESSAGE("no SIMD kernels on this machine; equivalence test skipped");
        return;
    }
    const KernelTable& ref = scalar_table();
    Rng rng(42);
    for (const KernelTable* t : tables) {
        INFO("isa: " << isa_name(t->isa));
        for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 31u, 33u, 64u, 100u, 257u, 1000u}) {
            INFO("n = " << n);
            const auto a = random_vec(rng, n);
            const auto b = random_vec(rng, n);
            double scale = 1.0;
            for (double x : a) scale += std::abs(x);
            CHECK(t->dot(a.data(), b.data(), n) == doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-12).scale(scale));
            CHECK(t->sum(a.data(), n) == doctest::Approx(ref.sum(a.data(), n)).epsilon(1e-12).scale(scale));

            auto y1 = random_vec(rng, n);
            auto y2 = y1;
            ref.axpy(0.37, a.data(), y1.data(), n);
            t->axpy(0.37, a.data(), y2.data(), n);
            CHECK(bit_equal(y1, y2));

            auto w1 = random_vec(rng, n), m1 = random_vec(rng, n, 0.1), v1 = random_vec(rng, n, 0.1);
            for (auto& x : v1) x = std::abs(x);
            auto w2 = w1, m2 = m1, v2 = v1;
            const AdamParams p{2e-4, 0.9, 0.999, 1e-8};
            ref.adam_step(w1.data(), m1.data(), v1.data(), b.data(), n, p);
            t->adam_step(w2.data(), m2.data(), v2.data(), b.data(), n, p);
            CHECK(bit_equal(w1, w2));
            CHECK(bit_equal(m1, m2));
            CHECK(bit_equal(v1, v2));
        }
        for (std::size_t rows : {1u, 3u, 10u}) {
            for (std::size_t dim : {1u, 4u, 9u, 64u}) {
                const auto mat = random_vec(rng, rows * dim);
                const auto x = random_vec(rng, dim);
                std::vector<double> o1(rows), o2(rows);
                ref.gemv(mat.data(), rows, dim, x.data(), o1.data());
                t->gemv(mat.data(), rows, dim, x.data(), o2.data());
                for (std::size_t r = 0; r < rows; ++r) CHECK(o2[r] == doctest::Approx(o1[r]).epsilon(1e-12).scale(10.0));
            }
        }
        for (std::size_t n : {0u, 1u, 31u, 32u, 33u, 4095u, 4096u * 32u + 17u, 1000003u}) {
            std::vector<std::uint8_t> px(n);
            for (auto& b : px) b = static_cast<std::uint8_t>(rng.below(256));
            if (n > 100000) std::fill(px.begin(), px.begin() + static_cast<std::ptrdiff_t>(n / 2), 255);
            std::uint64_t s1 = 0, q1 = 0, s2 = 0, q2 = 0;
            ref.u8_moments(px.data(), n, &s1, &q1);
            t->u8_moments(px.data(), n, &s2, &q2);
            CHECK(s1 == s2);
            CHECK(q1 == q2);
        }
    }
}
