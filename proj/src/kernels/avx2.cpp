// Compiled with -mavx2; only reached after a runtime CPU check.

#include "vroute/kernels.hpp"

#include <immintrin.h>

namespace vroute::kernels {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void gemv_avx2(const double* rows, std::size_t n_rows, std::size_t dim, const double* x, double* out) {
    for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_avx2(rows + r * dim, x, dim);
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void u8_moments_avx2(const std::uint8_t* data, std::size_t n, std::uint64_t* sum, std::uint64_t* sum_sq) {
    const __m256i zero = _mm256_setzero_si256();
    __m256i sums = _mm256_setzero_si256();     // 4 x u64
    __m256i squares = _mm256_setzero_si256();  // 4 x u64
    std::size_t i = 0;
    while (i + 32 <= n) {
        // Each iteration adds at most 260100 to an i32 lane; flush well before overflow.
        __m256i sq32 = _mm256_setzero_si256();
        const std::size_t block_end = (n - i) / 32 > 4096 ? i + 4096 * 32 : i + ((n - i) / 32) * 32;
        for (; i < block_end; i += 32) {
            const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(data + i));
            sums = _mm256_add_epi64(sums, _mm256_sad_epu8(v, zero));
            const __m256i lo = _mm256_cvtepu8_epi16(_mm256_castsi256_si128(v));
            const __m256i hi = _mm256_cvtepu8_epi16(_mm256_extracti128_si256(v, 1));
            sq32 = _mm256_add_epi32(sq32, _mm256_madd_epi16(lo, lo));
            sq32 = _mm256_add_epi32(sq32, _mm256_madd_epi16(hi, hi));
        }
        squares = _mm256_add_epi64(squares, _mm256_cvtepu32_epi64(_mm256_castsi256_si128(sq32)));
        squares = _mm256_add_epi64(squares, _mm256_cvtepu32_epi64(_mm256_extracti128_si256(sq32, 1)));
    }
    alignas(32) std::uint64_t s_lanes[4];
    alignas(32) std::uint64_t q_lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(s_lanes), sums);
    _mm256_store_si256(reinterpret_cast<__m256i*>(q_lanes), squares);
    std::uint64_t s = s_lanes[0] + s_lanes[1] + s_lanes[2] + s_lanes[3];
    std::uint64_t q = q_lanes[0] + q_lanes[1] + q_lanes[2] + q_lanes[3];
    for (; i < n; ++i) {
        const std::uint64_t v = data[i];
        s += v;
        q += v * v;
    }
    *sum = s;
    *sum_sq = q;
}

void adam_step_avx2(double* w, double* m, double* v, const double* g, std::size_t n, const AdamParams& p) {
    const __m256d b1 = _mm256_set1_pd(p.beta1);
    const __m256d b2 = _mm256_set1_pd(p.beta2);
    const __m256d c1 = _mm256_set1_pd(1.0 - p.beta1);
    const __m256d c2 = _mm256_set1_pd(1.0 - p.beta2);
    const __m256d lr = _mm256_set1_pd(p.lr_t);
    const __m256d eps = _mm256_set1_pd(p.eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, gi));
        const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                         _mm256_mul_pd(c2, _mm256_mul_pd(gi, gi)));
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, mi), _mm256_add_pd(_mm256_sqrt_pd(vi), eps));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), step));
    }
    if (i < n) scalar_table().adam_step(w + i, m + i, v + i, g + i, n - i, p);
}

}  // namespace

const KernelTable& avx2_table() noexcept {
    static const KernelTable table{
        Isa::avx2, dot_avx2, gemv_avx2, axpy_avx2, sum_avx2, u8_moments_avx2, adam_step_avx2,
    };
    return table;
}

}  // namespace vroute::kernels
