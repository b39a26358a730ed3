#include "vroute/kernels.hpp"

#include <arm_neon.h>

namespace vroute::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void gemv_neon(const double* rows, std::size_t n_rows, std::size_t dim, const double* x, double* out) {
    for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_neon(rows + r * dim, x, dim);
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    for (; i < n; ++i) y[i] += a * x[i];
}

double sum_neon(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

void u8_moments_neon(const std::uint8_t* data, std::size_t n, std::uint64_t* sum, std::uint64_t* sum_sq) {
    uint64x2_t sums = vdupq_n_u64(0);
    uint64x2_t squares = vdupq_n_u64(0);
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const uint8x16_t v = vld1q_u8(data + i);
        sums = vpadalq_u32(sums, vpaddlq_u16(vpaddlq_u8(v)));
        const uint16x8_t sq_lo = vmull_u8(vget_low_u8(v), vget_low_u8(v));
        const uint16x8_t sq_hi = vmull_u8(vget_high_u8(v), vget_high_u8(v));
        squares = vpadalq_u32(squares, vaddq_u32(vpaddlq_u16(sq_lo), vpaddlq_u16(sq_hi)));
    }
    std::uint64_t s = vaddvq_u64(sums);
    std::uint64_t q = vaddvq_u64(squares);
    for (; i < n; ++i) {
        const std::uint64_t x = data[i];
        s += x;
        q += x * x;
    }
    *sum = s;
    *sum_sq = q;
}

void adam_step_neon(double* w, double* m, double* v, const double* g, std::size_t n, const AdamParams& p) {
    const float64x2_t b1 = vdupq_n_f64(p.beta1);
    const float64x2_t b2 = vdupq_n_f64(p.beta2);
    const float64x2_t c1 = vdupq_n_f64(1.0 - p.beta1);
    const float64x2_t c2 = vdupq_n_f64(1.0 - p.beta2);
    const float64x2_t lr = vdupq_n_f64(p.lr_t);
    const float64x2_t eps = vdupq_n_f64(p.eps);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t gi = vld1q_f64(g + i);
        const float64x2_t mi = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(c1, gi));
        const float64x2_t vi = vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)), vmulq_f64(c2, vmulq_f64(gi, gi)));
        const float64x2_t step = vdivq_f64(vmulq_f64(lr, mi), vaddq_f64(vsqrtq_f64(vi), eps));
        vst1q_f64(m + i, mi);
        vst1q_f64(v + i, vi);
        vst1q_f64(w + i, vsubq_f64(vld1q_f64(w + i), step));
    }
    if (i < n) scalar_table().adam_step(w + i, m + i, v + i, g + i, n - i, p);
}

}  // namespace

const KernelTable& neon_table() noexcept {
    static const KernelTable table{
        Isa::neon, dot_neon, gemv_neon, axpy_neon, sum_neon, u8_moments_neon, adam_step_neon,
    };
    return table;
}

}  // namespace vroute::kernels
