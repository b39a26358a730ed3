#pragma once

// Data-parallel inner loops shared by scoring, image statistics and the router
// learner. Every kernel has a scalar reference implementation; SIMD variants
// (AVX2 on x86-64, NEON on aarch64) are selected once at startup from CPU
// features. `VROUTE_KERNELS=scalar` in the environment forces the reference
// path.
//
// Elementwise kernels (axpy, adam_step) are bit-identical across variants.
// Reductions (dot, gemv, sum) reassociate and agree to rounding only.
// u8_moments is exact integer arithmetic on every path.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace vroute::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct AdamParams {
    double lr_t;  // bias-corrected step size
    double beta1;
    double beta2;
    double eps;
};

struct KernelTable {
    Isa isa;
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// out[r] = dot(rows + r*dim, x) for a row-major rows×dim matrix.
    void (*gemv)(const double* rows, std::size_t n_rows, std::size_t dim, const double* x, double* out);
    /// y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    /// Sum and sum of squares of a contiguous byte plane.
    void (*u8_moments)(const std::uint8_t* data, std::size_t n, std::uint64_t* sum, std::uint64_t* sum_sq);
    /// m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g*g; w -= lr_t * m / (sqrt(v) + eps)
    void (*adam_step)(double* w, double* m, double* v, const double* g, std::size_t n, const AdamParams& p);
};

/// The table selected for this process.
const KernelTable& active() noexcept;

/// Table for a specific ISA; returns nullptr when the ISA is not compiled in
/// or not supported by the running CPU.
const KernelTable* table_for(Isa isa) noexcept;

/// Override the active table (tests and benchmarking). Returns false if the
/// requested ISA is unavailable.
bool select(Isa isa) noexcept;

const KernelTable& scalar_table() noexcept;
#if defined(VROUTE_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(VROUTE_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif

}  // namespace vroute::kernels
