#include "vroute/kernels.hpp"

#include <cmath>

namespace vroute::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void gemv_scalar(const double* rows, std::size_t n_rows, std::size_t dim, const double* x, double* out) {
    for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_scalar(rows + r * dim, x, dim);
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void u8_moments_scalar(const std::uint8_t* data, std::size_t n, std::uint64_t* sum, std::uint64_t* sum_sq) {
    std::uint64_t s = 0, q = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t v = data[i];
        s += v;
        q += v * v;
    }
    *sum = s;
    *sum_sq = q;
}

void adam_step_scalar(double* w, double* m, double* v, const double* g, std::size_t n, const AdamParams& p) {
    const double c1 = 1.0 - p.beta1;
    const double c2 = 1.0 - p.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = p.beta1 * m[i] + c1 * g[i];
        v[i] = p.beta2 * v[i] + c2 * (g[i] * g[i]);
        w[i] -= p.lr_t * m[i] / (std::sqrt(v[i]) + p.eps);
    }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable table{
        Isa::scalar, dot_scalar, gemv_scalar, axpy_scalar, sum_scalar, u8_moments_scalar, adam_step_scalar,
    };
    return table;
}

}  // namespace vroute::kernels
