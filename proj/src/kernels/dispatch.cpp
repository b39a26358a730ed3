#include "vroute/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace vroute::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(VROUTE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable* detect() noexcept {
    if (const char* forced = std::getenv("VROUTE_KERNELS")) {
        if (std::string_view(forced) == "scalar") return &scalar_table();
    }
#if defined(VROUTE_HAVE_AVX2)
    if (cpu_has_avx2()) return &avx2_table();
#endif
#if defined(VROUTE_HAVE_NEON)
    return &neon_table();
#endif
    return &scalar_table();
}

std::atomic<const KernelTable*>& current() noexcept {
    static std::atomic<const KernelTable*> table{detect()};
    return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

const KernelTable* table_for(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return &scalar_table();
        case Isa::avx2:
#if defined(VROUTE_HAVE_AVX2)
            if (cpu_has_avx2()) return &avx2_table();
#endif
            return nullptr;
        case Isa::neon:
#if defined(VROUTE_HAVE_NEON)
            return &neon_table();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

bool select(Isa isa) noexcept {
    const KernelTable* table = table_for(isa);
    if (table == nullptr) return false;
    current().store(table, std::memory_order_release);
    return true;
}

}  // namespace vroute::kernels
