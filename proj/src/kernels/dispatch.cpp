#include "vqa/errors.hpp"
#include "vqa/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace vqa::kernels {

#if defined(VQA_HAVE_AVX2)
namespace detail {
const KernelTable& avx2_table_impl();
}
#endif

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

const KernelTable* avx2_table() {
#if defined(VQA_HAVE_AVX2)
    return &detail::avx2_table_impl();
#else
    return nullptr;
#endif
}

bool cpu_has_avx2() {
#if defined(VQA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {

const KernelTable* pick_default() {
    const KernelTable* best = cpu_has_avx2() ? avx2_table() : nullptr;
    if (const char* env = std::getenv("VQA_KERNELS")) {
        const std::string want(env);
        if (want == "scalar") return &scalar_table();
        if (want == "avx2" && best != nullptr) return best;
    }
    return best != nullptr ? best : &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> table{pick_default()};
    return table;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active(Isa isa) {
    const KernelTable* table = nullptr;
    if (isa == Isa::scalar) {
        table = &scalar_table();
    } else if (cpu_has_avx2()) {
        table = avx2_table();
    }
    if (table == nullptr) {
        throw ConfigError("kernel variant '" + std::string(isa_name(isa)) +
                          "' is not available on this build/CPU");
    }
    slot().store(table, std::memory_order_release);
}

}  // namespace vqa::kernels
