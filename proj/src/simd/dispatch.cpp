#include "matchprior/core/error.hpp"
#include "matchprior/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace matchprior::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* select_initial() {
  if (const char* env = std::getenv("MATCHPRIOR_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return &scalar::table();
    if (v == "avx2" && isa_available(Isa::Avx2)) return &avx2::table();
  }
  if (isa_available(Isa::Avx2)) return &avx2::table();
  return &scalar::table();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{select_initial()};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: {
      static const bool ok = avx2::compiled() && cpu_has_avx2();
      return ok;
    }
  }
  return false;
}

const KernelTable& kernels(Isa isa) {
  if (!isa_available(isa)) fail(ErrorKind::Unsupported, std::string(to_string(isa)) + " kernels unavailable");
  return isa == Isa::Avx2 ? avx2::table() : scalar::table();
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

Isa active_isa() { return kernels().isa; }

void set_active_isa(Isa isa) { active().store(&kernels(isa), std::memory_order_release); }

}  // namespace matchprior::simd
