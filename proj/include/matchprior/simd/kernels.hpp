#pragma once

// Dense arithmetic inner loops shared by the likelihood evaluators and samplers.
// Every kernel has a scalar reference implementation; wider variants are chosen
// at runtime from CPU features and must agree with the reference to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace matchprior::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  /// sum_i a_i b_i
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// out_i = sum_j X_ij beta_j for row-major X (n x k)
  void (*gemv_rows)(const double* x, std::size_t n, std::size_t k, const double* beta, double* out);
  /// out_j = sum_i w_i X_ij
  void (*gemtv)(const double* x, std::size_t n, std::size_t k, const double* w, double* out);
  /// g (k x k, row-major, full) = sum_i w_i x_i x_i^T
  void (*weighted_gram)(const double* x, std::size_t n, std::size_t k, const double* w, double* g);
  /// out_i = || y_i - mu ||^2 for row-major Y (n x d)
  void (*sqdist_rows)(const double* y, std::size_t n, std::size_t d, const double* mu, double* out);
};

std::string_view to_string(Isa isa);
bool isa_available(Isa isa);

/// Table for a specific instruction set; throws Unsupported when the CPU lacks it.
const KernelTable& kernels(Isa isa);
/// Table selected at startup: best available, overridable by MATCHPRIOR_SIMD=scalar|avx2.
const KernelTable& kernels();
Isa active_isa();
/// Switches the process-wide table (tests and benchmarks).
void set_active_isa(Isa isa);

namespace scalar {
const KernelTable& table();
}
namespace avx2 {
const KernelTable& table();
bool compiled();
}

// Span conveniences over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

}  // namespace matchprior::simd
