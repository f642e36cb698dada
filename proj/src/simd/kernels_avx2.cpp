// Built with -mavx2 -mfma; only reached through the dispatcher after a CPU check.
#include "matchprior/simd/kernels.hpp"

#include "matchprior/core/error.hpp"

#if defined(MATCHPRIOR_HAVE_AVX2)
#include <immintrin.h>

#include <cstdint>

namespace matchprior::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// Byte offsets of four consecutive rows of stride k (in doubles).
inline __m256i row_offsets(std::size_t k) {
  const auto s = static_cast<std::int64_t>(k);
  return _mm256_set_epi64x(3 * s, 2 * s, s, 0);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_rows(const double* x, std::size_t n, std::size_t k, const double* beta, double* out) {
  if (k >= 8) {
    for (std::size_t i = 0; i < n; ++i) out[i] = dot(x + i * k, beta, k);
    return;
  }
  const __m256i off = row_offsets(k);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* base = x + i * k;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < k; ++j) {
      const __m256d col = _mm256_i64gather_pd(base + j, off, 8);
      acc = _mm256_fmadd_pd(col, _mm256_set1_pd(beta[j]), acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += x[i * k + j] * beta[j];
    out[i] = s;
  }
}

void gemtv(const double* x, std::size_t n, std::size_t k, const double* w, double* out) {
  const __m256i off = row_offsets(k);
  for (std::size_t j = 0; j < k; ++j) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
      const __m256d col = _mm256_i64gather_pd(x + i * k + j, off, 8);
      acc = _mm256_fmadd_pd(col, _mm256_loadu_pd(w + i), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += w[i] * x[i * k + j];
    out[j] = s;
  }
}

void weighted_gram(const double* x, std::size_t n, std::size_t k, const double* w, double* g) {
  const __m256i off = row_offsets(k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      __m256d acc = _mm256_setzero_pd();
      std::size_t i = 0;
      for (; i + 4 <= n; i += 4) {
        const double* base = x + i * k;
        const __m256d ca = _mm256_i64gather_pd(base + a, off, 8);
        const __m256d cb = _mm256_i64gather_pd(base + b, off, 8);
        acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), ca), cb, acc);
      }
      double s = hsum(acc);
      for (; i < n; ++i) s += w[i] * x[i * k + a] * x[i * k + b];
      g[a * k + b] = s;
      g[b * k + a] = s;
    }
  }
}

void sqdist_rows(const double* y, std::size_t n, std::size_t d, const double* mu, double* out) {
  if (d >= 8) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = y + i * d;
      __m256d acc = _mm256_setzero_pd();
      std::size_t j = 0;
      for (; j + 4 <= d; j += 4) {
        const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(mu + j));
        acc = _mm256_fmadd_pd(r, r, acc);
      }
      double s = hsum(acc);
      for (; j < d; ++j) {
        const double r = row[j] - mu[j];
        s += r * r;
      }
      out[i] = s;
    }
    return;
  }
  const __m256i off = row_offsets(d);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* base = y + i * d;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < d; ++j) {
      const __m256d r = _mm256_sub_pd(_mm256_i64gather_pd(base + j, off, 8), _mm256_set1_pd(mu[j]));
      acc = _mm256_fmadd_pd(r, r, acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double r = y[i * d + j] - mu[j];
      s += r * r;
    }
    out[i] = s;
  }
}

const KernelTable kTable{Isa::Avx2, dot, gemv_rows, gemtv, weighted_gram, sqdist_rows};

}  // namespace

const KernelTable& table() { return kTable; }
bool compiled() { return true; }

}  // namespace matchprior::simd::avx2

#else

namespace matchprior::simd::avx2 {

const KernelTable& table() { fail(ErrorKind::Unsupported, "AVX2 kernels not compiled for this target"); }
bool compiled() { return false; }

}  // namespace matchprior::simd::avx2

#endif
