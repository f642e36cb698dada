#include "matchprior/simd/kernels.hpp"

namespace matchprior::simd::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_rows(const double* x, std::size_t n, std::size_t k, const double* beta, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = dot(x + i * k, beta, k);
}

void gemtv(const double* x, std::size_t n, std::size_t k, const double* w, double* out) {
  for (std::size_t j = 0; j < k; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out[j] += w[i] * x[i * k + j];
}

void weighted_gram(const double* x, std::size_t n, std::size_t k, const double* w, double* g) {
  for (std::size_t j = 0; j < k * k; ++j) g[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x + i * k;
    for (std::size_t a = 0; a < k; ++a) {
      const double wa = w[i] * row[a];
      for (std::size_t b = a; b < k; ++b) g[a * k + b] += wa * row[b];
    }
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < a; ++b) g[a * k + b] = g[b * k + a];
}

void sqdist_rows(const double* y, std::size_t n, std::size_t d, const double* mu, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const double* row = y + i * d;
    for (std::size_t j = 0; j < d; ++j) {
      const double r = row[j] - mu[j];
      s += r * r;
    }
    out[i] = s;
  }
}

const KernelTable kTable{Isa::Scalar, dot, gemv_rows, gemtv, weighted_gram, sqdist_rows};

}  // namespace

const KernelTable& table() { return kTable; }

}  // namespace matchprior::simd::scalar
