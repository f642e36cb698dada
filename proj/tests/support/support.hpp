#pragma once

#include "matchprior/core/dataset.hpp"
#include "matchprior/core/error.hpp"
#include "matchprior/core/rng.hpp"
#include "matchprior/model/models.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

namespace mpt {

using namespace matchprior;

/// Runs fn and reports the ErrorKind it threw; fails the test when nothing was thrown.
inline ErrorKind thrown_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

inline double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline Vector uniform_vector(Rng& rng, Index d, double lo, double hi) {
  Vector v(d);
  for (Index i = 0; i < d; ++i) v(i) = uniform_in(rng, lo, hi);
  return v;
}

/// A random point well inside the model's support.
inline Vector interior_point(Rng& rng, const Model& m) {
  const Box b = m.support();
  Vector v(m.dim());
  for (Index i = 0; i < m.dim(); ++i) {
    if (std::isfinite(b[i].lo)) v(i) = b[i].lo + std::exp(uniform_in(rng, -1.0, 1.5));
    else v(i) = uniform_in(rng, -1.5, 1.5);
  }
  return v;
}

inline Dataset sample_dataset(const Model& m, const Vector& theta, std::size_t n, Rng& rng) {
  std::vector<Observation> obs;
  obs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) obs.push_back(m.sample(rng, theta));
  return Dataset(obs);
}

inline Dataset scalar_data(const std::vector<double>& y) { return Dataset(1, y, 0, {}); }

/// Poisson counts with sum exactly s over n rows.
inline Dataset poisson_data_with_sum(std::size_t n, std::size_t s) {
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < s; ++i) y[i % n] += 1.0;
  return scalar_data(y);
}

/// Row-major n x k design, first column ones, others standard normal.
inline std::vector<double> random_design(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<double> x(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) x[i * k + j] = j == 0 ? 1.0 : rng.normal();
  return x;
}

inline Dataset logistic_data(Rng& rng, const std::vector<double>& x, std::size_t k, const Vector& beta) {
  const std::size_t n = x.size() / k;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < k; ++j) eta += x[i * k + j] * beta(static_cast<Index>(j));
    y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-eta))) ? 1.0 : 0.0;
  }
  return Dataset(1, y, k, x);
}

/// Least-squares slope of log(err) on log(n).
inline double loglog_slope(const std::vector<double>& ns, const std::vector<double>& errs) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double x = std::log(ns[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace mpt
