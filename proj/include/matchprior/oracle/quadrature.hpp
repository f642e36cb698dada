#pragma once

#include <cstddef>
#include <functional>

namespace matchprior {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t subdivisions = 0;
  bool converged = false;
};

/// Adaptive 7/15-point Gauss-Kronrod on a finite interval [a, b]; bisects the
/// interval with the largest error estimate until the summed estimate falls
/// below abs_tol or the subdivision budget is spent.
QuadResult gauss_kronrod(const std::function<double(double)>& f, double a, double b, double abs_tol,
                         std::size_t max_subdivisions = 2000);

/// Integral over [a, inf) via x = a + t/(1-t).
QuadResult gauss_kronrod_upper(const std::function<double(double)>& f, double a, double abs_tol,
                               std::size_t max_subdivisions = 2000);

/// Integral over (-inf, inf), split at `center` and mapped by x = center +/- scale t/(1-t).
QuadResult gauss_kronrod_line(const std::function<double(double)>& f, double center, double scale, double abs_tol,
                              std::size_t max_subdivisions = 2000);

}  // namespace matchprior
