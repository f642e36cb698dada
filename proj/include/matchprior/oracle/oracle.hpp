#pragma once

#include "matchprior/model/model.hpp"
#include "matchprior/oracle/quadrature.hpp"
#include "matchprior/priors/prior.hpp"

#include <functional>
#include <optional>
#include <string>

namespace matchprior {

struct QuadratureSpec {
  double abs_tol = 1e-10;
  std::size_t max_subdivisions = 2000;
  /// Integrate directly over this finite box instead of the transformed support.
  std::optional<Box> domain;
};

struct QuadEstimate {
  Vector value;
  Vector error;
  Vector mode;  // centering point used by the substitution
};

/// Posterior expectation of f by iterated adaptive Gauss-Kronrod, d <= 3.
/// Half-infinite coordinates use theta = lo + e^u; full lines are split at the
/// posterior mode. Tail probes raise TailNotDecaying for improper posteriors.
QuadEstimate quad_posterior_expectation(const Model& model, const Dataset& data, const Prior& prior,
                                        const std::function<Vector(const Vector&)>& f,
                                        const QuadratureSpec& spec = {});

/// Posterior mean (f = identity).
QuadEstimate quad_posterior_mean(const Model& model, const Dataset& data, const Prior& prior,
                                 const QuadratureSpec& spec = {});

enum class ConjugateFamily { PoissonGamma, GaussianPrecisionGamma };

std::optional<ConjugateFamily> parse_conjugate_family(const std::string& name);

/// Exact posterior mean under Gamma(a, b) (shape, rate).
/// PoissonGamma: (a + S)/(b + n). GaussianPrecisionGamma: (a + n/2)/(b + sum (y - m)^2 / 2).
double conjugate_pm(ConjugateFamily family, double a, double b, const Dataset& data, double known_mean = 0.0);

}  // namespace matchprior
