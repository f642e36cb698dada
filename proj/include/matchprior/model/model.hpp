#pragma once

#include "matchprior/core/dataset.hpp"
#include "matchprior/core/rng.hpp"
#include "matchprior/core/types.hpp"

#include <memory>
#include <optional>
#include <string>

namespace matchprior {

enum class Family {
  ExpFamilyNatural,  // log p = theta^T T(y) - psi(theta); e-flat coordinates
  ExpFamilyMean,     // expectation coordinates; m-flat
  GlmCanonical,      // canonical-link GLM coefficients; e-flat
  CauchyLocation,
  Generic,
};

std::string_view to_string(Family f);

/// Connection coefficients known in closed form. Index convention (a, b, c):
/// gamma_e(a,b,c) = E[d_a d_b log p * d_c log p], symmetric in (a, b).
struct Connections {
  Tensor3 gamma_e;
  Tensor3 gamma_m;
  Tensor3 skewness;  // T = gamma_m - gamma_e, fully symmetric
};

/// Per-observation log density p(y; theta) with analytic derivatives.
///
/// Evaluators are pure functions of (y, theta) and safe to call concurrently.
/// The data-average helpers default to looping over rows; models with a
/// row-major design override them with the SIMD kernels.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual Index dim() const = 0;
  /// Open box; evaluation on or outside the boundary is an error.
  virtual Box support() const = 0;
  virtual Family family() const = 0;

  virtual double log_density(ObsView y, const Vector& theta) const = 0;
  virtual Vector grad_logp(ObsView y, const Vector& theta) const = 0;
  virtual Matrix hess_logp(ObsView y, const Vector& theta) const = 0;
  virtual Tensor3 third_logp(ObsView y, const Vector& theta) const = 0;

  virtual double avg_loglik(const Dataset& data, const Vector& theta) const;
  virtual Vector avg_grad(const Dataset& data, const Vector& theta) const;
  virtual Matrix avg_hess(const Dataset& data, const Vector& theta) const;
  virtual Tensor3 avg_third(const Dataset& data, const Vector& theta) const;

  /// False when fisher() is estimated by Monte Carlo rather than a closed form.
  virtual bool has_analytic_fisher() const { return true; }
  /// Fisher information of one observation (averaged over the design for GLMs).
  virtual Matrix fisher(const Vector& theta) const = 0;
  /// D(a, b, c) = d_a g_bc when available in closed form.
  virtual std::optional<Tensor3> fisher_derivative(const Vector&) const { return std::nullopt; }
  virtual std::optional<Connections> analytic_connections(const Vector&) const { return std::nullopt; }
  /// E_theta[d_abc log p] when available in closed form.
  virtual std::optional<Tensor3> expected_third(const Vector&) const { return std::nullopt; }

  /// One draw from p(.; theta); GLMs pick a design row uniformly first.
  virtual Observation sample(Rng& rng, const Vector& theta) const = 0;

  /// Method-of-moments start inside the support.
  virtual Vector default_init(const Dataset& data) const;

  /// Throws when the row is structurally invalid for this model.
  virtual void validate(ObsView y) const;
  void validate(const Dataset& data) const;

  /// Throws OutOfSupport unless theta has the right length, is finite and interior.
  void check_point(const Vector& theta) const;
};

using ModelPtr = std::shared_ptr<const Model>;

/// (1/n) sum_t log p(y(t); theta).
double average_loglik(const Model& model, const Dataset& data, const Vector& theta);
/// (1/n) sum_t d_abc log p(y(t); theta).
Tensor3 third_derivative_tensor(const Model& model, const Dataset& data, const Vector& theta);
/// Central differences of the average Hessian, symmetrized. Oracle for third_derivative_tensor.
Tensor3 finite_diff_third(const Model& model, const Dataset& data, const Vector& theta, double h);

}  // namespace matchprior
