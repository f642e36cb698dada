#pragma once

#include "matchprior/geometry/geometry.hpp"
#include "matchprior/model/model.hpp"

#include <functional>
#include <string>

namespace matchprior {

/// Un-normalized, possibly improper log prior density.
struct Prior {
  std::function<double(const Vector&)> log_density;
  std::function<Vector(const Vector&)> log_grad;
  /// Optional; hessian() falls back to central differences of log_grad.
  std::function<Matrix(const Vector&)> log_hess;
  bool proper = false;
  Box support;
  std::string label;

  Index dim() const { return support.dim(); }
  Matrix hessian(const Vector& theta) const;
};

/// Product of N(mean, var) over d coordinates.
Prior normal_prior(Index d, double mean, double var);
/// Product of Gamma(a, b) densities (shape a, rate b).
Prior gamma_prior(Index d, double a, double b);
/// Product of inverse-gamma(a, b) densities.
Prior invgamma_prior(Index d, double a, double b);
Prior uniform_prior(const Box& support);
/// sqrt(det g), anchored so that log density is 0 at the all-ones point
/// (projected into the support).
Prior jeffreys_prior(ModelPtr model);
/// prod lambda_i^{beta_i - 1} / (sum lambda_i)^alpha on (floor, inf)^d.
Prior komaki_prior(const Vector& beta, double alpha, double floor);

/// pm * prod theta_i^power, label suffixed `*coords` (power 1) or `/coords` (power -1).
Prior times_coordinates(const Prior& pm, double power);
/// pm * pi_J^power for arbitrary real power; label records the operation.
Prior times_jeffreys(const Prior& pm, ModelPtr model, double power, const std::string& suffix);

enum class PairConstruction { EFlat, MFlat, AlphaAffine, VerifiedByResidual };

struct MatchingPair {
  Prior pm;
  Prior map;
  PairConstruction construction = PairConstruction::VerifiedByResidual;
  double alpha = 0.0;  // meaningful for AlphaAffine
};

/// d_a log(pm/map) - (d_a log pi_J + (1/2) g^{cd} Gamma^(e)_{cda}).
Vector matching_residual(const MatchingPair& pair, const Model& model, const Vector& theta);
Vector matching_residual(const Prior& pm, const Prior& map, const Model& model, const Vector& theta);

/// pm / pi_J. Requires an e-flat family.
Prior eflat_map_partner(const Prior& pm, ModelPtr model);
/// pm / pi_J^2. Requires a mean-coordinate exponential family.
Prior mflat_map_partner(const Prior& pm, ModelPtr model);

/// d_a log pi_J - ((1 - alpha)/4) T_a.
Vector alpha_pair_target_grad(const GeometryReport& report, double alpha);

/// One-dimensional partner by integrating the matching condition from theta0:
/// log(pm/map)(theta) = int_{theta0}^{theta} [d log pi_J + (1/2) g^{11} Gamma^(e)_{111}].
/// Adaptive Gauss-Kronrod, absolute tolerance 1e-10.
Prior ode_map_partner(const Prior& pm, ModelPtr model, double theta0);
/// The same integral, exposed for testing.
double ode_log_ratio(const Model& model, double theta0, double theta);

/// Catalog: normal(mean,var), gamma(a,b), invgamma(a,b), jeffreys, uniform,
/// komaki(beta,alpha,floor), followed by any chain of `/jeffreys`,
/// `/jeffreys2`, `*jeffreys`, `*jeffreys2`, `*coords`, `/coords`.
Prior parse_prior(const std::string& spec, ModelPtr model);

}  // namespace matchprior
