#pragma once

#include "matchprior/model/model.hpp"
#include "matchprior/priors/prior.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace matchprior {

enum class EstimateMethod { MLE, MAP, PmMcmc, PmQuad, Calibrated, Laplace };

std::string_view to_string(EstimateMethod m);

struct OptimizerDiagnostics {
  int iterations = 0;
  double final_grad_norm = 0.0;
  bool converged = false;
  std::vector<Index> active;  // coordinates pinned to a bound
};

struct SamplerDiagnostics {
  double ess = 0.0;  // smallest per-coordinate ESS
  Vector mc_se;
  std::uint64_t seed = 0;
  std::size_t chain_length = 0;
  std::size_t burnin = 0;
  double acceptance_rate = 1.0;
};

struct EstimateResult {
  Vector point;
  EstimateMethod method = EstimateMethod::MLE;
  std::optional<OptimizerDiagnostics> optimizer;
  std::optional<SamplerDiagnostics> sampler;
  std::map<std::string, std::string> metadata;
};

struct OptimizerOptions {
  double tol = 1e-8;
  int max_iter = 500;
  double armijo = 1e-4;
  double shrink = 0.5;
};

/// Newton ascent on the average log-likelihood with backtracking.
EstimateResult mle(const Model& model, const Dataset& data, const Vector& init, const OptimizerOptions& opts = {});

/// Maximizes n L(theta) + log pi(theta); projected Newton with active-set
/// freezing when bounds are given.
EstimateResult map_estimate(const Model& model, const Dataset& data, const Prior& prior, const Vector& init,
                            const OptimizerOptions& opts = {}, const std::optional<Box>& bounds = std::nullopt);

enum class InformationSource { Auto, Fisher, Observed, ObservedPosterior };

std::string_view to_string(InformationSource s);

struct CalibrationOptions {
  InformationSource information = InformationSource::Auto;
  /// Closed bounds used by the MAP run; a pinned coordinate raises BoundaryPoint.
  std::optional<Box> bounds;
  /// Needed for ObservedPosterior.
  const Prior* prior = nullptr;
  /// Experimental: distinct priors, adds (1/n) g^{-1} d log(pm/map).
  const Prior* pm_prior = nullptr;
  const Prior* map_prior = nullptr;
};

/// MAP + (1/2n) g^{ab} g^{cd} (1/n) sum_t d_bcd log p(y(t); MAP).
EstimateResult calibrate_pm_from_map(const Model& model, const Dataset& data, const Vector& map_est,
                                     const CalibrationOptions& opts = {});

/// Smooth statistic f: R^d -> R^m with first and second derivatives.
struct Statistic {
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;  // m x d
  /// One d x d Hessian per component.
  std::function<std::vector<Matrix>(const Vector&)> hessians;
  Index out_dim = 0;
};

Statistic identity_statistic(Index d);
Statistic constant_statistic(Index d, const Vector& c);
/// f_i(theta) = theta_i^p.
Statistic power_statistic(Index d, double p);
/// Value-only statistic; derivatives by central differences.
Statistic numeric_statistic(Index d, Index m, std::function<Vector(const Vector&)> f);

/// f + (J^{ab}/2n)(d_ab f + 2 d_a f d_b log pi) + (J^{ab} J^{cd} d_bcd L / 2n) d_a f,
/// with J = -hess(L) at theta_hat.
Vector laplace_posterior_expectation(const Model& model, const Dataset& data, const Prior& prior, const Statistic& f,
                                     const Vector& theta_hat);

/// R_{ia} = d_a f_i (g^{ab} h_b) + (1/2) g^{ab} d_ab f_i (sum over b), with
/// h_b = d_b log(pm/map) - d_b log pi_J - (1/2) g^{cd} Gamma^(e)_{cdb}.
/// Row sums vanish exactly when the posterior expectation of f_i matches f_i(MAP) to o(1/n).
Matrix statistic_matching_residual(const Model& model, const Prior& pm, const Prior& map, const Statistic& f,
                                   const Vector& theta);

/// MLE + (g^{ab}/n)(d_b log(pi/pi_J) + T_b/2) - (g^{bc}/2n) Gamma^(m)_{bc}^a.
Vector posterior_mean_expansion(const Model& model, const Prior& prior, const Vector& mle, std::size_t n);
/// MLE + (g^{ab}/n) d_b log pi.
Vector map_expansion(const Model& model, const Prior& prior, const Vector& mle, std::size_t n);

}  // namespace matchprior
