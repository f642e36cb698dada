#pragma once

#include "matchprior/core/rng.hpp"
#include "matchprior/model/model.hpp"
#include "matchprior/priors/prior.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace matchprior {

struct ChainConfig {
  std::size_t length = 10000;  // kept iterations after burn-in, before thinning
  std::size_t burnin = 10000;
  std::uint64_t seed = 0;
  double step_scale = 1.0;
  std::size_t thinning = 1;

  void validate() const;
};

struct ChainOutput {
  Matrix samples;  // rows are draws
  double acceptance_rate = 1.0;
  Vector posterior_mean;
  Vector mc_se;  // batch means
  Vector ess;
};

/// Column means, batch-means standard errors and effective sample sizes.
void summarize(ChainOutput& out);

/// Pools chains; means weighted by draw counts.
ChainOutput merge_chains(const std::vector<ChainOutput>& chains);

enum class ProposalKind { Gaussian, Cauchy };

struct Proposal {
  ProposalKind kind = ProposalKind::Gaussian;
  /// Gaussian: multiplies 2.38/sqrt(d) times the observed-information scale.
  /// Cauchy: the step itself (0.1/sqrt(d) when unset).
  std::optional<double> step;
};

/// Random-walk Metropolis targeting exp(n L + log pi).
ChainOutput rwmh(const Model& model, const Dataset& data, const Prior& prior, const ChainConfig& config,
                 const Proposal& proposal, const Vector& init);

/// One PG(1, z) draw by the alternating-series accept-reject method.
double draw_polya_gamma(Rng& rng, double z);

struct GaussianPriorSpec {
  Vector mean;
  Matrix precision;
  static GaussianPriorSpec isotropic(Index d, double mean, double var);
};

/// Gibbs sampler for Bernoulli-logit regression with a Gaussian prior.
/// `design` is row-major n x k.
ChainOutput polya_gamma_gibbs(std::span<const double> design, std::size_t k, std::span<const double> responses,
                              const GaussianPriorSpec& prior, const ChainConfig& config, const Vector& init);

/// Gamma(shape, rate) restricted to [lo, inf).
double draw_truncated_gamma(Rng& rng, double shape, double rate, double lo);

/// Unnormalized log posterior of the Poisson sequence under the Komaki prior.
double komaki_log_posterior(const Vector& lambda, const Vector& sums, double n, const Vector& beta, double alpha);

/// One systematic sweep: u | lambda, then every lambda_i | u.
void komaki_sweep(Rng& rng, Vector& lambda, const Vector& sums, double n, const Vector& beta, double alpha,
                  double floor);

/// Latent-variable Gibbs for counts with coordinate sums `sums` over n periods.
/// floor > 0 restricts every rate to [floor, inf). Starts at sums/n + 1 unless init is given.
ChainOutput komaki_gibbs(const Vector& sums, std::size_t n, const Vector& beta, double alpha, const ChainConfig& config,
                         double floor = 0.0, const std::optional<Vector>& init = std::nullopt);

/// Samples CSV with header iter,theta1..thetad.
std::string samples_csv(const ChainOutput& out);

}  // namespace matchprior
