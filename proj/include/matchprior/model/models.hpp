#pragma once

#include "matchprior/model/model.hpp"

#include <map>
#include <mutex>
#include <vector>

namespace matchprior {

/// N(mean, 1/theta) with known mean; theta is the precision (natural coordinate).
class GaussianPrecision final : public Model {
 public:
  explicit GaussianPrecision(double known_mean = 0.0) : mean_(known_mean) {}

  std::string name() const override { return "gaussian-precision"; }
  Index dim() const override { return 1; }
  Box support() const override { return Box::positive(1); }
  Family family() const override { return Family::ExpFamilyNatural; }

  double log_density(ObsView y, const Vector& theta) const override;
  Vector grad_logp(ObsView y, const Vector& theta) const override;
  Matrix hess_logp(ObsView y, const Vector& theta) const override;
  Tensor3 third_logp(ObsView y, const Vector& theta) const override;

  Matrix fisher(const Vector& theta) const override;
  std::optional<Tensor3> fisher_derivative(const Vector& theta) const override;
  std::optional<Connections> analytic_connections(const Vector& theta) const override;
  std::optional<Tensor3> expected_third(const Vector& theta) const override;
  Observation sample(Rng& rng, const Vector& theta) const override;
  Vector default_init(const Dataset& data) const override;

 private:
  double mean_;
};

/// N(mu, sigma^2 I) location model with known variance; third derivatives vanish.
class GaussianLocation final : public Model {
 public:
  GaussianLocation(Index d, double variance);

  std::string name() const override { return "gaussian-location"; }
  Index dim() const override { return d_; }
  Box support() const override { return Box::real_line(d_); }
  Family family() const override { return Family::ExpFamilyNatural; }

  double log_density(ObsView y, const Vector& theta) const override;
  Vector grad_logp(ObsView y, const Vector& theta) const override;
  Matrix hess_logp(ObsView y, const Vector& theta) const override;
  Tensor3 third_logp(ObsView y, const Vector& theta) const override;

  Matrix fisher(const Vector& theta) const override;
  std::optional<Tensor3> fisher_derivative(const Vector& theta) const override;
  std::optional<Connections> analytic_connections(const Vector& theta) const override;
  std::optional<Tensor3> expected_third(const Vector& theta) const override;
  Observation sample(Rng& rng, const Vector& theta) const override;
  Vector default_init(const Dataset& data) const override;
  using Model::validate;
  void validate(ObsView y) const override;

 private:
  Index d_;
  double var_;
};

/// Poisson(lambda) in the mean coordinate lambda.
class PoissonRate final : public Model {
 public:
  std::string name() const override { return "poisson"; }
  Index dim() const override { return 1; }
  Box support() const override { return Box::positive(1); }
  Family family() const override { return Family::ExpFamilyMean; }

  double log_density(ObsView y, const Vector& theta) const override;
  Vector grad_logp(ObsView y, const Vector& theta) const override;
  Matrix hess_logp(ObsView y, const Vector& theta) const override;
  Tensor3 third_logp(ObsView y, const Vector& theta) const override;

  Matrix fisher(const Vector& theta) const override;
  std::optional<Tensor3> fisher_derivative(const Vector& theta) const override;
  std::optional<Connections> analytic_connections(const Vector& theta) const override;
  std::optional<Tensor3> expected_third(const Vector& theta) const override;
  Observation sample(Rng& rng, const Vector& theta) const override;
  Vector default_init(const Dataset& data) const override;
  using Model::validate;
  void validate(ObsView y) const override;
};

/// Poisson in the natural coordinate theta = log lambda.
class PoissonLogRate final : public Model {
 public:
  std::string name() const override { return "poisson-log"; }
  Index dim() const override { return 1; }
  Box support() const override { return Box::real_line(1); }
  Family family() const override { return Family::ExpFamilyNatural; }

  double log_density(ObsView y, const Vector& theta) const override;
  Vector grad_logp(ObsView y, const Vector& theta) const override;
  Matrix hess_logp(ObsView y, const Vector& theta) const override;
  Tensor3 third_logp(ObsView y, const Vector& theta) const override;

  Matrix fisher(const Vector& theta) const override;
  std::optional<Tensor3> fisher_derivative(const Vector& theta) const override;
  std::optional<Connections> analytic_connections(const Vector& theta) const override;
  std::optional<Tensor3> expected_third(const Vector& theta) const override;
  Observation sample(Rng& rng, const Vector& theta) const override;
  Vector default_init(const Dataset& data) const override;
  using Model::validate;
  void validate(ObsView y) const override;
};

/// d independent Poisson rates; one observation is a count vector.
class PoissonSequence final : public Model {
 public:
  explicit PoissonSequence(Index d);

  std::string name() const override { return "poisson-sequence"; }
  Index dim() const override { return d_; }
  Box support() const override { return Box::positive(d_); }
  Family family() const override { return Family::ExpFamilyMean; }

  double log_density(ObsView y, const Vector& theta) const override;
  Vector grad_logp(ObsView y, const Vector& theta) const override;
  Matrix hess_logp(ObsView y, const Vector& theta) const override;
  Tensor3 third_logp(ObsView y, const Vector& theta) const override;

  double avg_loglik(const Dataset& data, const Vector& theta) const override;
  Vector avg_grad(const Dataset& data, const Vector& theta) const override;
  Matrix avg_hess(const Dataset& data, const Vector& theta) const override;
  Tensor3 avg_third(const Dataset& data, const Vector& theta) const override;

  Matrix fisher(const Vector& theta) const override;
  std::optional<Tensor3> fisher_derivative(const Vector& theta) const override;
  std::optional<Connections> analytic_connections(const Vector& theta) const override;
  std::optional<Tensor3> expected_third(const Vector& theta) const override;
  Observation sample(Rng& rng, const Vector& theta) const override;
  Vector default_init(const Dataset& data) const override;
  using Model::validate;
  void validate(ObsView y) const override;

 private:
  Index d_;
};

/// Bernoulli(sigmoid(x beta)) with canonical link. The model owns the design
/// rows; fisher() averages over them.
class LogisticGlm final : public Model {
 public:
  /// Row-major n x k design.
  LogisticGlm(std::size_t k, std::vector<double> design);
  static LogisticGlm from_dataset(const Dataset& data);

  std::string name() const override { return "logistic"; }
  Index dim() const override { return static_cast<Index>(k_); }
  Box support() const override { return Box::real_line(dim()); }
  Family family() const override { return Family::GlmCanonical; }

  double log_density(ObsView y, const Vector& theta) const override;
  Vector grad_logp(ObsView y, const Vector& theta) const override;
  Matrix hess_logp(ObsView y, const Vector& theta) const override;
  Tensor3 third_logp(ObsView y, const Vector& theta) const override;

  double avg_loglik(const Dataset& data, const Vector& theta) const override;
  Vector avg_grad(const Dataset& data, const Vector& theta) const override;
  Matrix avg_hess(const Dataset& data, const Vector& theta) const override;
  Tensor3 avg_third(const Dataset& data, const Vector& theta) const override;

  Matrix fisher(const Vector& theta) const override;
  std::optional<Tensor3> fisher_derivative(const Vector& theta) const override;
  std::optional<Connections> analytic_connections(const Vector& theta) const override;
  std::optional<Tensor3> expected_third(const Vector& theta) const override;
  Observation sample(Rng& rng, const Vector& theta) const override;
  Vector default_init(const Dataset& data) const override;
  using Model::validate;
  void validate(ObsView y) const override;

  std::size_t rows() const { return n_; }
  std::span<const double> design() const { return x_; }

  /// sum_i x_i x_i^T s_i (1 - s_i) over the design, unnormalized.
  Matrix design_information(const Vector& beta) const;

 private:
  // Per-row linear predictor through the SIMD kernel.
  std::vector<double> linear_predictor(std::span<const double> x, std::size_t n, const Vector& beta) const;

  std::size_t k_;
  std::size_t n_;
  std::vector<double> x_;
};

/// d-variate Cauchy (multivariate t, one degree of freedom) with unit scale
/// matrix and unknown location. Fisher information is estimated by Monte Carlo
/// on first use at each point and cached.
class MultivariateCauchy final : public Model {
 public:
  explicit MultivariateCauchy(Index d, std::uint64_t fisher_seed = 20240601, std::size_t fisher_draws = 1000000);

  std::string name() const override { return "cauchy"; }
  Index dim() const override { return d_; }
  Box support() const override { return Box::real_line(d_); }
  Family family() const override { return Family::CauchyLocation; }

  double log_density(ObsView y, const Vector& theta) const override;
  Vector grad_logp(ObsView y, const Vector& theta) const override;
  Matrix hess_logp(ObsView y, const Vector& theta) const override;
  Tensor3 third_logp(ObsView y, const Vector& theta) const override;

  double avg_loglik(const Dataset& data, const Vector& theta) const override;

  bool has_analytic_fisher() const override { return false; }
  Matrix fisher(const Vector& theta) const override;
  Observation sample(Rng& rng, const Vector& theta) const override;
  Vector default_init(const Dataset& data) const override;
  using Model::validate;
  void validate(ObsView y) const override;

  /// Closed form (d+1)/(d+3) I, used only as a test oracle for the Monte Carlo path.
  Matrix fisher_closed_form() const;

 private:
  Index d_;
  std::uint64_t fisher_seed_;
  std::size_t fisher_draws_;
  double log_norm_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::vector<long long>, Matrix> cache_;
};

struct ModelOptions {
  double known_mean = 0.0;      // gaussian-precision
  double variance = 1.0;        // gaussian-location
  std::uint64_t fisher_seed = 20240601;
  std::size_t fisher_draws = 1000000;
};

/// Names: gaussian-precision, gaussian-location, poisson, poisson-log,
/// poisson-sequence, logistic, cauchy. Dimensions come from the data.
ModelPtr make_model(const std::string& name, const Dataset& data, const ModelOptions& opts = {});

}  // namespace matchprior
