#include "matchprior/model/models.hpp"

#include "matchprior/core/error.hpp"
#include "matchprior/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace matchprior {
namespace {

Matrix scalar_matrix(double v) { return Matrix::Constant(1, 1, v); }
Vector scalar_vector(double v) { return Vector::Constant(1, v); }
Tensor3 scalar_tensor(double v) { return Tensor3(1, v); }

void check_count(double y, const std::string& model) {
  if (!(y >= 0.0) || y != std::floor(y) || !std::isfinite(y))
    fail(ErrorKind::InvalidArgument, model + ": counts must be nonnegative integers");
}

void check_response_size(ObsView y, std::size_t r, const std::string& model) {
  if (y.response.size() != r)
    fail(ErrorKind::InvalidArgument, model + ": expected response of length " + std::to_string(r));
}

double mean_response(const Dataset& data, std::size_t j) {
  double s = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) s += data[t].response[j];
  return s / static_cast<double>(data.size());
}

// Start for a Poisson rate: sample mean, or half a count spread over n when all counts are zero.
double poisson_start(double mean, std::size_t n) { return mean > 0.0 ? mean : 0.5 / static_cast<double>(n); }

inline double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

inline double softplus(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

}  // namespace

// ---------------------------------------------------------------- GaussianPrecision

double GaussianPrecision::log_density(ObsView y, const Vector& theta) const {
  const double r = y.response[0] - mean_;
  const double th = theta(0);
  return 0.5 * std::log(th) - 0.5 * th * r * r - 0.5 * std::log(2.0 * std::numbers::pi);
}

Vector GaussianPrecision::grad_logp(ObsView y, const Vector& theta) const {
  const double r = y.response[0] - mean_;
  return scalar_vector(0.5 / theta(0) - 0.5 * r * r);
}

Matrix GaussianPrecision::hess_logp(ObsView, const Vector& theta) const {
  return scalar_matrix(-0.5 / (theta(0) * theta(0)));
}

Tensor3 GaussianPrecision::third_logp(ObsView, const Vector& theta) const {
  return scalar_tensor(1.0 / std::pow(theta(0), 3));
}

Matrix GaussianPrecision::fisher(const Vector& theta) const { return scalar_matrix(0.5 / (theta(0) * theta(0))); }

std::optional<Tensor3> GaussianPrecision::fisher_derivative(const Vector& theta) const {
  return scalar_tensor(-1.0 / std::pow(theta(0), 3));
}

std::optional<Connections> GaussianPrecision::analytic_connections(const Vector& theta) const {
  // psi(theta) = -log(theta)/2, so d^3 psi = -1/theta^3.
  const Tensor3 t = scalar_tensor(-1.0 / std::pow(theta(0), 3));
  return Connections{Tensor3(1), t, t};
}

std::optional<Tensor3> GaussianPrecision::expected_third(const Vector& theta) const {
  return scalar_tensor(1.0 / std::pow(theta(0), 3));
}

Observation GaussianPrecision::sample(Rng& rng, const Vector& theta) const {
  return {{mean_ + rng.normal() / std::sqrt(theta(0))}, {}};
}

Vector GaussianPrecision::default_init(const Dataset& data) const {
  double ss = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    const double r = data[t].response[0] - mean_;
    ss += r * r;
  }
  return scalar_vector(ss > 0.0 ? static_cast<double>(data.size()) / ss : 1.0);
}

// ---------------------------------------------------------------- GaussianLocation

GaussianLocation::GaussianLocation(Index d, double variance) : d_(d), var_(variance) {
  if (d < 1 || !(variance > 0.0)) fail(ErrorKind::InvalidArgument, "gaussian-location needs d >= 1 and variance > 0");
}

double GaussianLocation::log_density(ObsView y, const Vector& theta) const {
  double ss = 0.0;
  for (Index j = 0; j < d_; ++j) {
    const double r = y.response[static_cast<std::size_t>(j)] - theta(j);
    ss += r * r;
  }
  return -0.5 * ss / var_ - 0.5 * static_cast<double>(d_) * std::log(2.0 * std::numbers::pi * var_);
}

Vector GaussianLocation::grad_logp(ObsView y, const Vector& theta) const {
  Vector g(d_);
  for (Index j = 0; j < d_; ++j) g(j) = (y.response[static_cast<std::size_t>(j)] - theta(j)) / var_;
  return g;
}

Matrix GaussianLocation::hess_logp(ObsView, const Vector&) const { return -Matrix::Identity(d_, d_) / var_; }

Tensor3 GaussianLocation::third_logp(ObsView, const Vector&) const { return Tensor3(d_); }

Matrix GaussianLocation::fisher(const Vector&) const { return Matrix::Identity(d_, d_) / var_; }

std::optional<Tensor3> GaussianLocation::fisher_derivative(const Vector&) const { return Tensor3(d_); }

std::optional<Connections> GaussianLocation::analytic_connections(const Vector&) const {
  return Connections{Tensor3(d_), Tensor3(d_), Tensor3(d_)};
}

std::optional<Tensor3> GaussianLocation::expected_third(const Vector&) const { return Tensor3(d_); }

Observation GaussianLocation::sample(Rng& rng, const Vector& theta) const {
  Observation o;
  o.response.resize(static_cast<std::size_t>(d_));
  for (Index j = 0; j < d_; ++j) o.response[static_cast<std::size_t>(j)] = theta(j) + std::sqrt(var_) * rng.normal();
  return o;
}

Vector GaussianLocation::default_init(const Dataset& data) const {
  Vector m(d_);
  for (Index j = 0; j < d_; ++j) m(j) = mean_response(data, static_cast<std::size_t>(j));
  return m;
}

void GaussianLocation::validate(ObsView y) const { check_response_size(y, static_cast<std::size_t>(d_), name()); }

// ---------------------------------------------------------------- PoissonRate

double PoissonRate::log_density(ObsView y, const Vector& theta) const {
  const double k = y.response[0];
  const double lam = theta(0);
  return (k > 0.0 ? k * std::log(lam) : 0.0) - lam - std::lgamma(k + 1.0);
}

Vector PoissonRate::grad_logp(ObsView y, const Vector& theta) const {
  return scalar_vector(y.response[0] / theta(0) - 1.0);
}

Matrix PoissonRate::hess_logp(ObsView y, const Vector& theta) const {
  return scalar_matrix(-y.response[0] / (theta(0) * theta(0)));
}

Tensor3 PoissonRate::third_logp(ObsView y, const Vector& theta) const {
  return scalar_tensor(2.0 * y.response[0] / std::pow(theta(0), 3));
}

Matrix PoissonRate::fisher(const Vector& theta) const { return scalar_matrix(1.0 / theta(0)); }

std::optional<Tensor3> PoissonRate::fisher_derivative(const Vector& theta) const {
  return scalar_tensor(-1.0 / (theta(0) * theta(0)));
}

std::optional<Connections> PoissonRate::analytic_connections(const Vector& theta) const {
  // Third central moment of Poisson(lambda) is lambda, so T = lambda / lambda^3.
  const double t = 1.0 / (theta(0) * theta(0));
  return Connections{scalar_tensor(-t), Tensor3(1), scalar_tensor(t)};
}

std::optional<Tensor3> PoissonRate::expected_third(const Vector& theta) const {
  return scalar_tensor(2.0 / (theta(0) * theta(0)));
}

Observation PoissonRate::sample(Rng& rng, const Vector& theta) const {
  return {{static_cast<double>(rng.poisson(theta(0)))}, {}};
}

Vector PoissonRate::default_init(const Dataset& data) const {
  return scalar_vector(poisson_start(mean_response(data, 0), data.size()));
}

void PoissonRate::validate(ObsView y) const {
  check_response_size(y, 1, name());
  check_count(y.response[0], name());
}

// ---------------------------------------------------------------- PoissonLogRate

double PoissonLogRate::log_density(ObsView y, const Vector& theta) const {
  const double k = y.response[0];
  return k * theta(0) - std::exp(theta(0)) - std::lgamma(k + 1.0);
}

Vector PoissonLogRate::grad_logp(ObsView y, const Vector& theta) const {
  return scalar_vector(y.response[0] - std::exp(theta(0)));
}

Matrix PoissonLogRate::hess_logp(ObsView, const Vector& theta) const { return scalar_matrix(-std::exp(theta(0))); }

Tensor3 PoissonLogRate::third_logp(ObsView, const Vector& theta) const { return scalar_tensor(-std::exp(theta(0))); }

Matrix PoissonLogRate::fisher(const Vector& theta) const { return scalar_matrix(std::exp(theta(0))); }

std::optional<Tensor3> PoissonLogRate::fisher_derivative(const Vector& theta) const {
  return scalar_tensor(std::exp(theta(0)));
}

std::optional<Connections> PoissonLogRate::analytic_connections(const Vector& theta) const {
  const Tensor3 t = scalar_tensor(std::exp(theta(0)));
  return Connections{Tensor3(1), t, t};
}

std::optional<Tensor3> PoissonLogRate::expected_third(const Vector& theta) const {
  return scalar_tensor(-std::exp(theta(0)));
}

Observation PoissonLogRate::sample(Rng& rng, const Vector& theta) const {
  return {{static_cast<double>(rng.poisson(std::exp(theta(0))))}, {}};
}

Vector PoissonLogRate::default_init(const Dataset& data) const {
  return scalar_vector(std::log(poisson_start(mean_response(data, 0), data.size())));
}

void PoissonLogRate::validate(ObsView y) const {
  check_response_size(y, 1, name());
  check_count(y.response[0], name());
}

// ---------------------------------------------------------------- PoissonSequence

PoissonSequence::PoissonSequence(Index d) : d_(d) {
  if (d < 1) fail(ErrorKind::InvalidArgument, "poisson-sequence needs d >= 1");
}

double PoissonSequence::log_density(ObsView y, const Vector& theta) const {
  double s = 0.0;
  for (Index i = 0; i < d_; ++i) {
    const double k = y.response[static_cast<std::size_t>(i)];
    s += (k > 0.0 ? k * std::log(theta(i)) : 0.0) - theta(i) - std::lgamma(k + 1.0);
  }
  return s;
}

Vector PoissonSequence::grad_logp(ObsView y, const Vector& theta) const {
  Vector g(d_);
  for (Index i = 0; i < d_; ++i) g(i) = y.response[static_cast<std::size_t>(i)] / theta(i) - 1.0;
  return g;
}

Matrix PoissonSequence::hess_logp(ObsView y, const Vector& theta) const {
  Matrix h = Matrix::Zero(d_, d_);
  for (Index i = 0; i < d_; ++i) h(i, i) = -y.response[static_cast<std::size_t>(i)] / (theta(i) * theta(i));
  return h;
}

Tensor3 PoissonSequence::third_logp(ObsView y, const Vector& theta) const {
  Tensor3 t(d_);
  for (Index i = 0; i < d_; ++i) t(i, i, i) = 2.0 * y.response[static_cast<std::size_t>(i)] / std::pow(theta(i), 3);
  return t;
}

// The averages only depend on the per-coordinate count means.
double PoissonSequence::avg_loglik(const Dataset& data, const Vector& theta) const {
  const auto n = static_cast<double>(data.size());
  const auto sums = data.response_sums();
  double lg = 0.0;
  for (double y : data.responses()) lg += std::lgamma(y + 1.0);
  double s = 0.0;
  for (Index i = 0; i < d_; ++i) {
    const double ybar = sums[static_cast<std::size_t>(i)] / n;
    s += (ybar > 0.0 ? ybar * std::log(theta(i)) : 0.0) - theta(i);
  }
  return s - lg / n;
}

Vector PoissonSequence::avg_grad(const Dataset& data, const Vector& theta) const {
  const auto n = static_cast<double>(data.size());
  const auto sums = data.response_sums();
  Vector g(d_);
  for (Index i = 0; i < d_; ++i) g(i) = sums[static_cast<std::size_t>(i)] / n / theta(i) - 1.0;
  return g;
}

Matrix PoissonSequence::avg_hess(const Dataset& data, const Vector& theta) const {
  const auto n = static_cast<double>(data.size());
  const auto sums = data.response_sums();
  Matrix h = Matrix::Zero(d_, d_);
  for (Index i = 0; i < d_; ++i) h(i, i) = -sums[static_cast<std::size_t>(i)] / n / (theta(i) * theta(i));
  return h;
}

Tensor3 PoissonSequence::avg_third(const Dataset& data, const Vector& theta) const {
  const auto n = static_cast<double>(data.size());
  const auto sums = data.response_sums();
  Tensor3 t(d_);
  for (Index i = 0; i < d_; ++i) t(i, i, i) = 2.0 * sums[static_cast<std::size_t>(i)] / n / std::pow(theta(i), 3);
  return t;
}

Matrix PoissonSequence::fisher(const Vector& theta) const {
  Matrix g = Matrix::Zero(d_, d_);
  for (Index i = 0; i < d_; ++i) g(i, i) = 1.0 / theta(i);
  return g;
}

std::optional<Tensor3> PoissonSequence::fisher_derivative(const Vector& theta) const {
  Tensor3 t(d_);
  for (Index i = 0; i < d_; ++i) t(i, i, i) = -1.0 / (theta(i) * theta(i));
  return t;
}

std::optional<Connections> PoissonSequence::analytic_connections(const Vector& theta) const {
  Tensor3 t(d_);
  for (Index i = 0; i < d_; ++i) t(i, i, i) = 1.0 / (theta(i) * theta(i));
  return Connections{-1.0 * t, Tensor3(d_), t};
}

std::optional<Tensor3> PoissonSequence::expected_third(const Vector& theta) const {
  Tensor3 t(d_);
  for (Index i = 0; i < d_; ++i) t(i, i, i) = 2.0 / (theta(i) * theta(i));
  return t;
}

Observation PoissonSequence::sample(Rng& rng, const Vector& theta) const {
  Observation o;
  o.response.resize(static_cast<std::size_t>(d_));
  for (Index i = 0; i < d_; ++i) o.response[static_cast<std::size_t>(i)] = static_cast<double>(rng.poisson(theta(i)));
  return o;
}

Vector PoissonSequence::default_init(const Dataset& data) const {
  Vector v(d_);
  for (Index i = 0; i < d_; ++i) v(i) = poisson_start(mean_response(data, static_cast<std::size_t>(i)), data.size());
  return v;
}

void PoissonSequence::validate(ObsView y) const {
  check_response_size(y, static_cast<std::size_t>(d_), name());
  for (double k : y.response) check_count(k, name());
}

// ---------------------------------------------------------------- LogisticGlm

LogisticGlm::LogisticGlm(std::size_t k, std::vector<double> design) : k_(k), x_(std::move(design)) {
  if (k_ == 0 || x_.empty() || x_.size() % k_ != 0)
    fail(ErrorKind::InvalidArgument, "logistic design must be a non-empty row-major n x k buffer");
  n_ = x_.size() / k_;
}

LogisticGlm LogisticGlm::from_dataset(const Dataset& data) {
  if (data.covariate_dim() == 0) fail(ErrorKind::InvalidArgument, "logistic model needs covariate columns x1..xk");
  return LogisticGlm(data.covariate_dim(), std::vector<double>(data.covariates().begin(), data.covariates().end()));
}

double LogisticGlm::log_density(ObsView y, const Vector& theta) const {
  const double eta = simd::dot(y.covariates, as_span(theta));
  return y.response[0] * eta - softplus(eta);
}

Vector LogisticGlm::grad_logp(ObsView y, const Vector& theta) const {
  const double eta = simd::dot(y.covariates, as_span(theta));
  const double r = y.response[0] - sigmoid(eta);
  Vector g(dim());
  for (std::size_t j = 0; j < k_; ++j) g(static_cast<Index>(j)) = r * y.covariates[j];
  return g;
}

Matrix LogisticGlm::hess_logp(ObsView y, const Vector& theta) const {
  const double s = sigmoid(simd::dot(y.covariates, as_span(theta)));
  const double w = s * (1.0 - s);
  Matrix h(dim(), dim());
  for (std::size_t a = 0; a < k_; ++a)
    for (std::size_t b = 0; b < k_; ++b)
      h(static_cast<Index>(a), static_cast<Index>(b)) = -w * y.covariates[a] * y.covariates[b];
  return h;
}

Tensor3 LogisticGlm::third_logp(ObsView y, const Vector& theta) const {
  const double s = sigmoid(simd::dot(y.covariates, as_span(theta)));
  const double w = -s * (1.0 - s) * (1.0 - 2.0 * s);
  Tensor3 t(dim());
  for (std::size_t a = 0; a < k_; ++a)
    for (std::size_t b = 0; b < k_; ++b)
      for (std::size_t c = 0; c < k_; ++c)
        t(static_cast<Index>(a), static_cast<Index>(b), static_cast<Index>(c)) =
            w * y.covariates[a] * y.covariates[b] * y.covariates[c];
  return t;
}

std::vector<double> LogisticGlm::linear_predictor(std::span<const double> x, std::size_t n, const Vector& beta) const {
  std::vector<double> eta(n);
  simd::kernels().gemv_rows(x.data(), n, k_, beta.data(), eta.data());
  return eta;
}

double LogisticGlm::avg_loglik(const Dataset& data, const Vector& theta) const {
  const auto eta = linear_predictor(data.covariates(), data.size(), theta);
  const auto y = data.responses();
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) s += y[i] * eta[i] - softplus(eta[i]);
  return s / static_cast<double>(data.size());
}

Vector LogisticGlm::avg_grad(const Dataset& data, const Vector& theta) const {
  auto r = linear_predictor(data.covariates(), data.size(), theta);
  const auto y = data.responses();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - sigmoid(r[i]);
  Vector g(dim());
  simd::kernels().gemtv(data.covariates().data(), data.size(), k_, r.data(), g.data());
  return g / static_cast<double>(data.size());
}

Matrix LogisticGlm::avg_hess(const Dataset& data, const Vector& theta) const {
  auto w = linear_predictor(data.covariates(), data.size(), theta);
  for (double& v : w) {
    const double s = sigmoid(v);
    v = s * (1.0 - s);
  }
  Matrix g(dim(), dim());
  simd::kernels().weighted_gram(data.covariates().data(), data.size(), k_, w.data(), g.data());
  return -g / static_cast<double>(data.size());
}

namespace {

// (1/n) sum_i w_i x_i (x) x_i (x) x_i over a row-major design.
Tensor3 weighted_cube(std::span<const double> x, std::size_t n, std::size_t k, std::span<const double> w) {
  Tensor3 t(static_cast<Index>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.data() + i * k;
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a; b < k; ++b)
        for (std::size_t c = b; c < k; ++c)
          t(static_cast<Index>(a), static_cast<Index>(b), static_cast<Index>(c)) += w[i] * row[a] * row[b] * row[c];
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a; b < k; ++b)
      for (std::size_t c = b; c < k; ++c) {
        const auto ia = static_cast<Index>(a), ib = static_cast<Index>(b), ic = static_cast<Index>(c);
        t.set_symmetric(ia, ib, ic, t(ia, ib, ic) / static_cast<double>(n));
      }
  return t;
}

}  // namespace

Tensor3 LogisticGlm::avg_third(const Dataset& data, const Vector& theta) const {
  auto w = linear_predictor(data.covariates(), data.size(), theta);
  for (double& v : w) {
    const double s = sigmoid(v);
    v = -s * (1.0 - s) * (1.0 - 2.0 * s);
  }
  return weighted_cube(data.covariates(), data.size(), k_, w);
}

Matrix LogisticGlm::design_information(const Vector& beta) const {
  auto w = linear_predictor(x_, n_, beta);
  for (double& v : w) {
    const double s = sigmoid(v);
    v = s * (1.0 - s);
  }
  Matrix g(dim(), dim());
  simd::kernels().weighted_gram(x_.data(), n_, k_, w.data(), g.data());
  return g;
}

Matrix LogisticGlm::fisher(const Vector& theta) const {
  return design_information(theta) / static_cast<double>(n_);
}

std::optional<Tensor3> LogisticGlm::fisher_derivative(const Vector& theta) const {
  auto w = linear_predictor(x_, n_, theta);
  for (double& v : w) {
    const double s = sigmoid(v);
    v = s * (1.0 - s) * (1.0 - 2.0 * s);
  }
  return weighted_cube(x_, n_, k_, w);
}

std::optional<Connections> LogisticGlm::analytic_connections(const Vector& theta) const {
  // Canonical link: e-connection vanishes and T = d^3 psi averaged over the design.
  Tensor3 t = *fisher_derivative(theta);
  return Connections{Tensor3(dim()), t, t};
}

std::optional<Tensor3> LogisticGlm::expected_third(const Vector& theta) const {
  return -1.0 * *fisher_derivative(theta);
}

Observation LogisticGlm::sample(Rng& rng, const Vector& theta) const {
  const auto i = static_cast<std::size_t>(rng.below(n_));
  std::vector<double> row(x_.begin() + static_cast<std::ptrdiff_t>(i * k_),
                          x_.begin() + static_cast<std::ptrdiff_t>((i + 1) * k_));
  const double p = sigmoid(simd::dot(row, as_span(theta)));
  return {{rng.bernoulli(p) ? 1.0 : 0.0}, std::move(row)};
}

Vector LogisticGlm::default_init(const Dataset&) const { return Vector::Zero(dim()); }

void LogisticGlm::validate(ObsView y) const {
  check_response_size(y, 1, name());
  if (y.response[0] != 0.0 && y.response[0] != 1.0) fail(ErrorKind::InvalidArgument, "logistic: response must be 0 or 1");
  if (y.covariates.size() != k_)
    fail(ErrorKind::InvalidArgument, "logistic: covariate row has length " + std::to_string(y.covariates.size()) +
                                         ", expected " + std::to_string(k_));
}

// ---------------------------------------------------------------- MultivariateCauchy

MultivariateCauchy::MultivariateCauchy(Index d, std::uint64_t fisher_seed, std::size_t fisher_draws)
    : d_(d), fisher_seed_(fisher_seed), fisher_draws_(fisher_draws) {
  if (d < 1) fail(ErrorKind::InvalidArgument, "cauchy needs d >= 1");
  if (fisher_draws < 2) fail(ErrorKind::InvalidArgument, "cauchy Monte Carlo Fisher needs at least two draws");
  const double dd = static_cast<double>(d);
  log_norm_ = std::lgamma(0.5 * (dd + 1.0)) - std::lgamma(0.5) - 0.5 * dd * std::log(std::numbers::pi);
}

double MultivariateCauchy::log_density(ObsView y, const Vector& theta) const {
  double q = 1.0;
  for (Index j = 0; j < d_; ++j) {
    const double r = y.response[static_cast<std::size_t>(j)] - theta(j);
    q += r * r;
  }
  return log_norm_ - 0.5 * (static_cast<double>(d_) + 1.0) * std::log(q);
}

Vector MultivariateCauchy::grad_logp(ObsView y, const Vector& theta) const {
  Vector r(d_);
  for (Index j = 0; j < d_; ++j) r(j) = y.response[static_cast<std::size_t>(j)] - theta(j);
  const double q = 1.0 + r.squaredNorm();
  return (static_cast<double>(d_) + 1.0) / q * r;
}

Matrix MultivariateCauchy::hess_logp(ObsView y, const Vector& theta) const {
  Vector r(d_);
  for (Index j = 0; j < d_; ++j) r(j) = y.response[static_cast<std::size_t>(j)] - theta(j);
  const double q = 1.0 + r.squaredNorm();
  const double k = static_cast<double>(d_) + 1.0;
  Matrix h = (2.0 * k / (q * q)) * (r * r.transpose());
  h.diagonal().array() -= k / q;
  return h;
}

Tensor3 MultivariateCauchy::third_logp(ObsView y, const Vector& theta) const {
  Vector r(d_);
  for (Index j = 0; j < d_; ++j) r(j) = y.response[static_cast<std::size_t>(j)] - theta(j);
  const double q = 1.0 + r.squaredNorm();
  const double k = static_cast<double>(d_) + 1.0;
  const double c3 = 8.0 * k / (q * q * q);
  const double c2 = 2.0 * k / (q * q);
  Tensor3 t(d_);
  for (Index a = 0; a < d_; ++a)
    for (Index b = 0; b < d_; ++b)
      for (Index c = 0; c < d_; ++c) {
        double v = c3 * r(a) * r(b) * r(c);
        if (a == b) v -= c2 * r(c);
        if (a == c) v -= c2 * r(b);
        if (b == c) v -= c2 * r(a);
        t(a, b, c) = v;
      }
  return t;
}

double MultivariateCauchy::avg_loglik(const Dataset& data, const Vector& theta) const {
  std::vector<double> sq(data.size());
  simd::kernels().sqdist_rows(data.responses().data(), data.size(), static_cast<std::size_t>(d_), theta.data(),
                              sq.data());
  double s = 0.0;
  for (double v : sq) s += std::log1p(v);
  return log_norm_ - 0.5 * (static_cast<double>(d_) + 1.0) * s / static_cast<double>(data.size());
}

Matrix MultivariateCauchy::fisher(const Vector& theta) const {
  std::vector<long long> key(static_cast<std::size_t>(d_));
  for (Index j = 0; j < d_; ++j) key[static_cast<std::size_t>(j)] = std::llround(theta(j) * 1e9);
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  Rng rng(fisher_seed_);
  Matrix acc = Matrix::Zero(d_, d_);
  for (std::size_t i = 0; i < fisher_draws_; ++i) {
    const Observation o = sample(rng, theta);
    const Vector s = grad_logp(view(o), theta);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(s);
  }
  Matrix g = acc.selfadjointView<Eigen::Lower>();
  g /= static_cast<double>(fisher_draws_);
  std::lock_guard lock(cache_mutex_);
  return cache_.emplace(std::move(key), g).first->second;
}

Matrix MultivariateCauchy::fisher_closed_form() const {
  const double dd = static_cast<double>(d_);
  return Matrix::Identity(d_, d_) * (dd + 1.0) / (dd + 3.0);
}

Observation MultivariateCauchy::sample(Rng& rng, const Vector& theta) const {
  const double w = std::abs(rng.normal());
  Observation o;
  o.response.resize(static_cast<std::size_t>(d_));
  for (Index j = 0; j < d_; ++j) o.response[static_cast<std::size_t>(j)] = theta(j) + rng.normal() / w;
  return o;
}

Vector MultivariateCauchy::default_init(const Dataset& data) const {
  Vector m(d_);
  std::vector<double> col(data.size());
  for (Index j = 0; j < d_; ++j) {
    for (std::size_t t = 0; t < data.size(); ++t) col[t] = data[t].response[static_cast<std::size_t>(j)];
    auto mid = col.begin() + static_cast<std::ptrdiff_t>(col.size() / 2);
    std::nth_element(col.begin(), mid, col.end());
    m(j) = *mid;
  }
  return m;
}

void MultivariateCauchy::validate(ObsView y) const { check_response_size(y, static_cast<std::size_t>(d_), name()); }

// ---------------------------------------------------------------- factory

ModelPtr make_model(const std::string& name, const Dataset& data, const ModelOptions& opts) {
  ModelPtr m;
  const auto r = static_cast<Index>(data.response_dim());
  if (name == "gaussian-precision") {
    m = std::make_shared<GaussianPrecision>(opts.known_mean);
  } else if (name == "gaussian-location") {
    m = std::make_shared<GaussianLocation>(r, opts.variance);
  } else if (name == "poisson") {
    m = std::make_shared<PoissonRate>();
  } else if (name == "poisson-log") {
    m = std::make_shared<PoissonLogRate>();
  } else if (name == "poisson-sequence") {
    m = std::make_shared<PoissonSequence>(r);
  } else if (name == "logistic") {
    m = std::make_shared<LogisticGlm>(LogisticGlm::from_dataset(data));
  } else if (name == "cauchy") {
    m = std::make_shared<MultivariateCauchy>(r, opts.fisher_seed, opts.fisher_draws);
  } else {
    fail(ErrorKind::InvalidArgument, "unknown model '" + name + "'");
  }
  m->validate(data);
  return m;
}

}  // namespace matchprior
