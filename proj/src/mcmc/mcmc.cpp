#include "matchprior/mcmc/mcmc.hpp"

#include "matchprior/core/error.hpp"
#include "matchprior/simd/kernels.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace matchprior {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;

double log_norm_cdf(double x) { return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2)); }

// Coefficients of the alternating series for the J*(1, z) density.
double series_coef(int n, double x) {
  const double k = (n + 0.5) * kPi;
  if (x > kTrunc) return k * std::exp(-0.5 * k * k * x);
  if (x > 0.0) {
    const double e = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) - 2.0 * (n + 0.5) * (n + 0.5) / x;
    return std::exp(e);
  }
  return 0.0;
}

double mass_texpon(double z) {
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / kTrunc) * (kTrunc * z - 1.0);
  const double a = -std::sqrt(1.0 / kTrunc) * (kTrunc * z + 1.0);
  const double x0 = std::log(fz) + fz * kTrunc;
  const double xb = x0 - z + log_norm_cdf(b);
  const double xa = x0 + z + log_norm_cdf(a);
  const double qdivp = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + qdivp);
}

// Inverse Gaussian with mean 1/z restricted to (0, kTrunc).
double truncated_inverse_gaussian(Rng& rng, double z) {
  const double mu = 1.0 / z;
  double x = kTrunc + 1.0;
  if (mu > kTrunc) {
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1 = rng.exponential(), e2 = rng.exponential();
      while (e1 * e1 > 2.0 * e2 / kTrunc) {
        e1 = rng.exponential();
        e2 = rng.exponential();
      }
      x = kTrunc / ((1.0 + kTrunc * e1) * (1.0 + kTrunc * e1));
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    while (x > kTrunc) {
      const double y = std::pow(rng.normal(), 2);
      x = mu + 0.5 * mu * mu * y - 0.5 * mu * std::sqrt(4.0 * mu * y + (mu * y) * (mu * y));
      if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

double batch_se(const Matrix& s, Index col, double& ess) {
  const Index n = s.rows();
  const double mean = s.col(col).mean();
  const double var = n > 1 ? (s.col(col).array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
  const auto b = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(n))));
  if (b < 2) {
    ess = static_cast<double>(n);
    return n > 0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
  }
  const Index size = n / b;
  double bm_var = 0.0;
  for (Index j = 0; j < b; ++j) {
    const double m = s.col(col).segment(j * size, size).mean() - mean;
    bm_var += m * m;
  }
  bm_var /= static_cast<double>(b - 1);
  const double se = std::sqrt(bm_var / static_cast<double>(b));
  ess = se > 0.0 ? std::min(static_cast<double>(n), var / (se * se)) : static_cast<double>(n);
  return se;
}

struct Recorder {
  const ChainConfig& cfg;
  Matrix samples;
  Index row = 0;
  Recorder(const ChainConfig& c, Index d) : cfg(c), samples((static_cast<Index>(c.length) + static_cast<Index>(c.thinning) - 1) / static_cast<Index>(c.thinning), d) {}
  void record(std::size_t iter, const Vector& theta) {
    if (iter < cfg.burnin) return;
    if ((iter - cfg.burnin) % cfg.thinning == 0) samples.row(row++) = theta.transpose();
  }
  std::size_t total() const { return cfg.burnin + cfg.length; }
};

}  // namespace

void ChainConfig::validate() const {
  if (length < 1) fail(ErrorKind::InvalidArgument, "chain length must be positive");
  if (thinning < 1) fail(ErrorKind::InvalidArgument, "thinning must be positive");
  if (!(step_scale > 0.0) || !std::isfinite(step_scale)) fail(ErrorKind::InvalidArgument, "step scale must be positive");
}

void summarize(ChainOutput& out) {
  const Index d = out.samples.cols();
  out.posterior_mean = out.samples.colwise().mean().transpose();
  out.mc_se.resize(d);
  out.ess.resize(d);
  for (Index j = 0; j < d; ++j) {
    double ess = 0.0;
    out.mc_se(j) = batch_se(out.samples, j, ess);
    out.ess(j) = ess;
  }
}

ChainOutput merge_chains(const std::vector<ChainOutput>& chains) {
  if (chains.empty()) fail(ErrorKind::InvalidArgument, "no chains to merge");
  Index rows = 0;
  double acc = 0.0;
  for (const auto& c : chains) {
    rows += c.samples.rows();
    acc += c.acceptance_rate * static_cast<double>(c.samples.rows());
  }
  ChainOutput out;
  out.samples.resize(rows, chains.front().samples.cols());
  Index r = 0;
  for (const auto& c : chains) {
    out.samples.middleRows(r, c.samples.rows()) = c.samples;
    r += c.samples.rows();
  }
  out.acceptance_rate = acc / static_cast<double>(rows);
  summarize(out);
  return out;
}

ChainOutput rwmh(const Model& model, const Dataset& data, const Prior& prior, const ChainConfig& config,
                 const Proposal& proposal, const Vector& init) {
  config.validate();
  model.check_point(init);
  const Index d = model.dim();
  const double n = static_cast<double>(data.size());
  auto log_target = [&](const Vector& t) {
    if (!model.support().contains_open(t) || !prior.support.contains_closed(t))
      return -std::numeric_limits<double>::infinity();
    const double v = n * model.avg_loglik(data, t) + prior.log_density(t);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  Matrix chol;
  double step = 0.0;
  if (proposal.kind == ProposalKind::Gaussian) {
    Matrix prec = -n * model.avg_hess(data, init) - prior.hessian(init);
    prec = 0.5 * (prec + prec.transpose());
    Eigen::LLT<Matrix> llt(prec);
    if (llt.info() != Eigen::Success) {
      prec = n * model.fisher(init) - prior.hessian(init);
      llt.compute(0.5 * (prec + prec.transpose()));
    }
    if (llt.info() != Eigen::Success) fail(ErrorKind::SingularPrecision, "proposal scale: information is not positive definite");
    // Covariance = prec^{-1}; its Cholesky factor is L^{-T}.
    chol = llt.matrixU().solve(Matrix::Identity(d, d));
    step = (proposal.step ? *proposal.step : 1.0) * config.step_scale * 2.38 / std::sqrt(static_cast<double>(d));
  } else {
    step = (proposal.step ? *proposal.step : 0.1 / std::sqrt(static_cast<double>(d))) * config.step_scale;
  }

  Rng rng(config.seed);
  Recorder rec(config, d);
  Vector theta = init;
  double lp = log_target(theta);
  if (!std::isfinite(lp)) fail(ErrorKind::NonFiniteLogDensity, "target not finite at the initial point");
  std::size_t accepted = 0, post = 0;
  Vector z(d);
  for (std::size_t it = 0; it < rec.total(); ++it) {
    for (Index j = 0; j < d; ++j) z(j) = rng.normal();
    Vector cand;
    if (proposal.kind == ProposalKind::Gaussian) {
      cand = theta + step * (chol * z);
    } else {
      const double w = std::abs(rng.normal());
      cand = theta + (step / w) * z;
    }
    const double lc = log_target(cand);
    const bool accept = std::isfinite(lc) && std::log(rng.uniform()) < lc - lp;
    if (accept) {
      theta = cand;
      lp = lc;
    }
    if (it >= config.burnin) {
      ++post;
      if (accept) ++accepted;
    }
    rec.record(it, theta);
  }
  ChainOutput out;
  out.samples = std::move(rec.samples);
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(post);
  if (out.acceptance_rate < 1e-4)
    fail(ErrorKind::ZeroAcceptance, "acceptance rate " + std::to_string(out.acceptance_rate) + " after burn-in");
  summarize(out);
  return out;
}

double draw_polya_gamma(Rng& rng, double z) {
  z = 0.5 * std::abs(z);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double p_right = mass_texpon(z);
  for (;;) {
    double x = 0.0;
    if (rng.uniform() < p_right) x = kTrunc + rng.exponential() / fz;
    else x = truncated_inverse_gaussian(rng, z);
    double s = series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int k = 1;; ++k) {
      if (k % 2 == 1) {
        s -= series_coef(k, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(k, x);
        if (y > s) break;
      }
    }
  }
}

GaussianPriorSpec GaussianPriorSpec::isotropic(Index d, double mean, double var) {
  if (!(var > 0.0)) fail(ErrorKind::InvalidHyperparameter, "prior variance must be positive");
  return {Vector::Constant(d, mean), Matrix::Identity(d, d) / var};
}

ChainOutput polya_gamma_gibbs(std::span<const double> design, std::size_t k, std::span<const double> responses,
                              const GaussianPriorSpec& prior, const ChainConfig& config, const Vector& init) {
  config.validate();
  const std::size_t n = responses.size();
  const auto d = static_cast<Index>(k);
  if (k == 0 || design.size() != n * k) fail(ErrorKind::InvalidArgument, "design must be n x k row-major");
  if (prior.mean.size() != d || prior.precision.rows() != d || prior.precision.cols() != d || init.size() != d)
    fail(ErrorKind::InvalidArgument, "prior or initial point dimension mismatch");
  const auto& ker = simd::kernels();
  std::vector<double> kappa(n);
  for (std::size_t i = 0; i < n; ++i) kappa[i] = responses[i] - 0.5;
  Vector xk(d);
  ker.gemtv(design.data(), n, k, kappa.data(), xk.data());
  const Vector b0 = xk + prior.precision * prior.mean;

  Rng rng(config.seed);
  Recorder rec(config, d);
  Vector beta = init;
  std::vector<double> eta(n), omega(n);
  Matrix q(d, d);
  Vector z(d);
  for (std::size_t it = 0; it < rec.total(); ++it) {
    ker.gemv_rows(design.data(), n, k, beta.data(), eta.data());
    for (std::size_t i = 0; i < n; ++i) omega[i] = draw_polya_gamma(rng, eta[i]);
    ker.weighted_gram(design.data(), n, k, omega.data(), q.data());
    // Row-major and column-major agree for the symmetric result.
    q += prior.precision;
    Eigen::LLT<Matrix> llt(q);
    if (llt.info() != Eigen::Success) fail(ErrorKind::SingularPrecision, "posterior precision is not positive definite");
    const Vector mean = llt.solve(b0);
    for (Index j = 0; j < d; ++j) z(j) = rng.normal();
    beta = mean + llt.matrixU().solve(z);
    rec.record(it, beta);
  }
  ChainOutput out;
  out.samples = std::move(rec.samples);
  out.acceptance_rate = 1.0;
  summarize(out);
  return out;
}

double draw_truncated_gamma(Rng& rng, double shape, double rate, double lo) {
  if (lo <= 0.0) return rng.gamma(shape, rate);
  for (int i = 0; i < 16; ++i) {
    const double x = rng.gamma(shape, rate);
    if (x >= lo) return x;
  }
  if (shape <= 1.0) {
    for (;;) {
      const double x = lo + rng.exponential(rate);
      if (std::log(rng.uniform()) <= (shape - 1.0) * std::log(x / lo)) return x;
    }
  }
  const double c = rate * lo - shape;
  double rho = (c + std::sqrt(c * c + 4.0 * rate * lo)) / (2.0 * lo);
  rho = std::clamp(rho, 1e-12 * rate, rate * (1.0 - 1e-12));
  const double xstar = std::max(lo, (shape - 1.0) / (rate - rho));
  for (;;) {
    const double x = lo + rng.exponential(rho);
    const double la = (shape - 1.0) * std::log(x / xstar) - (rate - rho) * (x - xstar);
    if (std::log(rng.uniform()) <= la) return x;
  }
}

double komaki_log_posterior(const Vector& lambda, const Vector& sums, double n, const Vector& beta, double alpha) {
  return ((beta + sums).array() - 1.0).cwiseProduct(lambda.array().log()).sum() - n * lambda.sum() -
         alpha * std::log(lambda.sum());
}

void komaki_sweep(Rng& rng, Vector& lambda, const Vector& sums, double n, const Vector& beta, double alpha,
                  double floor) {
  const double u = rng.gamma(alpha, lambda.sum());
  for (Index i = 0; i < lambda.size(); ++i) lambda(i) = draw_truncated_gamma(rng, beta(i) + sums(i), n + u, floor);
}

ChainOutput komaki_gibbs(const Vector& sums, std::size_t n, const Vector& beta, double alpha, const ChainConfig& config,
                         double floor, const std::optional<Vector>& init) {
  config.validate();
  const Index d = sums.size();
  if (beta.size() != d) fail(ErrorKind::InvalidHyperparameter, "beta and count vector lengths differ");
  if (n < 1) fail(ErrorKind::InvalidArgument, "n must be positive");
  for (Index i = 0; i < d; ++i) {
    if (!(beta(i) > 0.0)) fail(ErrorKind::InvalidHyperparameter, "komaki beta must be positive");
    if (!(sums(i) >= 0.0)) fail(ErrorKind::InvalidArgument, "count sums must be nonnegative");
  }
  if (!(alpha > 0.0)) fail(ErrorKind::InvalidHyperparameter, "komaki alpha must be positive");
  if (floor <= 0.0 && beta.sum() + sums.sum() <= alpha)
    fail(ErrorKind::ImproperPosterior, "sum(beta) + sum(counts) <= alpha: posterior mass escapes to the origin");
  const double nn = static_cast<double>(n);
  Vector lambda = init ? *init : Vector((sums.array() / nn + 1.0).matrix());
  if (lambda.size() != d) fail(ErrorKind::InvalidArgument, "initial point has the wrong length");
  lambda = lambda.cwiseMax(floor > 0.0 ? floor : 0.0);
  if ((lambda.array() <= 0.0).any()) fail(ErrorKind::OutOfSupport, "initial rates must be positive");

  Rng rng(config.seed);
  Recorder rec(config, d);
  for (std::size_t it = 0; it < rec.total(); ++it) {
    komaki_sweep(rng, lambda, sums, nn, beta, alpha, floor);
    rec.record(it, lambda);
  }
  ChainOutput out;
  out.samples = std::move(rec.samples);
  out.acceptance_rate = 1.0;
  summarize(out);
  return out;
}

std::string samples_csv(const ChainOutput& out) {
  std::ostringstream os;
  os.precision(17);
  os << "iter";
  for (Index j = 0; j < out.samples.cols(); ++j) os << ",theta" << (j + 1);
  os << '\n';
  for (Index i = 0; i < out.samples.rows(); ++i) {
    os << i;
    for (Index j = 0; j < out.samples.cols(); ++j) os << ',' << out.samples(i, j);
    os << '\n';
  }
  return os.str();
}

}  // namespace matchprior
