#include "matchprior/estimators/estimators.hpp"

#include "matchprior/core/error.hpp"
#include "matchprior/geometry/geometry.hpp"

#include <cmath>

namespace matchprior {
namespace {

struct Objective {
  const Model& model;
  const Dataset& data;
  const Prior* prior;  // null for the MLE
  double n;

  bool admissible(const Vector& t) const {
    if (!t.allFinite() || !model.support().contains_open(t)) return false;
    return prior == nullptr || prior->support.contains_closed(t);
  }
  double value(const Vector& t) const {
    double v = model.avg_loglik(data, t);
    if (prior) v += prior->log_density(t) / n;
    return v;
  }
  Vector grad(const Vector& t) const {
    Vector g = model.avg_grad(data, t);
    if (prior) g += prior->log_grad(t) / n;
    return g;
  }
  Matrix hess(const Vector& t) const {
    Matrix h = model.avg_hess(data, t);
    if (prior) h += prior->hessian(t) / n;
    return 0.5 * (h + h.transpose());
  }
  // Fisher scoring surrogate for the negative Hessian.
  Matrix scoring(const Vector& t) const {
    Matrix m = model.fisher(t);
    if (prior) m -= prior->hessian(t) / n;
    return 0.5 * (m + m.transpose());
  }
};

bool pinned_low(const Box& b, Index i, double x) { return std::isfinite(b[i].lo) && x <= b[i].lo; }
bool pinned_high(const Box& b, Index i, double x) { return std::isfinite(b[i].hi) && x >= b[i].hi; }

// Solves m x = rhs when m is positive definite.
std::optional<Vector> spd_solve(const Matrix& m, const Vector& rhs) {
  if (m.size() == 0) return Vector(0);
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Vector x = llt.solve(rhs);
  if (!x.allFinite()) return std::nullopt;
  return x;
}

EstimateResult optimize(const Objective& obj, const Vector& init, const OptimizerOptions& opts,
                        const std::optional<Box>& bounds, EstimateMethod method) {
  const Model& model = obj.model;
  const Index d = model.dim();
  if (init.size() != d) fail(ErrorKind::InvalidArgument, "initial point has the wrong length");
  Vector theta = bounds ? bounds->project(init) : init;
  if (!obj.admissible(theta))
    fail(ErrorKind::OutOfSupport, model.name() + ": initial point outside the support");

  double f = obj.value(theta);
  if (!std::isfinite(f)) fail(ErrorKind::NonFiniteLogDensity, "objective not finite at the initial point");
  OptimizerDiagnostics diag;
  bool used_gradient = false;

  for (int iter = 0; iter <= opts.max_iter; ++iter) {
    const Vector g = obj.grad(theta);
    std::vector<Index> free, active;
    for (Index i = 0; i < d; ++i) {
      const bool lo = bounds && pinned_low(*bounds, i, theta(i)) && g(i) <= 0.0;
      const bool hi = bounds && pinned_high(*bounds, i, theta(i)) && g(i) >= 0.0;
      (lo || hi ? active : free).push_back(i);
    }
    Vector pg = g;
    for (Index i : active) pg(i) = 0.0;
    const double scale = std::max(1.0, theta.norm());
    const double gnorm = pg.norm() / scale;
    diag.iterations = iter;
    diag.final_grad_norm = gnorm;
    diag.active = active;

    if (free.empty()) {
      diag.converged = true;
      fail(ErrorKind::BoundaryStuck, model.name() + ": every coordinate is pinned to a bound with the gradient pointing outward");
    }

    const auto k = static_cast<Index>(free.size());
    Vector gf(k);
    for (Index j = 0; j < k; ++j) gf(j) = g(free[static_cast<std::size_t>(j)]);
    auto sub = [&](const Matrix& m) {
      Matrix out(k, k);
      for (Index a = 0; a < k; ++a)
        for (Index b = 0; b < k; ++b) out(a, b) = m(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
      return out;
    };
    const Matrix neg_hess = -sub(obj.hess(theta));
    std::optional<Vector> step = spd_solve(neg_hess, gf);
    used_gradient = false;
    if (!step) {
      try {
        step = spd_solve(sub(obj.scoring(theta)), gf);
      } catch (const Error&) {
        step.reset();
      }
    }
    if (!step) {
      used_gradient = true;
      step = gf / std::max(1.0, gf.norm());
    }
    Vector dir = Vector::Zero(d);
    for (Index j = 0; j < k; ++j) dir(free[static_cast<std::size_t>(j)]) = (*step)(j);

    const bool small_step = dir.norm() / scale < 1e-6 || used_gradient;
    if (gnorm < opts.tol && small_step) {
      if (used_gradient && neg_hess.cwiseAbs().maxCoeff() < 1e-10)
        fail(ErrorKind::NotConverged, model.name() + ": objective is numerically flat; the supremum may lie at infinity");
      diag.converged = true;
      if (!used_gradient) {
        Vector cand = theta + dir;
        if (bounds) cand = bounds->project(cand);
        if (obj.admissible(cand)) {
          const double fc = obj.value(cand);
          if (std::isfinite(fc) && fc >= f - 1e-14 * std::max(1.0, std::abs(f))) {
            theta = cand;
            f = fc;
          }
        }
      }
      break;
    }
    if (iter == opts.max_iter) break;

    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls, t *= opts.shrink) {
      Vector cand = theta + t * dir;
      if (bounds) cand = bounds->project(cand);
      if (!obj.admissible(cand)) continue;
      const double fc = obj.value(cand);
      if (!std::isfinite(fc)) continue;
      if (fc >= f + opts.armijo * g.dot(cand - theta)) {
        moved = (cand - theta).norm() > 0.0 || fc > f;
        theta = cand;
        f = fc;
        break;
      }
    }
    if (!moved) {
      const bool noise_floor = !used_gradient && dir.norm() / scale < 1e-4 &&
                               std::abs(g.dot(dir)) <= 1e-12 * std::max(1.0, std::abs(f));
      if ((gnorm < opts.tol && (small_step || dir.norm() / scale < 1e-3)) || noise_floor) {
        diag.converged = true;
        break;
      }
      if (used_gradient)
        fail(ErrorKind::IndefiniteHessian, model.name() + ": Newton and gradient steps both failed to improve the objective");
      fail(ErrorKind::NotConverged, model.name() + ": line search failed at iteration " + std::to_string(iter));
    }
  }
  if (!diag.converged)
    fail(ErrorKind::NotConverged, model.name() + ": no convergence after " + std::to_string(opts.max_iter) +
                                      " iterations (scaled gradient " + std::to_string(diag.final_grad_norm) + ")");
  EstimateResult r;
  r.point = theta;
  r.method = method;
  r.optimizer = diag;
  if (used_gradient) r.metadata["step"] = "gradient";
  return r;
}

}  // namespace

std::string_view to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::MLE: return "MLE";
    case EstimateMethod::MAP: return "MAP";
    case EstimateMethod::PmMcmc: return "PM-MCMC";
    case EstimateMethod::PmQuad: return "PM-QUAD";
    case EstimateMethod::Calibrated: return "CALIBRATED";
    case EstimateMethod::Laplace: return "LAPLACE";
  }
  return "unknown";
}

std::string_view to_string(InformationSource s) {
  switch (s) {
    case InformationSource::Auto: return "auto";
    case InformationSource::Fisher: return "fisher";
    case InformationSource::Observed: return "observed";
    case InformationSource::ObservedPosterior: return "observed-posterior";
  }
  return "unknown";
}

EstimateResult mle(const Model& model, const Dataset& data, const Vector& init, const OptimizerOptions& opts) {
  model.validate(data);
  const Objective obj{model, data, nullptr, static_cast<double>(data.size())};
  return optimize(obj, init, opts, std::nullopt, EstimateMethod::MLE);
}

EstimateResult map_estimate(const Model& model, const Dataset& data, const Prior& prior, const Vector& init,
                            const OptimizerOptions& opts, const std::optional<Box>& bounds) {
  model.validate(data);
  if (prior.dim() != model.dim()) fail(ErrorKind::InvalidArgument, "prior dimension does not match the model");
  const Objective obj{model, data, &prior, static_cast<double>(data.size())};
  EstimateResult r = optimize(obj, init, opts, bounds, EstimateMethod::MAP);
  r.metadata["prior"] = prior.label;
  return r;
}

EstimateResult calibrate_pm_from_map(const Model& model, const Dataset& data, const Vector& map_est,
                                     const CalibrationOptions& opts) {
  const Index d = model.dim();
  if (map_est.size() != d) fail(ErrorKind::InvalidArgument, "MAP estimate has the wrong length");
  if (!map_est.allFinite() || !model.support().contains_open(map_est))
    fail(ErrorKind::BoundaryPoint, "calibration needs an interior MAP estimate");
  if (opts.bounds)
    for (Index i = 0; i < d; ++i)
      if (pinned_low(*opts.bounds, i, map_est(i)) || pinned_high(*opts.bounds, i, map_est(i)))
        fail(ErrorKind::BoundaryPoint, "MAP coordinate " + std::to_string(i) + " is pinned to a bound");
  const double n = static_cast<double>(data.size());

  InformationSource src = opts.information;
  if (src == InformationSource::Auto)
    src = model.has_analytic_fisher() ? InformationSource::Fisher : InformationSource::Observed;
  Matrix info;
  switch (src) {
    case InformationSource::Fisher: info = model.fisher(map_est); break;
    case InformationSource::Observed: info = -model.avg_hess(data, map_est); break;
    case InformationSource::ObservedPosterior:
      if (!opts.prior) fail(ErrorKind::InvalidArgument, "observed-posterior information needs the prior");
      info = -model.avg_hess(data, map_est) - opts.prior->hessian(map_est) / n;
      break;
    case InformationSource::Auto: break;
  }
  const Matrix inv = checked_inverse(info);
  const Tensor3 third = third_derivative_tensor(model, data, map_est);
  Vector point = map_est + inv * third.contract_last_two(inv) / (2.0 * n);

  EstimateResult r;
  r.method = EstimateMethod::Calibrated;
  r.metadata["information"] = std::string(to_string(src));
  if (opts.pm_prior && opts.map_prior) {
    point += inv * (opts.pm_prior->log_grad(map_est) - opts.map_prior->log_grad(map_est)) / n;
    r.metadata["correction"] = "generalized (experimental)";
  } else {
    r.metadata["correction"] = "same prior for PM and MAP";
  }
  r.point = point;
  return r;
}

Statistic identity_statistic(Index d) {
  Statistic s;
  s.out_dim = d;
  s.value = [](const Vector& t) { return t; };
  s.jacobian = [d](const Vector&) -> Matrix { return Matrix::Identity(d, d); };
  s.hessians = [d](const Vector&) { return std::vector<Matrix>(static_cast<std::size_t>(d), Matrix::Zero(d, d)); };
  return s;
}

Statistic constant_statistic(Index d, const Vector& c) {
  Statistic s;
  const Index m = c.size();
  s.out_dim = m;
  s.value = [c](const Vector&) { return c; };
  s.jacobian = [m, d](const Vector&) -> Matrix { return Matrix::Zero(m, d); };
  s.hessians = [m, d](const Vector&) { return std::vector<Matrix>(static_cast<std::size_t>(m), Matrix::Zero(d, d)); };
  return s;
}

Statistic power_statistic(Index d, double p) {
  Statistic s;
  s.out_dim = d;
  s.value = [p](const Vector& t) -> Vector { return t.array().pow(p).matrix(); };
  s.jacobian = [p](const Vector& t) -> Matrix { return (p * t.array().pow(p - 1.0)).matrix().asDiagonal(); };
  s.hessians = [p, d](const Vector& t) {
    std::vector<Matrix> hs(static_cast<std::size_t>(d), Matrix::Zero(d, d));
    for (Index i = 0; i < d; ++i) hs[static_cast<std::size_t>(i)](i, i) = p * (p - 1.0) * std::pow(t(i), p - 2.0);
    return hs;
  };
  return s;
}

Statistic numeric_statistic(Index d, Index m, std::function<Vector(const Vector&)> f) {
  Statistic s;
  s.out_dim = m;
  s.value = f;
  s.jacobian = [f, d, m](const Vector& t) -> Matrix {
    Matrix j(m, d);
    for (Index a = 0; a < d; ++a) {
      const double h = 1e-6 * std::max(1.0, std::abs(t(a)));
      Vector up = t, dn = t;
      up(a) += h;
      dn(a) -= h;
      j.col(a) = (f(up) - f(dn)) / (2.0 * h);
    }
    return j;
  };
  s.hessians = [f, d, m](const Vector& t) {
    std::vector<Matrix> hs(static_cast<std::size_t>(m), Matrix::Zero(d, d));
    for (Index a = 0; a < d; ++a)
      for (Index b = a; b < d; ++b) {
        const double ha = 1e-4 * std::max(1.0, std::abs(t(a)));
        const double hb = 1e-4 * std::max(1.0, std::abs(t(b)));
        auto at = [&](double sa, double sb) {
          Vector p = t;
          p(a) += sa * ha;
          p(b) += sb * hb;
          return f(p);
        };
        const Vector v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * ha * hb);
        for (Index i = 0; i < m; ++i) {
          hs[static_cast<std::size_t>(i)](a, b) = v(i);
          hs[static_cast<std::size_t>(i)](b, a) = v(i);
        }
      }
    return hs;
  };
  return s;
}

Vector laplace_posterior_expectation(const Model& model, const Dataset& data, const Prior& prior, const Statistic& f,
                                     const Vector& theta_hat) {
  model.check_point(theta_hat);
  const double n = static_cast<double>(data.size());
  const Matrix j_inv = checked_inverse(-model.avg_hess(data, theta_hat));
  const Tensor3 third = third_derivative_tensor(model, data, theta_hat);
  const Vector lp = prior.log_grad(theta_hat);
  const Vector u = j_inv * third.contract_last_two(j_inv);
  const Vector fv = f.value(theta_hat);
  const Matrix jac = f.jacobian(theta_hat);
  const std::vector<Matrix> hs = f.hessians(theta_hat);
  Vector out = fv;
  for (Index i = 0; i < f.out_dim; ++i) {
    const Matrix& h = hs[static_cast<std::size_t>(i)];
    const Vector ji = jac.row(i).transpose();
    const double second = (j_inv.cwiseProduct(h)).sum() + 2.0 * ji.dot(j_inv * lp);
    out(i) += (second + ji.dot(u)) / (2.0 * n);
  }
  return out;
}

Matrix statistic_matching_residual(const Model& model, const Prior& pm, const Prior& map, const Statistic& f,
                                   const Vector& theta) {
  const GeometryReport r = geometry_at(model, theta);
  const Vector h = pm.log_grad(theta) - map.log_grad(theta) - jeffreys_log_grad(model, theta) -
                   0.5 * r.gamma_e.contract_first_two_by(r.g_inv);
  const Vector gh = r.g_inv * h;
  const Matrix jac = f.jacobian(theta);
  const std::vector<Matrix> hs = f.hessians(theta);
  const Index d = model.dim();
  Matrix out(f.out_dim, d);
  for (Index i = 0; i < f.out_dim; ++i)
    for (Index a = 0; a < d; ++a)
      out(i, a) = jac(i, a) * gh(a) + 0.5 * r.g_inv.row(a).dot(hs[static_cast<std::size_t>(i)].row(a));
  return out;
}

Vector posterior_mean_expansion(const Model& model, const Prior& prior, const Vector& mle_point, std::size_t n) {
  const GeometryReport r = geometry_at(model, mle_point);
  const double nn = static_cast<double>(n);
  const Vector drift = prior.log_grad(mle_point) - jeffreys_log_grad(model, mle_point) + 0.5 * r.T_a;
  const Vector gm = r.g_inv * r.gamma_m.contract_first_two_by(r.g_inv);
  return mle_point + r.g_inv * drift / nn - gm / (2.0 * nn);
}

Vector map_expansion(const Model& model, const Prior& prior, const Vector& mle_point, std::size_t n) {
  const Matrix g_inv = checked_inverse(model.fisher(mle_point));
  return mle_point + g_inv * prior.log_grad(mle_point) / static_cast<double>(n);
}

}  // namespace matchprior
