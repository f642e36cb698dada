#include "matchprior/geometry/geometry.hpp"

#include "matchprior/core/error.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace matchprior {
namespace {

constexpr double kMaxCondition = 1e12;

struct MonteCarloMoments {
  Matrix g;
  Tensor3 gamma_e;
  Tensor3 skewness;
  GeometryErrors errors;
};

MonteCarloMoments monte_carlo_moments(const Model& model, const Vector& theta, std::uint64_t seed, std::size_t draws) {
  if (draws < 2) fail(ErrorKind::InvalidArgument, "Monte Carlo geometry needs at least two draws");
  const Index d = model.dim();
  Matrix g = Matrix::Zero(d, d), g2 = Matrix::Zero(d, d);
  Tensor3 ge(d), ge2(d), t(d), t2(d);
  Rng rng(seed);
  for (std::size_t i = 0; i < draws; ++i) {
    const Observation o = model.sample(rng, theta);
    const ObsView y = view(o);
    const Vector s = model.grad_logp(y, theta);
    const Matrix h = model.hess_logp(y, theta);
    for (Index a = 0; a < d; ++a)
      for (Index b = 0; b < d; ++b) {
        const double sab = s(a) * s(b);
        g(a, b) += sab;
        g2(a, b) += sab * sab;
        for (Index c = 0; c < d; ++c) {
          const double e = h(a, b) * s(c);
          const double k = sab * s(c);
          ge(a, b, c) += e;
          ge2(a, b, c) += e * e;
          t(a, b, c) += k;
          t2(a, b, c) += k * k;
        }
      }
  }
  const double m = static_cast<double>(draws);
  auto se = [m](double sum, double sumsq) {
    const double mean = sum / m;
    const double var = std::max(0.0, sumsq / m - mean * mean) * m / (m - 1.0);
    return std::sqrt(var / m);
  };
  MonteCarloMoments out{Matrix(d, d), Tensor3(d), Tensor3(d), {Matrix(d, d), Tensor3(d), Tensor3(d)}};
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b) {
      out.g(a, b) = g(a, b) / m;
      out.errors.g(a, b) = se(g(a, b), g2(a, b));
      for (Index c = 0; c < d; ++c) {
        out.gamma_e(a, b, c) = ge(a, b, c) / m;
        out.errors.gamma_e(a, b, c) = se(ge(a, b, c), ge2(a, b, c));
        out.skewness(a, b, c) = t(a, b, c) / m;
        out.errors.skewness(a, b, c) = se(t(a, b, c), t2(a, b, c));
      }
    }
  out.gamma_e.symmetrize_first_two();
  out.skewness.symmetrize();
  return out;
}

}  // namespace

std::string_view to_string(GeometryMethod m) {
  return m == GeometryMethod::Analytic ? "analytic" : "monte-carlo";
}

Matrix checked_inverse(const Matrix& g) {
  const Matrix sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorKind::SingularFisher, "eigen decomposition of the Fisher matrix failed");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition)
    fail(ErrorKind::SingularFisher, "matrix is not positive definite or is ill-conditioned (eigenvalues " +
                                        std::to_string(lo) + " .. " + std::to_string(hi) + ")");
  Matrix inv = sym.llt().solve(Matrix::Identity(g.rows(), g.cols()));
  return 0.5 * (inv + inv.transpose());
}

GeometryReport geometry_at(const Model& model, const Vector& theta, const GeometryOptions& opts) {
  model.check_point(theta);
  GeometryReport r;
  r.at = theta;
  std::optional<Connections> conn;
  if (opts.method == GeometryMethod::Analytic) conn = model.analytic_connections(theta);
  if (conn && model.has_analytic_fisher()) {
    r.g = model.fisher(theta);
    r.gamma_e = std::move(conn->gamma_e);
    r.gamma_m = std::move(conn->gamma_m);
    r.T = std::move(conn->skewness);
    r.method = GeometryMethod::Analytic;
  } else {
    MonteCarloMoments mc = monte_carlo_moments(model, theta, opts.seed, opts.draws);
    r.g = model.has_analytic_fisher() && opts.method == GeometryMethod::Analytic ? model.fisher(theta) : mc.g;
    r.gamma_e = std::move(mc.gamma_e);
    r.T = std::move(mc.skewness);
    r.gamma_m = r.gamma_e + r.T;
    r.method = GeometryMethod::MonteCarlo;
    r.seed = opts.seed;
    r.draws = opts.draws;
    r.errors = std::move(mc.errors);
  }
  r.g = 0.5 * (r.g + r.g.transpose());
  r.g_inv = checked_inverse(r.g);
  r.T_a = r.T.contract_last_two(r.g_inv);
  return r;
}

Tensor3 alpha_connection(const GeometryReport& report, double alpha) {
  Tensor3 out = report.gamma_m;
  out -= (0.5 * (1.0 + alpha)) * report.T;
  return out;
}

Tensor3 fisher_derivative(const Model& model, const Vector& theta) {
  model.check_point(theta);
  if (auto d = model.fisher_derivative(theta)) return *d;
  const Index d = model.dim();
  const Box box = model.support();
  Tensor3 out(d);
  for (Index a = 0; a < d; ++a) {
    double h = 1e-5 * std::max(1.0, std::abs(theta(a)));
    // Keep both probes inside the open support.
    const double room = std::min(theta(a) - box[a].lo, box[a].hi - theta(a));
    if (h >= room) h = 0.5 * room;
    Vector up = theta, dn = theta;
    up(a) += h;
    dn(a) -= h;
    const Matrix diff = (model.fisher(up) - model.fisher(dn)) / (2.0 * h);
    for (Index b = 0; b < d; ++b)
      for (Index c = 0; c < d; ++c) out(a, b, c) = 0.5 * (diff(b, c) + diff(c, b));
  }
  return out;
}

Vector jeffreys_log_grad(const Model& model, const Vector& theta) {
  model.check_point(theta);
  const Matrix g_inv = checked_inverse(model.fisher(theta));
  return 0.5 * fisher_derivative(model, theta).contract_last_two(g_inv);
}

Vector alpha_parallel_log_grad(const GeometryReport& report, double alpha) {
  return alpha_connection(report, alpha).contract_last_two(report.g_inv);
}

Matrix equiaffinity_residual(const Model& model, const Vector& theta, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) fail(ErrorKind::StepTooLarge, "finite-difference step must be positive");
  model.check_point(theta);
  const Index d = model.dim();
  const Box box = model.support();
  Matrix dt(d, d);  // dt(a, b) = d_a T_b
  for (Index a = 0; a < d; ++a) {
    Vector up = theta, dn = theta;
    up(a) += h;
    dn(a) -= h;
    if (!box.contains_open(up) || !box.contains_open(dn))
      fail(ErrorKind::StepTooLarge, "finite-difference probe leaves the support along coordinate " + std::to_string(a));
    dt.row(a) = ((geometry_at(model, up).T_a - geometry_at(model, dn).T_a) / (2.0 * h)).transpose();
  }
  return dt - dt.transpose();
}

std::optional<Connections> connections_from_derivatives(const Model& model, const Vector& theta) {
  model.check_point(theta);
  const auto dg = model.fisher_derivative(theta);
  const auto e3 = model.expected_third(theta);
  if (!dg || !e3) return std::nullopt;
  const Index d = model.dim();
  Connections c{Tensor3(d), Tensor3(d), Tensor3(d)};
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b)
      for (Index k = 0; k < d; ++k) c.gamma_e(a, b, k) = -(*dg)(k, a, b) - (*e3)(k, a, b);
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b)
      for (Index k = 0; k < d; ++k) c.gamma_m(a, k, b) = (*dg)(a, b, k) - c.gamma_e(a, b, k);
  c.skewness = c.gamma_m - c.gamma_e;
  return c;
}

}  // namespace matchprior
