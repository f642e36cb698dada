#include "matchprior/oracle/oracle.hpp"

#include "matchprior/core/error.hpp"
#include "matchprior/estimators/estimators.hpp"

#include <cmath>
#include <limits>

namespace matchprior {
namespace {

enum class Axis { Finite, Upper, Lower, Line };

// One coordinate's substitution theta = map(t) with log-Jacobian.
struct Coord {
  Axis axis = Axis::Line;
  double lo = 0.0, hi = 0.0;
  double center = 0.0;  // in the transformed variable
  double scale = 1.0;
  std::vector<double> breaks;  // finite axis only

  double to_theta(double t) const {
    switch (axis) {
      case Axis::Upper: return lo + std::exp(t);
      case Axis::Lower: return hi - std::exp(t);
      default: return t;
    }
  }
  double log_jac(double t) const { return axis == Axis::Upper || axis == Axis::Lower ? t : 0.0; }
};

class Integrator {
 public:
  Integrator(std::vector<Coord> coords, std::function<double(const Vector&)> log_post, double offset,
             const QuadratureSpec& spec)
      : c_(std::move(coords)), lp_(std::move(log_post)), offset_(offset), spec_(spec) {}

  // Integral of w(theta) posterior(theta) over the whole domain.
  QuadResult integrate(const std::function<double(const Vector&)>& w) {
    Vector t(static_cast<Index>(c_.size()));
    return level(0, t, w);
  }

  double log_integrand(const Vector& t) const {
    Vector theta(t.size());
    double lj = 0.0;
    for (Index j = 0; j < t.size(); ++j) {
      theta(j) = c_[static_cast<std::size_t>(j)].to_theta(t(j));
      lj += c_[static_cast<std::size_t>(j)].log_jac(t(j));
    }
    return lp_(theta) + lj - offset_;
  }

  Vector to_theta(const Vector& t) const {
    Vector theta(t.size());
    for (Index j = 0; j < t.size(); ++j) theta(j) = c_[static_cast<std::size_t>(j)].to_theta(t(j));
    return theta;
  }

  const std::vector<Coord>& coords() const { return c_; }

 private:
  QuadResult level(std::size_t j, Vector& t, const std::function<double(const Vector&)>& w) {
    const Coord& c = c_[j];
    double err_sum = 0.0;
    bool ok = true;
    auto g = [&](double x) {
      t(static_cast<Index>(j)) = x;
      if (j + 1 == c_.size()) {
        const double l = log_integrand(t);
        if (!std::isfinite(l)) return 0.0;
        return w(to_theta(t)) * std::exp(l);
      }
      const QuadResult inner = level(j + 1, t, w);
      err_sum = std::max(err_sum, inner.error);
      ok = ok && inner.converged;
      return inner.value;
    };
    QuadResult r;
    if (c.axis == Axis::Finite) {
      const std::size_t segs = c.breaks.size() - 1;
      for (std::size_t s = 0; s < segs; ++s) {
        const QuadResult q = gauss_kronrod(g, c.breaks[s], c.breaks[s + 1], spec_.abs_tol / static_cast<double>(segs),
                                           spec_.max_subdivisions);
        r.value += q.value;
        r.error += q.error;
        r.subdivisions += q.subdivisions;
        ok = ok && q.converged;
      }
    } else {
      r = gauss_kronrod_line(g, c.center, c.scale, spec_.abs_tol, spec_.max_subdivisions);
      ok = ok && r.converged;
    }
    // Inner errors integrate against an O(1) measure after standardization.
    r.error += err_sum;
    r.converged = ok;
    return r;
  }

  std::vector<Coord> c_;
  std::function<double(const Vector&)> lp_;
  double offset_;
  QuadratureSpec spec_;
};

}  // namespace

QuadEstimate quad_posterior_expectation(const Model& model, const Dataset& data, const Prior& prior,
                                        const std::function<Vector(const Vector&)>& f, const QuadratureSpec& spec) {
  const Index d = model.dim();
  if (d < 1 || d > 3) fail(ErrorKind::Unsupported, "quadrature oracle supports dimensions 1 to 3");
  if (prior.dim() != d) fail(ErrorKind::InvalidArgument, "prior dimension does not match the model");
  if (!(spec.abs_tol > 0.0)) fail(ErrorKind::InvalidArgument, "abs_tol must be positive");
  const double n = static_cast<double>(data.size());
  Box domain = spec.domain ? *spec.domain : model.support().intersect(prior.support);
  if (spec.domain)
    for (Index j = 0; j < d; ++j)
      if (!std::isfinite(domain[j].lo) || !std::isfinite(domain[j].hi))
        fail(ErrorKind::InvalidArgument, "explicit quadrature domain must be finite");

  auto log_post = [&](const Vector& theta) {
    if (!model.support().contains_open(theta) || !prior.support.contains_closed(theta))
      return -std::numeric_limits<double>::infinity();
    const double v = n * model.avg_loglik(data, theta) + prior.log_density(theta);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  // Posterior mode and curvature set the centering and scale of each axis.
  Vector init = model.default_init(data);
  {
    Box inner = domain;
    init = inner.project(init);
    for (Index j = 0; j < d; ++j) {
      if (init(j) <= domain[j].lo) init(j) = std::isfinite(domain[j].hi) ? 0.5 * (domain[j].lo + domain[j].hi) : domain[j].lo + 1.0;
      if (init(j) >= domain[j].hi) init(j) = std::isfinite(domain[j].lo) ? 0.5 * (domain[j].lo + domain[j].hi) : domain[j].hi - 1.0;
    }
  }
  Vector mode = init;
  try {
    Box closed = domain;
    mode = map_estimate(model, data, prior, init, OptimizerOptions{1e-10, 500, 1e-4, 0.5}, closed).point;
  } catch (const Error&) {
  }
  if (!model.support().contains_open(mode)) mode = init;
  Vector sd = Vector::Constant(d, 1.0);
  {
    Matrix prec = -n * model.avg_hess(data, mode) - prior.hessian(mode);
    prec = 0.5 * (prec + prec.transpose());
    Eigen::LLT<Matrix> llt(prec);
    if (llt.info() == Eigen::Success) {
      const Matrix cov = llt.solve(Matrix::Identity(d, d));
      for (Index j = 0; j < d; ++j) sd(j) = std::sqrt(std::max(cov(j, j), 1e-300));
    } else {
      for (Index j = 0; j < d; ++j) sd(j) = std::max(1.0, std::abs(mode(j))) / std::sqrt(n);
    }
  }

  std::vector<Coord> coords(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    Coord& c = coords[static_cast<std::size_t>(j)];
    const Interval iv = domain[j];
    c.lo = iv.lo;
    c.hi = iv.hi;
    const bool flo = std::isfinite(iv.lo), fhi = std::isfinite(iv.hi);
    if (flo && fhi) {
      c.axis = Axis::Finite;
      c.breaks.push_back(iv.lo);
      for (double k : {-40.0, -10.0, -3.0, 0.0, 3.0, 10.0, 40.0}) {
        const double b = mode(j) + k * sd(j);
        if (b > c.breaks.back() && b < iv.hi) c.breaks.push_back(b);
      }
      c.breaks.push_back(iv.hi);
    } else if (flo) {
      c.axis = Axis::Upper;
      const double gap = std::max(mode(j) - iv.lo, 1e-3 * sd(j));
      c.center = std::log(gap);
      c.scale = std::clamp(sd(j) / gap, 1e-3, 1.0);
    } else if (fhi) {
      c.axis = Axis::Lower;
      const double gap = std::max(iv.hi - mode(j), 1e-3 * sd(j));
      c.center = std::log(gap);
      c.scale = std::clamp(sd(j) / gap, 1e-3, 1.0);
    } else {
      c.axis = Axis::Line;
      c.center = mode(j);
      c.scale = sd(j);
    }
  }

  // Center of the transformed coordinates.
  Vector tc(d);
  for (Index j = 0; j < d; ++j) {
    const Coord& c = coords[static_cast<std::size_t>(j)];
    tc(j) = c.axis == Axis::Finite ? mode(j) : c.center;
  }
  Integrator probe(coords, log_post, 0.0, spec);
  const double l0 = probe.log_integrand(tc);
  if (!std::isfinite(l0)) fail(ErrorKind::NonFiniteLogDensity, "posterior not finite at its mode");

  for (Index j = 0; j < d; ++j) {
    const Coord& c = coords[static_cast<std::size_t>(j)];
    if (c.axis == Axis::Finite) continue;
    for (double sgn : {-1.0, 1.0}) {
      // Exponential axes probe a fixed log-distance so theta stays representable.
      const bool exp_axis = c.axis != Axis::Line;
      Vector near = tc, far = tc;
      near(j) += sgn * (exp_axis ? 20.0 : 1e2 * c.scale);
      far(j) += sgn * (exp_axis ? 60.0 : 1e4 * c.scale);
      const double ln = probe.log_integrand(near);
      const double lf = probe.log_integrand(far);
      const bool decays = !std::isfinite(lf) || (lf < l0 - 20.0 && lf < ln);
      if (!decays)
        fail(ErrorKind::TailNotDecaying, "posterior does not decay along coordinate " + std::to_string(j + 1));
    }
  }

  Integrator integ(coords, log_post, l0, spec);
  const QuadResult z = integ.integrate([](const Vector&) { return 1.0; });
  if (!z.converged) fail(ErrorKind::ToleranceNotMet, "normalizing integral missed tolerance");
  if (!(z.value > 0.0)) fail(ErrorKind::ToleranceNotMet, "normalizing integral is zero");
  const Vector f0 = f(mode);
  const Index m = f0.size();
  QuadEstimate out{Vector(m), Vector(m), mode};
  for (Index i = 0; i < m; ++i) {
    const QuadResult num = integ.integrate([&f, i](const Vector& th) { return f(th)(i); });
    if (!num.converged) fail(ErrorKind::ToleranceNotMet, "numerator integral missed tolerance");
    out.value(i) = num.value / z.value;
    out.error(i) = (num.error + std::abs(out.value(i)) * z.error) / z.value;
  }
  return out;
}

QuadEstimate quad_posterior_mean(const Model& model, const Dataset& data, const Prior& prior,
                                 const QuadratureSpec& spec) {
  return quad_posterior_expectation(model, data, prior, [](const Vector& t) { return t; }, spec);
}

std::optional<ConjugateFamily> parse_conjugate_family(const std::string& name) {
  if (name == "poisson-gamma") return ConjugateFamily::PoissonGamma;
  if (name == "gaussianprecision-gamma") return ConjugateFamily::GaussianPrecisionGamma;
  return std::nullopt;
}

double conjugate_pm(ConjugateFamily family, double a, double b, const Dataset& data, double known_mean) {
  if (!(a > 0.0) || !(b > 0.0)) fail(ErrorKind::InvalidHyperparameter, "conjugate prior needs a, b > 0");
  if (data.empty() || data.response_dim() != 1) fail(ErrorKind::InvalidArgument, "conjugate forms need scalar responses");
  const double n = static_cast<double>(data.size());
  double s = 0.0;
  if (family == ConjugateFamily::PoissonGamma) {
    for (double y : data.responses()) s += y;
    return (a + s) / (b + n);
  }
  for (double y : data.responses()) s += (y - known_mean) * (y - known_mean);
  return (a + 0.5 * n) / (b + 0.5 * s);
}

}  // namespace matchprior
