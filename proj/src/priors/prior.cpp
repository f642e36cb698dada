#include "matchprior/priors/prior.hpp"

#include "matchprior/core/error.hpp"
#include "matchprior/oracle/quadrature.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace matchprior {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::InvalidHyperparameter, what + " must be positive and finite");
}

double log_det_spd(const Matrix& g) {
  Eigen::LLT<Matrix> llt(0.5 * (g + g.transpose()));
  if (llt.info() != Eigen::Success) fail(ErrorKind::SingularFisher, "Fisher matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Vector anchor_point(const Box& box) {
  Vector one = Vector::Ones(box.dim());
  Vector p = box.project(one);
  for (Index i = 0; i < box.dim(); ++i) {
    // Projection lands on a closed bound; step inside so the model can evaluate.
    if (p(i) <= box[i].lo) p(i) = std::isfinite(box[i].hi) ? 0.5 * (box[i].lo + box[i].hi) : box[i].lo + 1.0;
    if (p(i) >= box[i].hi) p(i) = std::isfinite(box[i].lo) ? 0.5 * (box[i].lo + box[i].hi) : box[i].hi - 1.0;
  }
  return p;
}

Box joint_support(const Prior& pm, const Model& model) {
  if (pm.dim() != model.dim())
    fail(ErrorKind::InvalidArgument, "prior " + pm.label + " dimension does not match model " + model.name());
  return pm.support.intersect(model.support());
}

double log_jeffreys_unanchored(const Model& model, const Vector& theta) { return 0.5 * log_det_spd(model.fisher(theta)); }

// One argument list "(a,b,c)" split into doubles; "auto" maps to NaN.
std::vector<double> parse_args(const std::string& spec, std::string_view args) {
  std::vector<double> out;
  if (args.empty()) return out;
  std::size_t start = 0;
  while (start <= args.size()) {
    std::size_t end = args.find(',', start);
    if (end == std::string_view::npos) end = args.size();
    std::string_view tok = args.substr(start, end - start);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    if (tok == "auto") {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      double v = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        fail(ErrorKind::ParseError, "bad number '" + std::string(tok) + "' in prior '" + spec + "'");
      out.push_back(v);
    }
    start = end + 1;
  }
  return out;
}

}  // namespace

Matrix Prior::hessian(const Vector& theta) const {
  if (log_hess) return log_hess(theta);
  const Index d = theta.size();
  Matrix h(d, d);
  for (Index a = 0; a < d; ++a) {
    double step = 1e-5 * std::max(1.0, std::abs(theta(a)));
    const double room = std::min(theta(a) - support[a].lo, support[a].hi - theta(a));
    if (room > 0.0 && step >= room) step = 0.5 * room;
    Vector up = theta, dn = theta;
    up(a) += step;
    dn(a) -= step;
    h.col(a) = (log_grad(up) - log_grad(dn)) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Prior normal_prior(Index d, double mean, double var) {
  require_positive(var, "normal variance");
  Prior p;
  p.log_density = [mean, var](const Vector& t) { return -0.5 * (t.array() - mean).square().sum() / var; };
  p.log_grad = [mean, var](const Vector& t) -> Vector { return -(t.array() - mean).matrix() / var; };
  p.log_hess = [d, var](const Vector&) -> Matrix { return -Matrix::Identity(d, d) / var; };
  p.proper = true;
  p.support = Box::real_line(d);
  p.label = "normal(" + fmt(mean) + "," + fmt(var) + ")";
  return p;
}

Prior gamma_prior(Index d, double a, double b) {
  require_positive(a, "gamma shape");
  require_positive(b, "gamma rate");
  Prior p;
  p.log_density = [a, b](const Vector& t) { return ((a - 1.0) * t.array().log() - b * t.array()).sum(); };
  p.log_grad = [a, b](const Vector& t) -> Vector { return ((a - 1.0) / t.array() - b).matrix(); };
  p.log_hess = [a](const Vector& t) -> Matrix { return (-(a - 1.0) / t.array().square()).matrix().asDiagonal(); };
  p.proper = true;
  p.support = Box::positive(d);
  p.label = "gamma(" + fmt(a) + "," + fmt(b) + ")";
  return p;
}

Prior invgamma_prior(Index d, double a, double b) {
  require_positive(a, "inverse-gamma shape");
  require_positive(b, "inverse-gamma scale");
  Prior p;
  p.log_density = [a, b](const Vector& t) { return (-(a + 1.0) * t.array().log() - b / t.array()).sum(); };
  p.log_grad = [a, b](const Vector& t) -> Vector {
    return (-(a + 1.0) / t.array() + b / t.array().square()).matrix();
  };
  p.log_hess = [a, b](const Vector& t) -> Matrix {
    return ((a + 1.0) / t.array().square() - 2.0 * b / t.array().cube()).matrix().asDiagonal();
  };
  p.proper = true;
  p.support = Box::positive(d);
  p.label = "invgamma(" + fmt(a) + "," + fmt(b) + ")";
  return p;
}

Prior uniform_prior(const Box& support) {
  const Index d = support.dim();
  Prior p;
  p.log_density = [](const Vector&) { return 0.0; };
  p.log_grad = [d](const Vector&) -> Vector { return Vector::Zero(d); };
  p.log_hess = [d](const Vector&) -> Matrix { return Matrix::Zero(d, d); };
  p.proper = false;
  p.support = support;
  p.label = "uniform";
  return p;
}

Prior jeffreys_prior(ModelPtr model) {
  const Box support = model->support();
  const double anchor = log_jeffreys_unanchored(*model, anchor_point(support));
  Prior p;
  p.log_density = [model, anchor](const Vector& t) { return log_jeffreys_unanchored(*model, t) - anchor; };
  p.log_grad = [model](const Vector& t) { return jeffreys_log_grad(*model, t); };
  p.proper = false;
  p.support = support;
  p.label = "jeffreys";
  return p;
}

Prior komaki_prior(const Vector& beta, double alpha, double floor) {
  if (beta.size() < 1) fail(ErrorKind::InvalidHyperparameter, "komaki prior needs at least one coordinate");
  for (Index i = 0; i < beta.size(); ++i) require_positive(beta(i), "komaki beta");
  require_positive(alpha, "komaki alpha");
  if (!(floor >= 0.0) || !std::isfinite(floor)) fail(ErrorKind::InvalidHyperparameter, "komaki floor must be >= 0");
  const Index d = beta.size();
  Prior p;
  p.log_density = [beta, alpha](const Vector& l) {
    return ((beta.array() - 1.0) * l.array().log()).sum() - alpha * std::log(l.sum());
  };
  p.log_grad = [beta, alpha](const Vector& l) -> Vector {
    return ((beta.array() - 1.0) / l.array() - alpha / l.sum()).matrix();
  };
  p.log_hess = [beta, alpha, d](const Vector& l) -> Matrix {
    const double s = l.sum();
    Matrix h = Matrix::Constant(d, d, alpha / (s * s));
    h.diagonal().array() -= (beta.array() - 1.0) / l.array().square();
    return h;
  };
  p.proper = false;
  p.support = Box::uniform(d, Interval{floor, std::numeric_limits<double>::infinity()});
  const bool same = (beta.array() == beta(0)).all();
  p.label = "komaki(" + (same ? fmt(beta(0)) : std::string("vec")) + "," + fmt(alpha) + "," + fmt(floor) + ")";
  return p;
}

Prior times_coordinates(const Prior& pm, double power) {
  Prior p = pm;
  p.log_density = [f = pm.log_density, power](const Vector& t) { return f(t) + power * t.array().log().sum(); };
  p.log_grad = [g = pm.log_grad, power](const Vector& t) -> Vector { return g(t) + (power / t.array()).matrix(); };
  if (pm.log_hess)
    p.log_hess = [h = pm.log_hess, power](const Vector& t) -> Matrix {
      Matrix m = h(t);
      m.diagonal().array() -= power / t.array().square();
      return m;
    };
  p.proper = false;
  p.support = pm.support.intersect(Box::positive(pm.dim()));
  p.label = pm.label + (power == 1.0 ? "*coords" : power == -1.0 ? "/coords" : "*coords^" + fmt(power));
  return p;
}

Prior times_jeffreys(const Prior& pm, ModelPtr model, double power, const std::string& suffix) {
  const Box support = joint_support(pm, *model);
  const double anchor = log_jeffreys_unanchored(*model, anchor_point(model->support()));
  Prior p;
  p.log_density = [f = pm.log_density, model, power, anchor](const Vector& t) {
    return f(t) + power * (log_jeffreys_unanchored(*model, t) - anchor);
  };
  p.log_grad = [g = pm.log_grad, model, power](const Vector& t) -> Vector {
    return g(t) + power * jeffreys_log_grad(*model, t);
  };
  p.proper = false;
  p.support = support;
  p.label = pm.label + suffix;
  return p;
}

Vector matching_residual(const Prior& pm, const Prior& map, const Model& model, const Vector& theta) {
  if (pm.dim() != model.dim() || map.dim() != model.dim())
    fail(ErrorKind::SupportMismatch, "prior and model dimensions differ");
  if (!pm.support.contains_closed(theta) || !map.support.contains_closed(theta))
    fail(ErrorKind::SupportMismatch, "point lies outside the support of " + pm.label + " or " + map.label);
  const GeometryReport r = geometry_at(model, theta);
  const Vector target = jeffreys_log_grad(model, theta) + 0.5 * r.gamma_e.contract_first_two_by(r.g_inv);
  return pm.log_grad(theta) - map.log_grad(theta) - target;
}

Vector matching_residual(const MatchingPair& pair, const Model& model, const Vector& theta) {
  return matching_residual(pair.pm, pair.map, model, theta);
}

Prior eflat_map_partner(const Prior& pm, ModelPtr model) {
  const Family f = model->family();
  if (f != Family::ExpFamilyNatural && f != Family::GlmCanonical)
    fail(ErrorKind::FamilyMismatch, "e-flat partner needs natural or canonical-link coordinates; model " +
                                        model->name() + " is " + std::string(to_string(f)));
  return times_jeffreys(pm, model, -1.0, "/jeffreys");
}

Prior mflat_map_partner(const Prior& pm, ModelPtr model) {
  const Family f = model->family();
  if (f != Family::ExpFamilyMean)
    fail(ErrorKind::FamilyMismatch, "m-flat partner needs expectation coordinates; model " + model->name() + " is " +
                                        std::string(to_string(f)));
  return times_jeffreys(pm, model, -2.0, "/jeffreys2");
}

Vector alpha_pair_target_grad(const GeometryReport& report, double alpha) {
  return alpha_parallel_log_grad(report, 0.0) - (0.25 * (1.0 - alpha)) * report.T_a;
}

double ode_log_ratio(const Model& model, double theta0, double theta) {
  if (model.dim() != 1) fail(ErrorKind::InvalidArgument, "ODE partner construction is one-dimensional");
  auto integrand = [&model](double t) {
    const Vector p = Vector::Constant(1, t);
    const GeometryReport r = geometry_at(model, p);
    return jeffreys_log_grad(model, p)(0) + 0.5 * r.g_inv(0, 0) * r.gamma_e(0, 0, 0);
  };
  model.check_point(Vector::Constant(1, theta0));
  model.check_point(Vector::Constant(1, theta));
  const QuadResult q = gauss_kronrod(integrand, theta0, theta, 1e-10);
  if (!q.converged) fail(ErrorKind::ToleranceNotMet, "ODE integral did not reach 1e-10");
  return q.value;
}

Prior ode_map_partner(const Prior& pm, ModelPtr model, double theta0) {
  if (model->dim() != 1 || pm.dim() != 1) fail(ErrorKind::InvalidArgument, "ODE partner construction is one-dimensional");
  const Box support = joint_support(pm, *model);
  Prior p;
  p.log_density = [f = pm.log_density, model, theta0](const Vector& t) {
    return f(t) - ode_log_ratio(*model, theta0, t(0));
  };
  p.log_grad = [g = pm.log_grad, model](const Vector& t) -> Vector {
    const GeometryReport r = geometry_at(*model, t);
    return g(t) - jeffreys_log_grad(*model, t) - 0.5 * r.gamma_e.contract_first_two_by(r.g_inv);
  };
  p.proper = false;
  p.support = support;
  p.label = pm.label + "/ode";
  return p;
}

Prior parse_prior(const std::string& raw, ModelPtr model) {
  std::string spec;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) spec.push_back(c);
  if (!model) fail(ErrorKind::InvalidArgument, "prior parsing needs a model");
  const Index d = model->dim();
  std::size_t pos = 0;
  while (pos < spec.size() && (std::isalnum(static_cast<unsigned char>(spec[pos])) || spec[pos] == '_')) ++pos;
  const std::string head = spec.substr(0, pos);
  std::vector<double> args;
  if (pos < spec.size() && spec[pos] == '(') {
    const std::size_t close = spec.find(')', pos);
    if (close == std::string::npos) fail(ErrorKind::ParseError, "unclosed '(' in prior '" + spec + "'");
    args = parse_args(spec, std::string_view(spec).substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  auto want = [&](std::size_t k) {
    if (args.size() != k)
      fail(ErrorKind::ParseError, "prior '" + head + "' takes " + std::to_string(k) + " arguments in '" + spec + "'");
  };
  Prior p;
  if (head == "normal") {
    want(2);
    p = normal_prior(d, args[0], args[1]);
  } else if (head == "gamma") {
    want(2);
    p = gamma_prior(d, args[0], args[1]);
  } else if (head == "invgamma") {
    want(2);
    p = invgamma_prior(d, args[0], args[1]);
  } else if (head == "jeffreys") {
    want(0);
    p = jeffreys_prior(model);
  } else if (head == "uniform") {
    want(0);
    p = uniform_prior(model->support());
  } else if (head == "komaki") {
    if (args.size() < 1 || args.size() > 3) fail(ErrorKind::ParseError, "komaki takes (beta[,alpha[,floor]])");
    const Vector beta = Vector::Constant(d, args[0]);
    const double alpha = args.size() >= 2 && !std::isnan(args[1]) ? args[1] : beta.sum() - 1.0;
    const double floor = args.size() == 3 ? args[2] : 0.0;
    p = komaki_prior(beta, alpha, floor);
  } else {
    fail(ErrorKind::ParseError, "unknown prior '" + head + "' in '" + spec + "'");
  }
  while (pos < spec.size()) {
    const std::string rest = spec.substr(pos);
    auto take = [&](std::string_view tok) {
      if (rest.rfind(tok, 0) != 0) return false;
      const std::size_t next = pos + tok.size();
      if (next < spec.size() && std::isalnum(static_cast<unsigned char>(spec[next]))) return false;
      pos = next;
      return true;
    };
    if (take("/jeffreys2")) p = mflat_map_partner(p, model);
    else if (take("/jeffreys")) p = eflat_map_partner(p, model);
    else if (take("*jeffreys2")) p = times_jeffreys(p, model, 2.0, "*jeffreys2");
    else if (take("*jeffreys")) p = times_jeffreys(p, model, 1.0, "*jeffreys");
    else if (take("*coords")) p = times_coordinates(p, 1.0);
    else if (take("/coords")) p = times_coordinates(p, -1.0);
    else fail(ErrorKind::ParseError, "unknown prior modifier '" + rest + "' in '" + spec + "'");
  }
  if (p.dim() != d) fail(ErrorKind::InvalidArgument, "prior dimension does not match the model");
  return p;
}

}  // namespace matchprior
