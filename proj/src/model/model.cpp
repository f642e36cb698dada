#include "matchprior/model/model.hpp"

#include "matchprior/core/error.hpp"

#include <cmath>
#include <string>

namespace matchprior {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::ExpFamilyNatural: return "exponential-family-natural";
    case Family::ExpFamilyMean: return "exponential-family-mean";
    case Family::GlmCanonical: return "glm-canonical";
    case Family::CauchyLocation: return "cauchy-location";
    case Family::Generic: return "generic";
  }
  return "unknown";
}

double Model::avg_loglik(const Dataset& data, const Vector& theta) const {
  double s = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) s += log_density(data[t], theta);
  return s / static_cast<double>(data.size());
}

Vector Model::avg_grad(const Dataset& data, const Vector& theta) const {
  Vector s = Vector::Zero(dim());
  for (std::size_t t = 0; t < data.size(); ++t) s += grad_logp(data[t], theta);
  return s / static_cast<double>(data.size());
}

Matrix Model::avg_hess(const Dataset& data, const Vector& theta) const {
  Matrix s = Matrix::Zero(dim(), dim());
  for (std::size_t t = 0; t < data.size(); ++t) s += hess_logp(data[t], theta);
  return s / static_cast<double>(data.size());
}

Tensor3 Model::avg_third(const Dataset& data, const Vector& theta) const {
  Tensor3 s(dim());
  for (std::size_t t = 0; t < data.size(); ++t) s += third_logp(data[t], theta);
  s *= 1.0 / static_cast<double>(data.size());
  return s;
}

Vector Model::default_init(const Dataset&) const {
  Vector v = Vector::Zero(dim());
  return support().project(v);
}

void Model::validate(ObsView) const {}

void Model::validate(const Dataset& data) const {
  if (data.empty()) fail(ErrorKind::InvalidArgument, "empty dataset");
  for (std::size_t t = 0; t < data.size(); ++t) validate(data[t]);
}

void Model::check_point(const Vector& theta) const {
  if (theta.size() != dim())
    fail(ErrorKind::OutOfSupport, name() + ": parameter has length " + std::to_string(theta.size()) +
                                      ", model dimension is " + std::to_string(dim()));
  if (!theta.allFinite()) fail(ErrorKind::OutOfSupport, name() + ": parameter has non-finite entries");
  if (!support().contains_open(theta)) fail(ErrorKind::OutOfSupport, name() + ": parameter outside the open support");
}

double average_loglik(const Model& model, const Dataset& data, const Vector& theta) {
  model.check_point(theta);
  const double v = model.avg_loglik(data, theta);
  if (!std::isfinite(v)) fail(ErrorKind::NonFiniteLogDensity, model.name() + ": log density not finite at an interior point");
  return v;
}

Tensor3 third_derivative_tensor(const Model& model, const Dataset& data, const Vector& theta) {
  model.check_point(theta);
  Tensor3 t = model.avg_third(data, theta);
  for (double v : t.data())
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteLogDensity, model.name() + ": third derivative not finite");
  return t;
}

Tensor3 finite_diff_third(const Model& model, const Dataset& data, const Vector& theta, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) fail(ErrorKind::StepTooLarge, "finite-difference step must be positive");
  model.check_point(theta);
  const Index d = model.dim();
  const Box box = model.support();
  Tensor3 out(d);
  for (Index a = 0; a < d; ++a) {
    Vector up = theta;
    Vector dn = theta;
    up(a) += h;
    dn(a) -= h;
    if (!box.contains_open(up) || !box.contains_open(dn))
      fail(ErrorKind::StepTooLarge, "finite-difference probe leaves the support along coordinate " + std::to_string(a));
    const Matrix diff = (model.avg_hess(data, up) - model.avg_hess(data, dn)) / (2.0 * h);
    for (Index b = 0; b < d; ++b)
      for (Index c = 0; c < d; ++c) out(a, b, c) = diff(b, c);
  }
  return out.symmetrize();
}

}  // namespace matchprior
