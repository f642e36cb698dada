#include "matchprior/core/types.hpp"

#include "matchprior/core/error.hpp"

#include <algorithm>
#include <cmath>

namespace matchprior {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::OutOfSupport: return "OutOfSupport";
    case ErrorKind::NonFiniteLogDensity: return "NonFiniteLogDensity";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::SingularFisher: return "SingularFisher";
    case ErrorKind::SupportMismatch: return "SupportMismatch";
    case ErrorKind::FamilyMismatch: return "FamilyMismatch";
    case ErrorKind::InvalidHyperparameter: return "InvalidHyperparameter";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::IndefiniteHessian: return "IndefiniteHessian";
    case ErrorKind::BoundaryStuck: return "BoundaryStuck";
    case ErrorKind::BoundaryPoint: return "BoundaryPoint";
    case ErrorKind::ZeroAcceptance: return "ZeroAcceptance";
    case ErrorKind::SingularPrecision: return "SingularPrecision";
    case ErrorKind::ImproperPosterior: return "ImproperPosterior";
    case ErrorKind::TailNotDecaying: return "TailNotDecaying";
    case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

void Tensor3::set_symmetric(Index a, Index b, Index c, double v) {
  (*this)(a, b, c) = v;
  (*this)(a, c, b) = v;
  (*this)(b, a, c) = v;
  (*this)(b, c, a) = v;
  (*this)(c, a, b) = v;
  (*this)(c, b, a) = v;
}

Tensor3& Tensor3::symmetrize() {
  for (Index a = 0; a < d_; ++a)
    for (Index b = a; b < d_; ++b)
      for (Index c = b; c < d_; ++c) {
        const double m = ((*this)(a, b, c) + (*this)(a, c, b) + (*this)(b, a, c) + (*this)(b, c, a) +
                          (*this)(c, a, b) + (*this)(c, b, a)) /
                         6.0;
        set_symmetric(a, b, c, m);
      }
  return *this;
}

Tensor3& Tensor3::symmetrize_first_two() {
  for (Index a = 0; a < d_; ++a)
    for (Index b = a + 1; b < d_; ++b)
      for (Index c = 0; c < d_; ++c) {
        const double m = 0.5 * ((*this)(a, b, c) + (*this)(b, a, c));
        (*this)(a, b, c) = m;
        (*this)(b, a, c) = m;
      }
  return *this;
}

bool Tensor3::is_symmetric(double tol) const {
  for (Index a = 0; a < d_; ++a)
    for (Index b = 0; b < d_; ++b)
      for (Index c = 0; c < d_; ++c) {
        const double v = (*this)(a, b, c);
        if (std::abs(v - (*this)(b, a, c)) > tol || std::abs(v - (*this)(a, c, b)) > tol ||
            std::abs(v - (*this)(c, b, a)) > tol)
          return false;
      }
  return true;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double v : v_) m = std::max(m, std::abs(v));
  return m;
}

double Tensor3::max_abs_diff(const Tensor3& other) const {
  if (other.d_ != d_) fail(ErrorKind::InvalidArgument, "tensor dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < v_.size(); ++i) m = std::max(m, std::abs(v_[i] - other.v_[i]));
  return m;
}

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  if (o.d_ != d_) fail(ErrorKind::InvalidArgument, "tensor dimension mismatch");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& o) {
  if (o.d_ != d_) fail(ErrorKind::InvalidArgument, "tensor dimension mismatch");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  for (double& v : v_) v *= s;
  return *this;
}

Vector Tensor3::contract_last_two(const Matrix& m) const {
  Vector out = Vector::Zero(d_);
  for (Index a = 0; a < d_; ++a) {
    double s = 0.0;
    for (Index b = 0; b < d_; ++b)
      for (Index c = 0; c < d_; ++c) s += (*this)(a, b, c) * m(b, c);
    out(a) = s;
  }
  return out;
}

Vector Tensor3::contract_first_two_by(const Matrix& m) const {
  Vector out = Vector::Zero(d_);
  for (Index a = 0; a < d_; ++a)
    for (Index b = 0; b < d_; ++b) {
      const double w = m(a, b);
      for (Index c = 0; c < d_; ++c) out(c) += (*this)(a, b, c) * w;
    }
  return out;
}

Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
Tensor3 operator*(double s, Tensor3 t) { return t *= s; }

bool Box::contains_open(const Vector& x) const {
  if (x.size() != dim()) return false;
  for (Index i = 0; i < dim(); ++i)
    if (!(*this)[i].contains_open(x(i))) return false;
  return true;
}

bool Box::contains_closed(const Vector& x) const {
  if (x.size() != dim()) return false;
  for (Index i = 0; i < dim(); ++i)
    if (!(*this)[i].contains_closed(x(i))) return false;
  return true;
}

Vector Box::project(const Vector& x) const {
  Vector y = x;
  for (Index i = 0; i < dim(); ++i) y(i) = std::clamp(x(i), (*this)[i].lo, (*this)[i].hi);
  return y;
}

Box Box::intersect(const Box& other) const {
  if (other.dim() != dim()) fail(ErrorKind::SupportMismatch, "box dimensions differ");
  std::vector<Interval> iv(iv_.size());
  for (std::size_t i = 0; i < iv_.size(); ++i)
    iv[i] = Interval{std::max(iv_[i].lo, other.iv_[i].lo), std::min(iv_[i].hi, other.iv_[i].hi)};
  return Box(std::move(iv));
}

bool Box::operator==(const Box& other) const {
  if (other.dim() != dim()) return false;
  for (std::size_t i = 0; i < iv_.size(); ++i)
    if (iv_[i].lo != other.iv_[i].lo || iv_[i].hi != other.iv_[i].hi) return false;
  return true;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace matchprior
