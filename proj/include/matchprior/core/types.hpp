#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace matchprior {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Dense d x d x d array. Index order (a, b, c) with c fastest.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Index d, double fill = 0.0)
      : d_(d), v_(static_cast<std::size_t>(d * d * d), fill) {}

  Index dim() const noexcept { return d_; }

  double& operator()(Index a, Index b, Index c) { return v_[offset(a, b, c)]; }
  double operator()(Index a, Index b, Index c) const { return v_[offset(a, b, c)]; }

  /// Writes v into every permutation of (a, b, c).
  void set_symmetric(Index a, Index b, Index c, double v);
  /// Replaces each entry with the mean over its six index permutations.
  Tensor3& symmetrize();
  /// Symmetrizes only over the first two indices.
  Tensor3& symmetrize_first_two();

  bool is_symmetric(double tol) const;
  double max_abs() const;
  double max_abs_diff(const Tensor3& other) const;

  Tensor3& operator+=(const Tensor3& o);
  Tensor3& operator-=(const Tensor3& o);
  Tensor3& operator*=(double s);

  /// Returns the vector u_a = sum_{b,c} t(a, b, c) m(b, c).
  Vector contract_last_two(const Matrix& m) const;
  /// Returns the vector u_c = sum_{a,b} m(a, b) t(a, b, c).
  Vector contract_first_two_by(const Matrix& m) const;

  std::span<const double> data() const { return v_; }
  std::span<double> data() { return v_; }

 private:
  std::size_t offset(Index a, Index b, Index c) const {
    return static_cast<std::size_t>((a * d_ + b) * d_ + c);
  }

  Index d_ = 0;
  std::vector<double> v_;
};

Tensor3 operator+(Tensor3 a, const Tensor3& b);
Tensor3 operator-(Tensor3 a, const Tensor3& b);
Tensor3 operator*(double s, Tensor3 t);

/// Per-coordinate interval. Models treat it as open; optimizers treat bounds as closed.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains_open(double x) const { return x > lo && x < hi; }
  bool contains_closed(double x) const { return x >= lo && x <= hi; }
};

class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> iv) : iv_(std::move(iv)) {}
  static Box uniform(Index d, Interval iv) { return Box(std::vector<Interval>(static_cast<std::size_t>(d), iv)); }
  static Box real_line(Index d) { return uniform(d, Interval{}); }
  static Box positive(Index d) { return uniform(d, Interval{0.0, std::numeric_limits<double>::infinity()}); }

  Index dim() const { return static_cast<Index>(iv_.size()); }
  const Interval& operator[](Index i) const { return iv_[static_cast<std::size_t>(i)]; }

  bool contains_open(const Vector& x) const;
  bool contains_closed(const Vector& x) const;
  Vector project(const Vector& x) const;
  /// Componentwise intersection; dimensions must agree.
  Box intersect(const Box& other) const;
  bool operator==(const Box& other) const;

 private:
  std::vector<Interval> iv_;
};

bool all_finite(const Vector& v);

}  // namespace matchprior
