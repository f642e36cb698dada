#pragma once

#include "matchprior/model/model.hpp"

#include <cstdint>
#include <optional>
#include <string_view>

namespace matchprior {

enum class GeometryMethod { Analytic, MonteCarlo };

std::string_view to_string(GeometryMethod m);

struct GeometryOptions {
  GeometryMethod method = GeometryMethod::Analytic;
  std::uint64_t seed = 0;
  std::size_t draws = 200000;
};

/// Standard errors of the Monte Carlo estimates, entrywise.
struct GeometryErrors {
  Matrix g;
  Tensor3 gamma_e;
  Tensor3 skewness;
};

/// Pointwise information geometry of a model. Immutable once built.
struct GeometryReport {
  Matrix g;
  Matrix g_inv;
  Tensor3 gamma_e;
  Tensor3 gamma_m;
  Tensor3 T;
  Vector T_a;  // T_abc g^bc
  Vector at;
  GeometryMethod method = GeometryMethod::Analytic;
  std::uint64_t seed = 0;
  std::size_t draws = 0;
  std::optional<GeometryErrors> errors;
};

/// Analytic connections when the model provides them; otherwise (or when
/// asked) Monte Carlo expectations with the given seed and draw count.
GeometryReport geometry_at(const Model& model, const Vector& theta, const GeometryOptions& opts = {});

/// Throws SingularFisher when g is not positive definite or cond(g) > 1e12.
Matrix checked_inverse(const Matrix& g);

/// Gamma^(alpha) = gamma_m - (1 + alpha)/2 T.
Tensor3 alpha_connection(const GeometryReport& report, double alpha);

/// D(a, b, c) = d_a g_bc, analytic when available, else central differences
/// with step 1e-5 max(1, |theta_a|).
Tensor3 fisher_derivative(const Model& model, const Vector& theta);

/// d_a log pi_J = (1/2) tr(g^{-1} d_a g).
Vector jeffreys_log_grad(const Model& model, const Vector& theta);

/// Gamma^(alpha)_{abe} g^{be}.
Vector alpha_parallel_log_grad(const GeometryReport& report, double alpha);

/// Finite-difference d_a T_b - d_b T_a.
Matrix equiaffinity_residual(const Model& model, const Vector& theta, double h);

/// Connections rebuilt from d g and E[d^3 log p] alone:
/// gamma_e_{cdb} = -d_b g_cd - E[d_bcd log p], gamma_m_{acb} = d_a g_bc - gamma_e_{abc}.
/// Needs analytic fisher_derivative and expected_third.
std::optional<Connections> connections_from_derivatives(const Model& model, const Vector& theta);

}  // namespace matchprior
