#pragma once

#include "matchprior/core/types.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace matchprior {

struct Observation {
  std::vector<double> response;
  std::vector<double> covariates;  // empty when the model has no design
};

/// Non-owning view of one row of a Dataset.
struct ObsView {
  std::span<const double> response;
  std::span<const double> covariates;
};

inline ObsView view(const Observation& o) { return {o.response, o.covariates}; }

/// Ordered, structurally homogeneous observations stored row-major.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(const std::vector<Observation>& obs);
  Dataset(std::size_t response_dim, std::vector<double> responses, std::size_t covariate_dim,
          std::vector<double> covariates);

  std::size_t size() const noexcept { return n_; }
  bool empty() const noexcept { return n_ == 0; }
  std::size_t response_dim() const noexcept { return r_; }
  std::size_t covariate_dim() const noexcept { return k_; }

  ObsView operator[](std::size_t i) const {
    return {std::span<const double>(y_).subspan(i * r_, r_), std::span<const double>(x_).subspan(i * k_, k_)};
  }

  std::span<const double> responses() const noexcept { return y_; }
  std::span<const double> covariates() const noexcept { return x_; }

  /// Column sums of the response matrix.
  std::vector<double> response_sums() const;
  /// Rows [first, first + count) as a new dataset.
  Dataset slice(std::size_t first, std::size_t count) const;
  /// Rows at the given indices, in order.
  Dataset select(std::span<const std::size_t> rows) const;
  /// Prepends a column of ones to the covariates.
  Dataset with_intercept() const;

 private:
  std::size_t n_ = 0;
  std::size_t r_ = 0;
  std::size_t k_ = 0;
  std::vector<double> y_;
  std::vector<double> x_;
};

/// Header row required; response `y` or `y1..yd`, covariates `x1..xk`.
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text);

/// Five comma-separated columns, no header: four features then a 0/1 class label.
Dataset load_banknote(const std::filesystem::path& path);
Dataset parse_banknote(const std::string& text);

void write_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace matchprior
