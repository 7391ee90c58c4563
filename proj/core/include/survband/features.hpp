#pragma once

#include <cstddef>

#include "survband/types.hpp"

namespace survband {

// Block one-hot map Phi(S, a) = (S 1{a=0}, ..., S 1{a=K-1}), d = d0 * K.
class FeatureMap {
 public:
  FeatureMap(std::size_t covariate_dim, int arms);

  std::size_t covariate_dim() const noexcept { return covariate_dim_; }
  int arms() const noexcept { return arms_; }
  std::size_t dim() const noexcept { return covariate_dim_ * static_cast<std::size_t>(arms_); }

  // Throws std::out_of_range for an action outside [0, arms).
  Vector operator()(const Vector& s, int action) const;

  // Phi(S, a)' beta without materializing the feature vector.
  double linear_score(const Vector& s, int action, const Vector& beta) const;

 private:
  void check(const Vector& s, int action) const;

  std::size_t covariate_dim_;
  int arms_;
};

}  // namespace survband
