#include "survband/features.hpp"

#include <stdexcept>
#include <string>

namespace survband {

FeatureMap::FeatureMap(std::size_t covariate_dim, int arms)
    : covariate_dim_(covariate_dim), arms_(arms) {
  if (covariate_dim == 0 || arms < 1) {
    throw std::invalid_argument("FeatureMap: need covariate_dim >= 1 and arms >= 1");
  }
}

void FeatureMap::check(const Vector& s, int action) const {
  if (action < 0 || action >= arms_) {
    throw std::out_of_range("action " + std::to_string(action) +
                            " outside [0, " + std::to_string(arms_) + ")");
  }
  if (static_cast<std::size_t>(s.size()) != covariate_dim_) {
    throw std::invalid_argument("covariate vector has wrong length");
  }
}

Vector FeatureMap::operator()(const Vector& s, int action) const {
  check(s, action);
  const auto d0 = static_cast<Eigen::Index>(covariate_dim_);
  Vector x = Vector::Zero(static_cast<Eigen::Index>(dim()));
  x.segment(action * d0, d0) = s;
  return x;
}

double FeatureMap::linear_score(const Vector& s, int action, const Vector& beta) const {
  check(s, action);
  const auto d0 = static_cast<Eigen::Index>(covariate_dim_);
  return s.dot(beta.segment(action * d0, d0));
}

}  // namespace survband
