#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rntk/errors.hpp"

namespace rntk {

/// Second moments of a bivariate Gaussian pre-activation pair
/// (a11 = E[u^2], a22 = E[v^2], a12 = E[uv]).
struct BivariateMoment {
  double a11;
  double a22;
  double a12;
};

inline void validate(const BivariateMoment& a) {
  if (!std::isfinite(a.a11) || !std::isfinite(a.a22) || !std::isfinite(a.a12))
    throw ValidationError("bivariate moment: non-finite entries");
  if (a.a11 < 0.0 || a.a22 < 0.0)
    throw ValidationError("bivariate moment: negative variance");
  if (a.a12 * a.a12 > a.a11 * a.a22 * (1.0 + 1e-9))
    throw ValidationError("bivariate moment: |a12| exceeds Cauchy-Schwarz bound");
}

namespace detail {

/// Correlation clamped to [-1, 1]; rounding in upstream recursions can push
/// |a12| past the Cauchy-Schwarz bound by a few ulps.
inline double clamped_correlation(const BivariateMoment& a) {
  return std::clamp(a.a12 / std::sqrt(a.a11 * a.a22), -1.0, 1.0);
}

}  // namespace detail

/// E[relu(u) relu(v)] for (u,v) ~ N(0, A): the arc-cosine expectation
/// sqrt(a11 a22) / (2 pi) * (sin t + (pi - t) cos t) with t = acos(corr).
/// Degenerate variances give 0.
inline double vphi(const BivariateMoment& a) {
  validate(a);
  const double prod = a.a11 * a.a22;
  if (prod <= 0.0) return 0.0;
  const double c = detail::clamped_correlation(a);
  const double theta = std::acos(c);
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - c * c));
  return std::sqrt(prod) / (2.0 * std::numbers::pi) *
         (sin_theta + (std::numbers::pi - theta) * c);
}

/// E[relu'(u) relu'(v)] = P(u > 0, v > 0) = (pi - t) / (2 pi), t = acos(corr).
/// Defined as 0 when either variance vanishes.
inline double vphi_prime(const BivariateMoment& a) {
  validate(a);
  if (a.a11 <= 0.0 || a.a22 <= 0.0) return 0.0;
  const double theta = std::acos(detail::clamped_correlation(a));
  return (std::numbers::pi - theta) / (2.0 * std::numbers::pi);
}

}  // namespace rntk
