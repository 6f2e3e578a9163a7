#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "rntk/types.hpp"
#include "rntk/vtransforms.hpp"

namespace rntk {

/// Gaussian initialization scales for the recurrent, input, and bias weights.
struct RntkParams {
  double sigma_w = 2.0;
  double sigma_u = 0.316;
  double sigma_b = 1e-5;
};

inline void validate(const RntkParams& p) {
  if (!std::isfinite(p.sigma_w) || !std::isfinite(p.sigma_u) || !std::isfinite(p.sigma_b))
    throw ValidationError("rntk params: non-finite");
  if (p.sigma_w <= 0.0) throw ValidationError("rntk params: sigma_w must be > 0");
  if (p.sigma_u <= 0.0) throw ValidationError("rntk params: sigma_u must be > 0");
  if (p.sigma_b < 0.0) throw ValidationError("rntk params: sigma_b must be >= 0");
}

/// Per-pair kernel tables over time-step pairs (t, t'):
///   sigma - pre-activation GP covariance
///   gp    - post-activation (output) GP covariance
///   pi    - backpropagated gradient GP covariance
/// plus the self covariance diagonals of each input.
struct KernelTables {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd gp;
  Eigen::MatrixXd pi;
  Eigen::VectorXd self_x;
  Eigen::VectorXd self_x2;
};

/// Diagonal of the self pre-activation covariance Sigma(x, x). The hidden
/// state starts at zero, so step 1 has no recurrent contribution.
inline Eigen::VectorXd self_moment_diag(const TimeSeries& x, const RntkParams& p) {
  validate(x);
  validate(p);
  const double m = static_cast<double>(x.dim());
  const double sb2 = p.sigma_b * p.sigma_b;
  const double su2 = p.sigma_u * p.sigma_u;
  const double sw2 = p.sigma_w * p.sigma_w;
  Eigen::VectorXd s(x.length());
  for (Eigen::Index t = 0; t < x.length(); ++t) {
    double v = sb2 + su2 / m * x.steps.row(t).squaredNorm();
    if (t > 0) v += sw2 * vphi({s(t - 1), s(t - 1), s(t - 1)});
    s(t) = v;
  }
  return s;
}

namespace detail {

inline KernelTables kernel_tables_impl(const TimeSeries& x, const TimeSeries& x2,
                                       const RntkParams& p, const Eigen::VectorXd& s1,
                                       const Eigen::VectorXd& s2) {
  const Eigen::Index T1 = x.length();
  const Eigen::Index T2 = x2.length();
  const double m = static_cast<double>(x.dim());
  const double sb2 = p.sigma_b * p.sigma_b;
  const double su2 = p.sigma_u * p.sigma_u;
  const double sw2 = p.sigma_w * p.sigma_w;

  KernelTables tb;
  tb.self_x = s1;
  tb.self_x2 = s2;
  tb.sigma.resize(T1, T2);
  tb.gp.resize(T1, T2);
  tb.pi.resize(T1, T2);

  const Eigen::MatrixXd ip = x.steps * x2.steps.transpose();

  for (Eigen::Index t = 0; t < T1; ++t) {
    for (Eigen::Index u = 0; u < T2; ++u) {
      double v = sb2 + su2 / m * ip(t, u);
      if (t > 0 && u > 0) v += sw2 * vphi({s1(t - 1), s2(u - 1), tb.sigma(t - 1, u - 1)});
      tb.sigma(t, u) = v;
      tb.gp(t, u) = vphi({s1(t), s2(u), v});
    }
  }
  // Gradient covariances run backwards from the final steps; the last step of
  // either sequence has no downstream recurrent path.
  for (Eigen::Index t = T1 - 1; t >= 0; --t) {
    for (Eigen::Index u = T2 - 1; u >= 0; --u) {
      const double vp = vphi_prime({s1(t), s2(u), tb.sigma(t, u)});
      tb.pi(t, u) = (t == T1 - 1 || u == T2 - 1) ? vp : vp * (1.0 + sw2 * tb.pi(t + 1, u + 1));
    }
  }
  if (!tb.sigma.allFinite() || !tb.gp.allFinite() || !tb.pi.allFinite())
    throw NumericalError("kernel tables: non-finite entries (inputs too large?)");
  return tb;
}

/// Canonical argument order so that rntk(x, x') and rntk(x', x) execute the
/// exact same floating-point program: longer series first, ties broken by
/// lexicographic comparison of the step values.
inline bool swap_for_canonical_order(const TimeSeries& a, const TimeSeries& b) {
  if (a.length() != b.length()) return a.length() < b.length();
  const double* pa = a.steps.data();
  const double* pb = b.steps.data();
  const Eigen::Index n = a.steps.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pa[i] < pb[i]) return true;
    if (pa[i] > pb[i]) return false;
  }
  return false;
}

}  // namespace detail

inline KernelTables kernel_tables(const TimeSeries& x, const TimeSeries& x2,
                                  const RntkParams& p) {
  validate(x);
  validate(x2);
  if (x.dim() != x2.dim())
    throw ValidationError("kernel tables: step dimensions differ (" + std::to_string(x.dim()) +
                          " vs " + std::to_string(x2.dim()) + ")");
  return detail::kernel_tables_impl(x, x2, p, self_moment_diag(x, p), self_moment_diag(x2, p));
}

inline double rntk_from_tables(const KernelTables& tb) {
  return (tb.pi.cwiseProduct(tb.sigma) + tb.gp).sum();
}

/// The tangent kernel between two sequences: the double sum over step pairs
/// of pi * sigma + gp. Output dimension is fixed to 1, so the value is scalar.
inline double rntk(const TimeSeries& x, const TimeSeries& x2, const RntkParams& p) {
  if (detail::swap_for_canonical_order(x, x2)) return rntk(x2, x, p);
  return rntk_from_tables(kernel_tables(x, x2, p));
}

/// Pairwise kernel matrix over a dataset. Self covariance diagonals are
/// computed once per series and shared across pairs; pair evaluation is
/// parallelized with a deterministic result. threads == 0 means auto.
inline GramMatrix rntk_gram(const Dataset& ds, const RntkParams& p, unsigned threads = 0) {
  validate(p);
  const Eigen::Index n = static_cast<Eigen::Index>(ds.size());
  std::vector<Eigen::VectorXd> diags(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) diags[i] = self_moment_diag(ds.series[i], p);

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) pairs.emplace_back(i, j);

  Eigen::MatrixXd K(n, n);
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto [i, j] = pairs[k];
      const auto& a = ds.series[static_cast<std::size_t>(i)];
      const auto& b = ds.series[static_cast<std::size_t>(j)];
      const double v = rntk_from_tables(
          detail::swap_for_canonical_order(a, b)
              ? detail::kernel_tables_impl(b, a, p, diags[static_cast<std::size_t>(j)],
                                           diags[static_cast<std::size_t>(i)])
              : detail::kernel_tables_impl(a, b, p, diags[static_cast<std::size_t>(i)],
                                           diags[static_cast<std::size_t>(j)]));
      K(i, j) = v;
      K(j, i) = v;
    }
  };

  unsigned nthreads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min<unsigned>(nthreads, 16u);
  if (nthreads <= 1 || pairs.size() < 64) {
    worker(0, pairs.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (pairs.size() + nthreads - 1) / nthreads;
    for (unsigned t = 0; t < nthreads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(pairs.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<std::string> ids;
  ids.reserve(ds.size());
  for (const auto& ts : ds.series) ids.push_back(ts.id);
  return GramMatrix(std::move(ids), std::move(K), MatrixKind::kernel);
}

/// Pearson dissimilarity d_ij = sqrt(1 - K_ij / sqrt(K_ii K_jj)). The
/// radicand is clamped at zero from below so rounding cannot produce NaN on
/// the diagonal; diagonal entries are set to exactly zero.
inline GramMatrix rntk_distance_matrix(const GramMatrix& gm) {
  if (gm.kind() != MatrixKind::kernel)
    throw ValidationError("distance matrix: input must be a kernel matrix");
  const Eigen::Index n = gm.size();
  const auto& K = gm.values();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(K(i, i) > 0.0))
      throw ValidationError("distance matrix: kernel diagonal must be strictly positive");
  Eigen::MatrixXd D(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    D(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double corr = K(i, j) / std::sqrt(K(i, i) * K(j, j));
      const double d = std::sqrt(std::max(0.0, 1.0 - corr));
      D(i, j) = d;
      D(j, i) = d;
    }
  }
  return GramMatrix(gm.ids(), std::move(D), MatrixKind::distance);
}

}  // namespace rntk
