#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "rntk/random.hpp"
#include "rntk/types.hpp"

namespace rntk {

/// Leave-one-out 1-nearest-neighbor accuracy of a labeled embedding.
/// Ties go to the smaller row index.
inline double one_nn_loo_accuracy(const Embedding& e) {
  validate(e);
  if (!e.fully_labeled()) throw ValidationError("1-nn accuracy: embedding must be fully labeled");
  const Eigen::Index n = e.size();
  if (n < 2) throw ValidationError("1-nn accuracy: need at least 2 points");
  std::set<int> distinct;
  for (const auto& l : e.labels) distinct.insert(*l);
  if (distinct.size() < 2)
    throw ValidationError("1-nn accuracy: undefined for a single class");

  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index best_j = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = (e.coords.row(i) - e.coords.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (*e.labels[static_cast<std::size_t>(i)] == *e.labels[static_cast<std::size_t>(best_j)])
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

namespace detail {

inline double kmeans_once(const Eigen::MatrixXd& X, int k, std::mt19937_64& rng,
                          std::vector<int>& assign, int max_iters) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd centers(k, X.cols());

  // k-means++ seeding
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = X.row(first(rng));
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = (X.row(i) - centers.row(0)).squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = unit(rng) * total;
      for (; pick < n - 1; ++pick) {
        r -= d2(pick);
        if (r <= 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = X.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), (X.row(i) - centers.row(c)).squaredNorm());
  }

  assign.assign(static_cast<std::size_t>(n), 0);
  double inertia = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d = (X.row(i) - centers.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best_c) {
        assign[static_cast<std::size_t>(i)] = best_c;
        changed = true;
      }
      inertia += best;
    }
    if (!changed && it > 0) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, X.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
      counts(assign[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int c = 0; c < k; ++c)
      if (counts(c) > 0.0) centers.row(c) = sums.row(c) / counts(c);
  }
  return inertia;
}

}  // namespace detail

/// Seeded k-means with k-means++ initialization; the best of `restarts`
/// runs by inertia wins. Deterministic for a fixed seed.
inline std::vector<int> kmeans_assignments(const Eigen::MatrixXd& coords, int k,
                                           std::uint64_t seed, int restarts = 10,
                                           int max_iters = 100) {
  if (k < 1) throw ValidationError("kmeans: k must be >= 1");
  if (coords.rows() < k) throw ValidationError("kmeans: fewer points than clusters");
  std::vector<int> best_assign;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    auto rng = seeded_rng(seed, {static_cast<std::uint64_t>(r)});
    std::vector<int> assign;
    const double inertia = detail::kmeans_once(coords, k, rng, assign, max_iters);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = std::move(assign);
    }
  }
  return best_assign;
}

/// Adjusted Rand index between two labelings of the same points.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw ValidationError("adjusted rand index: labelings must be non-empty and equal length");
  std::map<std::pair<int, int>, double> contingency;
  std::map<int, double> row_sums, col_sums;
  for (std::size_t i = 0; i < a.size(); ++i) {
    contingency[{a[i], b[i]}] += 1.0;
    row_sums[a[i]] += 1.0;
    col_sums[b[i]] += 1.0;
  }
  const auto choose2 = [](double m) { return m * (m - 1.0) / 2.0; };
  double sum_nij = 0.0, sum_ai = 0.0, sum_bj = 0.0;
  for (const auto& [key, v] : contingency) sum_nij += choose2(v);
  for (const auto& [key, v] : row_sums) sum_ai += choose2(v);
  for (const auto& [key, v] : col_sums) sum_bj += choose2(v);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = sum_ai * sum_bj / total;
  const double max_index = 0.5 * (sum_ai + sum_bj);
  if (max_index == expected) return 0.0;  // both labelings trivial
  return (sum_nij - expected) / (max_index - expected);
}

struct EvalMetrics {
  double one_nn_accuracy = 0.0;
  double kmeans_ari = 0.0;
};

/// 1-NN leave-one-out accuracy plus the ARI between k-means clusters
/// (k = number of distinct labels) and the true labels.
inline EvalMetrics evaluate_embedding(const Embedding& e, std::uint64_t seed) {
  EvalMetrics out;
  out.one_nn_accuracy = one_nn_loo_accuracy(e);
  std::set<int> distinct;
  for (const auto& l : e.labels) distinct.insert(*l);
  const int k = static_cast<int>(distinct.size());
  const auto clusters = kmeans_assignments(e.coords, k, seed);
  std::vector<int> truth;
  truth.reserve(e.labels.size());
  for (const auto& l : e.labels) truth.push_back(*l);
  out.kmeans_ari = adjusted_rand_index(clusters, truth);
  return out;
}

}  // namespace rntk
