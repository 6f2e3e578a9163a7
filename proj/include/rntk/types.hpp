#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rntk/errors.hpp"

namespace rntk {

/// One variable-length sequence of m-dimensional step vectors, stored as a
/// T x m matrix (one row per time step).
struct TimeSeries {
  std::string id;
  std::optional<int> label;
  Eigen::MatrixXd steps;

  Eigen::Index length() const { return steps.rows(); }
  Eigen::Index dim() const { return steps.cols(); }
};

inline void validate(const TimeSeries& ts) {
  if (ts.steps.rows() < 1)
    throw ValidationError("time series '" + ts.id + "': length must be >= 1");
  if (ts.steps.cols() < 1)
    throw ValidationError("time series '" + ts.id + "': step dimension must be >= 1");
  if (!ts.steps.allFinite())
    throw ValidationError("time series '" + ts.id + "': contains non-finite values");
}

/// An ordered collection of series sharing a step dimension, with unique ids.
struct Dataset {
  std::vector<TimeSeries> series;
  Eigen::Index dim = 0;

  std::size_t size() const { return series.size(); }

  static Dataset of(std::vector<TimeSeries> series) {
    if (series.empty()) throw ValidationError("dataset: must contain at least one series");
    std::unordered_set<std::string> seen;
    const Eigen::Index m = series.front().dim();
    for (const auto& ts : series) {
      validate(ts);
      if (ts.dim() != m)
        throw ValidationError("dataset: series '" + ts.id + "' has dimension " +
                              std::to_string(ts.dim()) + ", expected " + std::to_string(m));
      if (!seen.insert(ts.id).second)
        throw ValidationError("dataset: duplicate id '" + ts.id + "'");
    }
    Dataset ds;
    ds.series = std::move(series);
    ds.dim = m;
    return ds;
  }
};

enum class MatrixKind { kernel, distance };

inline const char* to_string(MatrixKind k) {
  return k == MatrixKind::kernel ? "kernel" : "distance";
}

/// Symmetric matrix of pairwise kernel or distance values with row identities.
/// Construction validates symmetry (1e-9 relative) and the kind-specific
/// diagonal/sign constraints.
class GramMatrix {
 public:
  GramMatrix(std::vector<std::string> ids, Eigen::MatrixXd values, MatrixKind kind)
      : ids_(std::move(ids)), values_(std::move(values)), kind_(kind) {
    const Eigen::Index n = values_.rows();
    if (n == 0) throw ValidationError("gram matrix: empty");
    if (values_.cols() != n) throw ValidationError("gram matrix: not square");
    if (static_cast<Eigen::Index>(ids_.size()) != n)
      throw ValidationError("gram matrix: id count does not match matrix size");
    if (!values_.allFinite()) throw ValidationError("gram matrix: non-finite entries");
    const double scale = values_.cwiseAbs().maxCoeff();
    const double asym = (values_ - values_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9 * std::max(scale, 1e-300))
      throw ValidationError("gram matrix: asymmetric beyond 1e-9 relative tolerance");
    if (kind_ == MatrixKind::kernel) {
      for (Eigen::Index i = 0; i < n; ++i)
        if (!(values_(i, i) > 0.0))
          throw ValidationError("gram matrix: kernel diagonal must be strictly positive (row " +
                                std::to_string(i) + ")");
    } else {
      for (Eigen::Index i = 0; i < n; ++i)
        if (values_(i, i) != 0.0)
          throw ValidationError("gram matrix: distance diagonal must be exactly zero (row " +
                                std::to_string(i) + ")");
      if (values_.minCoeff() < 0.0)
        throw ValidationError("gram matrix: distance entries must be non-negative");
    }
  }

  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::MatrixXd& values() const { return values_; }
  MatrixKind kind() const { return kind_; }
  Eigen::Index size() const { return values_.rows(); }

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd values_;
  MatrixKind kind_;
};

/// n x k low-dimensional coordinates with optional class tags. Row order
/// matches the source Gram/Dataset order.
struct Embedding {
  std::vector<std::string> ids;
  std::vector<std::optional<int>> labels;  // empty, or one entry per row
  Eigen::MatrixXd coords;

  Eigen::Index size() const { return coords.rows(); }
  Eigen::Index dim() const { return coords.cols(); }

  bool fully_labeled() const {
    if (labels.size() != static_cast<std::size_t>(coords.rows())) return false;
    for (const auto& l : labels)
      if (!l) return false;
    return true;
  }
};

inline void validate(const Embedding& e) {
  if (e.coords.cols() < 1) throw ValidationError("embedding: dimension must be >= 1");
  if (!e.coords.allFinite()) throw ValidationError("embedding: non-finite coordinates");
  if (static_cast<Eigen::Index>(e.ids.size()) != e.coords.rows())
    throw ValidationError("embedding: id count does not match row count");
  if (!e.labels.empty() && e.labels.size() != e.ids.size())
    throw ValidationError("embedding: label count does not match row count");
}

}  // namespace rntk
