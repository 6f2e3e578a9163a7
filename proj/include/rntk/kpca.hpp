#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "rntk/types.hpp"

namespace rntk {

/// Fitted kernel-PCA state: eigenvector coefficients scaled by 1/sqrt(lambda)
/// and the training centering statistics, kept so the model could project
/// out-of-sample points later.
struct KpcaModel {
  Eigen::MatrixXd alphas;       // n x k
  Eigen::VectorXd eigenvalues;  // k, strictly descending
  Eigen::VectorXd row_means;
  double grand_mean = 0.0;
};

struct KpcaResult {
  KpcaModel model;
  Embedding embedding;
  bool truncated = false;  // fewer usable components than requested
};

/// Feature-space centering: K_c = K - 1K/n - K1/n + 1K1/n^2. For symmetric K
/// this is K(i,j) - rowmean(i) - rowmean(j) + grandmean.
inline Eigen::MatrixXd center_gram(const GramMatrix& K) {
  if (K.kind() != MatrixKind::kernel)
    throw ValidationError("center gram: input must be a kernel matrix");
  const Eigen::Index n = K.size();
  const Eigen::MatrixXd& M = K.values();
  const Eigen::VectorXd row_means = M.rowwise().mean();
  const double grand_mean = row_means.mean();
  Eigen::MatrixXd Kc = M;
  Kc.colwise() -= row_means;
  Kc.rowwise() -= row_means.transpose();
  Kc.array() += grand_mean;
  return Kc;
}

/// Kernel PCA on a precomputed Gram matrix. Scores are eigenvectors of the
/// centered Gram scaled by sqrt(lambda), in descending eigenvalue order.
/// Eigenvalues below 1e-10 * lambda_max (including rounding-induced negatives)
/// are dropped; if fewer than k remain the result is flagged truncated.
/// Sign convention: the largest-magnitude entry of each score column is
/// positive, so repeated runs are identical.
inline KpcaResult kpca_fit(const GramMatrix& K, Eigen::Index k) {
  if (k < 1) throw ValidationError("kpca: component count must be >= 1");
  const Eigen::Index n = K.size();
  const Eigen::MatrixXd Kc = center_gram(K);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Kc);
  if (solver.info() != Eigen::Success)
    throw NumericalError("kpca: eigendecomposition failed to converge");
  // Eigen returns ascending order.
  const Eigen::VectorXd evals = solver.eigenvalues().reverse();
  const Eigen::MatrixXd evecs = solver.eigenvectors().rowwise().reverse();

  const double lambda_max = std::max(evals(0), 0.0);
  const double threshold = 1e-10 * lambda_max;
  Eigen::Index usable = 0;
  while (usable < n && evals(usable) > threshold) ++usable;
  const Eigen::Index kept = std::min(k, usable);
  if (kept == 0) throw NumericalError("kpca: no eigenvalue above tolerance");

  KpcaModel model;
  model.eigenvalues = evals.head(kept);
  model.alphas.resize(n, kept);
  model.row_means = K.values().rowwise().mean();
  model.grand_mean = model.row_means.mean();

  Eigen::MatrixXd scores(n, kept);
  for (Eigen::Index j = 0; j < kept; ++j) {
    Eigen::VectorXd v = evecs.col(j);
    Eigen::Index arg_max = 0;
    v.cwiseAbs().maxCoeff(&arg_max);
    if (v(arg_max) < 0.0) v = -v;
    const double root = std::sqrt(evals(j));
    scores.col(j) = v * root;
    model.alphas.col(j) = v / root;
  }

  Embedding emb;
  emb.ids = K.ids();
  emb.coords = std::move(scores);
  validate(emb);
  return KpcaResult{std::move(model), std::move(emb), kept < k};
}

}  // namespace rntk
