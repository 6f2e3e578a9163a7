#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rntk/random.hpp"
#include "rntk/types.hpp"

namespace rntk {

struct TsneConfig {
  double perplexity = 30.0;
  Eigen::Index output_dim = 2;
  int iterations = 1000;
  double learning_rate = 200.0;
  double momentum_early = 0.5;
  double momentum_late = 0.8;
  int momentum_switch_iter = 250;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  std::uint64_t seed = 0;
};

inline void validate(const TsneConfig& cfg) {
  if (!(cfg.perplexity > 1.0)) throw ValidationError("tsne: perplexity must be > 1");
  if (cfg.output_dim < 1) throw ValidationError("tsne: output dimension must be >= 1");
  if (cfg.iterations < 1) throw ValidationError("tsne: iterations must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("tsne: learning rate must be > 0");
  if (!(cfg.early_exaggeration >= 1.0)) throw ValidationError("tsne: exaggeration must be >= 1");
}

enum class AffinityForm { conditional, joint };

/// Non-negative neighbor probabilities with zero diagonal. Conditional form
/// has unit row sums; joint form sums to one overall (both within 1e-9).
class AffinityMatrix {
 public:
  AffinityMatrix(Eigen::MatrixXd values, AffinityForm form)
      : values_(std::move(values)), form_(form) {
    const Eigen::Index n = values_.rows();
    if (n < 2 || values_.cols() != n) throw ValidationError("affinity matrix: must be square, n >= 2");
    if (!values_.allFinite()) throw ValidationError("affinity matrix: non-finite entries");
    if (values_.minCoeff() < 0.0) throw ValidationError("affinity matrix: negative entries");
    for (Eigen::Index i = 0; i < n; ++i)
      if (values_(i, i) != 0.0) throw ValidationError("affinity matrix: diagonal must be zero");
    if (form_ == AffinityForm::conditional) {
      for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(values_.row(i).sum() - 1.0) > 1e-9)
          throw ValidationError("affinity matrix: conditional row " + std::to_string(i) +
                                " does not sum to 1");
    } else {
      if (std::abs(values_.sum() - 1.0) > 1e-9)
        throw ValidationError("affinity matrix: joint form does not sum to 1");
    }
  }

  const Eigen::MatrixXd& values() const { return values_; }
  AffinityForm form() const { return form_; }
  Eigen::Index size() const { return values_.rows(); }

 private:
  Eigen::MatrixXd values_;
  AffinityForm form_;
};

struct ConditionalAffinities {
  AffinityMatrix probabilities;
  std::vector<Eigen::Index> uniform_fallback_rows;  // rows where the target perplexity was unreachable
};

namespace detail {

/// Shannon entropy (bits) and probabilities of one Gaussian-kernel row for a
/// given precision beta = 1 / (2 sigma^2). d2 holds squared distances to the
/// other points; the max is subtracted before exponentiation.
inline double row_entropy(const Eigen::VectorXd& d2, double beta, Eigen::VectorXd& p_out) {
  const Eigen::ArrayXd shifted = -(d2.array() - d2.minCoeff()) * beta;
  const Eigen::ArrayXd w = shifted.exp();
  const double total = w.sum();
  p_out = (w / total).matrix();
  double entropy = 0.0;
  for (Eigen::Index j = 0; j < p_out.size(); ++j)
    if (p_out(j) > 0.0) entropy -= p_out(j) * std::log2(p_out(j));
  return entropy;
}

}  // namespace detail

/// Gaussian conditional neighbor probabilities p_{j|i} from a distance
/// matrix. Each row's bandwidth sigma_i is found by bisection on log sigma
/// (64 iterations over [1e-20, 1e20]) so the row perplexity 2^H matches the
/// target within 1e-6 in log2. Rows whose target is unreachable (e.g. all
/// distances equal) fall back to the uniform distribution and are reported.
inline ConditionalAffinities conditional_affinities(const GramMatrix& D, double perplexity) {
  if (D.kind() != MatrixKind::distance)
    throw ValidationError("conditional affinities: input must be a distance matrix");
  const Eigen::Index n = D.size();
  if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n)))
    throw ValidationError("conditional affinities: need 1 < perplexity < n");

  const double target = std::log2(perplexity);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> fallback;

  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd d2(n - 1);
    Eigen::Index at = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) d2(at++) = D.values()(i, j) * D.values()(i, j);

    Eigen::VectorXd p;
    if (n == 2) {
      p = Eigen::VectorXd::Ones(1);  // a single neighbor takes all the mass
    } else {
      double lo = std::log(1e-20), hi = std::log(1e20);
      double entropy = 0.0;
      for (int it = 0; it < 64; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double sigma = std::exp(mid);
        entropy = detail::row_entropy(d2, 1.0 / (2.0 * sigma * sigma), p);
        if (std::abs(entropy - target) < 1e-6) break;
        if (entropy < target)
          lo = mid;  // larger sigma flattens the row and raises entropy
        else
          hi = mid;
      }
      if (std::abs(entropy - target) > 1e-3) {
        p = Eigen::VectorXd::Constant(n - 1, 1.0 / static_cast<double>(n - 1));
        fallback.push_back(i);
      }
    }

    at = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) P(i, j) = p(at++);
  }
  return ConditionalAffinities{AffinityMatrix(std::move(P), AffinityForm::conditional),
                               std::move(fallback)};
}

/// Joint probabilities p_ij = (p_{j|i} + p_{i|j}) / 2n, floored at 1e-12 off
/// the diagonal and renormalized so the total is exactly 1.
inline AffinityMatrix symmetrize(const AffinityMatrix& conditional) {
  if (conditional.form() != AffinityForm::conditional)
    throw ValidationError("symmetrize: input must be in conditional form");
  const Eigen::Index n = conditional.size();
  Eigen::MatrixXd J =
      (conditional.values() + conditional.values().transpose()) / (2.0 * static_cast<double>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) J(i, j) = std::max(J(i, j), 1e-12);
  J /= J.sum();
  return AffinityMatrix(std::move(J), AffinityForm::joint);
}

namespace detail {

/// Student-t weights w_ij = (1 + ||y_i - y_j||^2)^-1 with zero diagonal.
inline Eigen::MatrixXd student_t_weights(const Eigen::MatrixXd& Y) {
  const Eigen::Index n = Y.rows();
  const Eigen::VectorXd sq = Y.rowwise().squaredNorm();
  Eigen::MatrixXd W = (-2.0 * Y * Y.transpose()).colwise() + sq;
  W.rowwise() += sq.transpose();
  W = (1.0 + W.array().max(0.0)).inverse().matrix();
  W.diagonal().setZero();
  return W;
}

}  // namespace detail

/// Heavy-tailed low-dimensional affinities q_ij, normalized over all pairs.
inline AffinityMatrix student_t_affinities(const Embedding& Y) {
  validate(Y);
  if (Y.size() < 2) throw ValidationError("student-t affinities: need at least 2 points");
  Eigen::MatrixXd W = detail::student_t_weights(Y.coords);
  W /= W.sum();
  return AffinityMatrix(std::move(W), AffinityForm::joint);
}

/// KL divergence sum_{i != j} p log(p/q) in nats. Q entries are floored at
/// 1e-12 inside the ratio so zeros cannot produce infinities.
inline double kl_divergence(const AffinityMatrix& P, const AffinityMatrix& Q) {
  if (P.size() != Q.size()) throw ValidationError("kl divergence: shape mismatch");
  const auto& p = P.values();
  const auto& q = Q.values();
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (i != j && p(i, j) > 0.0) kl += p(i, j) * std::log(p(i, j) / std::max(q(i, j), 1e-12));
  return kl;
}

struct TsneResult {
  Embedding embedding;
  std::vector<double> loss_trace;  // entry 0 is the loss before any update
  std::vector<Eigen::Index> uniform_fallback_rows;
};

/// Per-iteration sums recorded for normalization checks.
struct TsneDiagnostics {
  double p_sum = 0.0;
  std::vector<double> q_sums;
};

/// Gradient-descent t-SNE on a precomputed distance matrix: standard
/// symmetrized-P / Student-t-Q objective with early exaggeration, a two-phase
/// momentum schedule, and per-coordinate adaptive gains. Deterministic for a
/// fixed config. The recorded losses never include the exaggeration factor.
inline TsneResult tsne_embed(const GramMatrix& D, const TsneConfig& cfg,
                             TsneDiagnostics* diagnostics = nullptr) {
  validate(cfg);
  const Eigen::Index n = D.size();
  const Eigen::Index k = cfg.output_dim;

  auto conditional = conditional_affinities(D, cfg.perplexity);
  const Eigen::MatrixXd P = symmetrize(conditional.probabilities).values();
  if (diagnostics) diagnostics->p_sum = P.sum();

  std::mt19937_64 rng = seeded_rng(cfg.seed);
  std::normal_distribution<double> init(0.0, 1e-2);  // variance 1e-4
  Eigen::MatrixXd Y = Eigen::MatrixXd::NullaryExpr(n, k, [&]() { return init(rng); });

  Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(n, k);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, k);

  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(cfg.iterations) + 1);

  for (int it = 0;; ++it) {
    const Eigen::MatrixXd Wq = detail::student_t_weights(Y);
    const double wsum = Wq.sum();
    if (!(wsum > 0.0) || !std::isfinite(wsum))
      throw NumericalError("tsne: degenerate low-dimensional affinities at iteration " +
                           std::to_string(it));
    const Eigen::MatrixXd Q = Wq / wsum;
    if (diagnostics) diagnostics->q_sums.push_back(Q.sum());

    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j && P(i, j) > 0.0) kl += P(i, j) * std::log(P(i, j) / std::max(Q(i, j), 1e-12));
    trace.push_back(kl);

    if (it == cfg.iterations) break;

    const double exagg = it < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
    const Eigen::MatrixXd L = (exagg * P - Q).cwiseProduct(Wq);
    const Eigen::VectorXd row_sums = L.rowwise().sum();
    const Eigen::MatrixXd grad = 4.0 * (row_sums.asDiagonal() * Y - L * Y);

    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < k; ++j) {
        const bool flipped = (grad(i, j) > 0.0) != (inc(i, j) > 0.0);
        gains(i, j) = std::max(flipped ? gains(i, j) + 0.2 : gains(i, j) * 0.8, 0.01);
      }

    const double momentum =
        it < cfg.momentum_switch_iter ? cfg.momentum_early : cfg.momentum_late;
    inc = momentum * inc - cfg.learning_rate * gains.cwiseProduct(grad);
    Y += inc;
    Y.rowwise() -= Y.colwise().mean();
    if (!Y.allFinite())
      throw NumericalError("tsne: embedding diverged to non-finite coordinates at iteration " +
                           std::to_string(it));
  }

  Embedding emb;
  emb.ids = D.ids();
  emb.coords = std::move(Y);
  validate(emb);
  return TsneResult{std::move(emb), std::move(trace), std::move(conditional.uniform_fallback_rows)};
}

}  // namespace rntk
