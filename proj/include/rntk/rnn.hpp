#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

#include "rntk/kernel.hpp"
#include "rntk/random.hpp"
#include "rntk/types.hpp"

namespace rntk {

/// Finite-width single-layer recurrent network weights, all entries N(0, 1).
/// The initialization scales live in RntkParams, not in the weights.
struct RnnWeights {
  Eigen::MatrixXd W;  // n x n recurrent
  Eigen::MatrixXd U;  // n x m input
  Eigen::VectorXd b;  // n bias
  Eigen::MatrixXd V;  // d x n readout

  Eigen::Index width() const { return W.rows(); }
  Eigen::Index input_dim() const { return U.cols(); }
  Eigen::Index output_dim() const { return V.rows(); }
};

inline void validate(const RnnWeights& w) {
  if (w.W.rows() != w.W.cols()) throw ValidationError("rnn weights: W must be square");
  if (w.U.rows() != w.W.rows() || w.b.size() != w.W.rows() || w.V.cols() != w.W.rows())
    throw ValidationError("rnn weights: inconsistent hidden width");
  if (w.W.size() == 0 || w.U.cols() < 1 || w.V.rows() < 1)
    throw ValidationError("rnn weights: empty shapes");
  if (!w.W.allFinite() || !w.U.allFinite() || !w.b.allFinite() || !w.V.allFinite())
    throw ValidationError("rnn weights: non-finite entries");
}

inline RnnWeights sample_rnn_weights(Eigen::Index width, Eigen::Index input_dim,
                                     Eigen::Index output_dim, std::uint64_t seed) {
  if (width < 1 || input_dim < 1 || output_dim < 1)
    throw ValidationError("rnn weights: dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RnnWeights w;
  w.W = Eigen::MatrixXd::NullaryExpr(width, width, [&]() { return normal(rng); });
  w.U = Eigen::MatrixXd::NullaryExpr(width, input_dim, [&]() { return normal(rng); });
  w.b = Eigen::VectorXd::NullaryExpr(width, [&]() { return normal(rng); });
  w.V = Eigen::MatrixXd::NullaryExpr(output_dim, width, [&]() { return normal(rng); });
  return w;
}

namespace detail {

/// Forward pass keeping every pre-activation and hidden state.
/// h.col(0) is the zero initial state; h.col(t) pairs with g.col(t-1).
struct RnnTrace {
  Eigen::MatrixXd g;  // n x T
  Eigen::MatrixXd h;  // n x (T+1)
};

inline RnnTrace rnn_trace(const TimeSeries& x, const RnnWeights& w, const RntkParams& p) {
  const Eigen::Index n = w.width();
  const Eigen::Index T = x.length();
  const double rn = p.sigma_w / std::sqrt(static_cast<double>(n));
  const double rm = p.sigma_u / std::sqrt(static_cast<double>(x.dim()));
  RnnTrace tr;
  tr.g.resize(n, T);
  tr.h.resize(n, T + 1);
  tr.h.col(0).setZero();
  for (Eigen::Index t = 0; t < T; ++t) {
    tr.g.col(t) = rn * (w.W * tr.h.col(t)) + rm * (w.U * x.steps.row(t).transpose()) +
                  p.sigma_b * w.b;
    tr.h.col(t + 1) = tr.g.col(t).cwiseMax(0.0);
  }
  return tr;
}

/// Adjoints d f / d g(t) for the scalar sum-pooled output, via exact reverse
/// accumulation. Requires output dimension 1.
inline Eigen::MatrixXd rnn_adjoints(const RnnTrace& tr, const RnnWeights& w,
                                    const RntkParams& p) {
  const Eigen::Index n = w.width();
  const Eigen::Index T = tr.g.cols();
  const double rn = p.sigma_w / std::sqrt(static_cast<double>(n));
  const double vn = 1.0 / std::sqrt(static_cast<double>(n));
  const Eigen::VectorXd vrow = vn * w.V.row(0).transpose();
  Eigen::MatrixXd d(n, T);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    Eigen::VectorXd dh = vrow;
    if (t + 1 < T) dh += rn * (w.W.transpose() * d.col(t + 1));
    d.col(t) = (tr.g.col(t).array() > 0.0).select(dh, 0.0);
  }
  return d;
}

}  // namespace detail

inline void check_rnn_inputs(const TimeSeries& x, const RnnWeights& w, const RntkParams& p) {
  validate(x);
  validate(w);
  validate(p);
  if (w.input_dim() != x.dim())
    throw ValidationError("rnn: weight input dimension does not match series dimension");
}

/// Sum-pooled RNN output f(x) = sum_t (1/sqrt(n)) V relu(g_t) with
/// g_t = (sigma_w/sqrt(n)) W h_{t-1} + (sigma_u/sqrt(m)) U x_t + sigma_b b.
inline Eigen::VectorXd rnn_forward(const TimeSeries& x, const RnnWeights& w,
                                   const RntkParams& p) {
  check_rnn_inputs(x, w, p);
  const auto tr = detail::rnn_trace(x, w, p);
  const double vn = 1.0 / std::sqrt(static_cast<double>(w.width()));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(w.output_dim());
  for (Eigen::Index t = 0; t < x.length(); ++t) out += vn * (w.V * tr.h.col(t + 1));
  return out;
}

/// Full-parameter gradient of the scalar output, by exact backpropagation.
struct RnnGradient {
  Eigen::MatrixXd W;
  Eigen::MatrixXd U;
  Eigen::VectorXd b;
  Eigen::MatrixXd V;

  Eigen::VectorXd flat() const {
    Eigen::VectorXd out(W.size() + U.size() + b.size() + V.size());
    Eigen::Index at = 0;
    out.segment(at, W.size()) = Eigen::Map<const Eigen::VectorXd>(W.data(), W.size());
    at += W.size();
    out.segment(at, U.size()) = Eigen::Map<const Eigen::VectorXd>(U.data(), U.size());
    at += U.size();
    out.segment(at, b.size()) = b;
    at += b.size();
    out.segment(at, V.size()) = Eigen::Map<const Eigen::VectorXd>(V.data(), V.size());
    return out;
  }
};

inline RnnGradient rnn_gradient(const TimeSeries& x, const RnnWeights& w, const RntkParams& p) {
  check_rnn_inputs(x, w, p);
  if (w.output_dim() != 1)
    throw ValidationError("rnn gradient: output dimension must be 1");
  const Eigen::Index n = w.width();
  const Eigen::Index T = x.length();
  const double rn = p.sigma_w / std::sqrt(static_cast<double>(n));
  const double rm = p.sigma_u / std::sqrt(static_cast<double>(x.dim()));
  const double vn = 1.0 / std::sqrt(static_cast<double>(n));

  const auto tr = detail::rnn_trace(x, w, p);
  const Eigen::MatrixXd d = detail::rnn_adjoints(tr, w, p);

  RnnGradient g;
  g.W = Eigen::MatrixXd::Zero(n, n);
  g.U = Eigen::MatrixXd::Zero(n, x.dim());
  g.b = Eigen::VectorXd::Zero(n);
  g.V = Eigen::MatrixXd::Zero(1, n);
  for (Eigen::Index t = 0; t < T; ++t) {
    g.W.noalias() += rn * d.col(t) * tr.h.col(t).transpose();
    g.U.noalias() += rm * d.col(t) * x.steps.row(t);
    g.b += p.sigma_b * d.col(t);
    g.V.noalias() += vn * tr.h.col(t + 1).transpose();
  }
  return g;
}

/// Single-draw tangent kernel <grad f(x), grad f(x')> at finite width. The
/// gradient inner product factorizes over per-step outer products, so the
/// n x n weight gradients are never materialized.
inline double empirical_ntk_draw(const TimeSeries& x, const TimeSeries& x2, const RnnWeights& w,
                                 const RntkParams& p) {
  check_rnn_inputs(x, w, p);
  check_rnn_inputs(x2, w, p);
  if (w.output_dim() != 1) throw ValidationError("empirical ntk: output dimension must be 1");
  const double n = static_cast<double>(w.width());
  const double m = static_cast<double>(x.dim());

  const auto tr1 = detail::rnn_trace(x, w, p);
  const auto tr2 = detail::rnn_trace(x2, w, p);
  const Eigen::MatrixXd d1 = detail::rnn_adjoints(tr1, w, p);
  const Eigen::MatrixXd d2 = detail::rnn_adjoints(tr2, w, p);

  const Eigen::Index T1 = x.length();
  const Eigen::Index T2 = x2.length();
  const Eigen::MatrixXd dd = d1.transpose() * d2;            // T1 x T2
  const Eigen::MatrixXd hh = tr1.h.transpose() * tr2.h;      // (T1+1) x (T2+1)
  const Eigen::MatrixXd xx = x.steps * x2.steps.transpose();  // T1 x T2

  const double sw2 = p.sigma_w * p.sigma_w;
  const double su2 = p.sigma_u * p.sigma_u;
  const double sb2 = p.sigma_b * p.sigma_b;

  double acc = 0.0;
  acc += sw2 / n * dd.cwiseProduct(hh.topLeftCorner(T1, T2)).sum();   // W gradients
  acc += su2 / m * dd.cwiseProduct(xx).sum();                        // U gradients
  acc += sb2 * dd.sum();                                             // b gradients
  acc += 1.0 / n * hh.bottomRightCorner(T1, T2).sum();               // V gradients
  return acc;
}

/// Monte-Carlo estimate of the tangent kernel: the mean over independent
/// Gaussian weight draws. Draw k uses a sub-seed derived from (seed, k), so
/// the result does not depend on evaluation order.
inline double empirical_ntk(const TimeSeries& x, const TimeSeries& x2, const RntkParams& p,
                            Eigen::Index width, int draws, std::uint64_t seed) {
  if (width < 1) throw ValidationError("empirical ntk: width must be >= 1");
  if (draws < 1) throw ValidationError("empirical ntk: draws must be >= 1");
  if (x.dim() != x2.dim()) throw ValidationError("empirical ntk: step dimensions differ");
  double acc = 0.0;
  for (int k = 0; k < draws; ++k) {
    const auto w = sample_rnn_weights(width, x.dim(), 1,
                                      mix_seed(seed, {static_cast<std::uint64_t>(k)}));
    acc += empirical_ntk_draw(x, x2, w, p);
  }
  return acc / static_cast<double>(draws);
}

}  // namespace rntk
