#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "rntk/random.hpp"
#include "rntk/types.hpp"

namespace rntk {

/// Gaussian parameter distributions (a0, a1) defining one synthetic class of
/// the second-order family t^2 x'' - a1 x' - a0 t x = 0.
struct OdeClassSpec {
  double a0_mean = 0.0;
  double a0_spread = 0.0;
  double a1_mean = 0.0;
  double a1_spread = 0.0;
  int label = 0;
};

inline void validate(const OdeClassSpec& s) {
  if (!(s.a0_spread >= 0.0) || !(s.a1_spread >= 0.0))
    throw ValidationError("ode class spec: spreads must be >= 0");
  if (!std::isfinite(s.a0_mean) || !std::isfinite(s.a1_mean))
    throw ValidationError("ode class spec: non-finite means");
}

/// Whether OdeClassSpec spreads are variances (the default reading) or
/// standard deviations.
enum class SpreadKind { variance, stddev };

struct GenConfig {
  int n_per_class = 100;
  int seq_len = 30;
  double drop_prob = 0.2;
  double t_start = 1.0;
  double t_step = 1.0;
  int substeps = 100;
  std::uint64_t seed = 0;
  double x_init = 1.0;
  double dx_init = 1.0;
  double amp_log_std = 1.0;  // per-sequence log-normal amplitude spread; 0 disables
  SpreadKind spread = SpreadKind::variance;
};

inline void validate(const GenConfig& cfg) {
  if (cfg.n_per_class < 1) throw ValidationError("gen config: n_per_class must be >= 1");
  if (cfg.seq_len < 2) throw ValidationError("gen config: seq_len must be >= 2");
  if (!(cfg.drop_prob >= 0.0 && cfg.drop_prob < 1.0))
    throw ValidationError("gen config: drop_prob must be in [0, 1)");
  if (!(cfg.t_start > 0.0))
    throw ValidationError("gen config: t_start must be > 0 (the equation is singular at t = 0)");
  if (!(cfg.t_step > 0.0)) throw ValidationError("gen config: t_step must be > 0");
  if (cfg.substeps < 1) throw ValidationError("gen config: substeps must be >= 1");
  if (!(cfg.amp_log_std >= 0.0)) throw ValidationError("gen config: amp_log_std must be >= 0");
}

/// The paper-default two classes: a0 ~ N(0, 0.0025), a1 ~ N(-4, 4) and
/// a0 ~ N(0, 0.01), a1 ~ N(-20, 1), second parameters read as variances.
inline std::vector<OdeClassSpec> default_class_specs() {
  return {OdeClassSpec{0.0, 0.0025, -4.0, 4.0, 0},
          OdeClassSpec{0.0, 0.01, -20.0, 1.0, 1}};
}

/// Integrates t^2 x'' - a1 x' - a0 t x = 0 as the first-order system
/// x' = v, v' = (a1 v + a0 t x) / t^2, with classical RK4 using
/// cfg.substeps uniform substeps between consecutive output samples
/// t_k = t_start + k t_step. Throws OdeBlowupError when the state leaves
/// the finite range (callers resample the parameters).
inline TimeSeries integrate_ode(double a0, double a1, const GenConfig& cfg) {
  validate(cfg);
  if (!std::isfinite(a0) || !std::isfinite(a1))
    throw ValidationError("integrate_ode: non-finite coefficients");

  const auto deriv = [&](double t, double x, double v, double& dx, double& dv) {
    dx = v;
    dv = (a1 * v + a0 * t * x) / (t * t);
  };
  constexpr double kBlowup = 1e100;

  TimeSeries ts;
  ts.steps.resize(cfg.seq_len, 1);
  double x = cfg.x_init;
  double v = cfg.dx_init;
  ts.steps(0, 0) = x;
  const double h = cfg.t_step / static_cast<double>(cfg.substeps);
  for (int k = 1; k < cfg.seq_len; ++k) {
    double t = cfg.t_start + (k - 1) * cfg.t_step;
    for (int s = 0; s < cfg.substeps; ++s) {
      double k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
      deriv(t, x, v, k1x, k1v);
      deriv(t + 0.5 * h, x + 0.5 * h * k1x, v + 0.5 * h * k1v, k2x, k2v);
      deriv(t + 0.5 * h, x + 0.5 * h * k2x, v + 0.5 * h * k2v, k3x, k3v);
      deriv(t + h, x + h * k3x, v + h * k3v, k4x, k4v);
      x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
      v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      t += h;
      if (!std::isfinite(x) || !std::isfinite(v) || std::abs(x) > kBlowup || std::abs(v) > kBlowup)
        throw OdeBlowupError("ode trajectory blew up near t = " + std::to_string(t) +
                             " (a0 = " + std::to_string(a0) + ", a1 = " + std::to_string(a1) + ")");
    }
    ts.steps(k, 0) = x;
  }
  return ts;
}

/// Removes each element independently with probability drop_prob, keeping
/// the original order. If every element would be dropped, one uniformly
/// chosen element is retained so the series stays non-empty.
inline TimeSeries drop_elements(const TimeSeries& ts, double drop_prob, std::mt19937_64& rng) {
  validate(ts);
  if (!(drop_prob >= 0.0 && drop_prob < 1.0))
    throw ValidationError("drop_elements: drop_prob must be in [0, 1)");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::Index> kept;
  kept.reserve(static_cast<std::size_t>(ts.length()));
  for (Eigen::Index t = 0; t < ts.length(); ++t)
    if (unit(rng) >= drop_prob) kept.push_back(t);
  if (kept.empty()) {
    std::uniform_int_distribution<Eigen::Index> pick(0, ts.length() - 1);
    kept.push_back(pick(rng));
  }
  TimeSeries out;
  out.id = ts.id;
  out.label = ts.label;
  out.steps.resize(static_cast<Eigen::Index>(kept.size()), ts.dim());
  for (std::size_t r = 0; r < kept.size(); ++r) out.steps.row(static_cast<Eigen::Index>(r)) = ts.steps.row(kept[r]);
  return out;
}

/// Samples n_per_class labeled sequences per class: draw (a0, a1), integrate,
/// scale by a per-sequence log-normal amplitude (the family is linear in x,
/// so this equals scaling the initial conditions), then drop elements.
/// Blow-ups trigger a parameter resample, up to 100 attempts per sequence.
/// Fully deterministic from cfg.seed; each sequence uses a sub-seed derived
/// from (seed, class, index).
inline Dataset make_dataset(const std::vector<OdeClassSpec>& specs, const GenConfig& cfg) {
  if (specs.empty()) throw ValidationError("make_dataset: need at least one class spec");
  validate(cfg);
  for (const auto& s : specs) validate(s);

  int id_width = 1;
  for (int v = cfg.n_per_class - 1; v >= 10; v /= 10) ++id_width;

  std::vector<TimeSeries> all;
  all.reserve(specs.size() * static_cast<std::size_t>(cfg.n_per_class));
  for (std::size_t ci = 0; ci < specs.size(); ++ci) {
    const auto& spec = specs[ci];
    const double a0_scale =
        cfg.spread == SpreadKind::variance ? std::sqrt(spec.a0_spread) : spec.a0_spread;
    const double a1_scale =
        cfg.spread == SpreadKind::variance ? std::sqrt(spec.a1_spread) : spec.a1_spread;
    for (int i = 0; i < cfg.n_per_class; ++i) {
      auto rng = seeded_rng(cfg.seed, {static_cast<std::uint64_t>(ci),
                                       static_cast<std::uint64_t>(i)});
      std::normal_distribution<double> normal(0.0, 1.0);
      TimeSeries ts;
      bool ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        const double a0 = spec.a0_mean + a0_scale * normal(rng);
        const double a1 = spec.a1_mean + a1_scale * normal(rng);
        try {
          ts = integrate_ode(a0, a1, cfg);
          ok = true;
        } catch (const OdeBlowupError&) {
        }
      }
      if (!ok)
        throw NumericalError("make_dataset: 100 consecutive ODE blow-ups for class label " +
                             std::to_string(spec.label) + "; check the parameter distributions");
      if (cfg.amp_log_std > 0.0) ts.steps *= std::exp(cfg.amp_log_std * normal(rng));
      ts = drop_elements(ts, cfg.drop_prob, rng);
      char idbuf[64];
      std::snprintf(idbuf, sizeof(idbuf), "c%d-%0*d", spec.label, id_width, i);
      ts.id = idbuf;
      ts.label = spec.label;
      all.push_back(std::move(ts));
    }
  }
  return Dataset::of(std::move(all));
}

/// Pads every series with zero step vectors up to the maximum length.
inline Dataset zero_pad(const Dataset& ds) {
  Eigen::Index max_len = 0;
  for (const auto& ts : ds.series) max_len = std::max(max_len, ts.length());
  std::vector<TimeSeries> padded;
  padded.reserve(ds.size());
  for (const auto& ts : ds.series) {
    TimeSeries out = ts;
    if (out.length() < max_len) {
      out.steps.conservativeResize(max_len, Eigen::NoChange);
      out.steps.bottomRows(max_len - ts.length()).setZero();
    }
    padded.push_back(std::move(out));
  }
  return Dataset::of(std::move(padded));
}

/// Pairwise L2 distances between flattened equal-length sequences.
inline GramMatrix euclidean_distance_matrix(const Dataset& ds) {
  const Eigen::Index n = static_cast<Eigen::Index>(ds.size());
  const Eigen::Index T = ds.series.front().length();
  for (const auto& ts : ds.series)
    if (ts.length() != T)
      throw ValidationError("euclidean distance: series '" + ts.id +
                            "' has a different length; zero-pad first");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d =
          (ds.series[static_cast<std::size_t>(i)].steps - ds.series[static_cast<std::size_t>(j)].steps)
              .norm();
      D(i, j) = d;
      D(j, i) = d;
    }
  std::vector<std::string> ids;
  ids.reserve(ds.size());
  for (const auto& ts : ds.series) ids.push_back(ts.id);
  return GramMatrix(std::move(ids), std::move(D), MatrixKind::distance);
}

}  // namespace rntk
