#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "delta/arithmetic.hpp"
#include "delta/net.hpp"

namespace delta {

/// First-order model around theta_0: features are f(x; theta_0) plus the
/// Jacobian-vector product with the task vector. Evaluation never mutates
/// theta_0.
struct LinearizedModel {
  NetworkSpec spec;
  ParameterVector theta0;
  TaskVector tau;
};

/// f(x; theta_0) + scale * J_theta f(x; theta_0) tau.
inline Vec linear_forward(const NetworkSpec& spec, const ParameterVector& theta0,
                          const TaskVector& tau, std::span<const double> x, double scale) {
  if (!std::isfinite(scale)) throw std::invalid_argument("linear_forward: non-finite scale");
  check_dim(theta0.values.size(), tau.values.size(), "linear_forward tau");
  Vec f0 = forward(spec, theta0, x);
  if (scale == 0.0) return f0;
  Vec dj = jvp(spec, theta0, x, tau.values);
  for (std::size_t i = 0; i < f0.size(); ++i) f0[i] += scale * dj[i];
  return f0;
}

inline Vec linear_forward(const LinearizedModel& m, std::span<const double> x, double scale) {
  return linear_forward(m.spec, m.theta0, m.tau, x, scale);
}

/// L1 gap between the mean of the ensemble's activations and the activation
/// at the mean weights; zero iff the network behaves linearly across the
/// ensemble.
inline double linearization_error(const NetworkSpec& spec,
                                  const std::vector<ParameterVector>& thetas,
                                  std::span<const double> x) {
  if (thetas.size() < 2) {
    throw std::invalid_argument("linearization_error needs at least 2 weight vectors, got " +
                                std::to_string(thetas.size()));
  }
  std::size_t p = param_count(spec);
  for (const auto& th : thetas) check_dim(p, th.values.size(), "linearization_error theta");
  double inv_t = 1.0 / static_cast<double>(thetas.size());
  Vec mean_act(static_cast<std::size_t>(spec.feature_dim()), 0.0);
  ParameterVector mean_theta{Vec(p, 0.0), thetas.front().spec_hash};
  for (const auto& th : thetas) {
    Vec f = forward(spec, th, x);
    for (std::size_t i = 0; i < mean_act.size(); ++i) mean_act[i] += inv_t * f[i];
    for (std::size_t i = 0; i < p; ++i) mean_theta.values[i] += inv_t * th.values[i];
  }
  Vec at_mean = forward(spec, mean_theta, x);
  double err = 0.0;
  for (std::size_t i = 0; i < mean_act.size(); ++i) err += std::abs(mean_act[i] - at_mean[i]);
  return err;
}

/// Per-sample linearization errors plus summary statistics. Binning is
/// presentational; the raw values are always kept.
struct ErrorProfile {
  Vec per_sample;
  double mean = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  std::vector<double> bin_edges;   // 51 edges for 50 uniform bins over [0, max]
  std::vector<int> bin_counts;
};

inline double quantile_sorted(const Vec& sorted, double q) {
  if (sorted.empty()) return 0.0;
  double pos = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double w = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

inline ErrorProfile summarize_profile(Vec per_sample) {
  ErrorProfile prof;
  prof.per_sample = std::move(per_sample);
  Vec sorted = prof.per_sample;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  prof.mean = sum / static_cast<double>(sorted.size());
  prof.min = sorted.front();
  prof.q25 = quantile_sorted(sorted, 0.25);
  prof.median = quantile_sorted(sorted, 0.5);
  prof.q75 = quantile_sorted(sorted, 0.75);
  prof.max = sorted.back();
  constexpr int kBins = 50;
  double hi = prof.max > 0.0 ? prof.max : 1.0;
  prof.bin_edges.resize(kBins + 1);
  for (int i = 0; i <= kBins; ++i) {
    prof.bin_edges[static_cast<std::size_t>(i)] = hi * static_cast<double>(i) / kBins;
  }
  prof.bin_counts.assign(kBins, 0);
  for (double v : prof.per_sample) {
    int b = static_cast<int>(v / hi * kBins);
    if (b >= kBins) b = kBins - 1;
    if (b < 0) b = 0;
    prof.bin_counts[static_cast<std::size_t>(b)]++;
  }
  return prof;
}

/// Linearization error of the ensemble on every sample, in dataset order.
inline ErrorProfile linearization_error_profile(const NetworkSpec& spec,
                                                const std::vector<ParameterVector>& thetas,
                                                const std::vector<std::span<const double>>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("linearization_error_profile: empty dataset");
  Vec per_sample(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    per_sample[i] = linearization_error(spec, thetas, inputs[i]);
  }
  return summarize_profile(std::move(per_sample));
}

}  // namespace delta
