#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "delta/common.hpp"
#include "delta/hash.hpp"
#include "delta/net.hpp"

namespace delta {

/// tau = theta_t - theta_0 plus provenance. base_hash pins the pre-trained
/// vector the update was learned against; composing vectors from different
/// base models is a hard error.
struct TaskVector {
  Vec values;
  std::string task_id;
  std::string method;
  std::uint64_t base_hash = 0;
  std::uint64_t spec_hash = 0;
};

inline TaskVector make_task_vector(Vec values, std::string task_id, std::string method,
                                   const ParameterVector& base) {
  require_finite(values, "task vector");
  TaskVector tv;
  tv.values = std::move(values);
  tv.task_id = std::move(task_id);
  tv.method = std::move(method);
  tv.base_hash = param_values_hash(base.values);
  tv.spec_hash = base.spec_hash;
  return tv;
}

inline void check_composable(const ParameterVector& base, const TaskVector& tau) {
  if (tau.values.size() != base.values.size()) {
    throw DataError("task vector '" + tau.task_id + "' has length " +
                    std::to_string(tau.values.size()) + ", base has " +
                    std::to_string(base.values.size()));
  }
  if (tau.spec_hash != base.spec_hash) {
    throw DataError("task vector '" + tau.task_id + "' was built for a different "
                    "network spec");
  }
  std::uint64_t bh = param_values_hash(base.values);
  if (tau.base_hash != bh) {
    throw DataError("task vector '" + tau.task_id + "' has base hash " +
                    hash_hex(tau.base_hash) + " but theta0 hashes to " + hash_hex(bh));
  }
}

/// theta_0 + sum of alpha_t * tau_t, accumulated per coordinate with
/// compensated (Kahan) summation in the given term order.
inline ParameterVector compose(const ParameterVector& theta0,
                               const std::vector<std::pair<double, const TaskVector*>>& terms) {
  for (const auto& [alpha, tau] : terms) {
    (void)alpha;
    check_composable(theta0, *tau);
  }
  ParameterVector out = theta0;
  std::size_t n = theta0.values.size();
  Vec comp(n, 0.0);
  for (const auto& [alpha, tau] : terms) {
    for (std::size_t i = 0; i < n; ++i) {
      double y = alpha * tau->values[i] - comp[i];
      double t = out.values[i] + y;
      comp[i] = (t - out.values[i]) - y;
      out.values[i] = t;
    }
  }
  return out;
}

inline ParameterVector compose(const ParameterVector& theta0,
                               const std::vector<std::pair<double, TaskVector>>& terms) {
  std::vector<std::pair<double, const TaskVector*>> ptrs;
  ptrs.reserve(terms.size());
  for (const auto& [alpha, tau] : terms) ptrs.emplace_back(alpha, &tau);
  return compose(theta0, ptrs);
}

/// theta_0 - alpha * tau.
inline ParameterVector negate(const ParameterVector& theta0, const TaskVector& tau,
                              double alpha) {
  return compose(theta0, std::vector<std::pair<double, const TaskVector*>>{{-alpha, &tau}});
}

struct SweepPoint {
  double alpha = 0.0;
  double metric = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> curve;
  std::size_t argmax = 0;  // ties break to the smallest alpha
  std::size_t argmin = 0;
};

/// Evaluates the supplied metric at theta_0 + alpha * tau for every grid
/// point. The grid must be strictly increasing.
inline SweepResult alpha_sweep(const ParameterVector& theta0, const TaskVector& tau_merged,
                               const std::vector<double>& grid,
                               const std::function<double(const ParameterVector&)>& evaluator) {
  if (grid.empty()) throw ConfigError("alpha_sweep: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] <= grid[i - 1]) throw ConfigError("alpha_sweep: grid must be strictly increasing");
  }
  check_composable(theta0, tau_merged);
  SweepResult out;
  out.curve.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto theta = compose(theta0, std::vector<std::pair<double, const TaskVector*>>{
                                     {grid[i], &tau_merged}});
    out.curve[i] = SweepPoint{grid[i], evaluator(theta)};
  }
  for (std::size_t i = 1; i < out.curve.size(); ++i) {
    if (out.curve[i].metric > out.curve[out.argmax].metric) out.argmax = i;
    if (out.curve[i].metric < out.curve[out.argmin].metric) out.argmin = i;
  }
  return out;
}

inline std::vector<double> uniform_grid(double lo, double hi, double step) {
  std::vector<double> g;
  for (int i = 0;; ++i) {
    double a = lo + step * i;
    if (a > hi + 1e-9) break;
    g.push_back(a);
  }
  return g;
}

}  // namespace delta
