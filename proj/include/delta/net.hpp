#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "delta/common.hpp"
#include "delta/hash.hpp"

namespace delta {

enum class Activation { identity, relu, tanh };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "' (expected identity|relu|tanh)");
}

/// Feedforward topology over a flat parameter vector. Hidden layers share one
/// activation; the final feature layer is always identity.
struct NetworkSpec {
  std::vector<int> layer_dims;  // [D, h1, ..., d]
  Activation activation = Activation::tanh;
  bool bias = true;

  int input_dim() const { return layer_dims.front(); }
  int feature_dim() const { return layer_dims.back(); }
  int num_layers() const { return static_cast<int>(layer_dims.size()) - 1; }

  void validate() const {
    if (layer_dims.size() < 2) {
      throw ConfigError("layer_dims needs at least [input, feature], got " +
                        std::to_string(layer_dims.size()) + " dims");
    }
    for (int d : layer_dims) {
      if (d < 1) throw ConfigError("layer dim must be >= 1, got " + std::to_string(d));
    }
  }
};

/// Flat layout per layer: weight matrix row-major (d_out x d_in), then bias.
struct LayerShape {
  int d_out = 0;
  int d_in = 0;
  std::size_t w_offset = 0;
  std::size_t b_offset = 0;  // meaningful only when the spec has biases
};

inline std::vector<LayerShape> layer_shapes(const NetworkSpec& spec) {
  spec.validate();
  std::vector<LayerShape> out;
  std::size_t off = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    LayerShape s;
    s.d_in = spec.layer_dims[static_cast<std::size_t>(l)];
    s.d_out = spec.layer_dims[static_cast<std::size_t>(l) + 1];
    s.w_offset = off;
    off += static_cast<std::size_t>(s.d_out) * static_cast<std::size_t>(s.d_in);
    s.b_offset = off;
    if (spec.bias) off += static_cast<std::size_t>(s.d_out);
    out.push_back(s);
  }
  return out;
}

inline std::size_t param_count(const NetworkSpec& spec) {
  spec.validate();
  std::size_t n = 0;
  for (int l = 0; l < spec.num_layers(); ++l) {
    auto d_in = static_cast<std::size_t>(spec.layer_dims[static_cast<std::size_t>(l)]);
    auto d_out = static_cast<std::size_t>(spec.layer_dims[static_cast<std::size_t>(l) + 1]);
    n += d_out * d_in + (spec.bias ? d_out : 0);
  }
  return n;
}

inline std::uint64_t spec_hash(const NetworkSpec& spec) {
  spec.validate();
  Fnv1a h;
  h.update_str("delta.netspec.v1");
  h.update_u64(spec.layer_dims.size());
  for (int d : spec.layer_dims) h.update_i64(d);
  h.update_str(activation_name(spec.activation));
  h.update_u64(spec.bias ? 1 : 0);
  return h.digest();
}

/// All trainable weights of a network, flattened. spec_hash ties the vector
/// to the topology it was laid out for.
struct ParameterVector {
  Vec values;
  std::uint64_t spec_hash = 0;
};

inline ParameterVector zeros_like(const NetworkSpec& spec) {
  return ParameterVector{Vec(param_count(spec), 0.0), spec_hash(spec)};
}

/// Content hash of a parameter payload, computed over the 32-bit storage
/// encoding so in-memory and on-disk vectors agree.
inline std::uint64_t param_values_hash(std::span<const double> values) {
  Fnv1a h;
  h.update_str("delta.params.v1");
  for (double v : values) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    h.update_u64(bits);
  }
  return h.digest();
}

inline void check_params(const NetworkSpec& spec, const ParameterVector& theta,
                         const char* what) {
  check_dim(param_count(spec), theta.values.size(), what);
  if (theta.spec_hash != 0 && theta.spec_hash != spec_hash(spec)) {
    throw DataError(std::string(what) + ": parameter vector belongs to a different "
                    "network spec (hash " + hash_hex(theta.spec_hash) + " vs " +
                    hash_hex(spec_hash(spec)) + ")");
  }
}

/// Frozen linear classification head: logits = W z + b with W stored
/// row-major (classes x feature_dim). Head parameters never enter a
/// ParameterVector or a task vector.
struct Head {
  int classes = 0;
  int feature_dim = 0;
  Vec weights;
  Vec bias;

  void validate() const {
    check_dim(static_cast<std::size_t>(classes) * static_cast<std::size_t>(feature_dim),
              weights.size(), "head weights");
    check_dim(static_cast<std::size_t>(classes), bias.size(), "head bias");
  }
};

inline Vec apply_head(const Head& head, std::span<const double> z) {
  head.validate();
  check_dim(static_cast<std::size_t>(head.feature_dim), z.size(), "apply_head input");
  Vec logits(static_cast<std::size_t>(head.classes));
  for (int c = 0; c < head.classes; ++c) {
    double s = head.bias[static_cast<std::size_t>(c)];
    const double* row = head.weights.data() +
                        static_cast<std::size_t>(c) * static_cast<std::size_t>(head.feature_dim);
    for (int j = 0; j < head.feature_dim; ++j) s += row[j] * z[static_cast<std::size_t>(j)];
    logits[static_cast<std::size_t>(c)] = s;
  }
  return logits;
}

namespace detail {

inline double act_value(Activation a, double s) {
  switch (a) {
    case Activation::identity: return s;
    case Activation::relu: return s > 0.0 ? s : 0.0;
    case Activation::tanh: return std::tanh(s);
  }
  return s;
}

// ReLU subgradient at 0 is 0, shared by forward- and reverse-mode paths.
inline double act_deriv(Activation a, double s) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return s > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      double t = std::tanh(s);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

// pre = W a + b for one layer.
inline void affine(const LayerShape& ls, bool bias, std::span<const double> theta,
                   std::span<const double> a, Vec& pre) {
  pre.assign(static_cast<std::size_t>(ls.d_out), 0.0);
  for (int o = 0; o < ls.d_out; ++o) {
    const double* row = theta.data() + ls.w_offset +
                        static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.d_in);
    double s = bias ? theta[ls.b_offset + static_cast<std::size_t>(o)] : 0.0;
    for (int j = 0; j < ls.d_in; ++j) s += row[j] * a[static_cast<std::size_t>(j)];
    pre[static_cast<std::size_t>(o)] = s;
  }
}

}  // namespace detail

/// Per-layer intermediates of one forward pass; acts[0] is the input,
/// pres[l] the pre-activation of layer l, acts[l+1] its output.
struct ForwardTrace {
  std::vector<Vec> acts;
  std::vector<Vec> pres;

  const Vec& features() const { return acts.back(); }
};

inline ForwardTrace forward_trace(const NetworkSpec& spec, const ParameterVector& theta,
                                  std::span<const double> x) {
  check_params(spec, theta, "forward");
  check_dim(static_cast<std::size_t>(spec.input_dim()), x.size(), "forward input");
  require_finite(x, "forward input");
  auto shapes = layer_shapes(spec);
  ForwardTrace tr;
  tr.acts.reserve(shapes.size() + 1);
  tr.pres.reserve(shapes.size());
  tr.acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    Vec pre;
    detail::affine(shapes[l], spec.bias, theta.values, tr.acts.back(), pre);
    bool last = (l + 1 == shapes.size());
    Vec act(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) {
      act[i] = last ? pre[i] : detail::act_value(spec.activation, pre[i]);
    }
    tr.pres.push_back(std::move(pre));
    tr.acts.push_back(std::move(act));
  }
  return tr;
}

/// Penultimate representation f(x; theta); logits come from apply_head.
inline Vec forward(const NetworkSpec& spec, const ParameterVector& theta,
                   std::span<const double> x) {
  return forward_trace(spec, theta, x).features();
}

/// Exact directional derivative J_theta f(x; theta0) v by forward-mode
/// propagation of the dual perturbation, layer by layer.
inline Vec jvp(const NetworkSpec& spec, const ParameterVector& theta0,
               std::span<const double> x, std::span<const double> v) {
  check_params(spec, theta0, "jvp");
  check_dim(theta0.values.size(), v.size(), "jvp direction");
  check_dim(static_cast<std::size_t>(spec.input_dim()), x.size(), "jvp input");
  auto shapes = layer_shapes(spec);
  Vec a(x.begin(), x.end());
  Vec da(a.size(), 0.0);
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto& ls = shapes[l];
    Vec pre, dpre(static_cast<std::size_t>(ls.d_out), 0.0);
    detail::affine(ls, spec.bias, theta0.values, a, pre);
    for (int o = 0; o < ls.d_out; ++o) {
      const double* wrow = theta0.values.data() + ls.w_offset +
                           static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.d_in);
      const double* vrow = v.data() + ls.w_offset +
                           static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.d_in);
      double s = spec.bias ? v[ls.b_offset + static_cast<std::size_t>(o)] : 0.0;
      for (int j = 0; j < ls.d_in; ++j) {
        s += vrow[j] * a[static_cast<std::size_t>(j)] + wrow[j] * da[static_cast<std::size_t>(j)];
      }
      dpre[static_cast<std::size_t>(o)] = s;
    }
    bool last = (l + 1 == shapes.size());
    Vec act(pre.size()), dact(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) {
      if (last) {
        act[i] = pre[i];
        dact[i] = dpre[i];
      } else {
        act[i] = detail::act_value(spec.activation, pre[i]);
        dact[i] = detail::act_deriv(spec.activation, pre[i]) * dpre[i];
      }
    }
    a = std::move(act);
    da = std::move(dact);
  }
  return da;
}

/// Reverse sweep from a feature-space cotangent u. Returns the cotangents of
/// every pre-activation (layer order); when grad_out is given, accumulates
/// weight * (dL/dtheta) into it.
inline std::vector<Vec> backprop(const NetworkSpec& spec, const ForwardTrace& tr,
                                 const ParameterVector& theta, std::span<const double> u,
                                 Vec* grad_out = nullptr, double weight = 1.0) {
  auto shapes = layer_shapes(spec);
  check_dim(static_cast<std::size_t>(spec.feature_dim()), u.size(), "backprop cotangent");
  if (grad_out != nullptr) check_dim(param_count(spec), grad_out->size(), "backprop grad");
  std::vector<Vec> dpre(shapes.size());
  Vec dact(u.begin(), u.end());
  for (int l = static_cast<int>(shapes.size()) - 1; l >= 0; --l) {
    const auto& ls = shapes[static_cast<std::size_t>(l)];
    const Vec& pre = tr.pres[static_cast<std::size_t>(l)];
    const Vec& a_in = tr.acts[static_cast<std::size_t>(l)];
    bool last = (l + 1 == static_cast<int>(shapes.size()));
    Vec ds(static_cast<std::size_t>(ls.d_out));
    for (int o = 0; o < ls.d_out; ++o) {
      double g = dact[static_cast<std::size_t>(o)];
      ds[static_cast<std::size_t>(o)] =
          last ? g : g * detail::act_deriv(spec.activation, pre[static_cast<std::size_t>(o)]);
    }
    if (grad_out != nullptr) {
      for (int o = 0; o < ls.d_out; ++o) {
        double w = weight * ds[static_cast<std::size_t>(o)];
        double* grow = grad_out->data() + ls.w_offset +
                       static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.d_in);
        for (int j = 0; j < ls.d_in; ++j) grow[j] += w * a_in[static_cast<std::size_t>(j)];
        if (spec.bias) (*grad_out)[ls.b_offset + static_cast<std::size_t>(o)] += w;
      }
    }
    if (l > 0) {
      Vec da_prev(static_cast<std::size_t>(ls.d_in), 0.0);
      for (int o = 0; o < ls.d_out; ++o) {
        const double* wrow = theta.values.data() + ls.w_offset +
                             static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.d_in);
        double g = ds[static_cast<std::size_t>(o)];
        for (int j = 0; j < ls.d_in; ++j) da_prev[static_cast<std::size_t>(j)] += wrow[j] * g;
      }
      dact = std::move(da_prev);
    }
    dpre[static_cast<std::size_t>(l)] = std::move(ds);
  }
  return dpre;
}

/// J_theta f(x; theta)^T u in one reverse pass.
inline Vec vjp(const NetworkSpec& spec, const ParameterVector& theta,
               std::span<const double> x, std::span<const double> u) {
  auto tr = forward_trace(spec, theta, x);
  Vec grad(param_count(spec), 0.0);
  backprop(spec, tr, theta, u, &grad, 1.0);
  return grad;
}

inline constexpr std::size_t kDefaultJacobianBudget = 1000000;

/// Dense d x P Jacobian (row k = gradient of feature k), for small nets only.
inline std::vector<Vec> per_output_jacobian(const NetworkSpec& spec,
                                            const ParameterVector& theta,
                                            std::span<const double> x,
                                            std::size_t budget = kDefaultJacobianBudget) {
  std::size_t p = param_count(spec);
  auto d = static_cast<std::size_t>(spec.feature_dim());
  if (d * p > budget) {
    throw ConfigError("per_output_jacobian needs " + std::to_string(d * p) +
                      " entries, budget allows " + std::to_string(budget));
  }
  auto tr = forward_trace(spec, theta, x);
  std::vector<Vec> rows;
  rows.reserve(d);
  Vec u(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    u.assign(d, 0.0);
    u[k] = 1.0;
    Vec grad(p, 0.0);
    backprop(spec, tr, theta, u, &grad, 1.0);
    rows.push_back(std::move(grad));
  }
  return rows;
}

enum class LossKind { cross_entropy, mse_to_target };

/// One training batch; labels are read for cross_entropy, targets for
/// mse_to_target.
struct Batch {
  std::vector<std::span<const double>> inputs;
  std::vector<int> labels;
  std::vector<Vec> targets;
};

inline Vec softmax(std::span<const double> logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  Vec p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

inline double cross_entropy_from_logits(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw std::invalid_argument("label " + std::to_string(label) +
                                " out of range for " + std::to_string(logits.size()) +
                                " classes");
  }
  double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  return std::log(z) + m - logits[static_cast<std::size_t>(label)];
}

struct LossGrad {
  double loss = 0.0;
  Vec grad;
};

/// Mean-over-batch loss and gradient w.r.t. theta. cross_entropy routes the
/// features through the frozen head; mse_to_target compares features against
/// per-sample targets with a squared L2 norm.
inline LossGrad grad(const NetworkSpec& spec, const ParameterVector& theta,
                     const Head* head, const Batch& batch, LossKind kind) {
  if (batch.inputs.empty()) throw std::invalid_argument("grad: empty batch");
  if (kind == LossKind::cross_entropy) {
    if (head == nullptr) throw std::invalid_argument("grad: cross_entropy needs a head");
    check_dim(batch.inputs.size(), batch.labels.size(), "grad labels");
  } else {
    check_dim(batch.inputs.size(), batch.targets.size(), "grad targets");
  }
  std::size_t p = param_count(spec);
  LossGrad out;
  out.grad.assign(p, 0.0);
  double inv_b = 1.0 / static_cast<double>(batch.inputs.size());
  auto d = static_cast<std::size_t>(spec.feature_dim());
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    auto tr = forward_trace(spec, theta, batch.inputs[i]);
    const Vec& f = tr.features();
    Vec u(d, 0.0);
    if (kind == LossKind::cross_entropy) {
      Vec logits = apply_head(*head, f);
      int y = batch.labels[i];
      out.loss += inv_b * cross_entropy_from_logits(logits, y);
      Vec pgrad = softmax(logits);
      pgrad[static_cast<std::size_t>(y)] -= 1.0;
      // u = H^T (softmax - onehot)
      for (int c = 0; c < head->classes; ++c) {
        const double* row = head->weights.data() +
                            static_cast<std::size_t>(c) * static_cast<std::size_t>(head->feature_dim);
        for (std::size_t j = 0; j < d; ++j) u[j] += row[j] * pgrad[static_cast<std::size_t>(c)];
      }
    } else {
      const Vec& t = batch.targets[i];
      check_dim(d, t.size(), "grad target");
      double se = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double r = f[j] - t[j];
        se += r * r;
        u[j] = 2.0 * r;
      }
      out.loss += inv_b * se;
    }
    backprop(spec, tr, theta, u, &out.grad, inv_b);
  }
  return out;
}

}  // namespace delta
