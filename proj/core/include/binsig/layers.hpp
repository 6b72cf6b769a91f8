#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "binsig/rng.hpp"
#include "binsig/tensor.hpp"

namespace binsig {

enum class Activation { relu, gelu };

template <typename T>
Tensor<T> apply_activation(const Tensor<T>& x, Activation act) {
  return act == Activation::relu ? relu(x) : gelu(x);
}

struct ConvLayerSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 1;
  int stride = 1;
  int groups = 1;
  bool bias = false;
  int padding = 0;

  std::size_t param_count() const {
    return static_cast<std::size_t>(out_channels) * (in_channels / groups) * kernel +
           (bias ? out_channels : 0);
  }
  std::size_t out_len(std::size_t in_len) const {
    return conv1d_out_len(in_len, kernel, stride, padding);
  }
  // multiply-accumulates for one forward pass (bias adds excluded)
  std::size_t mac_count(std::size_t in_len) const {
    return out_len(in_len) * static_cast<std::size_t>(out_channels) *
           (static_cast<std::size_t>(kernel) * in_channels / groups);
  }
};

struct GroupNormSpec {
  int channels = 1;
  int groups = 1;
  double epsilon = 1e-5;
};

// min(32, channels); the width schedule keeps channels divisible by it.
inline int group_norm_groups(int channels) { return channels < 32 ? channels : 32; }

struct SESpec {
  int channels = 1;
  int reduction_ratio = 2;
  int bottleneck() const { return std::max(1, channels / reduction_ratio); }
};

enum class BlockKind { basic, bottleneck, preact_bottleneck };

struct BlockSpec {
  BlockKind kind = BlockKind::basic;
  int in_channels = 0;
  int width = 0;         // mid-conv channel count (basic blocks: width == out)
  int out_channels = 0;
  int kernel = 9;        // flattened 3x3
  int stride = 1;
  int mid_groups = 1;    // width for a depthwise mid conv
  bool se = false;
  int se_ratio = 2;
  Activation activation = Activation::gelu;
};

// ---- parameter init (D26: He normal, variance 2/fan_in) ----

template <typename T>
Tensor<T> he_normal(Shape shape, std::size_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<T> data(shape_numel(shape));
  for (auto& v : data) v = static_cast<T>(rng.normal() * stddev);
  return Tensor<T>::from_vector(std::move(shape), std::move(data), true);
}

// ---- group normalisation ----

// Normalises each (batch, group) slab over its channels and length, then
// applies the per-channel affine. Pre-affine output has mean 0, variance 1.
template <typename T>
Tensor<T> group_norm_forward(const Tensor<T>& x, const GroupNormSpec& spec,
                             const Tensor<T>& scale, const Tensor<T>& shift) {
  if (x.rank() != 3) {
    throw std::invalid_argument("group_norm: expected [B,C,L], got " + shape_str(x.shape()));
  }
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  if (static_cast<int>(C) != spec.channels || spec.channels % spec.groups != 0) {
    throw std::invalid_argument("group_norm: channels " + std::to_string(C) +
                                " not divisible into " + std::to_string(spec.groups) + " groups");
  }
  const std::size_t G = static_cast<std::size_t>(spec.groups);
  const std::size_t cpg = C / G;
  const std::size_t slab = cpg * L;
  const double eps = spec.epsilon;

  std::vector<T> out(B * C * L);
  auto stats = std::make_shared<std::vector<double>>(B * G * 2);  // mean, invstd
  const auto xv = x.values();
  const auto sv = scale.values(), hv = shift.values();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t g = 0; g < G; ++g) {
      const T* slabp = xv.data() + (b * C + g * cpg) * L;
      double sum = 0.0;
      for (std::size_t i = 0; i < slab; ++i) sum += static_cast<double>(slabp[i]);
      const double mean = sum / static_cast<double>(slab);
      double sq = 0.0;
      for (std::size_t i = 0; i < slab; ++i) {
        const double d = static_cast<double>(slabp[i]) - mean;
        sq += d * d;
      }
      const double invstd = 1.0 / std::sqrt(sq / static_cast<double>(slab) + eps);
      (*stats)[(b * G + g) * 2] = mean;
      (*stats)[(b * G + g) * 2 + 1] = invstd;
      for (std::size_t cl = 0; cl < cpg; ++cl) {
        const std::size_t c = g * cpg + cl;
        const T* xrow = xv.data() + (b * C + c) * L;
        T* orow = out.data() + (b * C + c) * L;
        const double gma = static_cast<double>(sv[c]);
        const double bta = static_cast<double>(hv[c]);
        for (std::size_t li = 0; li < L; ++li) {
          const double xhat = (static_cast<double>(xrow[li]) - mean) * invstd;
          orow[li] = static_cast<T>(gma * xhat + bta);
        }
      }
    }
  }
  return detail::make_op<T>({B, C, L}, std::move(out), {x, scale, shift},
                            [B, C, L, G, cpg, stats](auto& n) {
    auto& ix = *n.inputs[0];
    auto& iscale = *n.inputs[1];
    auto& ishift = *n.inputs[2];
    const std::size_t slab = cpg * L;
    std::vector<double> dgamma(C, 0.0), dbeta(C, 0.0);
    if (ix.requires_grad) ix.ensure_grad();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t g = 0; g < G; ++g) {
        const double mean = (*stats)[(b * G + g) * 2];
        const double invstd = (*stats)[(b * G + g) * 2 + 1];
        // accumulate per-slab sums of dxhat and dxhat*xhat
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t cl = 0; cl < cpg; ++cl) {
          const std::size_t c = g * cpg + cl;
          const double gma = static_cast<double>(iscale.value[c]);
          for (std::size_t li = 0; li < L; ++li) {
            const std::size_t i = (b * C + c) * L + li;
            const double xhat = (static_cast<double>(ix.value[i]) - mean) * invstd;
            const double gy = static_cast<double>(n.grad[i]);
            dgamma[c] += gy * xhat;
            dbeta[c] += gy;
            const double dxhat = gy * gma;
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
          }
        }
        if (ix.requires_grad) {
          const double m = static_cast<double>(slab);
          for (std::size_t cl = 0; cl < cpg; ++cl) {
            const std::size_t c = g * cpg + cl;
            const double gma = static_cast<double>(iscale.value[c]);
            for (std::size_t li = 0; li < L; ++li) {
              const std::size_t i = (b * C + c) * L + li;
              const double xhat = (static_cast<double>(ix.value[i]) - mean) * invstd;
              const double dxhat = static_cast<double>(n.grad[i]) * gma;
              ix.grad[i] += static_cast<T>(
                  invstd * (dxhat - sum_dxhat / m - xhat * sum_dxhat_xhat / m));
            }
          }
        }
      }
    }
    if (iscale.requires_grad) {
      iscale.ensure_grad();
      for (std::size_t c = 0; c < C; ++c) iscale.grad[c] += static_cast<T>(dgamma[c]);
    }
    if (ishift.requires_grad) {
      ishift.ensure_grad();
      for (std::size_t c = 0; c < C; ++c) ishift.grad[c] += static_cast<T>(dbeta[c]);
    }
  });
}

// ---- layer modules ----

template <typename T>
struct Conv1dLayer {
  ConvLayerSpec spec;
  Tensor<T> weight;  // [out, in/groups, k]
  Tensor<T> bias;    // [out] when spec.bias

  void init(Rng& rng) {
    const std::size_t fan_in =
        static_cast<std::size_t>(spec.kernel) * spec.in_channels / spec.groups;
    weight = he_normal<T>({static_cast<std::size_t>(spec.out_channels),
                           static_cast<std::size_t>(spec.in_channels / spec.groups),
                           static_cast<std::size_t>(spec.kernel)},
                          fan_in, rng);
    if (spec.bias) bias = Tensor<T>::zeros({static_cast<std::size_t>(spec.out_channels)}, true);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    return conv1d(x, weight, bias, spec.stride, spec.padding, spec.groups);
  }
};

template <typename T>
struct GroupNormLayer {
  GroupNormSpec spec;
  Tensor<T> scale;  // [C], init 1
  Tensor<T> shift;  // [C], init 0

  void init() {
    scale = Tensor<T>::filled({static_cast<std::size_t>(spec.channels)}, T(1), true);
    shift = Tensor<T>::zeros({static_cast<std::size_t>(spec.channels)}, true);
  }

  Tensor<T> forward(const Tensor<T>& x) const { return group_norm_forward(x, spec, scale, shift); }
};

template <typename T>
struct LinearLayer {
  int in = 0, out = 0;
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]

  void init(Rng& rng) {
    weight = he_normal<T>({static_cast<std::size_t>(in), static_cast<std::size_t>(out)},
                          static_cast<std::size_t>(in), rng);
    bias = Tensor<T>::zeros({static_cast<std::size_t>(out)}, true);
  }

  // x: [B, in] -> [B, out]
  Tensor<T> forward(const Tensor<T>& x) const {
    Tensor<T> y = matmul(x, weight);
    return add(y, broadcast_to(bias, y.shape()));
  }
};

// Channel attention: global average pool -> bottleneck MLP -> sigmoid gate.
template <typename T>
struct SELayer {
  SESpec spec;
  LinearLayer<T> down;
  LinearLayer<T> up;

  void init(Rng& rng) {
    down.in = spec.channels;
    down.out = spec.bottleneck();
    down.init(rng);
    up.in = spec.bottleneck();
    up.out = spec.channels;
    up.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    const std::size_t B = x.dim(0), C = x.dim(1);
    Tensor<T> pooled = global_avg_pool(x);                 // [B,C]
    Tensor<T> gate = sigmoid(up.forward(relu(down.forward(pooled))));
    gate = reshape(gate, {B, C, 1});
    return mul(x, broadcast_to(gate, x.shape()));
  }
};

template <typename T>
Tensor<T> se_forward(const Tensor<T>& x, const SELayer<T>& layer) {
  return layer.forward(x);
}

// ---- residual blocks ----

template <typename T>
struct ResidualBlock {
  BlockSpec spec;
  // pre-activation entry (V2 family)
  GroupNormLayer<T> gn0;
  std::optional<SELayer<T>> se;
  // main branch
  Conv1dLayer<T> conv1;
  GroupNormLayer<T> gn1;
  Conv1dLayer<T> conv2;
  GroupNormLayer<T> gn2;
  Conv1dLayer<T> conv3;  // bottleneck variants only
  GroupNormLayer<T> gn3;  // post-act bottleneck only
  // shortcut
  bool projection = false;
  Conv1dLayer<T> down_conv;
  GroupNormLayer<T> down_gn;  // post-act variants only

  static ConvLayerSpec conv_spec(int cin, int cout, int kernel, int stride, int groups = 1) {
    ConvLayerSpec s;
    s.in_channels = cin;
    s.out_channels = cout;
    s.kernel = kernel;
    s.stride = stride;
    s.groups = groups;
    s.bias = false;  // normalisation follows every block conv
    s.padding = kernel / 2;
    return s;
  }

  void build(const BlockSpec& bs, Rng& rng) {
    spec = bs;
    projection = bs.stride != 1 || bs.in_channels != bs.out_channels;
    switch (bs.kind) {
      case BlockKind::basic:
        conv1.spec = conv_spec(bs.in_channels, bs.out_channels, bs.kernel, bs.stride);
        conv2.spec = conv_spec(bs.out_channels, bs.out_channels, bs.kernel, 1);
        gn1.spec = {bs.out_channels, group_norm_groups(bs.out_channels)};
        gn2.spec = {bs.out_channels, group_norm_groups(bs.out_channels)};
        if (projection) {
          down_conv.spec = conv_spec(bs.in_channels, bs.out_channels, 1, bs.stride);
          down_conv.spec.padding = 0;
          down_gn.spec = {bs.out_channels, group_norm_groups(bs.out_channels)};
          down_gn.init();
        }
        break;
      case BlockKind::bottleneck:
        conv1.spec = conv_spec(bs.in_channels, bs.width, 1, 1);
        conv2.spec = conv_spec(bs.width, bs.width, bs.kernel, bs.stride, bs.mid_groups);
        conv3.spec = conv_spec(bs.width, bs.out_channels, 1, 1);
        gn1.spec = {bs.width, group_norm_groups(bs.width)};
        gn2.spec = {bs.width, group_norm_groups(bs.width)};
        gn3.spec = {bs.out_channels, group_norm_groups(bs.out_channels)};
        gn3.init();
        if (projection) {
          down_conv.spec = conv_spec(bs.in_channels, bs.out_channels, 1, bs.stride);
          down_conv.spec.padding = 0;
          down_gn.spec = {bs.out_channels, group_norm_groups(bs.out_channels)};
          down_gn.init();
        }
        break;
      case BlockKind::preact_bottleneck:
        gn0.spec = {bs.in_channels, group_norm_groups(bs.in_channels)};
        gn0.init();
        if (bs.se) {
          se.emplace();
          se->spec = {bs.in_channels, bs.se_ratio};
          se->init(rng);
        }
        conv1.spec = conv_spec(bs.in_channels, bs.width, 1, 1);
        conv2.spec = conv_spec(bs.width, bs.width, bs.kernel, bs.stride, bs.mid_groups);
        conv3.spec = conv_spec(bs.width, bs.out_channels, 1, 1);
        gn1.spec = {bs.width, group_norm_groups(bs.width)};
        gn2.spec = {bs.width, group_norm_groups(bs.width)};
        if (projection) {
          down_conv.spec = conv_spec(bs.in_channels, bs.out_channels, 1, 1);
          down_conv.spec.padding = 0;
          down_conv.init(rng);
        }
        break;
    }
    conv1.init(rng);
    conv2.init(rng);
    gn1.init();
    gn2.init();
    if (bs.kind != BlockKind::basic) conv3.init(rng);
    if (bs.kind != BlockKind::preact_bottleneck && projection) down_conv.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    const Activation act = spec.activation;
    switch (spec.kind) {
      case BlockKind::basic: {
        Tensor<T> h = apply_activation(gn1.forward(conv1.forward(x)), act);
        h = gn2.forward(conv2.forward(h));
        Tensor<T> r = projection ? down_gn.forward(down_conv.forward(x)) : x;
        return apply_activation(add(h, r), act);
      }
      case BlockKind::bottleneck: {
        Tensor<T> h = apply_activation(gn1.forward(conv1.forward(x)), act);
        h = apply_activation(gn2.forward(conv2.forward(h)), act);
        h = gn3.forward(conv3.forward(h));
        Tensor<T> r = projection ? down_gn.forward(down_conv.forward(x)) : x;
        return apply_activation(add(h, r), act);
      }
      case BlockKind::preact_bottleneck: {
        Tensor<T> p = apply_activation(gn0.forward(x), act);
        if (se) p = se->forward(p);
        Tensor<T> h = conv1.forward(p);
        h = apply_activation(gn1.forward(h), act);
        h = conv2.forward(h);
        h = apply_activation(gn2.forward(h), act);
        h = conv3.forward(h);
        Tensor<T> r = x;
        if (projection) {
          Tensor<T> rp = spec.stride != 1 ? avg_pool1d(p, spec.stride, spec.stride, true) : p;
          r = down_conv.forward(rp);
        }
        return add(h, r);
      }
    }
    throw std::logic_error("unreachable block kind");
  }
};

template <typename T>
Tensor<T> residual_block_forward(const Tensor<T>& x, const ResidualBlock<T>& block) {
  return block.forward(x);
}

// GroupNorm -> activation -> average pool over length -> linear classifier.
template <typename T>
struct ClassificationHead {
  bool pre_norm = false;  // V2 family normalises before pooling
  Activation activation = Activation::gelu;
  GroupNormLayer<T> norm;
  LinearLayer<T> fc;

  void build(int channels, int class_count, bool with_norm, Activation act, Rng& rng) {
    pre_norm = with_norm;
    activation = act;
    if (with_norm) {
      norm.spec = {channels, group_norm_groups(channels)};
      norm.init();
    }
    fc.in = channels;
    fc.out = class_count;
    fc.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& features) const {
    Tensor<T> h = features;
    if (pre_norm) h = apply_activation(norm.forward(h), activation);
    return fc.forward(global_avg_pool(h));
  }
};

template <typename T>
Tensor<T> classification_head_forward(const Tensor<T>& features, const ClassificationHead<T>& head) {
  return head.forward(features);
}

}  // namespace binsig
