#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "binsig/model_config.hpp"

namespace binsig {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
  bool trainable = true;
};

// Executable network instantiated from a ModelPlan. Input is [B, 1, L] in
// unit range; the stored corpus statistics (non-trainable buffers) are
// applied inside forward so checkpoints are self-contained.
template <typename T>
struct Model {
  ModelPlan plan;
  std::vector<Conv1dLayer<T>> stem_convs;
  std::vector<GroupNormLayer<T>> stem_norms;  // aligned with plan.stem.norm_after
  std::vector<ResidualBlock<T>> blocks;
  ClassificationHead<T> head;
  Tensor<T> input_mean;  // [1] buffer
  Tensor<T> input_std;   // [1] buffer

  static Model build(const ModelConfig& cfg, std::uint64_t seed,
                     const ConversionFlags& flags = {}) {
    return build(plan_model(cfg, flags), seed);
  }

  static Model build(const ModelPlan& plan, std::uint64_t seed) {
    Model m;
    m.plan = plan;
    Rng rng(seed);
    for (std::size_t i = 0; i < plan.stem.convs.size(); ++i) {
      Conv1dLayer<T> conv;
      conv.spec = plan.stem.convs[i];
      conv.init(rng);
      m.stem_convs.push_back(std::move(conv));
      if (plan.stem.norm_after[i]) {
        GroupNormLayer<T> gn;
        gn.spec = {plan.stem.convs[i].out_channels,
                   group_norm_groups(plan.stem.convs[i].out_channels)};
        gn.init();
        m.stem_norms.push_back(std::move(gn));
      }
    }
    for (const BlockSpec& bs : plan.blocks) {
      ResidualBlock<T> block;
      block.build(bs, rng);
      m.blocks.push_back(std::move(block));
    }
    m.head.build(plan.head.in_channels, plan.head.class_count, plan.head.pre_norm,
                 plan.cfg.activation, rng);
    m.input_mean = Tensor<T>::zeros({1});
    m.input_std = Tensor<T>::filled({1}, T(1));
    return m;
  }

  void set_input_stats(double mean, double stddev) {
    input_mean.mutable_values()[0] = static_cast<T>(mean);
    input_std.mutable_values()[0] = static_cast<T>(stddev);
  }

  // x: [B, 1, L] unit-range samples. Set normalized=true for inputs that are
  // already z-normalised.
  Tensor<T> forward(const Tensor<T>& x, bool normalized = false) const {
    const Activation act = plan.cfg.activation;
    Tensor<T> h = x;
    if (!normalized) {
      const T mean = input_mean.values()[0];
      const T stddev = input_std.values()[0];
      h = scale_shift(h, T(1) / stddev, -mean / stddev);
    }
    std::size_t norm_idx = 0;
    for (std::size_t i = 0; i < stem_convs.size(); ++i) {
      h = stem_convs[i].forward(h);
      if (plan.stem.norm_after[i]) {
        h = apply_activation(stem_norms[norm_idx].forward(h), act);
        ++norm_idx;
      }
    }
    h = max_pool1d(h, plan.stem.pool_kernel, plan.stem.pool_stride, plan.stem.pool_pad);
    for (const auto& block : blocks) h = block.forward(h);
    return head.forward(h);
  }

  std::vector<NamedTensor<T>> named_tensors() {
    std::vector<NamedTensor<T>> out;
    const auto push = [&](const std::string& name, Tensor<T> t, bool trainable = true) {
      out.push_back({name, std::move(t), trainable});
    };
    std::size_t norm_idx = 0;
    for (std::size_t i = 0; i < stem_convs.size(); ++i) {
      const std::string base = "stem.conv" + std::to_string(i);
      push(base + ".weight", stem_convs[i].weight);
      if (plan.stem.norm_after[i]) {
        const std::string gnb = "stem.gn" + std::to_string(i);
        push(gnb + ".scale", stem_norms[norm_idx].scale);
        push(gnb + ".shift", stem_norms[norm_idx].shift);
        ++norm_idx;
      }
    }
    std::size_t idx = 0;
    for (int stage = 0; stage < 4; ++stage) {
      for (int j = 0; j < plan.stage_sizes[stage]; ++j, ++idx) {
        auto& b = blocks[idx];
        const std::string base =
            "stage" + std::to_string(stage + 1) + ".block" + std::to_string(j) + ".";
        if (b.spec.kind == BlockKind::preact_bottleneck) {
          push(base + "gn0.scale", b.gn0.scale);
          push(base + "gn0.shift", b.gn0.shift);
          if (b.se) {
            push(base + "se.down.weight", b.se->down.weight);
            push(base + "se.down.bias", b.se->down.bias);
            push(base + "se.up.weight", b.se->up.weight);
            push(base + "se.up.bias", b.se->up.bias);
          }
        }
        push(base + "conv1.weight", b.conv1.weight);
        push(base + "gn1.scale", b.gn1.scale);
        push(base + "gn1.shift", b.gn1.shift);
        push(base + "conv2.weight", b.conv2.weight);
        push(base + "gn2.scale", b.gn2.scale);
        push(base + "gn2.shift", b.gn2.shift);
        if (b.spec.kind != BlockKind::basic) push(base + "conv3.weight", b.conv3.weight);
        if (b.spec.kind == BlockKind::bottleneck) {
          push(base + "gn3.scale", b.gn3.scale);
          push(base + "gn3.shift", b.gn3.shift);
        }
        if (b.projection) {
          push(base + "down.conv.weight", b.down_conv.weight);
          if (b.spec.kind != BlockKind::preact_bottleneck) {
            push(base + "down.gn.scale", b.down_gn.scale);
            push(base + "down.gn.shift", b.down_gn.shift);
          }
        }
      }
    }
    if (head.pre_norm) {
      push("head.gn.scale", head.norm.scale);
      push("head.gn.shift", head.norm.shift);
    }
    push("head.fc.weight", head.fc.weight);
    push("head.fc.bias", head.fc.bias);
    push("input_norm.mean", input_mean, false);
    push("input_norm.std", input_std, false);
    return out;
  }

  std::vector<Tensor<T>> parameters() {
    std::vector<Tensor<T>> out;
    for (auto& nt : named_tensors()) {
      if (nt.trainable) out.push_back(nt.tensor);
    }
    return out;
  }

  std::size_t live_parameter_count() {
    std::size_t total = 0;
    for (auto& p : parameters()) total += p.numel();
    return total;
  }
};

using ModelF = Model<float>;
using ModelD = Model<double>;

}  // namespace binsig
