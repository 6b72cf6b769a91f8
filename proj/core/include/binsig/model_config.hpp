#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "binsig/layers.hpp"

namespace binsig {

enum class BlockType { V1, V1_5, V2, V2_SE };
enum class StemType { standard, deep };

const char* to_string(BlockType b);
const char* to_string(StemType s);
const char* to_string(Activation a);

// Source 2D convolution, as found in the architecture being converted.
struct Conv2DConfig {
  int in_channels = 1;
  int out_channels = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride_h = 1;
  int stride_w = 1;

  std::size_t param_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w;
  }
  std::size_t area_reduction() const {
    return static_cast<std::size_t>(stride_h) * stride_w;
  }
};

// kernel flattening (k -> k^2) and stride squaring (s -> s^2); either half of
// the rule can be disabled for ablations.
struct ConversionFlags {
  bool square_kernel = true;
  bool square_stride = true;
  bool permissive_nonsquare = false;  // map k_h x k_w -> k_h*k_w instead of rejecting
};

ConvLayerSpec convert_2d_to_1d(const Conv2DConfig& cfg, bool square_kernel, bool square_stride,
                               bool permissive_nonsquare = false);

struct ModelConfig {
  BlockType block_type = BlockType::V1;
  std::array<int, 4> depths = {2, 2, 2, 2};
  int base_width = 64;
  StemType stem = StemType::standard;
  Activation activation = Activation::relu;
  int class_count = 2;
  std::size_t input_length = 65536;
};

void validate_config(const ModelConfig& cfg);

// "key=value" lines, one per ModelConfig field; used inside checkpoints.
std::string config_to_text(const ModelConfig& cfg);
ModelConfig config_from_text(const std::string& text);

// resnet1d{18,34,50,101,152} plus block-variant frames such as
// resnet1dv1.5-18, resnet1dv2-18-se, resnet1dv2-152d-se. Throws with the list
// of valid forms on unknown names.
ModelConfig parse_model_name(const std::string& name, int class_count,
                             std::size_t input_length);

std::array<int, 4> preset_depths(int depth_name);

struct StemPlan {
  StemType type = StemType::standard;
  std::vector<ConvLayerSpec> convs;
  std::vector<bool> norm_after;  // GroupNorm + activation after conv i
  int pool_kernel = 9;
  int pool_stride = 4;
  int pool_pad = 4;
  int out_channels = 64;
};

struct HeadPlan {
  int in_channels = 0;
  int class_count = 0;
  bool pre_norm = false;  // V2 family: GroupNorm + activation before pooling
};

// Declarative model structure. Parameter and MAC counts are derived from the
// specs alone; Model<T> instantiates the same plan with tensors.
struct ModelPlan {
  ModelConfig cfg;
  ConversionFlags flags;
  StemPlan stem;
  std::vector<BlockSpec> blocks;        // in execution order
  std::array<int, 4> stage_sizes = {};  // blocks per stage
  HeadPlan head;

  std::size_t parameter_count() const;
  // Multiply-accumulates of one forward pass at the given input length;
  // convolutions and linear layers only.
  std::size_t mac_count(std::size_t input_length) const;
  // Every conv spec in execution order (stem, blocks including projections).
  std::vector<ConvLayerSpec> conv_layers() const;
  // Signal length after the stem and after each stage.
  std::vector<std::size_t> stage_output_lengths(std::size_t input_length) const;
};

ModelPlan plan_model(const ModelConfig& cfg, const ConversionFlags& flags = {});

// The 2D conv stack the V1/V1_5 presets are converted from (stem conv,
// block convs and projections, in execution order). Used by the conversion
// parity checks.
std::vector<Conv2DConfig> resnet_2d_conv_template(const ModelConfig& cfg);

struct ModelSummary {
  std::size_t parameter_count = 0;
  std::size_t mac_count = 0;
};

ModelSummary summarize(const ModelPlan& plan);

}  // namespace binsig
