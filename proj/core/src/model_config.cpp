#include "binsig/model_config.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>

namespace binsig {

const char* to_string(BlockType b) {
  switch (b) {
    case BlockType::V1: return "v1";
    case BlockType::V1_5: return "v1_5";
    case BlockType::V2: return "v2";
    case BlockType::V2_SE: return "v2_se";
  }
  return "?";
}

const char* to_string(StemType s) { return s == StemType::standard ? "standard" : "deep"; }

const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "gelu"; }

namespace {

BlockType block_type_from_string(const std::string& s) {
  if (s == "v1") return BlockType::V1;
  if (s == "v1_5") return BlockType::V1_5;
  if (s == "v2") return BlockType::V2;
  if (s == "v2_se") return BlockType::V2_SE;
  throw std::invalid_argument("unknown block_type '" + s + "'");
}

StemType stem_from_string(const std::string& s) {
  if (s == "standard") return StemType::standard;
  if (s == "deep") return StemType::deep;
  throw std::invalid_argument("unknown stem '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "gelu") return Activation::gelu;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

bool is_preact(BlockType b) { return b == BlockType::V2 || b == BlockType::V2_SE; }

constexpr int kSeRatio = 2;

}  // namespace

ConvLayerSpec convert_2d_to_1d(const Conv2DConfig& cfg, bool square_kernel, bool square_stride,
                               bool permissive_nonsquare) {
  const bool square_shape = cfg.kernel_h == cfg.kernel_w && cfg.stride_h == cfg.stride_w;
  if (!square_shape && !permissive_nonsquare) {
    throw std::invalid_argument(
        "convert_2d_to_1d: non-square source (" + std::to_string(cfg.kernel_h) + "x" +
        std::to_string(cfg.kernel_w) + ", stride " + std::to_string(cfg.stride_h) + "x" +
        std::to_string(cfg.stride_w) + "); pass permissive_nonsquare to flatten anyway");
  }
  ConvLayerSpec spec;
  spec.in_channels = cfg.in_channels;
  spec.out_channels = cfg.out_channels;
  spec.kernel = square_kernel ? cfg.kernel_h * cfg.kernel_w : cfg.kernel_h;
  spec.stride = square_stride ? cfg.stride_h * cfg.stride_w : cfg.stride_h;
  spec.groups = 1;
  spec.bias = false;
  spec.padding = spec.kernel / 2;
  return spec;
}

void validate_config(const ModelConfig& cfg) {
  for (const int d : cfg.depths) {
    if (d < 1) throw std::invalid_argument("model config: every stage depth must be >= 1");
  }
  if (cfg.base_width < 4 || (cfg.base_width & (cfg.base_width - 1)) != 0) {
    throw std::invalid_argument("model config: base_width must be a power of two >= 4");
  }
  if (cfg.class_count < 2) throw std::invalid_argument("model config: class_count must be >= 2");
  if (cfg.input_length < 1) throw std::invalid_argument("model config: input_length must be >= 1");
}

std::string config_to_text(const ModelConfig& cfg) {
  std::ostringstream out;
  out << "block_type=" << to_string(cfg.block_type) << "\n";
  out << "depths=" << cfg.depths[0] << "," << cfg.depths[1] << "," << cfg.depths[2] << ","
      << cfg.depths[3] << "\n";
  out << "base_width=" << cfg.base_width << "\n";
  out << "stem=" << to_string(cfg.stem) << "\n";
  out << "activation=" << to_string(cfg.activation) << "\n";
  out << "class_count=" << cfg.class_count << "\n";
  out << "input_length=" << cfg.input_length << "\n";
  return out.str();
}

ModelConfig config_from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config text: malformed line '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw std::invalid_argument(std::string("config text: missing field '") + key + "'");
    }
    return it->second;
  };
  ModelConfig cfg;
  cfg.block_type = block_type_from_string(need("block_type"));
  {
    std::istringstream ds(need("depths"));
    std::string tok;
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(ds, tok, ',')) {
        throw std::invalid_argument("config text: depths needs 4 entries");
      }
      cfg.depths[i] = std::stoi(tok);
    }
  }
  cfg.base_width = std::stoi(need("base_width"));
  cfg.stem = stem_from_string(need("stem"));
  cfg.activation = activation_from_string(need("activation"));
  cfg.class_count = std::stoi(need("class_count"));
  cfg.input_length = static_cast<std::size_t>(std::stoull(need("input_length")));
  validate_config(cfg);
  return cfg;
}

std::array<int, 4> preset_depths(int depth_name) {
  switch (depth_name) {
    case 18: return {2, 2, 2, 2};
    case 34: return {3, 4, 6, 3};
    case 50: return {3, 4, 6, 3};
    case 101: return {3, 4, 23, 3};
    case 152: return {3, 8, 36, 3};
    default:
      throw std::invalid_argument("unknown depth preset " + std::to_string(depth_name) +
                                  " (valid: 18, 34, 50, 101, 152)");
  }
}

ModelConfig parse_model_name(const std::string& raw, int class_count, std::size_t input_length) {
  std::string name;
  for (const char c : raw) name.push_back(static_cast<char>(std::tolower(c)));
  const auto fail = [&]() -> ModelConfig {
    throw std::invalid_argument(
        "unknown model '" + raw +
        "'. Valid presets: resnet1d{18,34,50,101,152}, "
        "resnet1d{v1,v1.5,v2}-<depth>[d][-se], e.g. resnet1dv2-152d-se");
  };
  const std::string prefix = "resnet1d";
  if (name.rfind(prefix, 0) != 0) return fail();
  std::string rest = name.substr(prefix.size());

  bool has_version = false;
  std::string version;
  if (rest.rfind("v1.5", 0) == 0) {
    version = "v1.5";
    rest = rest.substr(4);
    has_version = true;
  } else if (rest.rfind("v1", 0) == 0) {
    version = "v1";
    rest = rest.substr(2);
    has_version = true;
  } else if (rest.rfind("v2", 0) == 0) {
    version = "v2";
    rest = rest.substr(2);
    has_version = true;
  }
  if (!rest.empty() && rest[0] == '-') rest = rest.substr(1);

  std::size_t i = 0;
  while (i < rest.size() && std::isdigit(static_cast<unsigned char>(rest[i]))) ++i;
  if (i == 0) return fail();
  const int depth_name = std::stoi(rest.substr(0, i));
  rest = rest.substr(i);

  bool deep = false;
  if (!rest.empty() && rest[0] == 'd') {
    deep = true;
    rest = rest.substr(1);
  }
  bool se = false;
  if (rest == "-se" || rest == "se") {
    se = true;
    rest.clear();
  }
  if (!rest.empty()) return fail();

  ModelConfig cfg;
  try {
    cfg.depths = preset_depths(depth_name);
  } catch (const std::exception&) {
    return fail();
  }
  if (!has_version) {
    cfg.block_type = depth_name >= 50 ? BlockType::V1_5 : BlockType::V1;
  } else if (version == "v1") {
    cfg.block_type = BlockType::V1;
  } else if (version == "v1.5") {
    cfg.block_type = BlockType::V1_5;
  } else {
    cfg.block_type = se ? BlockType::V2_SE : BlockType::V2;
  }
  if (se && cfg.block_type != BlockType::V2_SE) {
    throw std::invalid_argument("model '" + raw + "': -se requires the v2 block family");
  }
  cfg.stem = deep ? StemType::deep : StemType::standard;
  cfg.activation = is_preact(cfg.block_type) ? Activation::gelu : Activation::relu;
  cfg.base_width = 64;
  cfg.class_count = class_count;
  cfg.input_length = input_length;
  validate_config(cfg);
  return cfg;
}

ModelPlan plan_model(const ModelConfig& cfg, const ConversionFlags& flags) {
  validate_config(cfg);
  ModelPlan plan;
  plan.cfg = cfg;
  plan.flags = flags;

  const auto convert = [&](int cin, int cout, int k2d, int s2d) {
    return convert_2d_to_1d(Conv2DConfig{cin, cout, k2d, k2d, s2d, s2d}, flags.square_kernel,
                            flags.square_stride, flags.permissive_nonsquare);
  };

  // Stem. The deep variant keeps the spatial downsampling in the first conv,
  // the third conv only widens; the final norm is owned by the first pre-act
  // block for the V2 family.
  plan.stem.type = cfg.stem;
  const bool preact = is_preact(cfg.block_type);
  if (cfg.stem == StemType::standard) {
    plan.stem.convs = {convert(1, cfg.base_width, 7, 2)};
    plan.stem.norm_after = {true};
  } else {
    const int half = cfg.base_width / 2;
    plan.stem.convs = {convert(1, half, 3, 2), convert(half, half, 3, 1),
                       convert(half, cfg.base_width, 3, 1)};
    plan.stem.norm_after = {true, true, !preact};
  }
  plan.stem.pool_kernel = flags.square_kernel ? 9 : 3;
  plan.stem.pool_stride = flags.square_stride ? 4 : 2;
  plan.stem.pool_pad = plan.stem.pool_kernel / 2;
  plan.stem.out_channels = cfg.base_width;

  // Stages. Converted V1/V1_5 presets keep the canonical schedule (stage 1
  // stride 1); the bespoke V2 family downsamples in every stage.
  const int expansion = cfg.block_type == BlockType::V1 ? 1 : 4;
  int cin = cfg.base_width;
  for (int stage = 0; stage < 4; ++stage) {
    const int width = cfg.base_width << stage;
    const int cout = width * expansion;
    plan.stage_sizes[stage] = cfg.depths[stage];
    for (int j = 0; j < cfg.depths[stage]; ++j) {
      BlockSpec bs;
      bs.in_channels = cin;
      bs.width = width;
      bs.out_channels = cout;
      bs.kernel = flags.square_kernel ? 9 : 3;
      bs.activation = cfg.activation;
      bs.mid_groups = 1;
      const int s2 = flags.square_stride ? 4 : 2;
      if (j == 0) {
        bs.stride = preact ? s2 : (stage == 0 ? 1 : s2);
      } else {
        bs.stride = 1;
      }
      switch (cfg.block_type) {
        case BlockType::V1: bs.kind = BlockKind::basic; break;
        case BlockType::V1_5: bs.kind = BlockKind::bottleneck; break;
        case BlockType::V2: bs.kind = BlockKind::preact_bottleneck; break;
        case BlockType::V2_SE:
          bs.kind = BlockKind::preact_bottleneck;
          bs.se = true;
          bs.se_ratio = kSeRatio;
          break;
      }
      plan.blocks.push_back(bs);
      cin = cout;
    }
  }

  plan.head.in_channels = cin;
  plan.head.class_count = cfg.class_count;
  plan.head.pre_norm = preact;
  return plan;
}

namespace {

bool block_projects(const BlockSpec& b) {
  return b.stride != 1 || b.in_channels != b.out_channels;
}

ConvLayerSpec projection_spec(const BlockSpec& b) {
  ConvLayerSpec s;
  s.in_channels = b.in_channels;
  s.out_channels = b.out_channels;
  s.kernel = 1;
  // pre-act blocks resample with average pooling, so their projection conv
  // itself has stride 1
  s.stride = b.kind == BlockKind::preact_bottleneck ? 1 : b.stride;
  s.groups = 1;
  s.bias = false;
  s.padding = 0;
  return s;
}

std::vector<ConvLayerSpec> block_convs(const BlockSpec& b) {
  std::vector<ConvLayerSpec> out;
  const auto mk = [&](int cin, int cout, int k, int s, int g) {
    ConvLayerSpec c;
    c.in_channels = cin;
    c.out_channels = cout;
    c.kernel = k;
    c.stride = s;
    c.groups = g;
    c.bias = false;
    c.padding = k / 2;
    return c;
  };
  if (b.kind == BlockKind::basic) {
    out.push_back(mk(b.in_channels, b.out_channels, b.kernel, b.stride, 1));
    out.push_back(mk(b.out_channels, b.out_channels, b.kernel, 1, 1));
  } else {
    out.push_back(mk(b.in_channels, b.width, 1, 1, 1));
    out.push_back(mk(b.width, b.width, b.kernel, b.stride, b.mid_groups));
    out.push_back(mk(b.width, b.out_channels, 1, 1, 1));
  }
  if (block_projects(b)) out.push_back(projection_spec(b));
  return out;
}

std::size_t se_param_count(const BlockSpec& b) {
  if (!b.se) return 0;
  const SESpec se{b.in_channels, b.se_ratio};
  const std::size_t c = static_cast<std::size_t>(b.in_channels);
  const std::size_t h = static_cast<std::size_t>(se.bottleneck());
  return c * h + h + h * c + c;
}

std::size_t se_mac_count(const BlockSpec& b) {
  if (!b.se) return 0;
  const SESpec se{b.in_channels, b.se_ratio};
  const std::size_t c = static_cast<std::size_t>(b.in_channels);
  const std::size_t h = static_cast<std::size_t>(se.bottleneck());
  return 2 * c * h;
}

std::size_t block_norm_params(const BlockSpec& b) {
  const auto gn = [](int c) { return 2 * static_cast<std::size_t>(c); };
  switch (b.kind) {
    case BlockKind::basic:
      return gn(b.out_channels) * 2 + (block_projects(b) ? gn(b.out_channels) : 0);
    case BlockKind::bottleneck:
      return gn(b.width) * 2 + gn(b.out_channels) +
             (block_projects(b) ? gn(b.out_channels) : 0);
    case BlockKind::preact_bottleneck:
      return gn(b.in_channels) + gn(b.width) * 2;
  }
  return 0;
}

}  // namespace

std::size_t ModelPlan::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t i = 0; i < stem.convs.size(); ++i) {
    total += stem.convs[i].param_count();
    if (stem.norm_after[i]) total += 2 * static_cast<std::size_t>(stem.convs[i].out_channels);
  }
  for (const BlockSpec& b : blocks) {
    for (const ConvLayerSpec& c : block_convs(b)) total += c.param_count();
    total += block_norm_params(b);
    total += se_param_count(b);
  }
  if (head.pre_norm) total += 2 * static_cast<std::size_t>(head.in_channels);
  total += static_cast<std::size_t>(head.in_channels) * head.class_count + head.class_count;
  return total;
}

std::size_t ModelPlan::mac_count(std::size_t input_length) const {
  std::size_t macs = 0;
  std::size_t L = input_length;
  for (const ConvLayerSpec& c : stem.convs) {
    macs += c.mac_count(L);
    L = c.out_len(L);
  }
  L = detail::pool_out_len(L, stem.pool_kernel, stem.pool_stride, stem.pool_pad, false);
  for (const BlockSpec& b : blocks) {
    const auto convs = block_convs(b);
    std::size_t Lmid = L;
    if (b.kind == BlockKind::basic) {
      macs += convs[0].mac_count(L);
      Lmid = convs[0].out_len(L);
      macs += convs[1].mac_count(Lmid);
    } else {
      macs += convs[0].mac_count(L);
      macs += convs[1].mac_count(L);
      Lmid = convs[1].out_len(L);
      macs += convs[2].mac_count(Lmid);
    }
    if (block_projects(b)) {
      const ConvLayerSpec& proj = convs.back();
      // pre-act projections run after the average pool, at the output length
      macs += proj.mac_count(b.kind == BlockKind::preact_bottleneck ? Lmid : L);
    }
    macs += se_mac_count(b);
    L = Lmid;
  }
  macs += static_cast<std::size_t>(head.in_channels) * head.class_count;
  return macs;
}

std::vector<ConvLayerSpec> ModelPlan::conv_layers() const {
  std::vector<ConvLayerSpec> out = stem.convs;
  for (const BlockSpec& b : blocks) {
    const auto convs = block_convs(b);
    out.insert(out.end(), convs.begin(), convs.end());
  }
  return out;
}

std::vector<std::size_t> ModelPlan::stage_output_lengths(std::size_t input_length) const {
  std::vector<std::size_t> lengths;
  std::size_t L = input_length;
  for (const ConvLayerSpec& c : stem.convs) L = c.out_len(L);
  L = detail::pool_out_len(L, stem.pool_kernel, stem.pool_stride, stem.pool_pad, false);
  lengths.push_back(L);  // after stem
  std::size_t idx = 0;
  for (int stage = 0; stage < 4; ++stage) {
    for (int j = 0; j < stage_sizes[stage]; ++j, ++idx) {
      const BlockSpec& b = blocks[idx];
      const auto convs = block_convs(b);
      L = b.kind == BlockKind::basic ? convs[0].out_len(L) : convs[1].out_len(L);
    }
    lengths.push_back(L);
  }
  return lengths;
}

std::vector<Conv2DConfig> resnet_2d_conv_template(const ModelConfig& cfg) {
  if (is_preact(cfg.block_type)) {
    throw std::invalid_argument("2D template is defined for the converted V1/V1_5 presets");
  }
  std::vector<Conv2DConfig> out;
  if (cfg.stem == StemType::standard) {
    out.push_back({1, cfg.base_width, 7, 7, 2, 2});
  } else {
    const int half = cfg.base_width / 2;
    out.push_back({1, half, 3, 3, 2, 2});
    out.push_back({half, half, 3, 3, 1, 1});
    out.push_back({half, cfg.base_width, 3, 3, 1, 1});
  }
  const int expansion = cfg.block_type == BlockType::V1 ? 1 : 4;
  int cin = cfg.base_width;
  for (int stage = 0; stage < 4; ++stage) {
    const int width = cfg.base_width << stage;
    const int cout = width * expansion;
    for (int j = 0; j < cfg.depths[stage]; ++j) {
      const int stride = (j == 0 && stage > 0) ? 2 : 1;
      if (cfg.block_type == BlockType::V1) {
        out.push_back({cin, cout, 3, 3, stride, stride});
        out.push_back({cout, cout, 3, 3, 1, 1});
      } else {
        out.push_back({cin, width, 1, 1, 1, 1});
        out.push_back({width, width, 3, 3, stride, stride});
        out.push_back({width, cout, 1, 1, 1, 1});
      }
      if (stride != 1 || cin != cout) out.push_back({cin, cout, 1, 1, stride, stride});
      cin = cout;
    }
  }
  return out;
}

ModelSummary summarize(const ModelPlan& plan) {
  return {plan.parameter_count(), plan.mac_count(plan.cfg.input_length)};
}

}  // namespace binsig
