#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "binsig/checkpoint.hpp"
#include "binsig/io.hpp"
#include "binsig/metrics.hpp"
#include "binsig/model.hpp"
#include "binsig/noise.hpp"
#include "binsig/train.hpp"

namespace {

using namespace binsig;

IntegerArray ingest_file(const std::string& path, const std::string& format) {
  const ByteSequence seq =
      format == "hexbytes" ? parse_hexdump_bytes(path) : load_raw_binary(path);
  return bytes_to_integer_array(seq);
}

struct FilterOptions {
  std::string filter = "lanczos";
  int lanczos_a = 3;
  bool no_antialias = false;

  ResampleSpec spec() const {
    ResampleSpec s;
    s.filter = filter_from_string(filter);
    s.lanczos_a = lanczos_a;
    s.antialias = !no_antialias;
    return s;
  }
};

void add_filter_options(CLI::App* cmd, FilterOptions& opts) {
  cmd->add_option("--filter", opts.filter, "Resampling filter: lanczos|nearest|linear|cubic")
      ->default_val("lanczos");
  cmd->add_option("--lanczos-a", opts.lanczos_a, "Lanczos lobe count")->default_val(3);
  cmd->add_flag("--no-antialias", opts.no_antialias,
                "Disable kernel support scaling when downsampling");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct ModelFlags {
  std::string name;
  std::string block = "v2_se";
  std::string depths = "2,2,2,2";
  int base_width = 64;
  std::string stem = "standard";
  std::string activation;
  int classes = 47;
  std::size_t input_len = 65536;

  ModelConfig config() const {
    if (!name.empty()) return parse_model_name(name, classes, input_len);
    std::string text;
    text += "block_type=" + block + "\n";
    text += "depths=" + depths + "\n";
    text += "base_width=" + std::to_string(base_width) + "\n";
    text += "stem=" + stem + "\n";
    std::string act = activation;
    if (act.empty()) act = (block == "v1" || block == "v1_5") ? "relu" : "gelu";
    text += "activation=" + act + "\n";
    text += "class_count=" + std::to_string(classes) + "\n";
    text += "input_length=" + std::to_string(input_len) + "\n";
    return config_from_text(text);
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
  cmd->add_option("--model", mf.name,
                  "Preset name (resnet1d18 ... resnet1dv2-152d-se); overrides --block/--depths");
  cmd->add_option("--block", mf.block, "Block type: v1|v1_5|v2|v2_se");
  cmd->add_option("--depths", mf.depths, "Blocks per stage, e.g. 2,2,2,2");
  cmd->add_option("--base-width", mf.base_width, "Channels after the stem");
  cmd->add_option("--stem", mf.stem, "standard|deep");
  cmd->add_option("--activation", mf.activation, "relu|gelu");
  cmd->add_option("--classes", mf.classes, "Class count")->default_val(47);
  cmd->add_option("--input-len", mf.input_len, "Signal length the model consumes")
      ->default_val(65536);
}

int cmd_convert(const std::string& in_path, const std::string& format, std::size_t length,
                const FilterOptions& fopts, const std::string& out_path) {
  Signal signal;
  try {
    const IntegerArray arr = ingest_file(in_path, format);
    signal = resample_1d(minmax_normalize(arr), length, fopts.spec());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    write_signal_file(out_path, signal);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cmd_byteplot(const std::string& in_path, const std::string& format, std::size_t size,
                 const FilterOptions& fopts, const std::string& out_path) {
  std::vector<std::uint8_t> pixels;
  try {
    pixels = byteplot_pixels(ingest_file(in_path, format), size, fopts.spec());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    write_pgm(out_path, size, size, pixels);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cmd_noise(const std::string& manifest_path, const NoiseConfig& config,
              const std::string& out_path) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
  const CorpusNoiseTable table = corpus_noise_table(manifest, config);
  for (const auto& f : table.failures) std::cerr << "warning: skipped " << f << "\n";
  write_text(out_path, to_csv(table));
  return 0;
}

int cmd_count(const ModelFlags& mf, bool no_square_kernel, bool no_square_stride) {
  ConversionFlags flags;
  flags.square_kernel = !no_square_kernel;
  flags.square_stride = !no_square_stride;
  const ModelConfig cfg = mf.config();
  const ModelPlan plan = plan_model(cfg, flags);
  const ModelSummary summary = summarize(plan);
  std::cout << "model " << (mf.name.empty() ? to_string(cfg.block_type) : mf.name)
            << " input_length " << cfg.input_length << " classes " << cfg.class_count << "\n";
  std::cout << "square_kernel " << (flags.square_kernel ? "true" : "false") << " square_stride "
            << (flags.square_stride ? "true" : "false") << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", static_cast<double>(summary.parameter_count) / 1e6);
  std::cout << "parameters " << summary.parameter_count << " (" << buf << " M)\n";
  std::snprintf(buf, sizeof(buf), "%.2f", static_cast<double>(summary.mac_count) / 1e9);
  std::cout << "macs " << summary.mac_count << " (" << buf << " G)\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& manifest_path, int batch,
             const std::string& metrics_out, const std::string& pr_out) {
  const Checkpoint ckpt = read_checkpoint(ckpt_path);
  ModelF model = model_from_checkpoint<float>(ckpt);
  const DatasetManifest manifest = load_manifest(manifest_path, Split::test);
  for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
  if (manifest.class_count > model.plan.head.class_count) {
    throw std::runtime_error("manifest has " + std::to_string(manifest.class_count) +
                             " classes but the checkpoint was trained with " +
                             std::to_string(model.plan.head.class_count));
  }
  const auto signals = load_signals(manifest, model.plan.cfg.input_length);
  std::vector<int> labels;
  for (const auto& e : manifest.entries) labels.push_back(e.label);
  const EvalOutput out = evaluate_signals(model, signals, labels, batch);
  const MacroScores scores = macro_scores(out.cm);

  std::ostringstream metrics;
  metrics.precision(10);
  metrics << "metric,value\n";
  metrics << "macro_f1," << scores.f1 << "\n";
  metrics << "macro_precision," << scores.precision << "\n";
  metrics << "macro_recall," << scores.recall << "\n";
  if (model.plan.head.class_count == 2) {
    std::vector<double> pos_scores;
    for (const auto& p : out.probabilities) pos_scores.push_back(p[1]);
    const PRCurve curve = pr_curve(pos_scores, labels);
    try {
      metrics << "partial_pr_auc_r50," << partial_auc(curve, 0.5) << "\n";
    } catch (const std::exception& e) {
      std::cerr << "warning: partial PR AUC unavailable: " << e.what() << "\n";
    }
    if (!pr_out.empty()) {
      std::ostringstream pr;
      pr.precision(10);
      pr << "recall,precision\n";
      for (const auto& pt : curve.points) pr << pt.recall << "," << pt.precision << "\n";
      write_text(pr_out, pr.str());
    }
  } else if (!pr_out.empty()) {
    std::cerr << "warning: --pr-out ignored (PR curve needs a 2-class model)\n";
  }
  write_text(metrics_out, metrics.str());
  std::cout << "macro_f1 " << scores.f1 << " macro_precision " << scores.precision
            << " macro_recall " << scores.recall << " samples " << out.cm.total() << "\n";
  return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& signal_path) {
  const Checkpoint ckpt = read_checkpoint(ckpt_path);
  ModelF model = model_from_checkpoint<float>(ckpt);
  const SignalFileData data = read_signal_file(signal_path);
  if (data.samples.size() != model.plan.cfg.input_length) {
    throw std::runtime_error("signal length " + std::to_string(data.samples.size()) +
                             " does not match model input length " +
                             std::to_string(model.plan.cfg.input_length));
  }
  std::vector<float> values = data.samples;
  TensorF x = TensorF::from_vector({1, 1, values.size()}, std::move(values));
  TensorF logits = model.forward(x, data.z_normalised);
  const auto lv = logits.values();
  float m = lv[0];
  for (const float v : lv) m = std::max(m, v);
  double z = 0.0;
  for (const float v : lv) z += std::exp(static_cast<double>(v - m));
  int best = 0;
  std::vector<double> probs(lv.size());
  for (std::size_t c = 0; c < lv.size(); ++c) {
    probs[c] = std::exp(static_cast<double>(lv[c] - m)) / z;
    if (lv[c] > lv[best]) best = static_cast<int>(c);
  }
  std::cout.precision(6);
  std::cout << "label " << best << "\n";
  for (std::size_t c = 0; c < probs.size(); ++c) {
    std::cout << "p[" << c << "] " << probs[c] << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binsig: 1D signal representations of file binaries and their classifiers"};
  app.require_subcommand(1);

  auto* convert = app.add_subcommand("convert", "Resample a binary into a signal file");
  std::string in_path, out_path, format = "raw";
  std::size_t length = 65536;
  FilterOptions conv_filter;
  convert->add_option("input", in_path, "Input file")->required();
  convert->add_option("--format", format, "raw|hexbytes")->default_val("raw");
  convert->add_option("--length", length, "Target signal length")->default_val(65536);
  add_filter_options(convert, conv_filter);
  convert->add_option("--out", out_path, "Output signal file")->required();

  auto* byteplot = app.add_subcommand("byteplot", "Render the legacy 2D byteplot as PGM");
  std::string bp_in, bp_out, bp_format = "raw";
  std::size_t bp_size = 256;
  FilterOptions bp_filter;
  byteplot->add_option("input", bp_in, "Input file")->required();
  byteplot->add_option("--format", bp_format, "raw|hexbytes")->default_val("raw");
  byteplot->add_option("--size", bp_size, "Output image size")->default_val(256);
  add_filter_options(byteplot, bp_filter);
  byteplot->add_option("--out", bp_out, "Output PGM path")->required();

  auto* noise = app.add_subcommand("noise", "Round-trip noise table over a corpus of binaries");
  std::string noise_manifest, noise_out = "-", noise_format = "raw";
  NoiseConfig noise_cfg;
  FilterOptions noise_filter;
  std::size_t image_size = 256;
  noise->add_option("manifest", noise_manifest, "CSV manifest of binaries")->required();
  noise->add_option("--target-len", noise_cfg.target_len, "Signal length")->default_val(65536);
  noise->add_option("--image-size", image_size, "Byteplot size")->default_val(256);
  noise->add_option("--format", noise_format, "raw|hexbytes")->default_val("raw");
  add_filter_options(noise, noise_filter);
  noise->add_option("--out", noise_out, "Output CSV ('-' for stdout)");

  auto* count = app.add_subcommand("count", "Parameter and MAC counts for a model");
  ModelFlags count_flags;
  bool no_square_kernel = false, no_square_stride = false;
  add_model_flags(count, count_flags);
  count->add_flag("--no-square-kernel", no_square_kernel, "Keep 2D kernel sizes unflattened");
  count->add_flag("--no-square-stride", no_square_stride, "Keep 2D stride values unsquared");

  auto* train_cmd = app.add_subcommand("train", "Train a classifier on signal manifests");
  std::string train_manifest, val_manifest, recipe_kind = "improved";
  std::string ckpt_out = "model.1dck", log_out, balance_mode = "exponent";
  ModelFlags train_flags;
  double lr = 0.001, wd = 0.005, alpha = 0.1, balance = 0.5, ft_div = 10.0;
  int batch = 64, epochs = 50, ft_epochs = 10, warmup = 5;
  std::uint64_t seed = 0;
  bool verbose = false;
  train_cmd->add_option("--train-manifest", train_manifest, "Training manifest")->required();
  train_cmd->add_option("--val-manifest", val_manifest, "Validation manifest")->required();
  add_model_flags(train_cmd, train_flags);
  train_cmd->add_option("--recipe", recipe_kind, "standard|improved")->default_val("improved");
  train_cmd->add_option("--lr", lr, "Learning rate");
  train_cmd->add_option("--batch", batch, "Batch size");
  train_cmd->add_option("--epochs", epochs, "Main-phase epochs");
  train_cmd->add_option("--weight-decay", wd, "Decoupled weight decay");
  train_cmd->add_option("--alpha", alpha, "Label smoothing alpha");
  train_cmd->add_option("--balance", balance, "Class balancing strength");
  train_cmd->add_option("--finetune-epochs", ft_epochs, "Fine-tune epochs");
  train_cmd->add_option("--finetune-lr-divisor", ft_div, "Fine-tune lr divisor");
  train_cmd->add_option("--warmup-epochs", warmup, "Warm-up epochs");
  train_cmd->add_option("--balance-mode", balance_mode,
                        "exponent|linear reading of the balancing strength");
  train_cmd->add_option("--seed", seed, "Deterministic seed")->default_val(0);
  train_cmd->add_option("--out", ckpt_out, "Checkpoint output path")->default_val("model.1dck");
  train_cmd->add_option("--log", log_out, "Epoch log CSV path");
  train_cmd->add_flag("--verbose", verbose, "Per-epoch progress on stderr");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  std::string eval_ckpt, eval_manifest, metrics_out = "-", pr_out;
  int eval_batch = 64;
  eval_cmd->add_option("checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("manifest", eval_manifest, "Evaluation manifest")->required();
  eval_cmd->add_option("--batch", eval_batch, "Batch size")->default_val(64);
  eval_cmd->add_option("--metrics-out", metrics_out, "Metrics CSV ('-' for stdout)");
  eval_cmd->add_option("--pr-out", pr_out, "PR-curve CSV (2-class checkpoints)");

  auto* predict = app.add_subcommand("predict", "Classify one signal file");
  std::string pred_ckpt, pred_signal;
  predict->add_option("checkpoint", pred_ckpt, "Checkpoint file")->required();
  predict->add_option("signal", pred_signal, "Signal file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (convert->parsed()) return cmd_convert(in_path, format, length, conv_filter, out_path);
    if (byteplot->parsed()) return cmd_byteplot(bp_in, bp_format, bp_size, bp_filter, bp_out);
    if (noise->parsed()) {
      noise_cfg.image_rows = noise_cfg.image_cols = image_size;
      noise_cfg.spec = noise_filter.spec();
      noise_cfg.hexdump = noise_format == "hexbytes";
      return cmd_noise(noise_manifest, noise_cfg, noise_out);
    }
    if (count->parsed()) return cmd_count(count_flags, no_square_kernel, no_square_stride);
    if (train_cmd->parsed()) {
      Recipe recipe = recipe_kind == "improved" ? Recipe::improved() : Recipe::standard();
      if (train_cmd->count("--lr")) recipe.learning_rate = lr;
      if (train_cmd->count("--batch")) recipe.batch_size = batch;
      if (train_cmd->count("--epochs")) recipe.epochs = epochs;
      if (train_cmd->count("--weight-decay")) recipe.weight_decay = wd;
      if (train_cmd->count("--alpha")) recipe.label_smoothing_alpha = alpha;
      if (train_cmd->count("--balance")) recipe.class_balance_strength = balance;
      if (train_cmd->count("--finetune-epochs")) recipe.finetune_epochs = ft_epochs;
      if (train_cmd->count("--finetune-lr-divisor")) recipe.finetune_lr_divisor = ft_div;
      if (train_cmd->count("--warmup-epochs")) recipe.warmup_epochs = warmup;
      recipe.seed = seed;
      TrainOptions options;
      options.balance_mode =
          balance_mode == "linear" ? BalanceMode::linear : BalanceMode::exponent;
      options.verbose = verbose;
      const DatasetManifest tm = load_manifest(train_manifest, Split::train);
      const DatasetManifest vm = load_manifest(val_manifest, Split::val);
      for (const auto& w : tm.warnings) std::cerr << "warning: " << w << "\n";
      ModelFlags mf = train_flags;
      if (!train_cmd->count("--classes")) {
        mf.classes = std::max(tm.class_count, vm.class_count);
      }
      const ModelConfig cfg = mf.config();
      std::cout << epoch_log_csv(recipe, {});
      const TrainResult result = train(recipe, tm, vm, cfg, options);
      write_checkpoint(ckpt_out, result.best);
      if (!log_out.empty()) write_text(log_out, epoch_log_csv(recipe, result.log));
      std::cout << "best_epoch " << result.best_epoch << " best_val_f1 " << result.best_val_f1
                << " checkpoint " << ckpt_out << "\n";
      return 0;
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_ckpt, eval_manifest, eval_batch, metrics_out, pr_out);
    }
    if (predict->parsed()) return cmd_predict(pred_ckpt, pred_signal);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
