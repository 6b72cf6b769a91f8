#include "binsig/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

namespace binsig {

Recipe Recipe::standard() {
  Recipe r;
  r.kind = RecipeKind::standard;
  r.learning_rate = 0.001;
  r.batch_size = 64;
  r.epochs = 100;
  return r;
}

Recipe Recipe::improved() {
  Recipe r;
  r.kind = RecipeKind::improved;
  r.learning_rate = 0.001;
  r.batch_size = 64;
  r.epochs = 50;
  r.weight_decay = 0.005;
  r.label_smoothing_alpha = 0.1;
  r.class_balance_strength = 0.5;
  r.finetune_epochs = 10;
  r.finetune_lr_divisor = 10.0;
  r.warmup_epochs = 5;
  return r;
}

const char* to_string(RecipeKind k) { return k == RecipeKind::standard ? "standard" : "improved"; }

std::vector<double> class_weights(const DatasetManifest& manifest, double strength,
                                  BalanceMode mode) {
  std::vector<std::int64_t> counts(manifest.class_count, 0);
  for (const auto& e : manifest.entries) counts[static_cast<std::size_t>(e.label)]++;
  const double total = static_cast<double>(manifest.entries.size());
  const double classes = static_cast<double>(manifest.class_count);
  std::vector<double> weights(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("class_weights: class " + std::to_string(c) + " has no samples");
    }
    const double inv_freq = total / (classes * static_cast<double>(counts[c]));
    weights[c] = mode == BalanceMode::exponent ? std::pow(inv_freq, strength)
                                               : 1.0 + strength * (inv_freq - 1.0);
  }
  return weights;
}

double lr_at(const Recipe& recipe, double epoch_fraction) {
  if (epoch_fraction < 0.0 || epoch_fraction > 1.0) {
    throw std::invalid_argument("lr_at: epoch_fraction must lie in [0,1]");
  }
  if (recipe.kind == RecipeKind::standard) return recipe.learning_rate;
  const double warm = recipe.epochs > 0
                          ? static_cast<double>(recipe.warmup_epochs) / recipe.epochs
                          : 0.0;
  if (warm > 0.0 && epoch_fraction < warm) {
    return recipe.learning_rate * epoch_fraction / warm;
  }
  const double span = 1.0 - warm;
  const double t = span > 0.0 ? (epoch_fraction - warm) / span : 1.0;
  return recipe.learning_rate * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t));
}

std::string epoch_log_csv(const Recipe& recipe, const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out.precision(10);
  out << "# recipe=" << to_string(recipe.kind) << " learning_rate=" << recipe.learning_rate
      << " batch_size=" << recipe.batch_size << " epochs=" << recipe.epochs
      << " weight_decay=" << recipe.weight_decay
      << " label_smoothing_alpha=" << recipe.label_smoothing_alpha
      << " class_balance_strength=" << recipe.class_balance_strength
      << " finetune_epochs=" << recipe.finetune_epochs
      << " finetune_lr_divisor=" << recipe.finetune_lr_divisor
      << " warmup_epochs=" << recipe.warmup_epochs << " seed=" << recipe.seed << "\n";
  out << "epoch,phase,lr,train_loss,val_f1,val_precision,val_recall\n";
  for (const auto& row : log) {
    out << row.epoch << "," << row.phase << "," << row.lr << "," << row.train_loss << ","
        << row.val_f1 << "," << row.val_precision << "," << row.val_recall << "\n";
  }
  return out.str();
}

std::vector<SignalFileData> load_signals(const DatasetManifest& manifest,
                                         std::size_t expected_length) {
  std::vector<SignalFileData> signals;
  signals.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    SignalFileData data = read_signal_file(e.signal_path);
    if (data.samples.size() != expected_length) {
      throw std::runtime_error("signal length mismatch: '" + e.signal_path + "' has " +
                               std::to_string(data.samples.size()) +
                               " samples, model expects " + std::to_string(expected_length));
    }
    signals.push_back(std::move(data));
  }
  return signals;
}

namespace {

TensorF make_batch(const std::vector<SignalFileData>& signals, std::span<const std::size_t> idx) {
  const std::size_t B = idx.size();
  const std::size_t L = signals[idx[0]].samples.size();
  std::vector<float> data(B * L);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& s = signals[idx[b]].samples;
    std::copy(s.begin(), s.end(), data.begin() + b * L);
  }
  return TensorF::from_vector({B, 1, L}, std::move(data));
}

bool batch_normalized(const std::vector<SignalFileData>& signals) {
  const bool z = signals.front().z_normalised;
  for (const auto& s : signals) {
    if (s.z_normalised != z) {
      throw std::runtime_error("corpus mixes z-normalised and unit-range signal files");
    }
  }
  return z;
}

std::vector<float> softmax_row(std::span<const float> logits) {
  float m = logits[0];
  for (const float v : logits) m = std::max(m, v);
  double z = 0.0;
  std::vector<float> probs(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) z += std::exp(static_cast<double>(logits[i] - m));
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = static_cast<float>(std::exp(static_cast<double>(logits[i] - m)) / z);
  }
  return probs;
}

}  // namespace

EvalOutput evaluate_signals(const Model<float>& model, const std::vector<SignalFileData>& signals,
                            const std::vector<int>& labels, int batch_size) {
  if (signals.empty() || signals.size() != labels.size()) {
    throw std::invalid_argument("evaluate_signals: empty corpus or label mismatch");
  }
  const bool normalized = batch_normalized(signals);
  const int classes = model.plan.head.class_count;
  EvalOutput out{ConfusionMatrix(classes), {}, {}};
  std::vector<std::size_t> order(signals.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t begin = 0; begin < order.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(batch_size));
    const std::span<const std::size_t> idx(order.data() + begin, end - begin);
    TensorF logits = model.forward(make_batch(signals, idx), normalized);
    const auto lv = logits.values();
    const std::size_t C = logits.dim(1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const std::span<const float> row(lv.data() + b * C, C);
      int pred = 0;
      for (std::size_t c = 1; c < C; ++c) {
        if (row[c] > row[pred]) pred = static_cast<int>(c);
      }
      out.predictions.push_back(pred);
      out.probabilities.push_back(softmax_row(row));
      out.cm.add(labels[idx[b]], pred);
    }
  }
  return out;
}

TrainResult train(const Recipe& recipe, const DatasetManifest& train_manifest,
                  const DatasetManifest& val_manifest, const ModelConfig& config,
                  const TrainOptions& options) {
  if (train_manifest.entries.empty() || val_manifest.entries.empty()) {
    throw std::invalid_argument("train: manifests must be non-empty");
  }
  const auto train_signals = load_signals(train_manifest, config.input_length);
  const auto val_signals = load_signals(val_manifest, config.input_length);
  const bool normalized_files = batch_normalized(train_signals);

  std::vector<int> train_labels, val_labels;
  for (const auto& e : train_manifest.entries) train_labels.push_back(e.label);
  for (const auto& e : val_manifest.entries) val_labels.push_back(e.label);

  ModelF model = ModelF::build(config, recipe.seed);
  if (!normalized_files) {
    const CorpusStats stats = compute_corpus_stats(train_manifest);
    model.set_input_stats(stats.mean, stats.std);
  }

  TrainResult result;
  result.stats = {static_cast<double>(model.input_mean.values()[0]),
                  static_cast<double>(model.input_std.values()[0])};
  result.best = checkpoint_from_model(model);
  result.best_val_f1 = -1.0;

  auto params = model.parameters();
  std::vector<std::vector<float>> adam_m(params.size()), adam_v(params.size());
  std::int64_t adam_t = 0;

  Rng shuffle_rng(recipe.seed ^ 0x5DEECE66Dull);
  std::vector<std::size_t> order(train_signals.size());
  std::iota(order.begin(), order.end(), 0);

  const std::vector<double> uniform(config.class_count, 1.0);
  const std::vector<double> balanced =
      recipe.class_balance_strength != 0.0
          ? class_weights(train_manifest, recipe.class_balance_strength, options.balance_mode)
          : uniform;

  const auto run_epoch = [&](int epoch, const std::string& phase, double lr,
                             const std::vector<double>& weights) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(recipe.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(recipe.batch_size));
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      std::vector<int> labels(idx.size());
      for (std::size_t b = 0; b < idx.size(); ++b) labels[b] = train_labels[idx[b]];

      for (auto& p : params) p.zero_grad();
      TensorF logits = model.forward(make_batch(train_signals, idx), normalized_files);
      TensorF loss = smoothed_weighted_cross_entropy(logits, labels,
                                                     recipe.label_smoothing_alpha, weights);
      loss.backward();
      ++adam_t;
      for (std::size_t p = 0; p < params.size(); ++p) {
        adam_step<float>(params[p].mutable_values(), params[p].grad(), adam_m[p], adam_v[p],
                         adam_t, lr, recipe.weight_decay);
      }
      loss_sum += static_cast<double>(loss.item());
      ++batches;
    }

    const EvalOutput eval = evaluate_signals(model, val_signals, val_labels, recipe.batch_size);
    const MacroScores scores = macro_scores(eval.cm);
    EpochLog row;
    row.epoch = epoch;
    row.phase = phase;
    row.lr = lr;
    row.train_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
    row.val_f1 = scores.f1;
    row.val_precision = scores.precision;
    row.val_recall = scores.recall;
    result.log.push_back(row);
    if (options.verbose) {
      std::cerr << "epoch " << epoch << " [" << phase << "] lr=" << lr
                << " loss=" << row.train_loss << " val_f1=" << scores.f1 << "\n";
    }
    if (scores.f1 > result.best_val_f1) {  // ties keep the earlier epoch
      result.best_val_f1 = scores.f1;
      result.best_epoch = epoch;
      result.best = checkpoint_from_model(model);
    }
  };

  for (int epoch = 0; epoch < recipe.epochs; ++epoch) {
    const double fraction =
        recipe.epochs > 0 ? static_cast<double>(epoch) / recipe.epochs : 0.0;
    run_epoch(epoch, "main", lr_at(recipe, fraction), balanced);
  }
  if (recipe.kind == RecipeKind::improved) {
    const double ft_lr = recipe.learning_rate / recipe.finetune_lr_divisor;
    for (int e = 0; e < recipe.finetune_epochs; ++e) {
      run_epoch(recipe.epochs + e, "finetune", ft_lr, uniform);
    }
  }
  return result;
}

}  // namespace binsig
