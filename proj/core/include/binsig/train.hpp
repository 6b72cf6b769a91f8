#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "binsig/checkpoint.hpp"
#include "binsig/io.hpp"
#include "binsig/metrics.hpp"
#include "binsig/model.hpp"

namespace binsig {

enum class RecipeKind { standard, improved };

struct Recipe {
  RecipeKind kind = RecipeKind::standard;
  double learning_rate = 0.001;
  int batch_size = 64;
  int epochs = 100;
  double weight_decay = 0.0;
  double label_smoothing_alpha = 0.0;
  double class_balance_strength = 0.0;
  int finetune_epochs = 0;
  double finetune_lr_divisor = 10.0;
  int warmup_epochs = 0;
  std::uint64_t seed = 0;

  // 100 epochs, Adam at 0.001, batch 64, no regularisers.
  static Recipe standard();
  // 50 epochs with weight decay 0.005, label smoothing 0.1, class balance
  // 0.5 and a warm-up cosine schedule, then 10 fine-tune epochs at lr/10
  // with the class weights removed.
  static Recipe improved();
};

const char* to_string(RecipeKind k);

// How the balancing strength maps counts to weights. The exponent form is
// the default: w_c = (N / (C * n_c))^strength, so 0 is off and 1 is full
// inverse frequency. The linear form interpolates inverse-frequency weights
// toward uniform instead.
enum class BalanceMode { exponent, linear };

std::vector<double> class_weights(const DatasetManifest& manifest, double strength,
                                  BalanceMode mode = BalanceMode::exponent);

// mean over the batch of w_label * sum_c target_c * (-log softmax_c), with
// target = (1-alpha) * one_hot + alpha / C.
template <typename T>
Tensor<T> smoothed_weighted_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                                          double alpha, const std::vector<double>& weights) {
  if (logits.rank() != 2) {
    throw std::invalid_argument("cross_entropy: expected [B,C] logits, got " +
                                shape_str(logits.shape()));
  }
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  if (labels.size() != B) throw std::invalid_argument("cross_entropy: batch/label size mismatch");
  if (weights.size() != C) throw std::invalid_argument("cross_entropy: weights must have C entries");
  if (alpha < 0.0 || alpha >= 1.0) throw std::invalid_argument("cross_entropy: alpha in [0,1)");
  std::vector<T> target(B * C);
  for (std::size_t b = 0; b < B; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= C) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " out of range [0," +
                              std::to_string(C) + ")");
    }
    const double w = weights[static_cast<std::size_t>(y)];
    for (std::size_t c = 0; c < C; ++c) {
      const double t = (static_cast<std::size_t>(y) == c ? 1.0 - alpha : 0.0) +
                       alpha / static_cast<double>(C);
      target[b * C + c] = static_cast<T>(w * t);
    }
  }
  Tensor<T> logp = log_softmax(logits);
  Tensor<T> weighted = mul(logp, Tensor<T>::from_vector({B, C}, std::move(target)));
  return scale(sum(weighted), static_cast<T>(-1.0 / static_cast<double>(B)));
}

struct AdamHParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam update followed by decoupled weight decay:
// p <- p * (1 - lr * weight_decay). step is 1-based.
template <typename T>
void adam_step(std::span<T> values, std::span<const T> grads, std::vector<T>& m, std::vector<T>& v,
               std::int64_t step, double lr, double weight_decay, AdamHParams hp = {}) {
  if (m.size() != values.size()) m.assign(values.size(), T(0));
  if (v.size() != values.size()) v.assign(values.size(), T(0));
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    const double mi = hp.beta1 * static_cast<double>(m[i]) + (1.0 - hp.beta1) * g;
    const double vi = hp.beta2 * static_cast<double>(v[i]) + (1.0 - hp.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    double p = static_cast<double>(values[i]) - lr * mhat / (std::sqrt(vhat) + hp.epsilon);
    p *= 1.0 - lr * weight_decay;
    values[i] = static_cast<T>(p);
  }
}

// Learning rate as a function of the fraction of the main phase. The
// improved recipe warms up linearly from 0 over warmup_epochs, then follows
// a cosine to 0 at the end of the main phase; the standard recipe is
// constant. The fine-tune phase runs at learning_rate / finetune_lr_divisor.
double lr_at(const Recipe& recipe, double epoch_fraction);

struct EpochLog {
  int epoch = 0;
  std::string phase;  // "main" or "finetune"
  double lr = 0.0;
  double train_loss = 0.0;
  double val_f1 = 0.0;
  double val_precision = 0.0;
  double val_recall = 0.0;
};

// Run header plus "epoch,phase,lr,train_loss,val_f1,val_precision,val_recall".
std::string epoch_log_csv(const Recipe& recipe, const std::vector<EpochLog>& log);

struct TrainOptions {
  BalanceMode balance_mode = BalanceMode::exponent;
  bool verbose = false;  // per-epoch line on stderr
};

struct TrainResult {
  Checkpoint best;  // tensors at the best validation macro-F1
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_f1 = 0.0;
  CorpusStats stats;
};

TrainResult train(const Recipe& recipe, const DatasetManifest& train_manifest,
                  const DatasetManifest& val_manifest, const ModelConfig& config,
                  const TrainOptions& options = {});

struct EvalOutput {
  ConfusionMatrix cm;
  std::vector<int> predictions;
  std::vector<std::vector<float>> probabilities;  // softmax per sample
};

EvalOutput evaluate_signals(const Model<float>& model,
                            const std::vector<SignalFileData>& signals,
                            const std::vector<int>& labels, int batch_size);

// Loads every manifest entry, checking lengths against expected_length.
std::vector<SignalFileData> load_signals(const DatasetManifest& manifest,
                                         std::size_t expected_length);

}  // namespace binsig
