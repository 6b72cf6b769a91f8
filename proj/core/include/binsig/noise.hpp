#pragma once

#include <string>
#include <vector>

#include "binsig/ingest.hpp"
#include "binsig/sigproc.hpp"

namespace binsig {

enum class NoisePath { image, signal };
enum class NoiseSource { resize, quantise, resize_plus_quantise };

const char* to_string(NoisePath p);
const char* to_string(NoiseSource s);

// mse == 0 exactly when snr_db == +infinity.
struct NoiseReport {
  NoisePath path;
  NoiseSource source;
  double mse = 0.0;
  double snr_db = 0.0;
};

double mse(const std::vector<double>& ref, const std::vector<double>& approx);

// 10·log10(Σ ref² / Σ (ref−approx)²), on whatever scale the inputs carry.
// The round-trip protocols below always compare on the raw 0–255 scale.
double snr_db(const std::vector<double>& ref, const std::vector<double>& approx);

// Signal path: normalise -> downsample -> (quantise at 0-255 scale) ->
// upsample -> compare with the original bytes.
std::vector<NoiseReport> roundtrip_signal_noise(const IntegerArray& arr, std::size_t target_len,
                                                const ResampleSpec& spec);

// Image path: heuristic reshape -> 2D resample -> (quantise) -> inverse 2D
// resample -> flatten -> truncate the reshape padding -> compare.
std::vector<NoiseReport> roundtrip_image_noise(const IntegerArray& arr, std::size_t out_rows,
                                               std::size_t out_cols, const ResampleSpec& spec);

struct NoiseConfig {
  std::size_t target_len = 65536;
  std::size_t image_rows = 256;
  std::size_t image_cols = 256;
  ResampleSpec spec;
  bool hexdump = false;  // parse manifest entries as .bytes hexdumps
};

struct CorpusNoiseRow {
  NoisePath path;
  NoiseSource source;
  double mean_mse = 0.0;
  double mean_snr_db = 0.0;
};

// Six rows (image/signal x resize/quantise/resize+quantise); per-file MSE
// and SNR(dB) are averaged arithmetically across the corpus.
struct CorpusNoiseTable {
  std::vector<CorpusNoiseRow> rows;
  std::vector<std::string> failures;  // unreadable files, reported not fatal
};

CorpusNoiseTable corpus_noise_table(const DatasetManifest& manifest, const NoiseConfig& config);

// "path,source,mean_mse,mean_snr_db" plus one row per (path, source).
std::string to_csv(const CorpusNoiseTable& table);

}  // namespace binsig
