#pragma once

#include <cstddef>
#include <vector>

#include "binsig/ingest.hpp"

namespace binsig {

enum class Normalisation { unit_range, z_normalised };

// 1D floating-point representation of a binary. The signal path never
// quantises: unit_range samples sit in a band around [0,1] that Lanczos
// overshoot may exceed slightly, and they are never clipped.
struct Signal {
  std::vector<double> samples;
  Normalisation normalisation = Normalisation::unit_range;
  std::size_t length() const { return samples.size(); }
};

enum class Filter { lanczos, nearest, linear, cubic };

Filter filter_from_string(const std::string& name);
const char* to_string(Filter f);

struct ResampleSpec {
  Filter filter = Filter::lanczos;
  int lanczos_a = 3;
  // Scales the kernel support by the downsampling ratio. Applies to
  // lanczos/linear/cubic; nearest always samples a single tap.
  bool antialias = true;
};

// Row-major grid of byte values (0..255 as reals). Cells past the source
// length are zero padding.
struct ByteGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cells;
  double at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
};

// Training-set mean/std over the concatenation of all signals
// (population convention).
struct CorpusStats {
  double mean = 0.0;
  double std = 1.0;
};

// sample i = value i / 255
Signal minmax_normalize(const IntegerArray& arr);

// L(x) = sinc(x)·sinc(x/a) for |x| < a, else 0
double lanczos_weight(double x, int a);

// Core routine shared by the 1D and 2D paths. Output sample j draws from
// source coordinate (j+0.5)·(src/target) − 0.5; out-of-range taps clamp to
// the edge samples and per-output weights are renormalised to sum to 1.
std::vector<double> resample_values(const std::vector<double>& src, std::size_t target_len,
                                    const ResampleSpec& spec);

Signal resample_1d(const Signal& sig, std::size_t target_len, const ResampleSpec& spec);

// Byteplot width rule: a step function of file size.
std::size_t heuristic_width(std::size_t byte_count);
ByteGrid heuristic_reshape(const IntegerArray& arr);

// Separable resize: rows first, then columns, through resample_values.
ByteGrid resample_2d(const ByteGrid& grid, std::size_t out_rows, std::size_t out_cols,
                     const ResampleSpec& spec);

// Round half to even, clip to [0, 255].
std::vector<int> quantize_clip(const std::vector<double>& values);
int quantize_clip(double value);

// Two-pass (sum, then squared deviation) over every sample of every signal
// in the manifest, in manifest order.
CorpusStats compute_corpus_stats(const DatasetManifest& manifest);

Signal znormalize(const Signal& sig, const CorpusStats& stats);

}  // namespace binsig
