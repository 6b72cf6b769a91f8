#include "binsig/sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "binsig/io.hpp"
#include "binsig/parallel.hpp"

namespace binsig {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

// Catmull-Rom (B=0, C=0.5)
double cubic_weight(double t) {
  const double a = std::abs(t);
  if (a < 1.0) return ((1.5 * a - 2.5) * a) * a + 1.0;
  if (a < 2.0) return (((-0.5 * a) + 2.5) * a - 4.0) * a + 2.0;
  return 0.0;
}

double linear_weight(double t) {
  const double a = std::abs(t);
  return a < 1.0 ? 1.0 - a : 0.0;
}

double base_support(const ResampleSpec& spec) {
  switch (spec.filter) {
    case Filter::lanczos: return static_cast<double>(spec.lanczos_a);
    case Filter::linear: return 1.0;
    case Filter::cubic: return 2.0;
    case Filter::nearest: return 0.5;
  }
  return 0.0;
}

double kernel_weight(const ResampleSpec& spec, double t) {
  switch (spec.filter) {
    case Filter::lanczos: return lanczos_weight(t, spec.lanczos_a);
    case Filter::linear: return linear_weight(t);
    case Filter::cubic: return cubic_weight(t);
    case Filter::nearest: return 1.0;  // handled by single-tap plans
  }
  return 0.0;
}

// Precomputed taps for one (src_len -> dst_len) mapping; reused across the
// rows/columns of a grid.
struct ResamplePlan {
  std::size_t src_len = 0;
  std::size_t dst_len = 0;
  std::vector<std::ptrdiff_t> first;   // first (unclamped) source index per output
  std::vector<std::size_t> offsets;    // weight range per output: [offsets[j], offsets[j+1])
  std::vector<double> weights;         // renormalised
};

ResamplePlan make_plan(std::size_t src_len, std::size_t dst_len, const ResampleSpec& spec) {
  if (src_len == 0) throw std::invalid_argument("resample: empty source");
  if (dst_len == 0) throw std::invalid_argument("resample: target length must be >= 1");
  if (spec.lanczos_a < 1) throw std::invalid_argument("resample: lanczos_a must be >= 1");

  ResamplePlan plan;
  plan.src_len = src_len;
  plan.dst_len = dst_len;
  plan.first.resize(dst_len);
  plan.offsets.resize(dst_len + 1, 0);

  const double scale = static_cast<double>(src_len) / static_cast<double>(dst_len);

  if (spec.filter == Filter::nearest) {
    plan.weights.assign(dst_len, 1.0);
    for (std::size_t j = 0; j < dst_len; ++j) {
      const double centre = (static_cast<double>(j) + 0.5) * scale - 0.5;
      plan.first[j] = static_cast<std::ptrdiff_t>(std::floor(centre + 0.5));
      plan.offsets[j + 1] = j + 1;
    }
    return plan;
  }

  const bool downsampling = dst_len < src_len;
  const double kscale = (spec.antialias && downsampling) ? scale : 1.0;
  const double support = base_support(spec) * kscale;

  for (std::size_t j = 0; j < dst_len; ++j) {
    const double centre = (static_cast<double>(j) + 0.5) * scale - 0.5;
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(centre - support));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(centre + support));
    plan.first[j] = lo;
    double sum = 0.0;
    const std::size_t begin = plan.weights.size();
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double w = kernel_weight(spec, (centre - static_cast<double>(i)) / kscale);
      plan.weights.push_back(w);
      sum += w;
    }
    if (sum == 0.0) {  // degenerate range; fall back to the nearest sample
      plan.weights.resize(begin);
      plan.first[j] = static_cast<std::ptrdiff_t>(std::floor(centre + 0.5));
      plan.weights.push_back(1.0);
    } else {
      for (std::size_t k = begin; k < plan.weights.size(); ++k) plan.weights[k] /= sum;
    }
    plan.offsets[j + 1] = plan.weights.size();
  }
  return plan;
}

// dst[j] = sum of plan weights over clamped source taps; src is strided so
// grid columns can reuse the same plan.
void apply_plan(const ResamplePlan& plan, const double* src, std::size_t src_stride, double* dst,
                std::size_t dst_stride) {
  const auto last = static_cast<std::ptrdiff_t>(plan.src_len) - 1;
  for (std::size_t j = 0; j < plan.dst_len; ++j) {
    double acc = 0.0;
    const std::ptrdiff_t first = plan.first[j];
    for (std::size_t k = plan.offsets[j]; k < plan.offsets[j + 1]; ++k) {
      std::ptrdiff_t i = first + static_cast<std::ptrdiff_t>(k - plan.offsets[j]);
      i = std::clamp<std::ptrdiff_t>(i, 0, last);
      acc += plan.weights[k] * src[static_cast<std::size_t>(i) * src_stride];
    }
    dst[j * dst_stride] = acc;
  }
}

}  // namespace

Filter filter_from_string(const std::string& name) {
  if (name == "lanczos") return Filter::lanczos;
  if (name == "nearest") return Filter::nearest;
  if (name == "linear") return Filter::linear;
  if (name == "cubic") return Filter::cubic;
  throw std::invalid_argument("unknown filter '" + name +
                              "' (expected lanczos|nearest|linear|cubic)");
}

const char* to_string(Filter f) {
  switch (f) {
    case Filter::lanczos: return "lanczos";
    case Filter::nearest: return "nearest";
    case Filter::linear: return "linear";
    case Filter::cubic: return "cubic";
  }
  return "?";
}

Signal minmax_normalize(const IntegerArray& arr) {
  if (arr.values.empty()) throw std::invalid_argument("minmax_normalize: empty input");
  Signal sig;
  sig.normalisation = Normalisation::unit_range;
  sig.samples.reserve(arr.values.size());
  for (const std::int32_t v : arr.values) sig.samples.push_back(static_cast<double>(v) / 255.0);
  return sig;
}

double lanczos_weight(double x, int a) {
  if (a < 1) throw std::invalid_argument("lanczos_weight: a must be >= 1");
  const double ax = std::abs(x);
  if (ax >= static_cast<double>(a)) return 0.0;
  return sinc(x) * sinc(x / static_cast<double>(a));
}

std::vector<double> resample_values(const std::vector<double>& src, std::size_t target_len,
                                    const ResampleSpec& spec) {
  const ResamplePlan plan = make_plan(src.size(), target_len, spec);
  std::vector<double> out(target_len);
  apply_plan(plan, src.data(), 1, out.data(), 1);
  return out;
}

Signal resample_1d(const Signal& sig, std::size_t target_len, const ResampleSpec& spec) {
  Signal out;
  out.normalisation = sig.normalisation;
  out.samples = resample_values(sig.samples, target_len, spec);
  return out;
}

std::size_t heuristic_width(std::size_t byte_count) {
  const std::size_t kb = 1024;
  if (byte_count < 10 * kb) return 32;
  if (byte_count < 30 * kb) return 64;
  if (byte_count < 60 * kb) return 128;
  if (byte_count < 100 * kb) return 256;
  if (byte_count < 200 * kb) return 384;
  if (byte_count < 500 * kb) return 512;
  if (byte_count < 1000 * kb) return 768;
  return 1024;
}

ByteGrid heuristic_reshape(const IntegerArray& arr) {
  if (arr.values.empty()) throw std::invalid_argument("heuristic_reshape: empty input");
  ByteGrid grid;
  grid.cols = heuristic_width(arr.values.size());
  grid.rows = (arr.values.size() + grid.cols - 1) / grid.cols;
  grid.cells.assign(grid.rows * grid.cols, 0.0);
  for (std::size_t i = 0; i < arr.values.size(); ++i) {
    grid.cells[i] = static_cast<double>(arr.values[i]);
  }
  return grid;
}

ByteGrid resample_2d(const ByteGrid& grid, std::size_t out_rows, std::size_t out_cols,
                     const ResampleSpec& spec) {
  if (grid.rows == 0 || grid.cols == 0) throw std::invalid_argument("resample_2d: empty grid");
  if (out_rows == 0 || out_cols == 0) {
    throw std::invalid_argument("resample_2d: output dims must be >= 1");
  }

  // Row pass
  ByteGrid mid;
  mid.rows = grid.rows;
  mid.cols = out_cols;
  mid.cells.resize(mid.rows * mid.cols);
  {
    const ResamplePlan plan = make_plan(grid.cols, out_cols, spec);
    parallel_for(grid.rows, [&](std::size_t begin, std::size_t end) {
      for (std::size_t r = begin; r < end; ++r) {
        apply_plan(plan, grid.cells.data() + r * grid.cols, 1, mid.cells.data() + r * mid.cols, 1);
      }
    });
  }

  // Column pass
  ByteGrid out;
  out.rows = out_rows;
  out.cols = out_cols;
  out.cells.resize(out.rows * out.cols);
  {
    const ResamplePlan plan = make_plan(grid.rows, out_rows, spec);
    parallel_for(out_cols, [&](std::size_t begin, std::size_t end) {
      for (std::size_t c = begin; c < end; ++c) {
        apply_plan(plan, mid.cells.data() + c, mid.cols, out.cells.data() + c, out.cols);
      }
    });
  }
  return out;
}

int quantize_clip(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("quantize_clip: non-finite value");
  const double r = std::nearbyint(value);  // default FE_TONEAREST: ties to even
  return static_cast<int>(std::clamp(r, 0.0, 255.0));
}

std::vector<int> quantize_clip(const std::vector<double>& values) {
  std::vector<int> out;
  out.reserve(values.size());
  for (const double v : values) out.push_back(quantize_clip(v));
  return out;
}

CorpusStats compute_corpus_stats(const DatasetManifest& manifest) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& entry : manifest.entries) {
    const SignalFileData data = read_signal_file(entry.signal_path);
    for (const float v : data.samples) sum += static_cast<double>(v);
    count += data.samples.size();
  }
  if (count == 0) throw std::runtime_error("compute_corpus_stats: empty corpus");
  const double mean = sum / static_cast<double>(count);

  double sq = 0.0;
  for (const auto& entry : manifest.entries) {
    const SignalFileData data = read_signal_file(entry.signal_path);
    for (const float v : data.samples) {
      const double d = static_cast<double>(v) - mean;
      sq += d * d;
    }
  }
  const double var = sq / static_cast<double>(count);
  if (var <= 0.0) throw std::runtime_error("compute_corpus_stats: degenerate corpus (std = 0)");
  return CorpusStats{mean, std::sqrt(var)};
}

Signal znormalize(const Signal& sig, const CorpusStats& stats) {
  if (stats.std <= 0.0) throw std::invalid_argument("znormalize: std must be positive");
  Signal out;
  out.normalisation = Normalisation::z_normalised;
  out.samples.reserve(sig.samples.size());
  for (const double v : sig.samples) out.samples.push_back((v - stats.mean) / stats.std);
  return out;
}

}  // namespace binsig
