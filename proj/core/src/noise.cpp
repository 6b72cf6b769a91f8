#include "binsig/noise.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "binsig/parallel.hpp"

namespace binsig {

namespace {

std::vector<double> to_doubles(const IntegerArray& arr) {
  return std::vector<double>(arr.values.begin(), arr.values.end());
}

std::vector<double> scaled(const std::vector<double>& v, double c) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * c;
  return out;
}

std::vector<double> quantized_doubles(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(quantize_clip(v[i]));
  return out;
}

}  // namespace

const char* to_string(NoisePath p) { return p == NoisePath::image ? "image" : "signal"; }

const char* to_string(NoiseSource s) {
  switch (s) {
    case NoiseSource::resize: return "resize";
    case NoiseSource::quantise: return "quantise";
    case NoiseSource::resize_plus_quantise: return "resize_plus_quantise";
  }
  return "?";
}

double mse(const std::vector<double>& ref, const std::vector<double>& approx) {
  if (ref.size() != approx.size()) {
    throw std::invalid_argument("mse: length mismatch (" + std::to_string(ref.size()) + " vs " +
                                std::to_string(approx.size()) + ")");
  }
  if (ref.empty()) throw std::invalid_argument("mse: empty sequences");
  double acc = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref[i] - approx[i];
    acc += d * d;
  }
  return acc / static_cast<double>(ref.size());
}

double snr_db(const std::vector<double>& ref, const std::vector<double>& approx) {
  if (ref.size() != approx.size()) {
    throw std::invalid_argument("snr_db: length mismatch (" + std::to_string(ref.size()) +
                                " vs " + std::to_string(approx.size()) + ")");
  }
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    sig += ref[i] * ref[i];
    const double d = ref[i] - approx[i];
    err += d * d;
  }
  if (sig == 0.0) throw std::invalid_argument("snr_db: all-zero reference");
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sig / err);
}

std::vector<NoiseReport> roundtrip_signal_noise(const IntegerArray& arr, std::size_t target_len,
                                                const ResampleSpec& spec) {
  if (arr.values.empty()) throw std::invalid_argument("roundtrip_signal_noise: empty input");
  const std::vector<double> original = to_doubles(arr);

  const Signal norm = minmax_normalize(arr);
  const std::vector<double> down = resample_values(norm.samples, target_len, spec);
  const std::vector<double> down255 = scaled(down, 255.0);

  // resize: original vs up(down) on the 0-255 scale
  const std::vector<double> up = resample_values(down, arr.values.size(), spec);
  NoiseReport resize{NoisePath::signal, NoiseSource::resize, 0.0, 0.0};
  {
    const std::vector<double> up255 = scaled(up, 255.0);
    resize.mse = mse(original, up255);
    resize.snr_db = snr_db(original, up255);
  }

  // quantise: downsampled float signal vs its quantisation
  const std::vector<double> q = quantized_doubles(down255);
  NoiseReport quant{NoisePath::signal, NoiseSource::quantise, mse(down255, q),
                    snr_db(down255, q)};

  // resize+quantise: original vs up(quantised down)
  const std::vector<double> up_q = resample_values(q, arr.values.size(), spec);
  NoiseReport both{NoisePath::signal, NoiseSource::resize_plus_quantise, mse(original, up_q),
                   snr_db(original, up_q)};

  return {resize, quant, both};
}

std::vector<NoiseReport> roundtrip_image_noise(const IntegerArray& arr, std::size_t out_rows,
                                               std::size_t out_cols, const ResampleSpec& spec) {
  if (arr.values.empty()) throw std::invalid_argument("roundtrip_image_noise: empty input");
  const std::vector<double> original = to_doubles(arr);
  const ByteGrid grid = heuristic_reshape(arr);

  const ByteGrid down = resample_2d(grid, out_rows, out_cols, spec);

  // Padding cells introduced by the reshape are excluded from comparison.
  const auto flatten_truncate = [&](const ByteGrid& g) {
    std::vector<double> flat(g.cells.begin(), g.cells.begin() + arr.values.size());
    return flat;
  };

  const ByteGrid up = resample_2d(down, grid.rows, grid.cols, spec);
  NoiseReport resize{NoisePath::image, NoiseSource::resize, 0.0, 0.0};
  {
    const std::vector<double> flat = flatten_truncate(up);
    resize.mse = mse(original, flat);
    resize.snr_db = snr_db(original, flat);
  }

  const std::vector<double> q = quantized_doubles(down.cells);
  NoiseReport quant{NoisePath::image, NoiseSource::quantise, mse(down.cells, q),
                    snr_db(down.cells, q)};

  ByteGrid down_q = down;
  down_q.cells = q;
  const ByteGrid up_q = resample_2d(down_q, grid.rows, grid.cols, spec);
  NoiseReport both{NoisePath::image, NoiseSource::resize_plus_quantise, 0.0, 0.0};
  {
    const std::vector<double> flat = flatten_truncate(up_q);
    both.mse = mse(original, flat);
    both.snr_db = snr_db(original, flat);
  }

  return {resize, quant, both};
}

CorpusNoiseTable corpus_noise_table(const DatasetManifest& manifest, const NoiseConfig& config) {
  struct FileResult {
    bool ok = false;
    std::string error;
    std::vector<NoiseReport> reports;  // image x3, then signal x3
  };
  std::vector<FileResult> results(manifest.entries.size());

  parallel_for(manifest.entries.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::string& path = manifest.entries[i].signal_path;
      try {
        const ByteSequence seq =
            config.hexdump ? parse_hexdump_bytes(path) : load_raw_binary(path);
        const IntegerArray arr = bytes_to_integer_array(seq);
        auto image =
            roundtrip_image_noise(arr, config.image_rows, config.image_cols, config.spec);
        auto signal = roundtrip_signal_noise(arr, config.target_len, config.spec);
        results[i].reports = std::move(image);
        results[i].reports.insert(results[i].reports.end(), signal.begin(), signal.end());
        results[i].ok = true;
      } catch (const std::exception& e) {
        results[i].error = path + ": " + e.what();
      }
    }
  });

  CorpusNoiseTable table;
  const NoisePath paths[2] = {NoisePath::image, NoisePath::signal};
  const NoiseSource sources[3] = {NoiseSource::resize, NoiseSource::quantise,
                                  NoiseSource::resize_plus_quantise};
  double sum_mse[6] = {};
  double sum_snr[6] = {};
  std::size_t ok_count = 0;
  for (const auto& res : results) {  // ordered fold, manifest order
    if (!res.ok) {
      table.failures.push_back(res.error);
      continue;
    }
    ++ok_count;
    for (std::size_t k = 0; k < 6; ++k) {
      sum_mse[k] += res.reports[k].mse;
      sum_snr[k] += res.reports[k].snr_db;
    }
  }
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t s = 0; s < 3; ++s) {
      const std::size_t k = p * 3 + s;
      CorpusNoiseRow row;
      row.path = paths[p];
      row.source = sources[s];
      if (ok_count > 0) {
        row.mean_mse = sum_mse[k] / static_cast<double>(ok_count);
        row.mean_snr_db = sum_snr[k] / static_cast<double>(ok_count);
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

std::string to_csv(const CorpusNoiseTable& table) {
  std::ostringstream out;
  out << "path,source,mean_mse,mean_snr_db\n";
  out.precision(10);
  for (const auto& row : table.rows) {
    out << to_string(row.path) << "," << to_string(row.source) << "," << row.mean_mse << ",";
    if (std::isinf(row.mean_snr_db)) {
      out << (row.mean_snr_db > 0 ? "inf" : "-inf");
    } else {
      out << row.mean_snr_db;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace binsig
