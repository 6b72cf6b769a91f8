#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "binsig/ingest.hpp"
#include "binsig/io.hpp"
#include "binsig/rng.hpp"
#include "binsig/sigproc.hpp"

namespace testsupport {

// Scratch directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    base_ = std::filesystem::temp_directory_path() /
            ("binsig_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(base_);
    std::filesystem::create_directories(base_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(base_, ec);
  }
  std::string path(const std::string& name) const { return (base_ / name).string(); }
  const std::filesystem::path& root() const { return base_; }

 private:
  std::filesystem::path base_;
};

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// Multi-section byte texture: constant runs, periodic patterns, ramps,
// noise and ASCII-like stretches, mimicking the section structure of real
// binaries.
inline std::vector<std::uint8_t> sectioned_binary(binsig::Rng& rng, std::size_t min_bytes,
                                                  std::size_t max_bytes) {
  const std::size_t total =
      min_bytes + static_cast<std::size_t>(rng.below(max_bytes - min_bytes + 1));
  std::vector<std::uint8_t> bytes;
  bytes.reserve(total);
  while (bytes.size() < total) {
    const std::size_t section =
        std::min(total - bytes.size(), 2048 + static_cast<std::size_t>(rng.below(38 * 1024)));
    switch (rng.below(5)) {
      case 0: {  // padding
        const std::uint8_t v = rng.below(4) == 0 ? static_cast<std::uint8_t>(rng.below(256)) : 0;
        bytes.insert(bytes.end(), section, v);
        break;
      }
      case 1: {  // periodic texture
        const std::size_t period = 2 + rng.below(63);
        const std::uint8_t hi = static_cast<std::uint8_t>(128 + rng.below(128));
        const std::uint8_t lo = static_cast<std::uint8_t>(rng.below(128));
        for (std::size_t i = 0; i < section; ++i) {
          bytes.push_back(i % period < period / 2 ? hi : lo);
        }
        break;
      }
      case 2: {  // ramp
        std::uint8_t v = static_cast<std::uint8_t>(rng.below(256));
        const int step = rng.below(2) == 0 ? 1 : -1;
        for (std::size_t i = 0; i < section; ++i) {
          bytes.push_back(v);
          v = static_cast<std::uint8_t>(v + step);
        }
        break;
      }
      case 3: {  // noise
        for (std::size_t i = 0; i < section; ++i) {
          bytes.push_back(static_cast<std::uint8_t>(rng.below(256)));
        }
        break;
      }
      default: {  // text-like
        for (std::size_t i = 0; i < section; ++i) {
          bytes.push_back(static_cast<std::uint8_t>(32 + rng.below(95)));
        }
        break;
      }
    }
  }
  bytes.resize(total);
  return bytes;
}

// Two classes separated by their dominant byte-texture period. Source
// binaries are 4x the signal length so Lanczos downsampling is exercised.
inline std::vector<std::uint8_t> texture_class_binary(binsig::Rng& rng, int label,
                                                      std::size_t signal_length) {
  const std::size_t total = signal_length * 4;
  const std::size_t period = label == 0 ? 64 : 256;
  const std::size_t phase = rng.below(period);
  std::vector<std::uint8_t> bytes(total);
  for (std::size_t i = 0; i < total; ++i) {
    const bool high = ((i + phase) % period) < period / 2;
    const int base = high ? 200 : 55;
    const int jitter = static_cast<int>(rng.below(41)) - 20;
    int v = base + jitter;
    if (v < 0) v = 0;
    if (v > 255) v = 255;
    bytes[i] = static_cast<std::uint8_t>(v);
  }
  return bytes;
}

struct TextureDataset {
  std::string train_manifest;
  std::string val_manifest;
};

// Writes signal files plus train/val manifests under dir.
inline TextureDataset make_texture_dataset(const TempDir& dir, int train_per_class,
                                           int val_per_class, std::size_t signal_length,
                                           std::uint64_t seed) {
  binsig::Rng rng(seed);
  binsig::ResampleSpec spec;
  std::ofstream train_csv(dir.path("train.csv")), val_csv(dir.path("val.csv"));
  train_csv << "path,label\n";
  val_csv << "path,label\n";
  int file_id = 0;
  const auto emit = [&](std::ofstream& csv, int label) {
    const auto bytes = texture_class_binary(rng, label, signal_length);
    binsig::IntegerArray arr;
    arr.values.assign(bytes.begin(), bytes.end());
    const binsig::Signal sig =
        binsig::resample_1d(binsig::minmax_normalize(arr), signal_length, spec);
    const std::string name = "sig_" + std::to_string(file_id++) + ".1ds";
    binsig::write_signal_file(dir.path(name), sig);
    csv << name << "," << label << "\n";
  };
  for (int i = 0; i < train_per_class; ++i) {
    emit(train_csv, 0);
    emit(train_csv, 1);
  }
  for (int i = 0; i < val_per_class; ++i) {
    emit(val_csv, 0);
    emit(val_csv, 1);
  }
  return {dir.path("train.csv"), dir.path("val.csv")};
}

// Brute-force kernel-sum oracle for resample_values, written from the grid
// convention definition: centre
// (j+0.5)*src/target-0.5, taps clamped to the edges, weights renormalised.
// Kept independent of the ResamplePlan machinery in the library.
inline std::vector<double> resample_oracle(const std::vector<double>& src, std::size_t target,
                                           const binsig::ResampleSpec& spec) {
  using binsig::Filter;
  const auto kernel = [&](double t) -> double {
    switch (spec.filter) {
      case Filter::lanczos: return binsig::lanczos_weight(t, spec.lanczos_a);
      case Filter::linear: {
        const double a = std::abs(t);
        return a < 1.0 ? 1.0 - a : 0.0;
      }
      case Filter::cubic: {
        const double a = std::abs(t);
        if (a < 1.0) return 1.5 * a * a * a - 2.5 * a * a + 1.0;
        if (a < 2.0) return -0.5 * a * a * a + 2.5 * a * a - 4.0 * a + 2.0;
        return 0.0;
      }
      case Filter::nearest: return 0.0;  // handled below
    }
    return 0.0;
  };
  const double base = spec.filter == Filter::lanczos ? spec.lanczos_a
                      : spec.filter == Filter::cubic ? 2.0
                                                     : 1.0;
  const double scale = static_cast<double>(src.size()) / static_cast<double>(target);
  std::vector<double> out(target);
  for (std::size_t j = 0; j < target; ++j) {
    const double centre = (j + 0.5) * scale - 0.5;
    if (spec.filter == Filter::nearest) {
      auto i = static_cast<std::ptrdiff_t>(std::floor(centre + 0.5));
      i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(src.size()) - 1);
      out[j] = src[static_cast<std::size_t>(i)];
      continue;
    }
    const double ks = (spec.antialias && target < src.size()) ? scale : 1.0;
    const double support = base * ks;
    double num = 0.0, den = 0.0;
    for (auto i = static_cast<std::ptrdiff_t>(std::ceil(centre - support));
         i <= static_cast<std::ptrdiff_t>(std::floor(centre + support)); ++i) {
      const double w = kernel((centre - static_cast<double>(i)) / ks);
      const auto ci = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(src.size()) - 1);
      num += w * src[static_cast<std::size_t>(ci)];
      den += w;
    }
    out[j] = num / den;
  }
  return out;
}

}  // namespace testsupport
