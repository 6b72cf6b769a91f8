#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "binsig/ingest.hpp"
#include "binsig/sigproc.hpp"

namespace binsig {

// On-disk signal format (little-endian regardless of host):
//   magic "1DSG" | version u8 (=1) | flags u8 (bit 0: z-normalised)
//   reserved u16 (=0) | length u64 | length x f32 samples
struct SignalFileData {
  std::vector<float> samples;
  bool z_normalised = false;
};

void write_signal_file(const std::string& path, std::span<const float> samples,
                       bool z_normalised);
void write_signal_file(const std::string& path, const Signal& sig);
SignalFileData read_signal_file(const std::string& path);

// Binary PGM (P5), one byte per pixel.
void write_pgm(const std::string& path, std::size_t rows, std::size_t cols,
               const std::vector<std::uint8_t>& pixels);

// Full image path: heuristic reshape -> 2D resample -> quantise.
std::vector<std::uint8_t> byteplot_pixels(const IntegerArray& arr, std::size_t size,
                                          const ResampleSpec& spec);

}  // namespace binsig
