#include "binsig/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace binsig {

namespace {

void put_u16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32le(std::string& out, float f) {
  std::uint32_t v = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

float get_f32le(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(v);
}

}  // namespace

void write_signal_file(const std::string& path, std::span<const float> samples,
                       bool z_normalised) {
  if (samples.empty()) throw std::invalid_argument("write_signal_file: empty signal");
  std::string buf;
  buf.reserve(16 + samples.size() * 4);
  buf += "1DSG";
  buf.push_back(1);  // version
  buf.push_back(z_normalised ? 1 : 0);
  put_u16le(buf, 0);
  put_u64le(buf, samples.size());
  for (const float s : samples) put_f32le(buf, s);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_signal_file(const std::string& path, const Signal& sig) {
  std::vector<float> samples(sig.samples.begin(), sig.samples.end());
  write_signal_file(path, samples, sig.normalisation == Normalisation::z_normalised);
}

SignalFileData read_signal_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open signal file: " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (raw.size() < 16) throw std::runtime_error("truncated signal file: " + path);
  if (std::memcmp(raw.data(), "1DSG", 4) != 0) {
    throw std::runtime_error("bad magic (not a signal file): " + path);
  }
  if (raw[4] != 1) {
    throw std::runtime_error("unsupported signal file version " + std::to_string(raw[4]) + ": " +
                             path);
  }
  SignalFileData data;
  data.z_normalised = (raw[5] & 1) != 0;
  const std::uint64_t length = get_u64le(raw.data() + 8);
  if (raw.size() != 16 + length * 4) {
    throw std::runtime_error("signal file length mismatch: " + path);
  }
  data.samples.resize(length);
  for (std::uint64_t i = 0; i < length; ++i) {
    data.samples[i] = get_f32le(raw.data() + 16 + i * 4);
  }
  return data;
}

void write_pgm(const std::string& path, std::size_t rows, std::size_t cols,
               const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != rows * cols) throw std::invalid_argument("write_pgm: size mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P5\n" << cols << " " << rows << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::uint8_t> byteplot_pixels(const IntegerArray& arr, std::size_t size,
                                          const ResampleSpec& spec) {
  const ByteGrid grid = heuristic_reshape(arr);
  const ByteGrid resized = resample_2d(grid, size, size, spec);
  std::vector<std::uint8_t> pixels;
  pixels.reserve(resized.cells.size());
  for (const double v : resized.cells) {
    pixels.push_back(static_cast<std::uint8_t>(quantize_clip(v)));
  }
  return pixels;
}

}  // namespace binsig
