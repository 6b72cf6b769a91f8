#include "binsig/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace binsig {

namespace {

void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_u64le(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_f32le(std::vector<unsigned char>& out, float f) {
  put_u32le(out, std::bit_cast<std::uint32_t>(f));
}

struct Reader {
  const unsigned char* p;
  std::size_t left;
  const char* what;

  void need(std::size_t n) const {
    if (left < n) throw std::runtime_error(std::string(what) + ": truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    p += 8;
    left -= 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    left -= n;
    return s;
  }
};

}  // namespace

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<unsigned char> out;
  out.insert(out.end(), {'1', 'D', 'C', 'K'});
  out.push_back(1);  // version
  const std::string config = config_to_text(ckpt.config);
  put_u32le(out, static_cast<std::uint32_t>(config.size()));
  out.insert(out.end(), config.begin(), config.end());
  put_u32le(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& entry : ckpt.tensors) {
    put_u32le(out, static_cast<std::uint32_t>(entry.name.size()));
    out.insert(out.end(), entry.name.begin(), entry.name.end());
    put_u32le(out, static_cast<std::uint32_t>(entry.dims.size()));
    std::size_t numel = 1;
    for (const std::uint64_t d : entry.dims) {
      put_u64le(out, d);
      numel *= d;
    }
    if (numel != entry.data.size()) {
      throw std::logic_error("checkpoint entry '" + entry.name + "': dims/data mismatch");
    }
    for (const float f : entry.data) put_f32le(out, f);
  }
  put_u64le(out, fnv1a64(out.data(), out.size()));
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& raw) {
  if (raw.size() < 13) throw std::runtime_error("checkpoint: truncated");
  if (std::memcmp(raw.data(), "1DCK", 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  if (raw[4] != 1) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(raw[4]));
  }
  const std::uint64_t stored = [&] {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(raw[raw.size() - 8 + i]) << (8 * i);
    }
    return v;
  }();
  if (fnv1a64(raw.data(), raw.size() - 8) != stored) {
    throw std::runtime_error("checkpoint: checksum mismatch (corrupt file)");
  }

  Reader r{raw.data() + 5, raw.size() - 13, "checkpoint"};
  Checkpoint ckpt;
  const std::uint32_t config_len = r.u32();
  ckpt.config = config_from_text(r.str(config_len));
  const std::uint32_t count = r.u32();
  ckpt.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Checkpoint::Entry entry;
    entry.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      entry.dims.push_back(r.u64());
      numel *= entry.dims.back();
    }
    entry.data.resize(numel);
    for (std::size_t j = 0; j < numel; ++j) entry.data[j] = r.f32();
    ckpt.tensors.push_back(std::move(entry));
  }
  if (r.left != 0) throw std::runtime_error("checkpoint: trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::vector<unsigned char> raw = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return decode_checkpoint(raw);
}

}  // namespace binsig
