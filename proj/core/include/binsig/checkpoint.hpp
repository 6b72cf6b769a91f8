#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "binsig/model.hpp"

namespace binsig {

// On-disk model format (little-endian):
//   magic "1DCK" | version u8 (=1)
//   config text block: u32 length + bytes (ModelConfig key=value lines)
//   tensor table: u32 count, then per tensor
//     u32 name length + name | u32 rank | rank x u64 dims | f32 data
//   u64 FNV-1a checksum of all preceding octets
struct Checkpoint {
  struct Entry {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<float> data;
  };
  ModelConfig config;
  std::vector<Entry> tensors;
};

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size);

std::vector<unsigned char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char>& raw);

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

template <typename T>
Checkpoint checkpoint_from_model(Model<T>& model) {
  Checkpoint ckpt;
  ckpt.config = model.plan.cfg;
  for (auto& nt : model.named_tensors()) {
    Checkpoint::Entry entry;
    entry.name = nt.name;
    for (const std::size_t d : nt.tensor.shape()) entry.dims.push_back(d);
    const auto vals = nt.tensor.values();
    entry.data.assign(vals.begin(), vals.end());
    ckpt.tensors.push_back(std::move(entry));
  }
  return ckpt;
}

// Copies checkpoint tensors into a freshly built model; every tensor must
// match by name, order, and shape.
template <typename T>
void load_into_model(Model<T>& model, const Checkpoint& ckpt) {
  auto named = model.named_tensors();
  if (named.size() != ckpt.tensors.size()) {
    throw std::runtime_error("checkpoint/model mismatch: " + std::to_string(ckpt.tensors.size()) +
                             " tensors in file, model has " + std::to_string(named.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& entry = ckpt.tensors[i];
    if (entry.name != named[i].name) {
      throw std::runtime_error("checkpoint/model mismatch at tensor " + std::to_string(i) +
                               ": '" + entry.name + "' vs '" + named[i].name + "'");
    }
    Shape shape(entry.dims.begin(), entry.dims.end());
    if (shape != named[i].tensor.shape()) {
      throw std::runtime_error("checkpoint/model shape mismatch for '" + entry.name + "': file " +
                               shape_str(shape) + " vs model " +
                               shape_str(named[i].tensor.shape()));
    }
    auto dst = named[i].tensor.mutable_values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<T>(entry.data[j]);
  }
}

template <typename T>
Model<T> model_from_checkpoint(const Checkpoint& ckpt, std::uint64_t seed = 0) {
  Model<T> model = Model<T>::build(ckpt.config, seed);
  load_into_model(model, ckpt);
  return model;
}

}  // namespace binsig
