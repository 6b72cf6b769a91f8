#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace binsig {

// Raw file contents, in order. Never empty: zero-length inputs are rejected
// at load time since no signal can be resampled from them.
struct ByteSequence {
  std::vector<std::uint8_t> bytes;
  std::string source_id;
};

// Per-byte integer values, each in [0, 255].
struct IntegerArray {
  std::vector<std::int32_t> values;
  std::size_t length() const { return values.size(); }
};

enum class Split { train, val, test };

struct ManifestEntry {
  std::string signal_path;
  int label;
};

// Labels form a contiguous range [0, class_count); gaps are reported as
// warnings, duplicate paths are an error.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int class_count = 0;
  Split split = Split::train;
  std::vector<std::string> warnings;
};

ByteSequence load_raw_binary(const std::string& path);

// Microsoft-style .bytes text: per line an address token followed by
// two-digit hex byte tokens; "??" (unmapped) maps to 0.
ByteSequence parse_hexdump_bytes(const std::string& path);

IntegerArray bytes_to_integer_array(const ByteSequence& seq);

// CSV with header "path,label". Relative paths resolve against the
// manifest's directory so corpora stay relocatable.
DatasetManifest load_manifest(const std::string& path, Split split = Split::train);

}  // namespace binsig
