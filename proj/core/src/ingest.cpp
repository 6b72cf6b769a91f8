#include "binsig/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace binsig {

namespace {

bool is_hex_digit(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return c - 'A' + 10;
}

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

ByteSequence load_raw_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  ByteSequence seq;
  seq.source_id = path;
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  if (size <= 0) throw std::runtime_error("empty input: " + path);
  seq.bytes.resize(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(seq.bytes.data()), size);
  if (!in) throw std::runtime_error("read failed: " + path);
  return seq;
}

ByteSequence parse_hexdump_bytes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  ByteSequence seq;
  seq.source_id = path;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = strip(line);
    if (body.empty()) continue;
    std::istringstream tokens(body);
    std::string tok;
    tokens >> tok;
    // Address token: at least 3 hex characters, so it cannot be confused
    // with a byte token.
    if (tok.size() < 3 || !std::all_of(tok.begin(), tok.end(), is_hex_digit)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": line without address prefix: '" + tok + "'");
    }
    while (tokens >> tok) {
      if (tok == "??") {
        seq.bytes.push_back(0);
        continue;
      }
      if (tok.size() != 2 || !is_hex_digit(tok[0]) || !is_hex_digit(tok[1])) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": malformed hex token: '" + tok + "'");
      }
      seq.bytes.push_back(static_cast<std::uint8_t>(hex_value(tok[0]) * 16 + hex_value(tok[1])));
    }
  }
  if (seq.bytes.empty()) throw std::runtime_error("empty input: " + path);
  return seq;
}

IntegerArray bytes_to_integer_array(const ByteSequence& seq) {
  if (seq.bytes.empty()) throw std::invalid_argument("empty byte sequence");
  IntegerArray arr;
  arr.values.reserve(seq.bytes.size());
  for (const std::uint8_t b : seq.bytes) arr.values.push_back(static_cast<std::int32_t>(b));
  return arr;
}

DatasetManifest load_manifest(const std::string& path, Split split) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  DatasetManifest manifest;
  manifest.split = split;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty manifest: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (strip(line) != "path,label") {
    throw std::runtime_error(path + ": expected header 'path,label', got '" + strip(line) + "'");
  }

  std::set<std::string> seen;
  std::set<int> labels;
  std::size_t line_no = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (strip(line).empty()) continue;
    const std::size_t comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing label column");
    }
    std::string entry_path = strip(line.substr(0, comma));
    const std::string label_str = strip(line.substr(comma + 1));
    if (entry_path.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty path");
    }
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(label_str, &used);
      if (used != label_str.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-integer label '" +
                               label_str + "'");
    }
    if (label < 0) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": negative label");
    }
    if (!seen.insert(entry_path).second) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate path '" +
                               entry_path + "'");
    }
    std::filesystem::path p(entry_path);
    if (p.is_relative()) entry_path = (base / p).string();
    manifest.entries.push_back({entry_path, label});
    labels.insert(label);
    max_label = std::max(max_label, label);
  }
  if (manifest.entries.empty()) throw std::runtime_error("manifest has no entries: " + path);
  manifest.class_count = max_label + 1;
  for (int c = 0; c <= max_label; ++c) {
    if (!labels.count(c)) {
      manifest.warnings.push_back("label gap: class " + std::to_string(c) +
                                  " has no samples (class_count=" +
                                  std::to_string(manifest.class_count) + ")");
    }
  }
  return manifest;
}

}  // namespace binsig
