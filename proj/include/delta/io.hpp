#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "delta/common.hpp"
#include "delta/hash.hpp"

namespace delta {

using json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

/// Growable little-endian byte buffer for binary payload sections.
struct ByteWriter {
  std::vector<unsigned char> bytes;

  void put_f32(float v) { put_raw(&v, 4); }
  void put_f64(double v) { put_raw(&v, 8); }
  void put_i32(std::int32_t v) { put_raw(&v, 4); }

  void put_f32_span(std::span<const double> xs) {
    for (double x : xs) put_f32(static_cast<float>(x));
  }
  void put_f64_span(std::span<const double> xs) {
    for (double x : xs) put_f64(x);
  }
  void put_i32_span(std::span<const int> xs) {
    for (int x : xs) put_i32(static_cast<std::int32_t>(x));
  }

 private:
  void put_raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
};

/// Sequential reader over a payload; reports the byte offset on truncation.
struct ByteReader {
  std::span<const unsigned char> bytes;
  std::size_t pos = 0;

  float get_f32() {
    float v;
    get_raw(&v, 4);
    return v;
  }
  double get_f64() {
    double v;
    get_raw(&v, 8);
    return v;
  }
  std::int32_t get_i32() {
    std::int32_t v;
    get_raw(&v, 4);
    return v;
  }

  Vec get_f32_vec(std::size_t n) {
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(get_f32());
    return out;
  }
  Vec get_f64_vec(std::size_t n) {
    Vec out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = get_f64();
    return out;
  }
  std::vector<int> get_i32_vec(std::size_t n) {
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<int>(get_i32());
    return out;
  }

  void expect_end() const {
    if (pos != bytes.size()) {
      throw DataError("payload has " + std::to_string(bytes.size() - pos) +
                      " trailing bytes at offset " + std::to_string(pos));
    }
  }

 private:
  void get_raw(void* p, std::size_t n) {
    if (pos + n > bytes.size()) {
      throw DataError("payload truncated at byte offset " + std::to_string(pos) +
                      ": need " + std::to_string(n) + " more bytes, have " +
                      std::to_string(bytes.size() - pos));
    }
    std::memcpy(p, bytes.data() + pos, n);
    pos += n;
  }
};

inline void write_file_bytes(const std::filesystem::path& path,
                             std::span<const unsigned char> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("write failed: " + path.string());
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open: " + path.string());
  f.seekg(0, std::ios::end);
  auto n = static_cast<std::size_t>(f.tellg());
  f.seekg(0, std::ios::beg);
  std::vector<unsigned char> out(n);
  f.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(n));
  if (!f) throw DataError("read failed: " + path.string());
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw DataError("write failed: " + path.string());
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline std::uint64_t hash_file(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return hash_bytes(bytes);
}

/// Writes a payload next to its manifest and records the payload hash in it.
inline void write_payload_with_manifest(const std::filesystem::path& manifest_path,
                                        const std::filesystem::path& payload_path,
                                        json manifest, const ByteWriter& payload) {
  write_file_bytes(payload_path, payload.bytes);
  manifest["payload_file"] = payload_path.filename().string();
  manifest["payload_bytes"] = payload.bytes.size();
  manifest["payload_hash"] = hash_hex(hash_bytes(payload.bytes));
  write_json_file(manifest_path, manifest);
}

/// Loads a payload referenced by a manifest and verifies its recorded hash.
inline std::vector<unsigned char> read_verified_payload(
    const std::filesystem::path& manifest_path, const json& manifest) {
  auto payload_path = manifest_path.parent_path() /
                      manifest.at("payload_file").get<std::string>();
  auto bytes = read_file_bytes(payload_path);
  auto expected = manifest.at("payload_hash").get<std::string>();
  auto actual = hash_hex(hash_bytes(bytes));
  if (expected != actual) {
    throw DataError("payload hash mismatch for " + payload_path.string() +
                    ": manifest says " + expected + ", file is " + actual);
  }
  return bytes;
}

/// Fixed-width significant-digit formatting for human-facing text output.
inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace delta
