#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "navskills/hashing.hpp"
#include "navskills/tensor.hpp"

namespace navskills {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
using NamedTensorList = std::vector<std::pair<std::string, Tensor<T>>>;

template <typename T>
struct CheckpointData {
  std::uint64_t config_hash = 0;
  std::string meta;  // caller-owned JSON; the writer never adds timestamps
  NamedTensorList<T> tensors;
};

namespace detail {

inline constexpr char kCkptMagic[8] = {'N', 'A', 'V', 'C', 'K', 'P', 'T', '1'};

template <typename V>
void put(std::string& out, V v) {
  char buf[sizeof(V)];
  std::memcpy(buf, &v, sizeof(V));
  out.append(buf, sizeof(V));
}

template <typename V>
V take(const std::string& in, std::size_t& off) {
  if (off + sizeof(V) > in.size()) throw CheckpointError("checkpoint: truncated file");
  V v;
  std::memcpy(&v, in.data() + off, sizeof(V));
  off += sizeof(V);
  return v;
}

}  // namespace detail

// Versioned binary container: header, config hash, caller meta JSON, raw
// parameter blobs, trailing content hash. Byte-stable for identical inputs.
template <typename T>
void write_checkpoint(const std::string& path, std::uint64_t config_hash,
                      const NamedTensorList<T>& tensors, const std::string& meta_json = "{}") {
  std::string body;
  body.append(detail::kCkptMagic, sizeof(detail::kCkptMagic));
  detail::put<std::uint32_t>(body, 1);  // version
  detail::put<std::uint8_t>(body, static_cast<std::uint8_t>(sizeof(T)));
  detail::put<std::uint64_t>(body, config_hash);
  detail::put<std::uint32_t>(body, static_cast<std::uint32_t>(meta_json.size()));
  body.append(meta_json);
  detail::put<std::uint32_t>(body, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    detail::put<std::uint32_t>(body, static_cast<std::uint32_t>(name.size()));
    body.append(name);
    detail::put<std::int32_t>(body, t.rows);
    detail::put<std::int32_t>(body, t.cols);
    body.append(reinterpret_cast<const char*>(t.v.data()), t.v.size() * sizeof(T));
  }
  detail::put<std::uint64_t>(body, fnv1a64(body.data(), body.size()));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("checkpoint: cannot open for write: " + path);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw CheckpointError("checkpoint: write failed: " + path);
}

template <typename T>
CheckpointData<T> read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open: " + path);
  std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (raw.size() < sizeof(detail::kCkptMagic) + 8)
    throw CheckpointError("checkpoint: truncated file");
  std::uint64_t stored;
  std::memcpy(&stored, raw.data() + raw.size() - 8, 8);
  if (fnv1a64(raw.data(), raw.size() - 8) != stored)
    throw CheckpointError("checkpoint: content hash mismatch (corrupt file)");

  std::size_t off = 0;
  if (std::memcmp(raw.data(), detail::kCkptMagic, sizeof(detail::kCkptMagic)) != 0)
    throw CheckpointError("checkpoint: bad magic");
  off += sizeof(detail::kCkptMagic);
  auto version = detail::take<std::uint32_t>(raw, off);
  if (version != 1) throw CheckpointError("checkpoint: unsupported version");
  auto dtype = detail::take<std::uint8_t>(raw, off);
  if (dtype != sizeof(T)) throw CheckpointError("checkpoint: dtype width mismatch");

  CheckpointData<T> out;
  out.config_hash = detail::take<std::uint64_t>(raw, off);
  auto meta_len = detail::take<std::uint32_t>(raw, off);
  if (off + meta_len > raw.size()) throw CheckpointError("checkpoint: truncated meta");
  out.meta = raw.substr(off, meta_len);
  off += meta_len;
  auto count = detail::take<std::uint32_t>(raw, off);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name_len = detail::take<std::uint32_t>(raw, off);
    if (off + name_len > raw.size()) throw CheckpointError("checkpoint: truncated name");
    std::string name = raw.substr(off, name_len);
    off += name_len;
    auto rows = detail::take<std::int32_t>(raw, off);
    auto cols = detail::take<std::int32_t>(raw, off);
    if (rows < 0 || cols < 0) throw CheckpointError("checkpoint: bad tensor shape");
    Tensor<T> t(rows, cols);
    std::size_t bytes = t.v.size() * sizeof(T);
    if (off + bytes > raw.size()) throw CheckpointError("checkpoint: truncated blob");
    std::memcpy(t.v.data(), raw.data() + off, bytes);
    off += bytes;
    out.tensors.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

// Refuses a config-hash mismatch unless force is set.
template <typename T>
CheckpointData<T> read_checkpoint_checked(const std::string& path, std::uint64_t expected_hash,
                                          bool force = false) {
  CheckpointData<T> data = read_checkpoint<T>(path);
  if (data.config_hash != expected_hash && !force)
    throw CheckpointError("checkpoint: config hash mismatch (use force to override)");
  return data;
}

}  // namespace navskills
