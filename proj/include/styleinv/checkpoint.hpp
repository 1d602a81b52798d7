#pragma once

// Single-file checkpoint: a magic line, a little-endian u64 metadata length,
// a JSON metadata document (version, kind, config echo, tensor manifest,
// payload CRC32, parent checksum) and the raw little-endian f32 tensors in
// manifest order.

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "styleinv/nn.hpp"

namespace styleinv {

struct CheckpointBundle {
  static constexpr int kVersion = 1;

  std::string kind;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> metadata;
  std::string parent_checksum;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  /// CRC32 (hex) over the tensor payload.
  std::string checksum() const;
  /// CRC32 over the tensors whose names start with `prefix`.
  std::string checksum(const std::string& prefix) const;

  bool contains(const std::string& name) const;
  const Tensor<float>& at(const std::string& name) const;
  void put(const std::string& name, Tensor<float> t);
  bool has_section(const std::string& section) const;
};

void save_checkpoint(const std::string& path, const CheckpointBundle& bundle);
/// Throws CheckpointError on a missing, truncated or corrupt file.
CheckpointBundle load_checkpoint(const std::string& path);

/// Stores every parameter as "<section>/<name>".
template <typename T>
void export_params(CheckpointBundle& bundle, const std::string& section, const ParameterSet<T>& params);
/// Restores every parameter of `params` from "<section>/<name>"; throws
/// CheckpointError naming each missing or mis-shaped tensor.
template <typename T>
void import_params(const CheckpointBundle& bundle, const std::string& section, ParameterSet<T>& params);

}  // namespace styleinv
