#include "styleinv/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "styleinv/errors.hpp"

namespace styleinv {

namespace {

constexpr char kMagic[] = "STYLEINV-CHECKPOINT\n";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

std::string hex32(uLong v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(v & 0xFFFFFFFFul));
  return buf;
}

uLong crc_tensors(const std::vector<std::pair<std::string, Tensor<float>>>& tensors, const std::string& prefix) {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const auto& [name, t] : tensors) {
    if (!name.starts_with(prefix)) continue;
    crc = crc32(crc, reinterpret_cast<const Bytef*>(t.data()), static_cast<uInt>(t.numel() * sizeof(float)));
  }
  return crc;
}

}  // namespace

std::string CheckpointBundle::checksum() const { return hex32(crc_tensors(tensors, "")); }
std::string CheckpointBundle::checksum(const std::string& prefix) const { return hex32(crc_tensors(tensors, prefix)); }

bool CheckpointBundle::contains(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return true;
  return false;
}

const Tensor<float>& CheckpointBundle::at(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw CheckpointError("checkpoint has no tensor " + name);
}

void CheckpointBundle::put(const std::string& name, Tensor<float> t) {
  for (auto& [n, existing] : tensors)
    if (n == name) {
      existing = std::move(t);
      return;
    }
  tensors.emplace_back(name, std::move(t));
}

bool CheckpointBundle::has_section(const std::string& section) const {
  for (const auto& [n, t] : tensors)
    if (n.starts_with(section + "/")) return true;
  return false;
}

void save_checkpoint(const std::string& path, const CheckpointBundle& bundle) {
  nlohmann::ordered_json meta;
  meta["format"] = "styleinv-checkpoint";
  meta["version"] = CheckpointBundle::kVersion;
  meta["kind"] = bundle.kind;
  meta["config"] = bundle.config;
  meta["metadata"] = bundle.metadata;
  meta["parent_checksum"] = bundle.parent_checksum;
  meta["payload_crc32"] = bundle.checksum();
  auto manifest = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : bundle.tensors) {
    manifest.push_back({{"name", name}, {"shape", t.shape().dims()}, {"dtype", "f32"}, {"offset", offset}});
    offset += t.numel() * sizeof(float);
  }
  meta["tensors"] = manifest;
  const std::string text = meta.dump(1);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw CheckpointError("cannot write checkpoint " + path);
    f.write(kMagic, sizeof(kMagic) - 1);
    const std::uint64_t len = text.size();
    f.write(reinterpret_cast<const char*>(&len), sizeof(len));
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : bundle.tensors)
      f.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!f) throw CheckpointError("failed writing checkpoint " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw CheckpointError("cannot move checkpoint into place at " + path);
}

CheckpointBundle load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path);
  char magic[sizeof(kMagic) - 1];
  if (!f.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw CheckpointError(path + " is not a checkpoint (bad magic)");
  std::uint64_t len = 0;
  if (!f.read(reinterpret_cast<char*>(&len), sizeof(len)) || len > (1ull << 30))
    throw CheckpointError(path + ": truncated or corrupt header");
  std::string text(len, '\0');
  if (!f.read(text.data(), static_cast<std::streamsize>(len))) throw CheckpointError(path + ": truncated metadata");
  CheckpointBundle b;
  try {
    const auto meta = nlohmann::json::parse(text);
    if (meta.at("format") != "styleinv-checkpoint") throw CheckpointError(path + ": unknown format");
    if (meta.at("version").get<int>() != CheckpointBundle::kVersion)
      throw CheckpointError(path + ": unsupported checkpoint version " + meta.at("version").dump());
    b.kind = meta.at("kind").get<std::string>();
    b.config = meta.at("config").get<std::map<std::string, std::string>>();
    b.metadata = meta.at("metadata").get<std::map<std::string, std::string>>();
    b.parent_checksum = meta.at("parent_checksum").get<std::string>();
    for (const auto& e : meta.at("tensors")) {
      if (e.at("dtype") != "f32") throw CheckpointError(path + ": unsupported dtype " + e.at("dtype").dump());
      Tensor<float> t(Shape(e.at("shape").get<std::vector<std::size_t>>()));
      if (!f.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(float))))
        throw CheckpointError(path + ": truncated tensor payload at " + e.at("name").get<std::string>());
      b.tensors.emplace_back(e.at("name").get<std::string>(), std::move(t));
    }
    if (f.peek() != std::char_traits<char>::eof()) throw CheckpointError(path + ": trailing bytes after payload");
    if (b.checksum() != meta.at("payload_crc32").get<std::string>())
      throw CheckpointError(path + ": payload checksum mismatch");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + ": malformed metadata: " + e.what());
  }
  return b;
}

template <typename T>
void export_params(CheckpointBundle& bundle, const std::string& section, const ParameterSet<T>& params) {
  for (const auto& [name, v] : params.entries()) bundle.put(section + "/" + name, v.value().template cast<float>());
}

template <typename T>
void import_params(const CheckpointBundle& bundle, const std::string& section, ParameterSet<T>& params) {
  std::string problems;
  for (const auto& [name, v] : params.entries()) {
    const std::string key = section + "/" + name;
    if (!bundle.contains(key)) problems += " " + key + "(missing)";
    else if (bundle.at(key).shape() != v.shape())
      problems += " " + key + "(" + bundle.at(key).shape().str() + " vs " + v.shape().str() + ")";
  }
  if (!problems.empty()) throw CheckpointError("checkpoint does not match the model:" + problems);
  for (const auto& name : params.names()) params.at(name).mutable_value() = bundle.at(section + "/" + name).template cast<T>();
}

template void export_params(CheckpointBundle&, const std::string&, const ParameterSet<float>&);
template void export_params(CheckpointBundle&, const std::string&, const ParameterSet<double>&);
template void import_params(const CheckpointBundle&, const std::string&, ParameterSet<float>&);
template void import_params(const CheckpointBundle&, const std::string&, ParameterSet<double>&);

}  // namespace styleinv
