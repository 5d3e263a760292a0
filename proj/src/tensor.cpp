#include "golomb/tensor.hpp"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "golomb/errors.hpp"
#include "golomb/json_io.hpp"

namespace golomb {

using json = nlohmann::json;
namespace fs = std::filesystem;

int ParamStore::add(const std::string& name, int rows, int cols,
                    bool weight_decay) {
  if (frozen_) throw InternalError("ParamStore::add after freeze");
  if (index_.count(name)) throw InternalError("duplicate tensor name " + name);
  if (rows <= 0 || cols <= 0)
    throw InternalError("tensor " + name + " has non-positive shape");
  TensorSpec spec;
  spec.name = name;
  spec.rows = rows;
  spec.cols = cols;
  spec.weight_decay = weight_decay;
  spec.offset = 0;
  index_[name] = static_cast<int>(specs_.size());
  specs_.push_back(std::move(spec));
  return static_cast<int>(specs_.size()) - 1;
}

void ParamStore::freeze() {
  if (frozen_) return;
  std::size_t total = 0;
  for (auto& spec : specs_) {
    spec.offset = total;
    total += static_cast<std::size_t>(spec.rows) *
             static_cast<std::size_t>(spec.cols);
  }
  data_.assign(total, 0.0);
  frozen_ = true;
}

const TensorSpec& ParamStore::spec(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InternalError("unknown tensor " + name);
  return specs_[static_cast<size_t>(it->second)];
}

MatrixMap ParamStore::view(const std::string& name) {
  return view(spec(name));
}

ConstMatrixMap ParamStore::view(const std::string& name) const {
  const TensorSpec& s = spec(name);
  return ConstMatrixMap(data_.data() + s.offset, s.rows, s.cols);
}

MatrixMap ParamStore::view(const TensorSpec& s) {
  if (!frozen_) throw InternalError("ParamStore::view before freeze");
  return MatrixMap(data_.data() + s.offset, s.rows, s.cols);
}

ConstMatrixMap ParamStore::view(const TensorSpec& s) const {
  return ConstMatrixMap(data_.data() + s.offset, s.rows, s.cols);
}

MatrixMap ParamStore::view_in(std::vector<double>& buf,
                              const std::string& name) const {
  const TensorSpec& s = spec(name);
  if (buf.size() != data_.size())
    throw InternalError("buffer layout mismatch for " + name);
  return MatrixMap(buf.data() + s.offset, s.rows, s.cols);
}

ConstMatrixMap ParamStore::view_in(const std::vector<double>& buf,
                                   const std::string& name) const {
  const TensorSpec& s = spec(name);
  if (buf.size() != data_.size())
    throw InternalError("buffer layout mismatch for " + name);
  return ConstMatrixMap(buf.data() + s.offset, s.rows, s.cols);
}

namespace {

constexpr int kManifestVersion = 1;

std::string blob_name(const std::string& tensor_name) {
  return tensor_name + ".bin";
}

void write_f32_blob(const fs::path& path, const double* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write tensor blob: " + path.string());
  std::vector<float> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(data[i]);
  static_assert(sizeof(float) == 4);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
}

void read_f32_blob(const fs::path& path, double* data, std::size_t n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing tensor blob: " + path.string());
  std::vector<float> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float))
    throw DataError("tensor blob truncated: " + path.string());
  for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<double>(buf[i]);
}

}  // namespace

void save_params(const ParamStore& params, const std::string& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["version"] = kManifestVersion;
  manifest["dtype"] = "f32";
  manifest["tensors"] = json::array();
  for (const auto& spec : params.specs()) {
    manifest["tensors"].push_back({{"name", spec.name},
                                   {"rows", spec.rows},
                                   {"cols", spec.cols},
                                   {"file", blob_name(spec.name)}});
    std::size_t n = static_cast<std::size_t>(spec.rows) *
                    static_cast<std::size_t>(spec.cols);
    write_f32_blob(fs::path(dir) / blob_name(spec.name),
                   params.data() + spec.offset, n);
  }
  write_text_file((fs::path(dir) / "manifest.json").string(),
                  manifest.dump(2));
}

void load_params(ParamStore& params, const std::string& dir) {
  json manifest;
  try {
    manifest = json::parse(read_text_file((fs::path(dir) / "manifest.json").string()));
  } catch (const json::parse_error& e) {
    throw DataError(std::string("bad manifest.json: ") + e.what());
  }
  if (!manifest.contains("version"))
    throw DataError("manifest.json is missing the version field");
  if (manifest["version"].get<int>() != kManifestVersion)
    throw DataError("unsupported manifest version " +
                    manifest["version"].dump());
  if (manifest.value("dtype", std::string()) != "f32")
    throw DataError("unsupported tensor dtype " + manifest.value("dtype", std::string("<missing>")));

  std::unordered_map<std::string, json> by_name;
  for (const auto& jt : manifest.value("tensors", json::array()))
    by_name[jt.value("name", std::string())] = jt;

  for (const auto& spec : params.specs()) {
    auto it = by_name.find(spec.name);
    if (it == by_name.end())
      throw DataError("checkpoint is missing tensor " + spec.name);
    const json& jt = it->second;
    if (jt.value("rows", -1) != spec.rows || jt.value("cols", -1) != spec.cols)
      throw DataError("tensor " + spec.name + " has shape " +
                      std::to_string(jt.value("rows", -1)) + "x" +
                      std::to_string(jt.value("cols", -1)) + ", expected " +
                      std::to_string(spec.rows) + "x" +
                      std::to_string(spec.cols));
    std::size_t n = static_cast<std::size_t>(spec.rows) *
                    static_cast<std::size_t>(spec.cols);
    read_f32_blob(fs::path(dir) / jt.value("file", blob_name(spec.name)),
                  params.data() + spec.offset, n);
  }
}

}  // namespace golomb
