/**
 * @file param_store.hpp
 * @brief Named tensor store for learnable quantities plus the weight file
 *        format: a JSON manifest listing {name, shape, dtype:"f32",
 *        byte_offset} and one little-endian raw blob of 32-bit floats.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfb/errors.hpp"
#include "lfb/tensor.hpp"

namespace lfb {

class ParamStore {
  public:
    void add(const std::string& name, Tensor t) {
        if (entries_.count(name)) throw data_error("ParamStore: duplicate entry " + name);
        entries_.emplace(name, std::move(t));
    }

    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    const Tensor& get(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw data_error("ParamStore: missing entry " + name);
        return it->second;
    }

    const Tensor& get(const std::string& name, const std::vector<int>& expected_shape) const {
        const Tensor& t = get(name);
        if (t.shape != expected_shape) {
            throw data_error("ParamStore: " + name + " has shape " + shape_to_string(t.shape) +
                             ", expected " + shape_to_string(expected_shape));
        }
        return t;
    }

    /// Optional lookup (used for bias entries, which may be absent).
    const Tensor* find(const std::string& name) const {
        auto it = entries_.find(name);
        return it == entries_.end() ? nullptr : &it->second;
    }

    void set_metadata(const std::string& key, double value) { metadata_[key] = value; }

    double metadata_or(const std::string& key, double fallback) const {
        auto it = metadata_.find(key);
        return it == metadata_.end() ? fallback : it->second;
    }

    const std::map<std::string, Tensor>& entries() const { return entries_; }
    const std::map<std::string, double>& metadata() const { return metadata_; }

  private:
    std::map<std::string, Tensor> entries_;
    std::map<std::string, double> metadata_;
};

/// Writes `manifest_path` (JSON) plus a packed f32 blob alongside it.
inline void save_params(const ParamStore& store, const std::filesystem::path& manifest_path) {
    namespace fs = std::filesystem;
    const fs::path blob_path = fs::path(manifest_path).replace_extension(".bin");

    nlohmann::json manifest;
    manifest["format"] = "lfb-weights-v1";
    manifest["blob"] = blob_path.filename().string();
    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [k, v] : store.metadata()) meta[k] = v;
    manifest["metadata"] = meta;

    std::ofstream blob(blob_path, std::ios::binary);
    if (!blob) throw data_error("cannot write blob file " + blob_path.string());
    std::uint64_t offset = 0;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& [name, t] : store.entries()) {
        tensors.push_back({{"name", name},
                           {"shape", t.shape},
                           {"dtype", "f32"},
                           {"byte_offset", offset}});
        blob.write(reinterpret_cast<const char*>(t.data.data()),
                   static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        offset += t.data.size() * sizeof(float);
    }
    blob.close();
    manifest["tensors"] = tensors;

    std::ofstream out(manifest_path);
    if (!out) throw data_error("cannot write manifest " + manifest_path.string());
    out << manifest.dump(2) << "\n";
}

/// Loads a manifest + blob pair, validating dtype, offsets, and that the blob
/// length equals the sum of all shape products.
inline ParamStore load_params(const std::filesystem::path& manifest_path) {
    namespace fs = std::filesystem;
    std::ifstream in(manifest_path);
    if (!in) throw data_error("cannot read manifest " + manifest_path.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!manifest.contains("tensors") || !manifest.contains("blob")) {
        throw data_error("manifest " + manifest_path.string() +
                         " missing required fields (tensors, blob)");
    }
    const fs::path blob_path = manifest_path.parent_path() / manifest["blob"].get<std::string>();
    std::ifstream blob(blob_path, std::ios::binary | std::ios::ate);
    if (!blob) throw data_error("cannot read blob file " + blob_path.string());
    const std::uint64_t blob_size = static_cast<std::uint64_t>(blob.tellg());

    ParamStore store;
    std::uint64_t total = 0;
    for (const auto& entry : manifest["tensors"]) {
        const std::string name = entry.at("name").get<std::string>();
        if (entry.at("dtype").get<std::string>() != "f32") {
            throw data_error("tensor " + name + ": unsupported dtype " +
                             entry.at("dtype").get<std::string>());
        }
        const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        std::uint64_t count = 1;
        for (int d : shape) {
            if (d <= 0) throw data_error("tensor " + name + ": bad dimension " + std::to_string(d));
            count *= static_cast<std::uint64_t>(d);
        }
        const std::uint64_t offset = entry.at("byte_offset").get<std::uint64_t>();
        if (offset + count * sizeof(float) > blob_size) {
            throw data_error("tensor " + name + ": extends past end of blob " +
                             blob_path.string());
        }
        std::vector<float> data(count);
        blob.seekg(static_cast<std::streamoff>(offset));
        blob.read(reinterpret_cast<char*>(data.data()),
                  static_cast<std::streamsize>(count * sizeof(float)));
        if (!blob) throw data_error("tensor " + name + ": short read from blob");
        store.add(name, Tensor(shape, std::move(data)));
        total += count * sizeof(float);
    }
    if (total != blob_size) {
        throw data_error("blob " + blob_path.string() + " length " + std::to_string(blob_size) +
                         " != sum of tensor sizes " + std::to_string(total));
    }
    if (manifest.contains("metadata")) {
        for (const auto& [k, v] : manifest["metadata"].items())
            store.set_metadata(k, v.get<double>());
    }
    return store;
}

}  // namespace lfb
