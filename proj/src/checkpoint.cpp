#include "heatcast/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "heatcast/common.hpp"

namespace heatcast {

namespace fs = std::filesystem;
using nlohmann::json;

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt) {
  fs::create_directories(dir);

  json manifest;
  manifest["dtype"] = "f32";
  manifest["model"]["kind"] = to_string(ckpt.model.kind);
  manifest["model"]["widths"] = ckpt.model.arch.widths;
  manifest["model"]["blocks_per_stage"] = ckpt.model.arch.blocks_per_stage;
  manifest["model"]["stem_stride"] = ckpt.model.arch.stem_stride;
  manifest["model"]["head_width"] = ckpt.model.arch.head_width;
  manifest["model"]["gn_groups"] = ckpt.model.arch.gn_groups;

  json params = json::array();
  for (const auto& item : ckpt.model.params) {
    json entry;
    entry["name"] = item.name;
    std::vector<int64_t> shape;
    for (int i = 0; i < item.tensor.shape().ndim(); ++i)
      shape.push_back(item.tensor.shape()[i]);
    entry["shape"] = shape;
    params.push_back(entry);
  }
  manifest["params"] = params;

  manifest["norm"]["mean"] =
      std::vector<float>(ckpt.feature_norm.mean.begin(),
                         ckpt.feature_norm.mean.end());
  manifest["norm"]["std"] = std::vector<float>(ckpt.feature_norm.std.begin(),
                                               ckpt.feature_norm.std.end());
  manifest["target_norm"]["mean"] = ckpt.target_mean;
  manifest["target_norm"]["std"] = ckpt.target_std;
  manifest["layout"] = ckpt.layout_names;
  manifest["training"]["best_epoch"] = ckpt.best_epoch;
  manifest["training"]["best_val_mae"] = ckpt.best_val_mae;

  {
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!out) throw DataError("save_checkpoint: cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
  }
  {
    std::ofstream out(fs::path(dir) / "params.bin", std::ios::binary);
    if (!out) throw DataError("save_checkpoint: cannot write params in " + dir);
    for (const auto& item : ckpt.model.params)
      out.write(reinterpret_cast<const char*>(item.tensor.data()),
                std::streamsize(size_t(item.tensor.numel()) * sizeof(float)));
  }
}

Checkpoint load_checkpoint(const std::string& dir) {
  json manifest;
  {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in)
      throw DataError("load_checkpoint: missing manifest.json in '" + dir + "'");
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw DataError("load_checkpoint: bad manifest in '" + dir + "': " +
                      e.what());
    }
  }

  Checkpoint ckpt;
  try {
    if (manifest.at("dtype").get<std::string>() != "f32")
      throw DataError("load_checkpoint: unsupported dtype in '" + dir + "'");
    const json& m = manifest.at("model");
    ckpt.model.kind = model_kind_from_string(m.at("kind").get<std::string>());
    ckpt.model.arch.widths = m.at("widths").get<std::vector<int64_t>>();
    ckpt.model.arch.blocks_per_stage = m.at("blocks_per_stage").get<int64_t>();
    ckpt.model.arch.stem_stride = m.at("stem_stride").get<int64_t>();
    ckpt.model.arch.head_width = m.at("head_width").get<int64_t>();
    ckpt.model.arch.gn_groups = m.at("gn_groups").get<int64_t>();

    const auto mean = manifest.at("norm").at("mean").get<std::vector<float>>();
    const auto stdv = manifest.at("norm").at("std").get<std::vector<float>>();
    if (mean.size() != kStackChannels || stdv.size() != kStackChannels)
      throw DataError("load_checkpoint: norm stats have wrong length");
    std::copy(mean.begin(), mean.end(), ckpt.feature_norm.mean.begin());
    std::copy(stdv.begin(), stdv.end(), ckpt.feature_norm.std.begin());
    ckpt.target_mean = manifest.at("target_norm").at("mean").get<float>();
    ckpt.target_std = manifest.at("target_norm").at("std").get<float>();
    ckpt.layout_names = manifest.at("layout").get<std::vector<std::string>>();
    ckpt.best_epoch = manifest.at("training").at("best_epoch").get<int>();
    ckpt.best_val_mae =
        manifest.at("training").at("best_val_mae").get<double>();

    std::ifstream in(fs::path(dir) / "params.bin", std::ios::binary);
    if (!in)
      throw DataError("load_checkpoint: missing params.bin in '" + dir + "'");
    for (const json& entry : manifest.at("params")) {
      const std::string name = entry.at("name").get<std::string>();
      const auto dims = entry.at("shape").get<std::vector<int64_t>>();
      Shape shape(std::initializer_list<int64_t>{});
      switch (dims.size()) {
        case 1:
          shape = Shape{dims[0]};
          break;
        case 2:
          shape = Shape{dims[0], dims[1]};
          break;
        case 3:
          shape = Shape{dims[0], dims[1], dims[2]};
          break;
        case 4:
          shape = Shape{dims[0], dims[1], dims[2], dims[3]};
          break;
        default:
          throw DataError("load_checkpoint: bad shape rank for '" + name + "'");
      }
      Tensor<float> t = Tensor<float>::zeros(shape);
      in.read(reinterpret_cast<char*>(t.data()),
              std::streamsize(size_t(t.numel()) * sizeof(float)));
      if (!in)
        throw DataError("load_checkpoint: params.bin truncated at '" + name +
                        "'");
      ckpt.model.params.add(name, std::move(t));
    }
    char extra;
    if (in.read(&extra, 1))
      throw DataError("load_checkpoint: params.bin has trailing bytes");
  } catch (const json::exception& e) {
    throw DataError("load_checkpoint: manifest in '" + dir +
                    "' missing fields: " + e.what());
  }
  return ckpt;
}

}  // namespace heatcast
