#include "rgc/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace rgc {
namespace {

constexpr char kMagic[4] = {'R', 'G', 'C', 'K'};
constexpr uint32_t kVersion = 1;

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return {
      {"kind", to_string(cfg.kind)},
      {"m", cfg.plan.m},
      {"n", cfg.plan.n},
      {"w", cfg.plan.w},
      {"outputs", cfg.outputs},
      {"latent", cfg.latent},
      {"hidden", cfg.hidden},
      {"encoder_channels", cfg.encoder_channels},
      {"height", cfg.height},
      {"width", cfg.width},
      {"unfold_steps", cfg.unfold_steps},
      {"dt", cfg.dt},
      {"cfc_time", cfg.cfc_time},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.kind = model_kind_from_string(j.at("kind").get<std::string>());
  cfg.plan.m = j.at("m").get<int64_t>();
  cfg.plan.n = j.at("n").get<int64_t>();
  cfg.plan.w = j.at("w").get<int64_t>();
  cfg.outputs = j.at("outputs").get<int64_t>();
  cfg.latent = j.at("latent").get<int64_t>();
  cfg.hidden = j.at("hidden").get<int64_t>();
  cfg.encoder_channels = j.at("encoder_channels").get<std::vector<int64_t>>();
  cfg.height = j.at("height").get<int64_t>();
  cfg.width = j.at("width").get<int64_t>();
  cfg.unfold_steps = j.at("unfold_steps").get<int64_t>();
  cfg.dt = j.at("dt").get<double>();
  cfg.cfc_time = j.at("cfc_time").get<double>();
  return cfg;
}

double json_to_double(const nlohmann::json& j) {
  return j.is_null() ? std::nan("") : j.get<double>();
}

nlohmann::json double_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const CheckpointMeta& meta, const Adam* opt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");

  os.write(kMagic, 4);
  os.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  uint64_t json_offset = 0;  // patched after the payload is written
  const std::streampos offset_pos = os.tellp();
  os.write(reinterpret_cast<const char*>(&json_offset), sizeof(json_offset));

  const NamedParams params = model.named_params();
  nlohmann::json names = nlohmann::json::array();
  for (const auto& [name, tensor] : params) {
    names.push_back(name);
    write_tensor(os, tensor);
  }

  uint64_t opt_offset = 0;
  if (opt != nullptr) {
    opt_offset = static_cast<uint64_t>(os.tellp());
    opt->save_state(os);
  }

  json_offset = static_cast<uint64_t>(os.tellp());
  nlohmann::json j = {
      {"model", model_config_to_json(meta.model)},
      {"seed", meta.seed},
      {"tag", meta.tag},
      {"epoch", meta.epoch},
      {"val_rho", double_to_json(meta.val_rho)},
      {"params", names},
      {"optimizer_offset", opt_offset},
  };
  if (meta.has_normalizer) {
    j["normalizer"] = {{"lo", meta.normalizer.lo}, {"hi", meta.normalizer.hi}};
  } else {
    j["normalizer"] = nullptr;
  }
  const std::string text = j.dump();
  os.write(text.data(), static_cast<std::streamsize>(text.size()));

  os.seekp(offset_pos);
  os.write(reinterpret_cast<const char*>(&json_offset), sizeof(json_offset));
  if (!os) throw std::runtime_error("failed writing checkpoint " + path);
}

namespace {

nlohmann::json read_footer(std::ifstream& is, const std::string& path,
                           uint64_t* tensors_begin) {
  char magic[4];
  uint32_t version = 0;
  uint64_t json_offset = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  is.read(reinterpret_cast<char*>(&json_offset), sizeof(json_offset));
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + " is not a checkpoint file");
  }
  if (version != kVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));
  }
  *tensors_begin = static_cast<uint64_t>(is.tellg());
  is.seekg(static_cast<std::streamoff>(json_offset));
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  if (text.empty()) {
    throw std::runtime_error(path + ": missing checkpoint metadata");
  }
  return nlohmann::json::parse(text);
}

}  // namespace

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);

  uint64_t tensors_begin = 0;
  const nlohmann::json j = read_footer(is, path, &tensors_begin);

  LoadedCheckpoint out;
  out.meta.model = model_config_from_json(j.at("model"));
  out.meta.seed = j.at("seed").get<uint64_t>();
  out.meta.tag = j.at("tag").get<std::string>();
  out.meta.epoch = j.at("epoch").get<double>();
  out.meta.val_rho = json_to_double(j.at("val_rho"));
  out.meta.has_optimizer = j.at("optimizer_offset").get<uint64_t>() != 0;
  if (!j.at("normalizer").is_null()) {
    out.meta.has_normalizer = true;
    out.meta.normalizer.lo =
        j.at("normalizer").at("lo").get<std::vector<double>>();
    out.meta.normalizer.hi =
        j.at("normalizer").at("hi").get<std::vector<double>>();
  }

  out.model = make_model(out.meta.model, out.meta.seed);

  is.clear();
  is.seekg(static_cast<std::streamoff>(tensors_begin));
  const auto names = j.at("params").get<std::vector<std::string>>();
  NamedParams params = out.model->named_params();
  if (names.size() != params.size()) {
    throw std::runtime_error(path + ": checkpoint has " +
                             std::to_string(names.size()) +
                             " parameters, model expects " +
                             std::to_string(params.size()));
  }
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] != params[i].first) {
      throw std::runtime_error(path + ": parameter name mismatch: " +
                               names[i] + " vs " + params[i].first);
    }
    const Tensor stored = read_tensor(is);
    Tensor& dst = params[i].second;
    if (stored.shape() != dst.shape()) {
      throw std::runtime_error(path + ": shape mismatch for " + names[i] +
                               ": " + shape_str(stored.shape()) + " vs " +
                               shape_str(dst.shape()));
    }
    auto w = dst.mutable_data();
    const auto src = stored.data();
    std::copy(src.begin(), src.end(), w.begin());
  }
  return out;
}

void load_optimizer_state(const std::string& path, Adam& opt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  uint64_t tensors_begin = 0;
  const nlohmann::json j = read_footer(is, path, &tensors_begin);
  const uint64_t opt_offset = j.at("optimizer_offset").get<uint64_t>();
  if (opt_offset == 0) {
    throw std::runtime_error(path + " stores no optimizer state");
  }
  is.clear();
  is.seekg(static_cast<std::streamoff>(opt_offset));
  opt.load_state(is);
}

}  // namespace rgc
