#include "rgc/config.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace rgc {
namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

using KvList = std::vector<std::pair<std::string, std::string>>;

void parse_file(const std::string& path, KvList& out, int depth) {
  if (depth > 8) {
    throw std::runtime_error("config include chain too deep at " + path);
  }
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::string line;
  int64_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty key");
    }
    if (key == "include") {
      const auto base = std::filesystem::path(path).parent_path();
      parse_file((base / value).string(), out, depth + 1);
    } else {
      out.emplace_back(key, value);
    }
  }
}

int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const int64_t v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': cannot parse '" +
                             value + "' as an integer");
  }
}

uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': cannot parse '" +
                             value + "' as an unsigned integer");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': cannot parse '" +
                             value + "' as a number");
  }
}

std::vector<int64_t> parse_int_list(const std::string& key,
                                    const std::string& value) {
  std::vector<int64_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_int(key, trim(item)));
  }
  if (out.empty()) {
    throw std::runtime_error("config key '" + key + "': empty list");
  }
  return out;
}

// Returns false when the key is unknown.
bool apply_key(TrainConfig& cfg, const std::string& key,
               const std::string& value) {
  if (key == "model") {
    cfg.model.kind = model_kind_from_string(value);
  } else if (key == "m") {
    cfg.model.plan.m = parse_int(key, value);
  } else if (key == "n") {
    cfg.model.plan.n = parse_int(key, value);
  } else if (key == "w") {
    cfg.model.plan.w = parse_int(key, value);
  } else if (key == "outputs") {
    cfg.model.outputs = parse_int(key, value);
  } else if (key == "latent") {
    cfg.model.latent = parse_int(key, value);
  } else if (key == "hidden") {
    cfg.model.hidden = parse_int(key, value);
  } else if (key == "encoder_channels") {
    cfg.model.encoder_channels = parse_int_list(key, value);
  } else if (key == "height") {
    cfg.model.height = parse_int(key, value);
  } else if (key == "width") {
    cfg.model.width = parse_int(key, value);
  } else if (key == "unfold_steps") {
    cfg.model.unfold_steps = parse_int(key, value);
  } else if (key == "dt") {
    cfg.model.dt = parse_double(key, value);
  } else if (key == "cfc_time") {
    cfg.model.cfc_time = parse_double(key, value);
  } else if (key == "loss") {
    cfg.loss = loss_from_string(value);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_int(key, value);
  } else if (key == "micro_batch") {
    cfg.micro_batch = parse_int(key, value);
  } else if (key == "max_epochs") {
    cfg.max_epochs = parse_int(key, value);
  } else if (key == "patience") {
    cfg.patience = parse_int(key, value);
  } else if (key == "encoder_lr") {
    cfg.encoder_lr = parse_double(key, value);
  } else if (key == "predictor_lr") {
    cfg.predictor_lr = parse_double(key, value);
  } else if (key == "validate_every") {
    cfg.validate_every = parse_int(key, value);
  } else if (key == "scheduler_factor") {
    cfg.scheduler_factor = parse_double(key, value);
  } else if (key == "scheduler_patience") {
    cfg.scheduler_patience = parse_int(key, value);
  } else if (key == "scheduler_min_delta") {
    cfg.scheduler_min_delta = parse_double(key, value);
  } else if (key == "scheduler_min_lr") {
    cfg.scheduler_min_lr = parse_double(key, value);
  } else if (key == "grad_clip") {
    cfg.grad_clip = parse_double(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_uint(key, value);
  } else if (key == "dataset") {
    cfg.dataset = value;
  } else if (key == "run_id") {
    cfg.run_id = value;
  } else {
    return false;
  }
  return true;
}

}  // namespace

TrainConfig load_train_config(const std::string& path) {
  KvList kvs;
  parse_file(path, kvs, 0);
  TrainConfig cfg;
  std::string unknown;
  for (const auto& [key, value] : kvs) {
    if (!apply_key(cfg, key, value)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += key;
    }
  }
  if (!unknown.empty()) {
    throw std::runtime_error("unknown config keys: " + unknown);
  }
  return cfg;
}

void save_train_config(const TrainConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << std::setprecision(17);
  os << "model = " << to_string(cfg.model.kind) << '\n';
  os << "m = " << cfg.model.plan.m << '\n';
  os << "n = " << cfg.model.plan.n << '\n';
  os << "w = " << cfg.model.plan.w << '\n';
  os << "outputs = " << cfg.model.outputs << '\n';
  os << "latent = " << cfg.model.latent << '\n';
  os << "hidden = " << cfg.model.hidden << '\n';
  os << "encoder_channels = ";
  for (size_t i = 0; i < cfg.model.encoder_channels.size(); ++i) {
    if (i > 0) os << ',';
    os << cfg.model.encoder_channels[i];
  }
  os << '\n';
  os << "height = " << cfg.model.height << '\n';
  os << "width = " << cfg.model.width << '\n';
  os << "unfold_steps = " << cfg.model.unfold_steps << '\n';
  os << "dt = " << cfg.model.dt << '\n';
  os << "cfc_time = " << cfg.model.cfc_time << '\n';
  os << "loss = " << to_string(cfg.loss) << '\n';
  os << "batch_size = " << cfg.batch_size << '\n';
  os << "micro_batch = " << cfg.micro_batch << '\n';
  os << "max_epochs = " << cfg.max_epochs << '\n';
  os << "patience = " << cfg.patience << '\n';
  os << "encoder_lr = " << cfg.encoder_lr << '\n';
  os << "predictor_lr = " << cfg.predictor_lr << '\n';
  os << "validate_every = " << cfg.validate_every << '\n';
  os << "scheduler_factor = " << cfg.scheduler_factor << '\n';
  os << "scheduler_patience = " << cfg.scheduler_patience << '\n';
  os << "scheduler_min_delta = " << cfg.scheduler_min_delta << '\n';
  os << "scheduler_min_lr = " << cfg.scheduler_min_lr << '\n';
  os << "grad_clip = " << cfg.grad_clip << '\n';
  os << "seed = " << cfg.seed << '\n';
  if (!cfg.dataset.empty()) os << "dataset = " << cfg.dataset << '\n';
  os << "run_id = " << cfg.run_id << '\n';
}

}  // namespace rgc
