#pragma once

#include <string>

#include "rgc/train.hpp"

namespace rgc {

// Declarative `key = value` experiment files: '#' comments, blank lines,
// and an `include = relative/path` key that splices another file in place
// so presets can compose (later keys override earlier ones).  Unknown keys
// raise an error listing all of them.
TrainConfig load_train_config(const std::string& path);

void save_train_config(const TrainConfig& cfg, const std::string& path);

}  // namespace rgc
