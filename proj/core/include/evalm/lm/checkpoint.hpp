#pragma once

#include <string>

#include "evalm/lm/model.hpp"

namespace evalm::lm {

// Versioned checkpoint: self-describing JSON header (config, pooling mode,
// tensor shapes, config digest) followed by every learned tensor as flat
// little-endian float32 in the for_each_tensor order. Round-trips bit-exactly.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace evalm::lm
