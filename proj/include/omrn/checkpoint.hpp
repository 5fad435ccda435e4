#pragma once

#include <cstdint>
#include <string>

#include "omrn/config.hpp"
#include "omrn/params.hpp"

namespace omrn {

// Everything an inference run needs besides the weights.
struct CheckpointMeta {
  ModelDims dims;
  ModelConfig config;
  std::uint64_t seed = 0;
  long step = 0;
};

// Container: magic "OMRNCKPT", little-endian u32 JSON header length, the JSON
// header (format tag, dims, config, seed, step, tensor names), then one binary
// tensor record per parameter in registry order.  Writing is deterministic:
// identical params and meta produce identical bytes.
void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     const CheckpointMeta& meta);

ModelParams<float> load_checkpoint(const std::string& path, CheckpointMeta& meta);

}  // namespace omrn
