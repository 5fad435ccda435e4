#pragma once

#include <cstdint>
#include <vector>

namespace omrn {

struct AggregationConfig {
  double alpha = 0.6;  // weight of the distance-discounted IoU term
  int radius = 5;      // neighbor frames considered on each side (L)
};

struct LossWeights {
  double spatial = 1.0;
  double temporal = 1.0;
  double regression = 0.001;
  double diversity = 1.0;
};

struct LocalizerConfig {
  std::vector<int> widths = {3, 9, 17, 33, 65, 97, 129, 165, 197};
  double smooth_l1_threshold = 1.0;
  double bce_epsilon = 1e-7;
  LossWeights weights;
};

struct ModelConfig {
  int model_dim = 256;  // projection width; GRU hidden size is model_dim / 2
  AggregationConfig agg;
  LocalizerConfig loc;
};

struct AdamConfig {
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  std::uint64_t seed = 1;
  int steps = 500;
  int batch_size = 4;
  double init_scale = 1.0;  // multiplier on the uniform init bound
  AdamConfig adam;
};

}  // namespace omrn
