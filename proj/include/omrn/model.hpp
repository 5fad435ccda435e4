#pragma once

#include <vector>

#include "omrn/aggregation.hpp"
#include "omrn/config.hpp"
#include "omrn/language.hpp"
#include "omrn/localizer.hpp"
#include "omrn/metrics.hpp"
#include "omrn/relation.hpp"

namespace omrn {

// Parameter-independent per-sample quantities.  Everything here depends only
// on the data and the model configuration, so a training loop computes it once
// per sample and reuses it every step.
template <typename T>
struct SampleCache {
  Tensor<T> pooled;             // [N, K, region_dim] temporally aggregated features
  Tensor<T> relgeo;             // [N, K, K, 4] pairwise relative box geometry
  Tensor<double> iou_targets;   // [N, K] region-box IoU against the gt box (gt frames)
  Tensor<double> tiou_targets;  // [N, H] candidate tIoU against the gt segment
  std::vector<Segment> candidates;  // N * H, center-major
};

template <typename T>
SampleCache<T> build_cache(const VideoSample& s, const ModelConfig& cfg);

template <typename T>
struct ForwardTrace {
  Tensor<T> agg;  // [N, K, d] projected aggregated features
  LanguageTrace<T> lang;
  RelationTrace<T> rel;
  LocalizerTrace<T> loc;
};

struct LossBreakdown {
  double spatial = 0;
  double temporal = 0;
  double regression = 0;
  double diversity = 0;
  double total = 0;  // weighted sum of the four raw terms
};

// Full forward pass; checks intermediate tensors for non-finite values and
// throws NumericError naming the offending stage.
template <typename T>
void forward_full(const VideoSample& s, const SampleCache<T>& cache, const ModelParams<T>& p,
                  const ModelConfig& cfg, const ModelDims& dims, ForwardTrace<T>& trace);

// Computes the four raw loss terms and their weighted total.  Records the
// regression head selection in the trace.
template <typename T>
LossBreakdown compute_losses(const VideoSample& s, const SampleCache<T>& cache,
                             ForwardTrace<T>& trace, const ModelConfig& cfg);

// Accumulates d(total)/d(params) into `grads`.  Discrete selections (pooling
// links, the regression head, clamps) are treated as constants.  Terms whose
// weight is zero contribute nothing.
template <typename T>
void backward_full(const VideoSample& s, const SampleCache<T>& cache, const ModelParams<T>& p,
                   const ModelConfig& cfg, const ModelDims& dims, const ForwardTrace<T>& trace,
                   ModelParams<T>& grads);

// Decoded grounding for one sample: the most confident head's candidate
// segment refined by the predicted offsets (rounded half away from zero,
// clamped to the video, reordered if inverted), plus the spatial argmax region
// in every selected frame.
template <typename T>
TubePrediction infer_sample(const VideoSample& s, const SampleCache<T>& cache,
                            const ForwardTrace<T>& trace, const ModelDims& dims);

// Convenience wrapper: cache + forward + decode.
template <typename T>
TubePrediction predict(const VideoSample& s, const ModelParams<T>& p, const ModelConfig& cfg,
                       const ModelDims& dims);

}  // namespace omrn
