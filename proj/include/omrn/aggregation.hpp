#pragma once

#include <vector>

#include "omrn/config.hpp"
#include "omrn/data.hpp"
#include "omrn/params.hpp"
#include "omrn/tensor.hpp"

namespace omrn {

// Linking score between region a in frame `frame_a` and region b in a
// different frame: cosine feature similarity plus alpha / |frame gap| times
// box IoU.  Throws ValidationError on equal frames and NumericError on a
// zero-norm feature.
template <typename T>
double linking_score(const T* feat_a, const T* feat_b, std::size_t dim, const BoundingBox& box_a,
                     const BoundingBox& box_b, int frame_a, int frame_b, double alpha);

struct LinkPick {
  int frame;   // 1-based neighbor frame
  int region;  // 0-based region index chosen in that frame
};

// For every region (n, k), picks the best-linked region in each of the up to
// 2 * radius neighbor frames and mean-pools the picked raw features together
// with the region's own (divisor = picks + 1).  Frames near the edges use the
// neighbors that exist.  `picks`, when non-null, receives the selections for
// every (n, k) in row-major order.  Ties go to the lowest region index.
template <typename T>
void pool_regions(const VideoSample& s, const AggregationConfig& cfg, Tensor<T>& pooled,
                  std::vector<std::vector<LinkPick>>* picks = nullptr);

// Linear projection of the pooled features: out[n,k] = W_agg pooled[n,k] + b.
// The pooling above is pure data preprocessing; this is the trainable part.
template <typename T>
void aggregate_forward(const Tensor<T>& pooled, const ModelParams<T>& p, Tensor<T>& out);

// Accumulates dL/dW_agg and dL/db_agg from g_out: [N, K, d].
template <typename T>
void aggregate_backward(const Tensor<T>& pooled, const Tensor<T>& g_out, ModelParams<T>& grads);

}  // namespace omrn
