#pragma once

#include <vector>

#include "omrn/data.hpp"
#include "omrn/gru.hpp"
#include "omrn/params.hpp"

namespace omrn {

// Candidate temporal segments: for every center frame n = 1..frames and every
// width w, the raw window [n - (w-1)/2, n + w/2] clamped to [1, frames].
// Center-major order; duplicates after clamping are kept so index (n, h) is
// always meaningful.
std::vector<Segment> candidate_segments(int frames, const std::vector<int>& widths);

template <typename T>
struct LocalizerTrace {
  Tensor<T> wr_fused;     // [N, K, d] W_r applied to the fused region features
  Tensor<T> wo_obj;       // [d] W_o applied to the queried object feature
  Tensor<T> spatial;      // [N, K] sigmoid region scores
  Tensor<T> frame_tanh;   // [N, K, d] frame-attention hidden activations
  Tensor<T> frame_attn;   // [N, K] softmax over regions
  Tensor<T> frame_feat;   // [N, d] attention-pooled per-frame features
  BiGruTrace<T> gru;      // temporal context; gru.out is [N, d]
  Tensor<T> conf_logits;  // [N, H]
  Tensor<T> conf;         // [N, H] sigmoid confidences
  Tensor<T> offsets;      // [N, 2H] (start, end) per head
  int sel_n = -1;         // 0-based frame index picked for regression
  int sel_h = -1;         // head index picked for regression
};

// spatial[n,k] = sigmoid((W_r fused[n,k]) . (W_o o_1)) with o_1 the queried
// object's language feature (objects row 0).
template <typename T>
void spatial_scores(const Tensor<T>& fused, const Tensor<T>& objects, const ModelParams<T>& p,
                    LocalizerTrace<T>& trace);

// Per-frame attention pooling of the fused features, conditioned on o_1:
// scores w_f . tanh(W_f1 fused[n,k] + W_f2 o_1 + b_f), softmax over k.
template <typename T>
void frame_features(const Tensor<T>& fused, const Tensor<T>& objects, const ModelParams<T>& p,
                    LocalizerTrace<T>& trace);

// Bi-GRU over the pooled frame features followed by the two linear heads:
// conf = sigmoid(W_conf f + b_conf) per frame, offsets = W_off f + b_off.
template <typename T>
void temporal_heads(const ModelParams<T>& p, const ModelDims& dims, LocalizerTrace<T>& trace);

// Soft-target binary cross-entropy of the spatial scores against the per-region
// IoU targets, averaged over the ground-truth frames times K.  Scores are
// clamped to [eps, 1 - eps] inside the logs.
template <typename T>
T spatial_loss(const LocalizerTrace<T>& trace, const Tensor<double>& iou_targets,
               const Segment& gt, double eps);

// Soft-target BCE of the confidences against the candidate temporal-IoU
// targets, averaged over all N * H heads.
template <typename T>
T temporal_loss(const LocalizerTrace<T>& trace, const Tensor<double>& tiou_targets, double eps);

// Smooth-L1 boundary regression on the most confident head only (ties resolved
// toward the lowest (n, h)).  Records the selection in the trace.  The head's
// targets are candidate_start - gt_start and candidate_end - gt_end.
template <typename T>
T regression_loss(LocalizerTrace<T>& trace, const std::vector<Segment>& candidates,
                  const Segment& gt, double tau);

// Backward passes.  The spatial loss reaches the parameters only through
// W_r / W_o, so its backward is self-contained; the temporal and regression
// losses meet at the head gradients and flow back jointly through the GRU and
// the frame attention in localizer_backward.
template <typename T>
void spatial_backward(const Tensor<T>& fused, const Tensor<T>& objects, const ModelParams<T>& p,
                      const LocalizerTrace<T>& trace, const Tensor<double>& iou_targets,
                      const Segment& gt, double eps, T weight, ModelParams<T>& grads,
                      Tensor<T>& g_fused, Tensor<T>& g_objects);

template <typename T>
void temporal_loss_backward(const LocalizerTrace<T>& trace, const Tensor<double>& tiou_targets,
                            double eps, T weight, Tensor<T>& g_conf_logits);

template <typename T>
void regression_backward(const LocalizerTrace<T>& trace, const std::vector<Segment>& candidates,
                         const Segment& gt, double tau, T weight, Tensor<T>& g_offsets);

template <typename T>
void localizer_backward(const Tensor<T>& fused, const Tensor<T>& objects, const ModelParams<T>& p,
                        const ModelDims& dims, const LocalizerTrace<T>& trace,
                        const Tensor<T>& g_conf_logits, const Tensor<T>& g_offsets,
                        ModelParams<T>& grads, Tensor<T>& g_fused, Tensor<T>& g_objects);

// Picks the highest-confidence head; ties resolve to the lowest (n, h).
template <typename T>
void select_best_head(const Tensor<T>& conf, int& sel_n, int& sel_h);

}  // namespace omrn
