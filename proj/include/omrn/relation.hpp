#pragma once

#include "omrn/data.hpp"
#include "omrn/params.hpp"

namespace omrn {

template <typename T>
struct RelationTrace {
  Tensor<T> gamma, delta;   // [T, d] modulation gates
  Tensor<T> modulated;      // [T, N, K, d]
  Tensor<T> match_tanh;     // [T, N, K, d]
  Tensor<T> match_logits;   // [T, N, K]
  Tensor<T> dist;           // [T, N, K] softmax over regions
  Tensor<T> rel_tanh;       // [N, K, T-1, K, d]
  Tensor<T> rel_attn;       // [N, K, T-1, K] softmax over the aux region
  Tensor<T> fused_pre;      // [N, K, d] pre-ReLU
  Tensor<T> fused;          // [N, K, d] relation-enhanced main features
};

// Object-conditioned feature-wise modulation: per branch t,
// modulated[t,n,k] = tanh(W_gamma o_t + b_gamma) * agg[n,k] + tanh(W_delta o_t + b_delta).
template <typename T>
void modulate(const Tensor<T>& agg, const Tensor<T>& objects, const ModelParams<T>& p,
              RelationTrace<T>& trace);

// Cross-modal matching distribution per branch and frame: region k scores
// w . tanh(W_c [r; s; r*s; r-s] + b_c) with s the branch object's word-level
// feature (first half of o_t), softmax-normalized over the K regions.
template <typename T>
void match(const Tensor<T>& objects, const ModelParams<T>& p, const ModelDims& dims,
           RelationTrace<T>& trace);

// Relation reasoning: for every main-branch region, attends over each
// auxiliary branch's regions (scores from the two features plus their relative
// box geometry), weights the attended aux features by both matching
// distributions, and fuses into ReLU(main + sum of aux messages).
template <typename T>
void relate(const VideoSample& s, const Tensor<T>& relgeo, const ModelParams<T>& p,
            const ModelDims& dims, RelationTrace<T>& trace);

// Mean pairwise inner product of the branch matching distributions over the
// ground-truth frames, normalized by |S| * T * (T-1) / 2; zero when T < 2.
template <typename T>
T diversity_loss(const RelationTrace<T>& trace, const Segment& gt);

// Backward passes.  relate_backward consumes dL/dfused and accumulates into
// parameter grads, g_modulated and g_dist; match_backward consumes the total
// g_dist; modulate_backward consumes the total g_modulated.
template <typename T>
void diversity_backward(const RelationTrace<T>& trace, const Segment& gt, T weight,
                        Tensor<T>& g_dist);

template <typename T>
void relate_backward(const Tensor<T>& relgeo, const ModelParams<T>& p, const ModelDims& dims,
                     const RelationTrace<T>& trace, const Tensor<T>& g_fused,
                     ModelParams<T>& grads, Tensor<T>& g_modulated, Tensor<T>& g_dist);

template <typename T>
void match_backward(const Tensor<T>& objects, const ModelParams<T>& p, const ModelDims& dims,
                    const RelationTrace<T>& trace, const Tensor<T>& g_dist, ModelParams<T>& grads,
                    Tensor<T>& g_modulated, Tensor<T>& g_objects);

template <typename T>
void modulate_backward(const Tensor<T>& agg, const Tensor<T>& objects, const ModelParams<T>& p,
                       const RelationTrace<T>& trace, const Tensor<T>& g_modulated,
                       ModelParams<T>& grads, Tensor<T>& g_agg, Tensor<T>& g_objects);

}  // namespace omrn
