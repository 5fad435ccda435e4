#pragma once

#include "omrn/data.hpp"
#include "omrn/gru.hpp"
#include "omrn/params.hpp"

namespace omrn {

template <typename T>
struct LanguageTrace {
  Tensor<T> embeddings;  // [M, word_dim] sample embeddings in working precision
  BiGruTrace<T> gru;     // gru.out = word features s_m, [M, d]
  Tensor<T> ctx_tanh;    // [T, M, d]  tanh(W1 s_t + W2 s_m + b)
  Tensor<T> attn;        // [T, M]     softmax over words
  Tensor<T> objects;     // [T, 2d]    [s_t ; attended context]
};

// Bidirectional GRU over the sample's word embeddings.
template <typename T>
void encode_words(const VideoSample& s, const ModelParams<T>& p, const ModelDims& dims,
                  LanguageTrace<T>& trace);

// Context attention per noun t: scores every word against the noun's own word
// feature, softmax-normalizes, and concatenates the noun feature with the
// attended context vector.
template <typename T>
void build_objects(const VideoSample& s, const ModelParams<T>& p, const ModelDims& dims,
                   LanguageTrace<T>& trace);

// Backpropagates g_objects: [T, 2d] through attention and the GRU,
// accumulating into `grads`.
template <typename T>
void language_backward(const VideoSample& s, const ModelParams<T>& p, const ModelDims& dims,
                       const LanguageTrace<T>& trace, const Tensor<T>& g_objects,
                       ModelParams<T>& grads);

}  // namespace omrn
