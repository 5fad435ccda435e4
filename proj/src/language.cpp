#include "omrn/language.hpp"

#include <cmath>
#include <vector>

#include "omrn/vecops.hpp"

namespace omrn {

template <typename T>
void encode_words(const VideoSample& s, const ModelParams<T>& p, const ModelDims& dims,
                  LanguageTrace<T>& trace) {
  const std::size_t M = static_cast<std::size_t>(s.sentence_len());
  const std::size_t dw = static_cast<std::size_t>(dims.word_dim);
  const std::size_t h = static_cast<std::size_t>(dims.hidden());
  trace.embeddings = s.embeddings.template cast<T>();
  bigru_forward(trace.embeddings.data(), M, dw, h, p.lang_gru, trace.gru);
}

template <typename T>
void build_objects(const VideoSample& s, const ModelParams<T>& p, const ModelDims& dims,
                   LanguageTrace<T>& trace) {
  const std::size_t M = static_cast<std::size_t>(s.sentence_len());
  const std::size_t d = static_cast<std::size_t>(dims.model);
  const std::size_t nT = static_cast<std::size_t>(s.num_objects());
  const Tensor<T>& words = trace.gru.out;  // [M, d]
  trace.ctx_tanh.resize({nT, M, d});
  trace.attn.resize({nT, M});
  trace.objects.resize({nT, 2 * d});

  // W2 s_m is shared across nouns; compute it once.
  Tensor<T> w2s({M, d});
  for (std::size_t m = 0; m < M; ++m)
    matvec(w2s.data() + m * d, p.ctx_W2.data(), words.data() + m * d, d, d);

  std::vector<T> w1s(d);
  for (std::size_t t = 0; t < nT; ++t) {
    const std::size_t noun = static_cast<std::size_t>(s.nouns[t]);
    const T* st = words.data() + noun * d;
    matvec(w1s.data(), p.ctx_W1.data(), st, d, d);
    T* attn = trace.attn.data() + t * M;
    for (std::size_t m = 0; m < M; ++m) {
      T* u = trace.ctx_tanh.data() + (t * M + m) * d;
      const T* w2m = w2s.data() + m * d;
      for (std::size_t i = 0; i < d; ++i) u[i] = std::tanh(w1s[i] + w2m[i] + p.ctx_b[i]);
      attn[m] = dot(p.ctx_w.data(), u, d);
    }
    softmax_inplace(attn, M);
    T* obj = trace.objects.data() + t * 2 * d;
    for (std::size_t i = 0; i < d; ++i) obj[i] = st[i];
    for (std::size_t i = 0; i < d; ++i) obj[d + i] = T(0);
    for (std::size_t m = 0; m < M; ++m) axpy(obj + d, attn[m], words.data() + m * d, d);
  }
}

template <typename T>
void language_backward(const VideoSample& s, const ModelParams<T>& p, const ModelDims& dims,
                       const LanguageTrace<T>& trace, const Tensor<T>& g_objects,
                       ModelParams<T>& grads) {
  const std::size_t M = static_cast<std::size_t>(s.sentence_len());
  const std::size_t d = static_cast<std::size_t>(dims.model);
  const std::size_t nT = static_cast<std::size_t>(s.num_objects());
  const Tensor<T>& words = trace.gru.out;

  Tensor<T> g_words({M, d});
  std::vector<T> g_attn(M), g_beta(M), g_u(d), g_pre1(d);
  for (std::size_t t = 0; t < nT; ++t) {
    const std::size_t noun = static_cast<std::size_t>(s.nouns[t]);
    const T* go = g_objects.data() + t * 2 * d;
    const T* attn = trace.attn.data() + t * M;
    // Direct half: o_t[:d] = s_noun.
    axpy(g_words.data() + noun * d, T(1), go, d);
    // Context half: o_t[d:] = sum_m attn[m] s_m.
    for (std::size_t m = 0; m < M; ++m) {
      g_attn[m] = dot(go + d, words.data() + m * d, d);
      axpy(g_words.data() + m * d, attn[m], go + d, d);
    }
    softmax_backward(g_beta.data(), attn, g_attn.data(), M);
    std::fill(g_pre1.begin(), g_pre1.end(), T(0));
    for (std::size_t m = 0; m < M; ++m) {
      const T* u = trace.ctx_tanh.data() + (t * M + m) * d;
      for (std::size_t i = 0; i < d; ++i) {
        grads.ctx_w[i] += g_beta[m] * u[i];
        g_u[i] = g_beta[m] * p.ctx_w[i] * (T(1) - u[i] * u[i]);
      }
      outer_acc(grads.ctx_W2.data(), g_u.data(), words.data() + m * d, d, d);
      matvec_t_acc(g_words.data() + m * d, p.ctx_W2.data(), g_u.data(), d, d);
      for (std::size_t i = 0; i < d; ++i) {
        g_pre1[i] += g_u[i];
        grads.ctx_b[i] += g_u[i];
      }
    }
    outer_acc(grads.ctx_W1.data(), g_pre1.data(), words.data() + noun * d, d, d);
    matvec_t_acc(g_words.data() + noun * d, p.ctx_W1.data(), g_pre1.data(), d, d);
  }

  bigru_backward(trace.embeddings.data(), M, static_cast<std::size_t>(dims.word_dim),
                 static_cast<std::size_t>(dims.hidden()), p.lang_gru, trace.gru, g_words.data(),
                 grads.lang_gru, static_cast<T*>(nullptr));
}

template void encode_words<float>(const VideoSample&, const ModelParams<float>&, const ModelDims&,
                                  LanguageTrace<float>&);
template void encode_words<double>(const VideoSample&, const ModelParams<double>&,
                                   const ModelDims&, LanguageTrace<double>&);
template void build_objects<float>(const VideoSample&, const ModelParams<float>&,
                                   const ModelDims&, LanguageTrace<float>&);
template void build_objects<double>(const VideoSample&, const ModelParams<double>&,
                                    const ModelDims&, LanguageTrace<double>&);
template void language_backward<float>(const VideoSample&, const ModelParams<float>&,
                                       const ModelDims&, const LanguageTrace<float>&,
                                       const Tensor<float>&, ModelParams<float>&);
template void language_backward<double>(const VideoSample&, const ModelParams<double>&,
                                        const ModelDims&, const LanguageTrace<double>&,
                                        const Tensor<double>&, ModelParams<double>&);

}  // namespace omrn
