#include "omrn/relation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "omrn/vecops.hpp"

namespace omrn {

namespace {

// match_W is [d, 4d] over the concatenation [r; s; r*s; r-s]; the four column
// blocks act on r, s, r*s and r-s respectively.  The forward pass folds the
// blocks into per-branch constants so each region costs two d x d products.
template <typename T>
const T* block(const Tensor<T>& W, std::size_t row, std::size_t blk, std::size_t d) {
  return W.data() + row * 4 * d + blk * d;
}

}  // namespace

template <typename T>
void modulate(const Tensor<T>& agg, const Tensor<T>& objects, const ModelParams<T>& p,
              RelationTrace<T>& trace) {
  const std::size_t nT = objects.dim(0);
  const std::size_t N = agg.dim(0), K = agg.dim(1), d = agg.dim(2);
  trace.gamma.resize({nT, d});
  trace.delta.resize({nT, d});
  trace.modulated.resize({nT, N, K, d});
  for (std::size_t t = 0; t < nT; ++t) {
    const T* o = objects.data() + t * 2 * d;
    T* gamma = trace.gamma.data() + t * d;
    T* delta = trace.delta.data() + t * d;
    matvec(gamma, p.mod_W_gamma.data(), o, d, 2 * d);
    matvec(delta, p.mod_W_delta.data(), o, d, 2 * d);
    for (std::size_t i = 0; i < d; ++i) {
      gamma[i] = std::tanh(gamma[i] + p.mod_b_gamma[i]);
      delta[i] = std::tanh(delta[i] + p.mod_b_delta[i]);
    }
  }
  const std::size_t cells = N * K;
#pragma omp parallel for collapse(2)
  for (std::size_t t = 0; t < nT; ++t) {
    for (std::size_t c = 0; c < cells; ++c) {
      const T* gamma = trace.gamma.data() + t * d;
      const T* delta = trace.delta.data() + t * d;
      const T* r = agg.data() + c * d;
      T* out = trace.modulated.data() + (t * cells + c) * d;
      for (std::size_t i = 0; i < d; ++i) out[i] = gamma[i] * r[i] + delta[i];
    }
  }
}

template <typename T>
void match(const Tensor<T>& objects, const ModelParams<T>& p, const ModelDims& dims,
           RelationTrace<T>& trace) {
  const std::size_t nT = objects.dim(0);
  const std::size_t N = trace.modulated.dim(1), K = trace.modulated.dim(2);
  const std::size_t d = static_cast<std::size_t>(dims.model);
  trace.match_tanh.resize({nT, N, K, d});
  trace.match_logits.resize({nT, N, K});
  trace.dist.resize({nT, N, K});

  // W_r+ = block1 + block4 (acts on r), and per branch the constant part
  // (block2 - block4) s + b.
  Tensor<T> W_rplus({d, d});
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      W_rplus[i * d + j] = block(p.match_W, i, 0, d)[j] + block(p.match_W, i, 3, d)[j];
  Tensor<T> bias_t({nT, d});
  for (std::size_t t = 0; t < nT; ++t) {
    const T* s = objects.data() + t * 2 * d;  // word-level half of o_t
    T* bt = bias_t.data() + t * d;
    for (std::size_t i = 0; i < d; ++i) {
      T acc = p.match_b[i];
      const T* b2 = block(p.match_W, i, 1, d);
      const T* b4 = block(p.match_W, i, 3, d);
      for (std::size_t j = 0; j < d; ++j) acc += (b2[j] - b4[j]) * s[j];
      bt[i] = acc;
    }
  }

#pragma omp parallel for collapse(2)
  for (std::size_t t = 0; t < nT; ++t) {
    for (std::size_t n = 0; n < N; ++n) {
      std::vector<T> rs(d);
      const T* s = objects.data() + t * 2 * d;
      for (std::size_t k = 0; k < K; ++k) {
        const T* r = trace.modulated.data() + ((t * N + n) * K + k) * d;
        for (std::size_t i = 0; i < d; ++i) rs[i] = r[i] * s[i];
        T* u = trace.match_tanh.data() + ((t * N + n) * K + k) * d;
        const T* bt = bias_t.data() + t * d;
        for (std::size_t i = 0; i < d; ++i) {
          T acc = bt[i] + dot(W_rplus.data() + i * d, r, d);
          const T* b3 = block(p.match_W, i, 2, d);
          acc += dot(b3, rs.data(), d);
          u[i] = std::tanh(acc);
        }
        trace.match_logits[(t * N + n) * K + k] = dot(p.match_w.data(), u, d);
      }
      T* dist = trace.dist.data() + (t * N + n) * K;
      const T* logits = trace.match_logits.data() + (t * N + n) * K;
      for (std::size_t k = 0; k < K; ++k) dist[k] = logits[k];
      softmax_inplace(dist, K);
    }
  }
}

template <typename T>
void relate(const VideoSample& s, const Tensor<T>& relgeo, const ModelParams<T>& p,
            const ModelDims& dims, RelationTrace<T>& trace) {
  const std::size_t nT = trace.modulated.dim(0);
  const std::size_t N = trace.modulated.dim(1), K = trace.modulated.dim(2);
  const std::size_t d = static_cast<std::size_t>(dims.model);
  const std::size_t nA = nT - 1;  // auxiliary branches
  (void)s;
  trace.rel_tanh.resize({N, K, nA, K, d});
  trace.rel_attn.resize({N, K, nA, K});
  trace.fused_pre.resize({N, K, d});
  trace.fused.resize({N, K, d});

  // Shared projections: W1 on main-branch regions, W2 on aux-branch regions.
  Tensor<T> w1r({N, K, d});
#pragma omp parallel for
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(N * K); ++c)
    matvec(w1r.data() + c * d, p.rel_W1.data(), trace.modulated.data() + c * d, d, d);
  Tensor<T> w2r({nA, N, K, d});
#pragma omp parallel for
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nA * N * K); ++c)
    matvec(w2r.data() + c * d, p.rel_W2.data(),
           trace.modulated.data() + (N * K + c) * d, d, d);

#pragma omp parallel for
  for (std::size_t n = 0; n < N; ++n) {
    std::vector<T> w3g(d);
    for (std::size_t k = 0; k < K; ++k) {
      const T* main_r = trace.modulated.data() + (n * K + k) * d;
      T* fused_pre = trace.fused_pre.data() + (n * K + k) * d;
      for (std::size_t i = 0; i < d; ++i) fused_pre[i] = main_r[i];
      const T dmain = trace.dist[n * K + k];
      for (std::size_t t = 0; t < nA; ++t) {
        T* attn = trace.rel_attn.data() + ((n * K + k) * nA + t) * K;
        for (std::size_t l = 0; l < K; ++l) {
          const T* geo = relgeo.data() + ((n * K + k) * K + l) * 4;
          matvec(w3g.data(), p.rel_W3.data(), geo, d, 4);
          const T* a = w1r.data() + (n * K + k) * d;
          const T* b = w2r.data() + ((t * N + n) * K + l) * d;
          T* u = trace.rel_tanh.data() + (((n * K + k) * nA + t) * K + l) * d;
          for (std::size_t i = 0; i < d; ++i)
            u[i] = std::tanh(a[i] + b[i] + w3g[i] + p.rel_b[i]);
          attn[l] = dot(p.rel_w.data(), u, d);
        }
        softmax_inplace(attn, K);
        for (std::size_t l = 0; l < K; ++l) {
          const T daux = trace.dist[((t + 1) * N + n) * K + l];
          const T coef = dmain * daux * attn[l];
          axpy(fused_pre, coef, trace.modulated.data() + (((t + 1) * N + n) * K + l) * d, d);
        }
      }
      T* fused = trace.fused.data() + (n * K + k) * d;
      for (std::size_t i = 0; i < d; ++i) fused[i] = fused_pre[i] > T(0) ? fused_pre[i] : T(0);
    }
  }
}

template <typename T>
T diversity_loss(const RelationTrace<T>& trace, const Segment& gt) {
  const std::size_t nT = trace.dist.dim(0);
  const std::size_t N = trace.dist.dim(1), K = trace.dist.dim(2);
  if (nT < 2) return T(0);
  if (gt.s < 1 || static_cast<std::size_t>(gt.e) > N || gt.e < gt.s)
    throw ValidationError("diversity_loss: segment outside the video");
  double acc = 0;
  for (int n = gt.s; n <= gt.e; ++n)
    for (std::size_t i = 0; i < nT; ++i)
      for (std::size_t j = i + 1; j < nT; ++j)
        acc += static_cast<double>(dot(trace.dist.data() + (i * N + (n - 1)) * K,
                                       trace.dist.data() + (j * N + (n - 1)) * K, K));
  double Z = 0.5 * gt.length() * static_cast<double>(nT) * static_cast<double>(nT - 1);
  return static_cast<T>(acc / Z);
}

template <typename T>
void diversity_backward(const RelationTrace<T>& trace, const Segment& gt, T weight,
                        Tensor<T>& g_dist) {
  const std::size_t nT = trace.dist.dim(0);
  const std::size_t N = trace.dist.dim(1), K = trace.dist.dim(2);
  if (nT < 2) return;
  const T scale = weight / static_cast<T>(0.5 * gt.length() * nT * (nT - 1));
  for (int n = gt.s; n <= gt.e; ++n)
    for (std::size_t i = 0; i < nT; ++i) {
      T* g = g_dist.data() + (i * N + (n - 1)) * K;
      for (std::size_t j = 0; j < nT; ++j) {
        if (j == i) continue;
        axpy(g, scale, trace.dist.data() + (j * N + (n - 1)) * K, K);
      }
    }
}

template <typename T>
void relate_backward(const Tensor<T>& relgeo, const ModelParams<T>& p, const ModelDims& dims,
                     const RelationTrace<T>& trace, const Tensor<T>& g_fused,
                     ModelParams<T>& grads, Tensor<T>& g_modulated, Tensor<T>& g_dist) {
  const std::size_t nT = trace.modulated.dim(0);
  const std::size_t N = trace.modulated.dim(1), K = trace.modulated.dim(2);
  const std::size_t d = static_cast<std::size_t>(dims.model);
  const std::size_t nA = nT - 1;

  std::vector<T> g_S(d), g_attn(K), g_eps(K), g_pre(d), sum_main(d);
  // Gradients of the shared projections are accumulated per aux cell and per
  // (frame, region, aux region) geometry cell to keep the pass at matvec cost.
  Tensor<T> g_w2r;  // [nA, N, K, d] gradient w.r.t. W2 * aux feature
  if (nA > 0) g_w2r.resize({nA, N, K, d});

  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      const T* pre = trace.fused_pre.data() + (n * K + k) * d;
      const T* gf = g_fused.data() + (n * K + k) * d;
      for (std::size_t i = 0; i < d; ++i) g_S[i] = pre[i] > T(0) ? gf[i] : T(0);
      // Residual path into the main branch.
      axpy(g_modulated.data() + (n * K + k) * d, T(1), g_S.data(), d);
      if (nA == 0) continue;

      const T dmain = trace.dist[n * K + k];
      std::fill(sum_main.begin(), sum_main.end(), T(0));
      for (std::size_t t = 0; t < nA; ++t) {
        const T* attn = trace.rel_attn.data() + ((n * K + k) * nA + t) * K;
        T g_dmain_acc = 0;
        for (std::size_t l = 0; l < K; ++l) {
          const T* aux = trace.modulated.data() + (((t + 1) * N + n) * K + l) * d;
          const T daux = trace.dist[((t + 1) * N + n) * K + l];
          const T g_coef = dot(g_S.data(), aux, d);
          // message = dmain * daux * attn * aux
          axpy(g_modulated.data() + (((t + 1) * N + n) * K + l) * d, dmain * daux * attn[l],
               g_S.data(), d);
          g_dmain_acc += g_coef * daux * attn[l];
          g_dist[((t + 1) * N + n) * K + l] += g_coef * dmain * attn[l];
          g_attn[l] = g_coef * dmain * daux;
        }
        g_dist[n * K + k] += g_dmain_acc;
        softmax_backward(g_eps.data(), attn, g_attn.data(), K);
        for (std::size_t l = 0; l < K; ++l) {
          const T* u = trace.rel_tanh.data() + (((n * K + k) * nA + t) * K + l) * d;
          const T ge = g_eps[l];
          for (std::size_t i = 0; i < d; ++i) {
            grads.rel_w[i] += ge * u[i];
            g_pre[i] = ge * p.rel_w[i] * (T(1) - u[i] * u[i]);
          }
          for (std::size_t i = 0; i < d; ++i) {
            sum_main[i] += g_pre[i];
            grads.rel_b[i] += g_pre[i];
          }
          axpy(g_w2r.data() + (((t * N) + n) * K + l) * d, T(1), g_pre.data(), d);
          const T* geo = relgeo.data() + ((n * K + k) * K + l) * 4;
          outer_acc(grads.rel_W3.data(), g_pre.data(), geo, d, 4);
        }
      }
      // Shared W1 path for this main region.
      outer_acc(grads.rel_W1.data(), sum_main.data(), trace.modulated.data() + (n * K + k) * d, d,
                d);
      matvec_t_acc(g_modulated.data() + (n * K + k) * d, p.rel_W1.data(), sum_main.data(), d, d);
    }
  }
  // Shared W2 path, once per aux cell.
  for (std::size_t c = 0; c < nA * N * K; ++c) {
    const T* g = g_w2r.data() + c * d;
    outer_acc(grads.rel_W2.data(), g, trace.modulated.data() + (N * K + c) * d, d, d);
    matvec_t_acc(g_modulated.data() + (N * K + c) * d, p.rel_W2.data(), g, d, d);
  }
}

template <typename T>
void match_backward(const Tensor<T>& objects, const ModelParams<T>& p, const ModelDims& dims,
                    const RelationTrace<T>& trace, const Tensor<T>& g_dist, ModelParams<T>& grads,
                    Tensor<T>& g_modulated, Tensor<T>& g_objects) {
  const std::size_t nT = objects.dim(0);
  const std::size_t N = trace.modulated.dim(1), K = trace.modulated.dim(2);
  const std::size_t d = static_cast<std::size_t>(dims.model);
  std::vector<T> g_logits(K), g_pre(d), rs(d), w2g(d), w3g(d), w4g(d);
  for (std::size_t t = 0; t < nT; ++t) {
    const T* s = objects.data() + t * 2 * d;
    T* g_s = g_objects.data() + t * 2 * d;  // word-level half
    for (std::size_t n = 0; n < N; ++n) {
      const T* dist = trace.dist.data() + (t * N + n) * K;
      softmax_backward(g_logits.data(), dist, g_dist.data() + (t * N + n) * K, K);
      for (std::size_t k = 0; k < K; ++k) {
        const T gl = g_logits[k];
        if (gl == T(0)) continue;
        const T* u = trace.match_tanh.data() + ((t * N + n) * K + k) * d;
        const T* r = trace.modulated.data() + ((t * N + n) * K + k) * d;
        for (std::size_t i = 0; i < d; ++i) {
          grads.match_w[i] += gl * u[i];
          g_pre[i] = gl * p.match_w[i] * (T(1) - u[i] * u[i]);
          grads.match_b[i] += g_pre[i];
        }
        for (std::size_t i = 0; i < d; ++i) rs[i] = r[i] * s[i];
        // Outer products into the four column blocks of match_W.
        for (std::size_t i = 0; i < d; ++i) {
          T* row = grads.match_W.data() + i * 4 * d;
          const T gi = g_pre[i];
          for (std::size_t j = 0; j < d; ++j) {
            row[j] += gi * r[j];
            row[d + j] += gi * s[j];
            row[2 * d + j] += gi * rs[j];
            row[3 * d + j] += gi * (r[j] - s[j]);
          }
        }
        std::fill(w2g.begin(), w2g.end(), T(0));
        std::fill(w3g.begin(), w3g.end(), T(0));
        std::fill(w4g.begin(), w4g.end(), T(0));
        T* g_r = g_modulated.data() + ((t * N + n) * K + k) * d;
        for (std::size_t i = 0; i < d; ++i) {
          const T gi = g_pre[i];
          const T* row = p.match_W.data() + i * 4 * d;
          for (std::size_t j = 0; j < d; ++j) {
            g_r[j] += gi * row[j];
            w2g[j] += gi * row[d + j];
            w3g[j] += gi * row[2 * d + j];
            w4g[j] += gi * row[3 * d + j];
          }
        }
        for (std::size_t j = 0; j < d; ++j) {
          g_r[j] += w3g[j] * s[j] + w4g[j];
          g_s[j] += w2g[j] + w3g[j] * r[j] - w4g[j];
        }
      }
    }
  }
}

template <typename T>
void modulate_backward(const Tensor<T>& agg, const Tensor<T>& objects, const ModelParams<T>& p,
                       const RelationTrace<T>& trace, const Tensor<T>& g_modulated,
                       ModelParams<T>& grads, Tensor<T>& g_agg, Tensor<T>& g_objects) {
  const std::size_t nT = objects.dim(0);
  const std::size_t N = agg.dim(0), K = agg.dim(1), d = agg.dim(2);
  std::vector<T> g_gamma(d), g_delta(d), g_pre(d);
  for (std::size_t t = 0; t < nT; ++t) {
    const T* gamma = trace.gamma.data() + t * d;
    const T* delta = trace.delta.data() + t * d;
    std::fill(g_gamma.begin(), g_gamma.end(), T(0));
    std::fill(g_delta.begin(), g_delta.end(), T(0));
    for (std::size_t c = 0; c < N * K; ++c) {
      const T* g = g_modulated.data() + (t * N * K + c) * d;
      const T* r = agg.data() + c * d;
      T* ga = g_agg.data() + c * d;
      for (std::size_t i = 0; i < d; ++i) {
        g_gamma[i] += g[i] * r[i];
        g_delta[i] += g[i];
        ga[i] += g[i] * gamma[i];
      }
    }
    const T* o = objects.data() + t * 2 * d;
    T* g_o = g_objects.data() + t * 2 * d;
    for (std::size_t i = 0; i < d; ++i) g_pre[i] = g_gamma[i] * (T(1) - gamma[i] * gamma[i]);
    outer_acc(grads.mod_W_gamma.data(), g_pre.data(), o, d, 2 * d);
    matvec_t_acc(g_o, p.mod_W_gamma.data(), g_pre.data(), d, 2 * d);
    for (std::size_t i = 0; i < d; ++i) grads.mod_b_gamma[i] += g_pre[i];
    for (std::size_t i = 0; i < d; ++i) g_pre[i] = g_delta[i] * (T(1) - delta[i] * delta[i]);
    outer_acc(grads.mod_W_delta.data(), g_pre.data(), o, d, 2 * d);
    matvec_t_acc(g_o, p.mod_W_delta.data(), g_pre.data(), d, 2 * d);
    for (std::size_t i = 0; i < d; ++i) grads.mod_b_delta[i] += g_pre[i];
  }
}

#define OMRN_INSTANTIATE(T)                                                                       \
  template void modulate<T>(const Tensor<T>&, const Tensor<T>&, const ModelParams<T>&,            \
                            RelationTrace<T>&);                                                   \
  template void match<T>(const Tensor<T>&, const ModelParams<T>&, const ModelDims&,               \
                         RelationTrace<T>&);                                                      \
  template void relate<T>(const VideoSample&, const Tensor<T>&, const ModelParams<T>&,            \
                          const ModelDims&, RelationTrace<T>&);                                   \
  template T diversity_loss<T>(const RelationTrace<T>&, const Segment&);                          \
  template void diversity_backward<T>(const RelationTrace<T>&, const Segment&, T, Tensor<T>&);    \
  template void relate_backward<T>(const Tensor<T>&, const ModelParams<T>&, const ModelDims&,     \
                                   const RelationTrace<T>&, const Tensor<T>&, ModelParams<T>&,    \
                                   Tensor<T>&, Tensor<T>&);                                       \
  template void match_backward<T>(const Tensor<T>&, const ModelParams<T>&, const ModelDims&,      \
                                  const RelationTrace<T>&, const Tensor<T>&, ModelParams<T>&,     \
                                  Tensor<T>&, Tensor<T>&);                                        \
  template void modulate_backward<T>(const Tensor<T>&, const Tensor<T>&, const ModelParams<T>&,   \
                                     const RelationTrace<T>&, const Tensor<T>&, ModelParams<T>&,  \
                                     Tensor<T>&, Tensor<T>&)

OMRN_INSTANTIATE(float);
OMRN_INSTANTIATE(double);
#undef OMRN_INSTANTIATE

}  // namespace omrn
