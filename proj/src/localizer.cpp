#include "omrn/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "omrn/vecops.hpp"

namespace omrn {

std::vector<Segment> candidate_segments(int frames, const std::vector<int>& widths) {
  if (frames < 1) throw ValidationError("candidate_segments: frames must be >= 1");
  if (widths.empty()) throw ValidationError("candidate_segments: empty width list");
  for (int w : widths)
    if (w < 1) throw ValidationError("candidate_segments: widths must be >= 1");
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(frames) * widths.size());
  for (int n = 1; n <= frames; ++n) {
    for (int w : widths) {
      Segment seg{n - (w - 1) / 2, n + w / 2};
      seg.s = std::clamp(seg.s, 1, frames);
      seg.e = std::clamp(seg.e, 1, frames);
      out.push_back(seg);
    }
  }
  return out;
}

template <typename T>
void spatial_scores(const Tensor<T>& fused, const Tensor<T>& objects, const ModelParams<T>& p,
                    LocalizerTrace<T>& trace) {
  const std::size_t N = fused.dim(0), K = fused.dim(1), d = fused.dim(2);
  trace.wr_fused.resize({N, K, d});
  trace.wo_obj.resize({d});
  trace.spatial.resize({N, K});
  matvec(trace.wo_obj.data(), p.loc_W_o.data(), objects.data(), d, 2 * d);
#pragma omp parallel for
  for (std::size_t c = 0; c < N * K; ++c) {
    T* wr = trace.wr_fused.data() + c * d;
    matvec(wr, p.loc_W_r.data(), fused.data() + c * d, d, d);
    trace.spatial[c] = sigmoid(dot(wr, trace.wo_obj.data(), d));
  }
}

template <typename T>
void frame_features(const Tensor<T>& fused, const Tensor<T>& objects, const ModelParams<T>& p,
                    LocalizerTrace<T>& trace) {
  const std::size_t N = fused.dim(0), K = fused.dim(1), d = fused.dim(2);
  trace.frame_tanh.resize({N, K, d});
  trace.frame_attn.resize({N, K});
  trace.frame_feat.resize({N, d});
  std::vector<T> w2o(d);  // W_f2 o_1 + b_f, shared by every cell
  matvec(w2o.data(), p.loc_W_f2.data(), objects.data(), d, 2 * d);
  for (std::size_t i = 0; i < d; ++i) w2o[i] += p.loc_b_f[i];
#pragma omp parallel for
  for (std::size_t n = 0; n < N; ++n) {
    T* attn = trace.frame_attn.data() + n * K;
    for (std::size_t k = 0; k < K; ++k) {
      const T* r = fused.data() + (n * K + k) * d;
      T* u = trace.frame_tanh.data() + (n * K + k) * d;
      for (std::size_t i = 0; i < d; ++i)
        u[i] = std::tanh(dot(p.loc_W_f1.data() + i * d, r, d) + w2o[i]);
      attn[k] = dot(p.loc_w_f.data(), u, d);
    }
    softmax_inplace(attn, K);
    T* ff = trace.frame_feat.data() + n * d;
    for (std::size_t k = 0; k < K; ++k) axpy(ff, attn[k], fused.data() + (n * K + k) * d, d);
  }
}

template <typename T>
void temporal_heads(const ModelParams<T>& p, const ModelDims& dims, LocalizerTrace<T>& trace) {
  const std::size_t N = trace.frame_feat.dim(0);
  const std::size_t d = static_cast<std::size_t>(dims.model);
  const std::size_t H = static_cast<std::size_t>(dims.num_widths);
  bigru_forward(trace.frame_feat.data(), N, d, d / 2, p.tmp_gru, trace.gru);
  trace.conf_logits.resize({N, H});
  trace.conf.resize({N, H});
  trace.offsets.resize({N, 2 * H});
#pragma omp parallel for
  for (std::size_t n = 0; n < N; ++n) {
    const T* f = trace.gru.out.data() + n * d;
    T* logits = trace.conf_logits.data() + n * H;
    matvec(logits, p.loc_W_conf.data(), f, H, d);
    for (std::size_t h = 0; h < H; ++h) {
      logits[h] += p.loc_b_conf[h];
      trace.conf[n * H + h] = sigmoid(logits[h]);
    }
    T* off = trace.offsets.data() + n * 2 * H;
    matvec(off, p.loc_W_off.data(), f, 2 * H, d);
    for (std::size_t h = 0; h < 2 * H; ++h) off[h] += p.loc_b_off[h];
  }
}

namespace {

inline double clamped_bce(double p, double y, double eps) {
  const double q = std::min(std::max(p, eps), 1.0 - eps);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

}  // namespace

template <typename T>
T spatial_loss(const LocalizerTrace<T>& trace, const Tensor<double>& iou_targets,
               const Segment& gt, double eps) {
  const std::size_t N = trace.spatial.dim(0), K = trace.spatial.dim(1);
  if (gt.s < 1 || static_cast<std::size_t>(gt.e) > N || gt.e < gt.s)
    throw ValidationError("spatial_loss: segment outside the video");
  double acc = 0;
  for (int n = gt.s; n <= gt.e; ++n)
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t c = static_cast<std::size_t>(n - 1) * K + k;
      acc += clamped_bce(static_cast<double>(trace.spatial[c]), iou_targets[c], eps);
    }
  return static_cast<T>(acc / (static_cast<double>(gt.length()) * static_cast<double>(K)));
}

template <typename T>
T temporal_loss(const LocalizerTrace<T>& trace, const Tensor<double>& tiou_targets, double eps) {
  const std::size_t cells = trace.conf.size();
  double acc = 0;
  for (std::size_t c = 0; c < cells; ++c)
    acc += clamped_bce(static_cast<double>(trace.conf[c]), tiou_targets[c], eps);
  return static_cast<T>(acc / static_cast<double>(cells));
}

template <typename T>
void select_best_head(const Tensor<T>& conf, int& sel_n, int& sel_h) {
  const std::size_t N = conf.dim(0), H = conf.dim(1);
  sel_n = 0;
  sel_h = 0;
  T best = conf[0];
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t h = 0; h < H; ++h)
      if (conf[n * H + h] > best) {
        best = conf[n * H + h];
        sel_n = static_cast<int>(n);
        sel_h = static_cast<int>(h);
      }
}

namespace {

inline double smooth_l1(double x, double tau) {
  const double a = std::abs(x);
  return a < tau ? 0.5 * x * x : a - 0.5 * tau;
}

inline double smooth_l1_grad(double x, double tau) {
  if (std::abs(x) < tau) return x;
  return x > 0 ? tau : -tau;
}

}  // namespace

template <typename T>
T regression_loss(LocalizerTrace<T>& trace, const std::vector<Segment>& candidates,
                  const Segment& gt, double tau) {
  select_best_head(trace.conf, trace.sel_n, trace.sel_h);
  const std::size_t H = trace.conf.dim(1);
  const Segment cand = candidates[static_cast<std::size_t>(trace.sel_n) * H +
                                  static_cast<std::size_t>(trace.sel_h)];
  const T* off = trace.offsets.data() + static_cast<std::size_t>(trace.sel_n) * 2 * H;
  const double ds = static_cast<double>(off[2 * trace.sel_h]) - (cand.s - gt.s);
  const double de = static_cast<double>(off[2 * trace.sel_h + 1]) - (cand.e - gt.e);
  return static_cast<T>(smooth_l1(ds, tau) + smooth_l1(de, tau));
}

template <typename T>
void spatial_backward(const Tensor<T>& fused, const Tensor<T>& objects, const ModelParams<T>& p,
                      const LocalizerTrace<T>& trace, const Tensor<double>& iou_targets,
                      const Segment& gt, double eps, T weight, ModelParams<T>& grads,
                      Tensor<T>& g_fused, Tensor<T>& g_objects) {
  const std::size_t K = trace.spatial.dim(1);
  const std::size_t d = trace.wo_obj.dim(0);
  const double denom = static_cast<double>(gt.length()) * static_cast<double>(K);
  std::vector<T> g_wr(d), g_wo(d, T(0));
  for (int n = gt.s; n <= gt.e; ++n)
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t c = static_cast<std::size_t>(n - 1) * K + k;
      const double pv = static_cast<double>(trace.spatial[c]);
      if (pv <= eps || pv >= 1.0 - eps) continue;  // score clamped in the loss
      const T gd = static_cast<T>(static_cast<double>(weight) * (pv - iou_targets[c]) / denom);
      for (std::size_t i = 0; i < d; ++i) g_wr[i] = gd * trace.wo_obj[i];
      axpy(g_wo.data(), gd, trace.wr_fused.data() + c * d, d);
      outer_acc(grads.loc_W_r.data(), g_wr.data(), fused.data() + c * d, d, d);
      matvec_t_acc(g_fused.data() + c * d, p.loc_W_r.data(), g_wr.data(), d, d);
    }
  outer_acc(grads.loc_W_o.data(), g_wo.data(), objects.data(), d, 2 * d);
  matvec_t_acc(g_objects.data(), p.loc_W_o.data(), g_wo.data(), d, 2 * d);
}

template <typename T>
void temporal_loss_backward(const LocalizerTrace<T>& trace, const Tensor<double>& tiou_targets,
                            double eps, T weight, Tensor<T>& g_conf_logits) {
  const std::size_t cells = trace.conf.size();
  const double scale = static_cast<double>(weight) / static_cast<double>(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const double pv = static_cast<double>(trace.conf[c]);
    if (pv <= eps || pv >= 1.0 - eps) continue;
    g_conf_logits[c] += static_cast<T>(scale * (pv - tiou_targets[c]));
  }
}

template <typename T>
void regression_backward(const LocalizerTrace<T>& trace, const std::vector<Segment>& candidates,
                         const Segment& gt, double tau, T weight, Tensor<T>& g_offsets) {
  const std::size_t H = trace.conf.dim(1);
  const Segment cand = candidates[static_cast<std::size_t>(trace.sel_n) * H +
                                  static_cast<std::size_t>(trace.sel_h)];
  const T* off = trace.offsets.data() + static_cast<std::size_t>(trace.sel_n) * 2 * H;
  const double ds = static_cast<double>(off[2 * trace.sel_h]) - (cand.s - gt.s);
  const double de = static_cast<double>(off[2 * trace.sel_h + 1]) - (cand.e - gt.e);
  T* g = g_offsets.data() + static_cast<std::size_t>(trace.sel_n) * 2 * H;
  g[2 * trace.sel_h] += static_cast<T>(static_cast<double>(weight) * smooth_l1_grad(ds, tau));
  g[2 * trace.sel_h + 1] += static_cast<T>(static_cast<double>(weight) * smooth_l1_grad(de, tau));
}

template <typename T>
void localizer_backward(const Tensor<T>& fused, const Tensor<T>& objects, const ModelParams<T>& p,
                        const ModelDims& dims, const LocalizerTrace<T>& trace,
                        const Tensor<T>& g_conf_logits, const Tensor<T>& g_offsets,
                        ModelParams<T>& grads, Tensor<T>& g_fused, Tensor<T>& g_objects) {
  const std::size_t N = fused.dim(0), K = fused.dim(1), d = fused.dim(2);
  const std::size_t H = static_cast<std::size_t>(dims.num_widths);

  // Heads back to the temporal features.
  Tensor<T> g_out({N, d});
  for (std::size_t n = 0; n < N; ++n) {
    const T* f = trace.gru.out.data() + n * d;
    const T* gc = g_conf_logits.data() + n * H;
    const T* go = g_offsets.data() + n * 2 * H;
    outer_acc(grads.loc_W_conf.data(), gc, f, H, d);
    for (std::size_t h = 0; h < H; ++h) grads.loc_b_conf[h] += gc[h];
    outer_acc(grads.loc_W_off.data(), go, f, 2 * H, d);
    for (std::size_t h = 0; h < 2 * H; ++h) grads.loc_b_off[h] += go[h];
    matvec_t_acc(g_out.data() + n * d, p.loc_W_conf.data(), gc, H, d);
    matvec_t_acc(g_out.data() + n * d, p.loc_W_off.data(), go, 2 * H, d);
  }

  Tensor<T> g_frame_feat({N, d});
  bigru_backward(trace.frame_feat.data(), N, d, d / 2, p.tmp_gru, trace.gru, g_out.data(),
                 grads.tmp_gru, g_frame_feat.data());

  // Frame attention back to the fused features and the queried object.
  std::vector<T> g_attn(K), g_zeta(K), g_pre(d), g_w2o(d, T(0));
  for (std::size_t n = 0; n < N; ++n) {
    const T* gff = g_frame_feat.data() + n * d;
    const T* attn = trace.frame_attn.data() + n * K;
    for (std::size_t k = 0; k < K; ++k) {
      g_attn[k] = dot(gff, fused.data() + (n * K + k) * d, d);
      axpy(g_fused.data() + (n * K + k) * d, attn[k], gff, d);
    }
    softmax_backward(g_zeta.data(), attn, g_attn.data(), K);
    for (std::size_t k = 0; k < K; ++k) {
      const T* u = trace.frame_tanh.data() + (n * K + k) * d;
      const T gz = g_zeta[k];
      for (std::size_t i = 0; i < d; ++i) {
        grads.loc_w_f[i] += gz * u[i];
        g_pre[i] = gz * p.loc_w_f[i] * (T(1) - u[i] * u[i]);
        g_w2o[i] += g_pre[i];
        grads.loc_b_f[i] += g_pre[i];
      }
      outer_acc(grads.loc_W_f1.data(), g_pre.data(), fused.data() + (n * K + k) * d, d, d);
      matvec_t_acc(g_fused.data() + (n * K + k) * d, p.loc_W_f1.data(), g_pre.data(), d, d);
    }
  }
  outer_acc(grads.loc_W_f2.data(), g_w2o.data(), objects.data(), d, 2 * d);
  matvec_t_acc(g_objects.data(), p.loc_W_f2.data(), g_w2o.data(), d, 2 * d);
}

#define OMRN_INSTANTIATE(T)                                                                       \
  template void spatial_scores<T>(const Tensor<T>&, const Tensor<T>&, const ModelParams<T>&,      \
                                  LocalizerTrace<T>&);                                            \
  template void frame_features<T>(const Tensor<T>&, const Tensor<T>&, const ModelParams<T>&,      \
                                  LocalizerTrace<T>&);                                            \
  template void temporal_heads<T>(const ModelParams<T>&, const ModelDims&, LocalizerTrace<T>&);   \
  template T spatial_loss<T>(const LocalizerTrace<T>&, const Tensor<double>&, const Segment&,     \
                             double);                                                             \
  template T temporal_loss<T>(const LocalizerTrace<T>&, const Tensor<double>&, double);           \
  template T regression_loss<T>(LocalizerTrace<T>&, const std::vector<Segment>&, const Segment&,  \
                                double);                                                          \
  template void select_best_head<T>(const Tensor<T>&, int&, int&);                                \
  template void spatial_backward<T>(const Tensor<T>&, const Tensor<T>&, const ModelParams<T>&,    \
                                    const LocalizerTrace<T>&, const Tensor<double>&,              \
                                    const Segment&, double, T, ModelParams<T>&, Tensor<T>&,       \
                                    Tensor<T>&);                                                  \
  template void temporal_loss_backward<T>(const LocalizerTrace<T>&, const Tensor<double>&,        \
                                          double, T, Tensor<T>&);                                 \
  template void regression_backward<T>(const LocalizerTrace<T>&, const std::vector<Segment>&,     \
                                       const Segment&, double, T, Tensor<T>&);                    \
  template void localizer_backward<T>(const Tensor<T>&, const Tensor<T>&, const ModelParams<T>&,  \
                                      const ModelDims&, const LocalizerTrace<T>&,                 \
                                      const Tensor<T>&, const Tensor<T>&, ModelParams<T>&,        \
                                      Tensor<T>&, Tensor<T>&)

OMRN_INSTANTIATE(float);
OMRN_INSTANTIATE(double);
#undef OMRN_INSTANTIATE

}  // namespace omrn
