#include "omrn/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "omrn/aggregation.hpp"
#include "omrn/vecops.hpp"

namespace omrn::ref {

double box_iou_raster(const BoundingBox& a, const BoundingBox& b, double cell) {
  if (!(a.w > 0) || !(a.h > 0) || !(b.w > 0) || !(b.h > 0))
    throw ValidationError("box_iou_raster: non-positive box size");
  if (!(cell > 0)) throw ValidationError("box_iou_raster: non-positive cell size");
  const double ax0 = a.x - a.w / 2, ax1 = a.x + a.w / 2;
  const double ay0 = a.y - a.h / 2, ay1 = a.y + a.h / 2;
  const double bx0 = b.x - b.w / 2, bx1 = b.x + b.w / 2;
  const double by0 = b.y - b.h / 2, by1 = b.y + b.h / 2;
  const long ix0 = static_cast<long>(std::floor(std::min(ax0, bx0) / cell)) - 1;
  const long ix1 = static_cast<long>(std::ceil(std::max(ax1, bx1) / cell)) + 1;
  const long iy0 = static_cast<long>(std::floor(std::min(ay0, by0) / cell)) - 1;
  const long iy1 = static_cast<long>(std::ceil(std::max(ay1, by1) / cell)) + 1;
  long inter = 0, uni = 0;
  for (long iy = iy0; iy < iy1; ++iy) {
    const double cy = (static_cast<double>(iy) + 0.5) * cell;
    const bool in_ay = cy > ay0 && cy < ay1;
    const bool in_by = cy > by0 && cy < by1;
    if (!in_ay && !in_by) continue;
    for (long ix = ix0; ix < ix1; ++ix) {
      const double cx = (static_cast<double>(ix) + 0.5) * cell;
      const bool in_a = in_ay && cx > ax0 && cx < ax1;
      const bool in_b = in_by && cx > bx0 && cx < bx1;
      if (in_a && in_b) ++inter;
      if (in_a || in_b) ++uni;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double temporal_iou_sets(const Segment& a, const Segment& b) {
  if (a.e < a.s || b.e < b.s) throw ValidationError("temporal_iou_sets: inverted segment");
  long inter = 0, uni = 0;
  for (int f = std::min(a.s, b.s); f <= std::max(a.e, b.e); ++f) {
    const bool in_a = f >= a.s && f <= a.e;
    const bool in_b = f >= b.s && f <= b.e;
    if (in_a && in_b) ++inter;
    if (in_a || in_b) ++uni;
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double viou_sets(const Segment& pred, const std::vector<BoundingBox>& pred_boxes,
                 const Segment& gt, const std::vector<BoundingBox>& gt_boxes) {
  if (pred_boxes.size() != static_cast<std::size_t>(pred.length()) ||
      gt_boxes.size() != static_cast<std::size_t>(gt.length()))
    throw ValidationError("viou_sets: box count does not match segment length");
  double sum = 0;
  long uni = 0;
  for (int f = std::min(pred.s, gt.s); f <= std::max(pred.e, gt.e); ++f) {
    const bool in_p = f >= pred.s && f <= pred.e;
    const bool in_g = f >= gt.s && f <= gt.e;
    if (in_p && in_g)
      sum += box_iou(pred_boxes[static_cast<std::size_t>(f - pred.s)],
                     gt_boxes[static_cast<std::size_t>(f - gt.s)]);
    if (in_p || in_g) ++uni;
  }
  return sum / static_cast<double>(uni);
}

template <typename T>
void pool_regions_serial(const VideoSample& s, const AggregationConfig& cfg, Tensor<T>& pooled) {
  if (cfg.radius < 0) throw ValidationError("pool_regions_serial: negative radius");
  const int N = s.frames, K = s.regions;
  const std::size_t dim = static_cast<std::size_t>(s.features.dim(2));
  pooled.resize({static_cast<std::size_t>(N), static_cast<std::size_t>(K), dim});
  std::vector<double> acc(dim);
  for (int n = 1; n <= N; ++n)
    for (int k = 0; k < K; ++k) {
      const float* own = s.features.data() + (static_cast<std::size_t>(n - 1) * K + k) * dim;
      for (std::size_t i = 0; i < dim; ++i) acc[i] = own[i];
      int count = 1;
      for (int n2 = n - cfg.radius; n2 <= n + cfg.radius; ++n2) {
        if (n2 < 1 || n2 > N || n2 == n) continue;
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < K; ++j) {
          const float* cand =
              s.features.data() + (static_cast<std::size_t>(n2 - 1) * K + j) * dim;
          const double score =
              linking_score(own, cand, dim, s.box(n, k), s.box(n2, j), n, n2, cfg.alpha);
          if (score > best_score) {
            best_score = score;
            best = j;
          }
        }
        const float* sel = s.features.data() + (static_cast<std::size_t>(n2 - 1) * K + best) * dim;
        for (std::size_t i = 0; i < dim; ++i) acc[i] += sel[i];
        ++count;
      }
      T* dst = pooled.data() + (static_cast<std::size_t>(n - 1) * K + k) * dim;
      for (std::size_t i = 0; i < dim; ++i) dst[i] = static_cast<T>(acc[i] / count);
    }
}

template <typename T>
void match_concat(const Tensor<T>& objects, const ModelParams<T>& p, const ModelDims& dims,
                  RelationTrace<T>& trace) {
  const std::size_t nT = objects.dim(0);
  const std::size_t N = trace.modulated.dim(1), K = trace.modulated.dim(2);
  const std::size_t d = static_cast<std::size_t>(dims.model);
  trace.match_tanh.resize({nT, N, K, d});
  trace.match_logits.resize({nT, N, K});
  trace.dist.resize({nT, N, K});
  std::vector<T> concat(4 * d);
  for (std::size_t t = 0; t < nT; ++t) {
    const T* s = objects.data() + t * 2 * d;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < K; ++k) {
        const T* r = trace.modulated.data() + ((t * N + n) * K + k) * d;
        for (std::size_t i = 0; i < d; ++i) {
          concat[i] = r[i];
          concat[d + i] = s[i];
          concat[2 * d + i] = r[i] * s[i];
          concat[3 * d + i] = r[i] - s[i];
        }
        T* u = trace.match_tanh.data() + ((t * N + n) * K + k) * d;
        matvec(u, p.match_W.data(), concat.data(), d, 4 * d);
        for (std::size_t i = 0; i < d; ++i) u[i] = std::tanh(u[i] + p.match_b[i]);
        trace.match_logits[(t * N + n) * K + k] = dot(p.match_w.data(), u, d);
      }
      T* dist = trace.dist.data() + (t * N + n) * K;
      for (std::size_t k = 0; k < K; ++k) dist[k] = trace.match_logits[(t * N + n) * K + k];
      softmax_inplace(dist, K);
    }
  }
}

template <typename T>
void relate_literal(const Tensor<T>& relgeo, const ModelParams<T>& p, const ModelDims& dims,
                    RelationTrace<T>& trace) {
  const std::size_t nT = trace.modulated.dim(0);
  const std::size_t N = trace.modulated.dim(1), K = trace.modulated.dim(2);
  const std::size_t d = static_cast<std::size_t>(dims.model);
  const std::size_t nA = nT - 1;
  trace.rel_tanh.resize({N, K, nA, K, d});
  trace.rel_attn.resize({N, K, nA, K});
  trace.fused_pre.resize({N, K, d});
  trace.fused.resize({N, K, d});
  std::vector<T> pre(d);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k) {
      const T* main_r = trace.modulated.data() + (n * K + k) * d;
      T* fused_pre = trace.fused_pre.data() + (n * K + k) * d;
      for (std::size_t i = 0; i < d; ++i) fused_pre[i] = main_r[i];
      for (std::size_t t = 0; t < nA; ++t) {
        T* attn = trace.rel_attn.data() + ((n * K + k) * nA + t) * K;
        for (std::size_t l = 0; l < K; ++l) {
          const T* aux = trace.modulated.data() + (((t + 1) * N + n) * K + l) * d;
          matvec(pre.data(), p.rel_W1.data(), main_r, d, d);
          matvec_acc(pre.data(), p.rel_W2.data(), aux, d, d);
          matvec_acc(pre.data(), p.rel_W3.data(), relgeo.data() + ((n * K + k) * K + l) * 4, d, 4);
          T* u = trace.rel_tanh.data() + (((n * K + k) * nA + t) * K + l) * d;
          for (std::size_t i = 0; i < d; ++i) u[i] = std::tanh(pre[i] + p.rel_b[i]);
          attn[l] = dot(p.rel_w.data(), u, d);
        }
        softmax_inplace(attn, K);
        for (std::size_t l = 0; l < K; ++l) {
          const T* aux = trace.modulated.data() + (((t + 1) * N + n) * K + l) * d;
          const T coef = trace.dist[n * K + k] * trace.dist[((t + 1) * N + n) * K + l] * attn[l];
          axpy(fused_pre, coef, aux, d);
        }
      }
      T* fused = trace.fused.data() + (n * K + k) * d;
      for (std::size_t i = 0; i < d; ++i) fused[i] = fused_pre[i] > T(0) ? fused_pre[i] : T(0);
    }
}

#define OMRN_REF_INSTANTIATE(T)                                                                   \
  template void pool_regions_serial<T>(const VideoSample&, const AggregationConfig&, Tensor<T>&); \
  template void match_concat<T>(const Tensor<T>&, const ModelParams<T>&, const ModelDims&,        \
                                RelationTrace<T>&);                                               \
  template void relate_literal<T>(const Tensor<T>&, const ModelParams<T>&, const ModelDims&,      \
                                  RelationTrace<T>&)

OMRN_REF_INSTANTIATE(float);
OMRN_REF_INSTANTIATE(double);
#undef OMRN_REF_INSTANTIATE

}  // namespace omrn::ref
