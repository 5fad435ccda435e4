#include "omrn/aggregation.hpp"

#include <cmath>
#include <limits>

#include "omrn/vecops.hpp"

namespace omrn {

template <typename T>
double linking_score(const T* feat_a, const T* feat_b, std::size_t dim, const BoundingBox& box_a,
                     const BoundingBox& box_b, int frame_a, int frame_b, double alpha) {
  if (frame_a == frame_b)
    throw ValidationError("linking_score: regions must come from different frames");
  double na = 0, nb = 0, d = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    na += static_cast<double>(feat_a[i]) * feat_a[i];
    nb += static_cast<double>(feat_b[i]) * feat_b[i];
    d += static_cast<double>(feat_a[i]) * feat_b[i];
  }
  if (na == 0 || nb == 0)
    throw NumericError("linking_score: zero-norm feature (cosine undefined)");
  double cosine = d / (std::sqrt(na) * std::sqrt(nb));
  double gap = std::abs(frame_a - frame_b);
  return cosine + (alpha / gap) * box_iou(box_a, box_b);
}

template <typename T>
void pool_regions(const VideoSample& s, const AggregationConfig& cfg, Tensor<T>& pooled,
                  std::vector<std::vector<LinkPick>>* picks) {
  if (cfg.radius < 0) throw ValidationError("pool_regions: negative radius");
  const int N = s.frames, K = s.regions;
  const std::size_t dim = static_cast<std::size_t>(s.features.dim(2));
  pooled.resize({static_cast<std::size_t>(N), static_cast<std::size_t>(K), dim});
  if (picks) picks->assign(static_cast<std::size_t>(N) * K, {});

  // Linking compares every region against candidates in other frames, so any
  // zero-norm feature or degenerate box is an error as soon as linking is
  // actually exercised.  Validating up front keeps the parallel loop below
  // exception-free.
  if (cfg.radius > 0 && N > 1) {
    for (int n = 1; n <= N; ++n)
      for (int k = 0; k < K; ++k) {
        const float* f = s.features.data() + (static_cast<std::size_t>(n - 1) * K + k) * dim;
        double norm = 0;
        for (std::size_t i = 0; i < dim; ++i) norm += static_cast<double>(f[i]) * f[i];
        if (norm == 0)
          throw NumericError("pool_regions: zero-norm feature at frame " + std::to_string(n) +
                             ", region " + std::to_string(k) + " (cosine undefined)");
        BoundingBox b = s.box(n, k);
        if (!(b.w > 0) || !(b.h > 0))
          throw ValidationError("pool_regions: non-positive box at frame " + std::to_string(n) +
                                ", region " + std::to_string(k));
      }
  }

#pragma omp parallel for collapse(2)
  for (int n = 1; n <= N; ++n) {
    for (int k = 0; k < K; ++k) {
      const float* own = s.features.data() + (static_cast<std::size_t>(n - 1) * K + k) * dim;
      const BoundingBox own_box = s.box(n, k);
      std::vector<double> acc(dim);
      for (std::size_t i = 0; i < dim; ++i) acc[i] = own[i];
      int count = 1;
      std::vector<LinkPick> local;
      for (int n2 = n - cfg.radius; n2 <= n + cfg.radius; ++n2) {
        if (n2 < 1 || n2 > N || n2 == n) continue;
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < K; ++j) {
          const float* cand = s.features.data() + (static_cast<std::size_t>(n2 - 1) * K + j) * dim;
          double score =
              linking_score(own, cand, dim, own_box, s.box(n2, j), n, n2, cfg.alpha);
          if (score > best_score) {
            best_score = score;
            best = j;
          }
        }
        const float* sel = s.features.data() + (static_cast<std::size_t>(n2 - 1) * K + best) * dim;
        for (std::size_t i = 0; i < dim; ++i) acc[i] += sel[i];
        ++count;
        if (picks) local.push_back({n2, best});
      }
      T* dst = pooled.data() + (static_cast<std::size_t>(n - 1) * K + k) * dim;
      for (std::size_t i = 0; i < dim; ++i) dst[i] = static_cast<T>(acc[i] / count);
      if (picks) (*picks)[static_cast<std::size_t>(n - 1) * K + k] = std::move(local);
    }
  }
}

template <typename T>
void aggregate_forward(const Tensor<T>& pooled, const ModelParams<T>& p, Tensor<T>& out) {
  const std::size_t cells = pooled.dim(0) * pooled.dim(1);
  const std::size_t dr = pooled.dim(2);
  const std::size_t d = p.agg_W.dim(0);
  out.resize({pooled.dim(0), pooled.dim(1), d});
#pragma omp parallel for
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cells); ++c) {
    T* y = out.data() + c * d;
    matvec(y, p.agg_W.data(), pooled.data() + c * dr, d, dr);
    for (std::size_t i = 0; i < d; ++i) y[i] += p.agg_b[i];
  }
}

template <typename T>
void aggregate_backward(const Tensor<T>& pooled, const Tensor<T>& g_out, ModelParams<T>& grads) {
  const std::size_t cells = pooled.dim(0) * pooled.dim(1);
  const std::size_t dr = pooled.dim(2);
  const std::size_t d = g_out.dim(2);
  for (std::size_t c = 0; c < cells; ++c) {
    const T* g = g_out.data() + c * d;
    outer_acc(grads.agg_W.data(), g, pooled.data() + c * dr, d, dr);
    for (std::size_t i = 0; i < d; ++i) grads.agg_b[i] += g[i];
  }
}

template double linking_score<float>(const float*, const float*, std::size_t, const BoundingBox&,
                                     const BoundingBox&, int, int, double);
template double linking_score<double>(const double*, const double*, std::size_t,
                                      const BoundingBox&, const BoundingBox&, int, int, double);
template void pool_regions<float>(const VideoSample&, const AggregationConfig&, Tensor<float>&,
                                  std::vector<std::vector<LinkPick>>*);
template void pool_regions<double>(const VideoSample&, const AggregationConfig&, Tensor<double>&,
                                   std::vector<std::vector<LinkPick>>*);
template void aggregate_forward<float>(const Tensor<float>&, const ModelParams<float>&,
                                       Tensor<float>&);
template void aggregate_forward<double>(const Tensor<double>&, const ModelParams<double>&,
                                        Tensor<double>&);
template void aggregate_backward<float>(const Tensor<float>&, const Tensor<float>&,
                                        ModelParams<float>&);
template void aggregate_backward<double>(const Tensor<double>&, const Tensor<double>&,
                                         ModelParams<double>&);

}  // namespace omrn
