#include "omrn/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace omrn {

template <typename T>
SampleCache<T> build_cache(const VideoSample& s, const ModelConfig& cfg) {
  SampleCache<T> cache;
  pool_regions(s, cfg.agg, cache.pooled);

  const std::size_t N = static_cast<std::size_t>(s.frames);
  const std::size_t K = static_cast<std::size_t>(s.regions);
  cache.relgeo.resize({N, K, K, 4});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t l = 0; l < K; ++l) {
        const RelGeometry g = rel_geometry(s.box(static_cast<int>(n) + 1, static_cast<int>(k)),
                                           s.box(static_cast<int>(n) + 1, static_cast<int>(l)));
        T* out = cache.relgeo.data() + ((n * K + k) * K + l) * 4;
        out[0] = static_cast<T>(g.dx);
        out[1] = static_cast<T>(g.dy);
        out[2] = static_cast<T>(g.dw);
        out[3] = static_cast<T>(g.dh);
      }

  cache.iou_targets.resize({N, K});
  for (int n = s.gt_segment.s; n <= s.gt_segment.e; ++n) {
    const BoundingBox& gt = s.gt_boxes[static_cast<std::size_t>(n - s.gt_segment.s)];
    for (std::size_t k = 0; k < K; ++k)
      cache.iou_targets[static_cast<std::size_t>(n - 1) * K + k] =
          box_iou(s.box(n, static_cast<int>(k)), gt);
  }

  cache.candidates = candidate_segments(s.frames, cfg.loc.widths);
  const std::size_t H = cfg.loc.widths.size();
  cache.tiou_targets.resize({N, H});
  for (std::size_t c = 0; c < cache.candidates.size(); ++c)
    cache.tiou_targets[c] = temporal_iou(cache.candidates[c], s.gt_segment);
  return cache;
}

template <typename T>
void forward_full(const VideoSample& s, const SampleCache<T>& cache, const ModelParams<T>& p,
                  const ModelConfig& cfg, const ModelDims& dims, ForwardTrace<T>& trace) {
  (void)cfg;
  aggregate_forward(cache.pooled, p, trace.agg);
  check_finite(trace.agg, "aggregated features");

  encode_words(s, p, dims, trace.lang);
  build_objects(s, p, dims, trace.lang);
  check_finite(trace.lang.objects, "object features");

  modulate(trace.agg, trace.lang.objects, p, trace.rel);
  match(trace.lang.objects, p, dims, trace.rel);
  relate(s, cache.relgeo, p, dims, trace.rel);
  check_finite(trace.rel.fused, "fused region features");

  spatial_scores(trace.rel.fused, trace.lang.objects, p, trace.loc);
  frame_features(trace.rel.fused, trace.lang.objects, p, trace.loc);
  temporal_heads(p, dims, trace.loc);
  check_finite(trace.loc.conf_logits, "confidence logits");
  check_finite(trace.loc.offsets, "boundary offsets");
}

template <typename T>
LossBreakdown compute_losses(const VideoSample& s, const SampleCache<T>& cache,
                             ForwardTrace<T>& trace, const ModelConfig& cfg) {
  const LossWeights& w = cfg.loc.weights;
  LossBreakdown out;
  out.spatial = static_cast<double>(
      spatial_loss(trace.loc, cache.iou_targets, s.gt_segment, cfg.loc.bce_epsilon));
  out.temporal =
      static_cast<double>(temporal_loss(trace.loc, cache.tiou_targets, cfg.loc.bce_epsilon));
  out.regression = static_cast<double>(
      regression_loss(trace.loc, cache.candidates, s.gt_segment, cfg.loc.smooth_l1_threshold));
  out.diversity = static_cast<double>(diversity_loss(trace.rel, s.gt_segment));
  out.total = w.spatial * out.spatial + w.temporal * out.temporal +
              w.regression * out.regression + w.diversity * out.diversity;
  return out;
}

template <typename T>
TubePrediction infer_sample(const VideoSample& s, const SampleCache<T>& cache,
                            const ForwardTrace<T>& trace, const ModelDims& dims) {
  const std::size_t K = static_cast<std::size_t>(s.regions);
  const std::size_t H = static_cast<std::size_t>(dims.num_widths);
  int sel_n = 0, sel_h = 0;
  select_best_head(trace.loc.conf, sel_n, sel_h);

  TubePrediction pred;
  pred.id = s.id;
  pred.confidence = static_cast<double>(trace.loc.conf[static_cast<std::size_t>(sel_n) * H +
                                                       static_cast<std::size_t>(sel_h)]);
  pred.raw_segment = cache.candidates[static_cast<std::size_t>(sel_n) * H +
                                      static_cast<std::size_t>(sel_h)];
  const T* off = trace.loc.offsets.data() + static_cast<std::size_t>(sel_n) * 2 * H;
  pred.offset_s = static_cast<double>(off[2 * sel_h]);
  pred.offset_e = static_cast<double>(off[2 * sel_h + 1]);

  int start = static_cast<int>(std::round(pred.raw_segment.s - pred.offset_s));
  int end = static_cast<int>(std::round(pred.raw_segment.e - pred.offset_e));
  start = std::clamp(start, 1, s.frames);
  end = std::clamp(end, 1, s.frames);
  if (start > end) std::swap(start, end);
  pred.segment = Segment{start, end};

  pred.boxes.clear();
  for (int n = start; n <= end; ++n) {
    const T* row = trace.loc.spatial.data() + static_cast<std::size_t>(n - 1) * K;
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k)
      if (row[k] > row[best]) best = k;
    pred.boxes.push_back(s.box(n, static_cast<int>(best)));
  }
  return pred;
}

template <typename T>
TubePrediction predict(const VideoSample& s, const ModelParams<T>& p, const ModelConfig& cfg,
                       const ModelDims& dims) {
  SampleCache<T> cache = build_cache<T>(s, cfg);
  ForwardTrace<T> trace;
  forward_full(s, cache, p, cfg, dims, trace);
  return infer_sample(s, cache, trace, dims);
}

#define OMRN_INSTANTIATE(T)                                                                      \
  template SampleCache<T> build_cache<T>(const VideoSample&, const ModelConfig&);                \
  template void forward_full<T>(const VideoSample&, const SampleCache<T>&, const ModelParams<T>&, \
                                const ModelConfig&, const ModelDims&, ForwardTrace<T>&);         \
  template LossBreakdown compute_losses<T>(const VideoSample&, const SampleCache<T>&,            \
                                           ForwardTrace<T>&, const ModelConfig&);                \
  template TubePrediction infer_sample<T>(const VideoSample&, const SampleCache<T>&,             \
                                          const ForwardTrace<T>&, const ModelDims&);             \
  template TubePrediction predict<T>(const VideoSample&, const ModelParams<T>&,                  \
                                     const ModelConfig&, const ModelDims&)

OMRN_INSTANTIATE(float);
OMRN_INSTANTIATE(double);
#undef OMRN_INSTANTIATE

}  // namespace omrn
