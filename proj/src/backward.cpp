#include "omrn/model.hpp"

namespace omrn {

// Reverse composition of the forward pass.  Every stage accumulates into the
// running gradients of its inputs; the weighted loss terms seed the chain.
// Stays single-threaded: gradient accumulation overlaps across stages, and the
// fixed evaluation order is what makes training bit-reproducible.
template <typename T>
void backward_full(const VideoSample& s, const SampleCache<T>& cache, const ModelParams<T>& p,
                   const ModelConfig& cfg, const ModelDims& dims, const ForwardTrace<T>& trace,
                   ModelParams<T>& grads) {
  const LossWeights& w = cfg.loc.weights;
  const std::size_t N = static_cast<std::size_t>(s.frames);
  const std::size_t K = static_cast<std::size_t>(s.regions);
  const std::size_t d = static_cast<std::size_t>(dims.model);
  const std::size_t H = static_cast<std::size_t>(dims.num_widths);
  const std::size_t nT = trace.lang.objects.dim(0);

  Tensor<T> g_fused({N, K, d});
  Tensor<T> g_objects({nT, 2 * d});

  if (w.spatial != 0)
    spatial_backward(trace.rel.fused, trace.lang.objects, p, trace.loc, cache.iou_targets,
                     s.gt_segment, cfg.loc.bce_epsilon, static_cast<T>(w.spatial), grads, g_fused,
                     g_objects);

  if (w.temporal != 0 || w.regression != 0) {
    Tensor<T> g_conf_logits({N, H});
    Tensor<T> g_offsets({N, 2 * H});
    if (w.temporal != 0)
      temporal_loss_backward(trace.loc, cache.tiou_targets, cfg.loc.bce_epsilon,
                             static_cast<T>(w.temporal), g_conf_logits);
    if (w.regression != 0)
      regression_backward(trace.loc, cache.candidates, s.gt_segment, cfg.loc.smooth_l1_threshold,
                          static_cast<T>(w.regression), g_offsets);
    localizer_backward(trace.rel.fused, trace.lang.objects, p, dims, trace.loc, g_conf_logits,
                       g_offsets, grads, g_fused, g_objects);
  }

  Tensor<T> g_dist({nT, N, K});
  if (w.diversity != 0)
    diversity_backward(trace.rel, s.gt_segment, static_cast<T>(w.diversity), g_dist);

  Tensor<T> g_modulated({nT, N, K, d});
  relate_backward(cache.relgeo, p, dims, trace.rel, g_fused, grads, g_modulated, g_dist);
  match_backward(trace.lang.objects, p, dims, trace.rel, g_dist, grads, g_modulated, g_objects);

  Tensor<T> g_agg({N, K, d});
  modulate_backward(trace.agg, trace.lang.objects, p, trace.rel, g_modulated, grads, g_agg,
                    g_objects);

  language_backward(s, p, dims, trace.lang, g_objects, grads);
  aggregate_backward(cache.pooled, g_agg, grads);
}

template void backward_full<float>(const VideoSample&, const SampleCache<float>&,
                                   const ModelParams<float>&, const ModelConfig&,
                                   const ModelDims&, const ForwardTrace<float>&,
                                   ModelParams<float>&);
template void backward_full<double>(const VideoSample&, const SampleCache<double>&,
                                    const ModelParams<double>&, const ModelConfig&,
                                    const ModelDims&, const ForwardTrace<double>&,
                                    ModelParams<double>&);

}  // namespace omrn
