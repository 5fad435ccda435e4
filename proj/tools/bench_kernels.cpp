// Times the parallel/refactored kernels against their serial reference
// implementations on a mid-size synthetic problem and reports the numerical
// gap between the two routes.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "omrn/model.hpp"
#include "omrn/reference.hpp"
#include "omrn/training.hpp"

using namespace omrn;

namespace {

double time_ms(int reps, const std::function<void()>& fn) {
  fn();  // warm-up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

double max_abs_diff(const Tensor<float>& a, const Tensor<float>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

}  // namespace

int main() {
  SynthConfig synth;
  synth.num_samples = 1;
  synth.frames = 48;
  synth.regions = 8;
  synth.objects = 3;
  synth.feature_dim = 64;
  synth.seed = 7;
  const DatasetManifest ds = generate_synthetic(synth);
  const VideoSample& s = ds.samples[0];

  ModelConfig cfg;
  cfg.model_dim = 64;
  const ModelDims dims = dims_for(ds.region_dim, ds.word_dim, cfg);
  const ModelParams<float> params = init_params<float>(dims, 11);

  SampleCache<float> cache = build_cache<float>(s, cfg);
  ForwardTrace<float> trace;
  forward_full(s, cache, params, cfg, dims, trace);

  const int reps = 20;
  std::printf("%-22s %12s %12s %10s %12s\n", "kernel", "parallel ms", "serial ms", "speedup",
              "max |diff|");

  {
    Tensor<float> par, ser;
    const double tp = time_ms(reps, [&] { pool_regions(s, cfg.agg, par); });
    const double ts = time_ms(reps, [&] { ref::pool_regions_serial(s, cfg.agg, ser); });
    std::printf("%-22s %12.3f %12.3f %9.2fx %12.3g\n", "region pooling", tp, ts, ts / tp,
                max_abs_diff(par, ser));
  }
  {
    RelationTrace<float> a = trace.rel, b = trace.rel;
    const double tp =
        time_ms(reps, [&] { match(trace.lang.objects, params, dims, a); });
    const double ts =
        time_ms(reps, [&] { ref::match_concat(trace.lang.objects, params, dims, b); });
    std::printf("%-22s %12.3f %12.3f %9.2fx %12.3g\n", "cross-modal matching", tp, ts, ts / tp,
                max_abs_diff(a.dist, b.dist));
  }
  {
    RelationTrace<float> a = trace.rel, b = trace.rel;
    const double tp = time_ms(reps, [&] { relate(s, cache.relgeo, params, dims, a); });
    const double ts = time_ms(reps, [&] { ref::relate_literal(cache.relgeo, params, dims, b); });
    std::printf("%-22s %12.3f %12.3f %9.2fx %12.3g\n", "relation reasoning", tp, ts, ts / tp,
                max_abs_diff(a.fused, b.fused));
  }
  return 0;
}
