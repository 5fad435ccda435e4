#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "omrn/model.hpp"

namespace omrn {

// Adam first/second moment estimates, one tensor pair per parameter tensor.
template <typename T>
struct AdamState {
  ModelParams<T> m, v;
  long step = 0;

  void resize(const ModelDims& dims) {
    m.resize(dims);
    v.resize(dims);
    step = 0;
  }
};

// One in-place update with bias correction:
//   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg);

struct StepLog {
  int step = 0;        // 1-based
  LossBreakdown loss;  // batch-mean raw terms plus the weighted total
};

// Mini-batch training: batches walk the dataset round-robin in manifest order
// (no shuffling), gradients are averaged over the batch in sample order, and
// sample caches are built once up front.  Throws NumericError naming the step
// if the batch loss turns non-finite.
template <typename T>
std::vector<StepLog> train(const std::vector<VideoSample>& samples, ModelParams<T>& params,
                           const ModelConfig& mcfg, const TrainConfig& tcfg,
                           const std::function<void(const StepLog&)>& on_step = {});

struct GradCheckEntry {
  std::string name;  // parameter tensor
  std::size_t index; // flat element within that tensor
  double analytic = 0, numeric = 0, rel_err = 0;
};

struct GradCheckReport {
  std::size_t checked = 0;         // elements compared
  double max_rel_err = 0;
  GradCheckEntry worst;            // element attaining max_rel_err
  std::vector<GradCheckEntry> failures;  // entries with rel_err > tol
  bool passed() const { return failures.empty(); }
};

// Central-difference check of the analytic gradient in double precision.  The
// loss is the batch mean of the weighted total over all `samples`; every
// parameter element is probed with step `fd_step`, and
// |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|) is compared against `tol`.
GradCheckReport grad_check(const std::vector<VideoSample>& samples, const ModelConfig& cfg,
                           std::uint64_t seed, double init_scale, double fd_step, double tol);

// Derives the tensor widths from a loaded dataset plus the model config.
ModelDims dims_for(int region_dim, int word_dim, const ModelConfig& cfg);

}  // namespace omrn
