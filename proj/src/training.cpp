#include "omrn/training.hpp"

#include <cmath>
#include <vector>

namespace omrn {

namespace {

template <typename T>
std::vector<Tensor<T>*> tensor_list(ModelParams<T>& p) {
  std::vector<Tensor<T>*> out;
  p.visit([&](const std::string&, Tensor<T>& t) { out.push_back(&t); });
  return out;
}

}  // namespace

ModelDims dims_for(int region_dim, int word_dim, const ModelConfig& cfg) {
  ModelDims dims;
  dims.region_dim = region_dim;
  dims.word_dim = word_dim;
  dims.model = cfg.model_dim;
  dims.num_widths = static_cast<int>(cfg.loc.widths.size());
  dims.validate();
  return dims;
}

template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               const AdamConfig& cfg) {
  state.step += 1;
  const T lr = static_cast<T>(cfg.lr);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T eps = static_cast<T>(cfg.epsilon);
  const T bc1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(state.step)));
  const T bc2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.step)));

  auto ps = tensor_list(params);
  auto gs = tensor_list(const_cast<ModelParams<T>&>(grads));
  auto ms = tensor_list(state.m);
  auto vs = tensor_list(state.v);
  for (std::size_t t = 0; t < ps.size(); ++t) {
    T* p = ps[t]->data();
    const T* g = gs[t]->data();
    T* m = ms[t]->data();
    T* v = vs[t]->data();
    const std::size_t n = ps[t]->size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T mhat = m[i] / bc1;
      const T vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template <typename T>
std::vector<StepLog> train(const std::vector<VideoSample>& samples, ModelParams<T>& params,
                           const ModelConfig& mcfg, const TrainConfig& tcfg,
                           const std::function<void(const StepLog&)>& on_step) {
  if (samples.empty()) throw ValidationError("train: empty dataset");
  if (tcfg.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");

  std::vector<SampleCache<T>> caches;
  caches.reserve(samples.size());
  for (const VideoSample& s : samples) caches.push_back(build_cache<T>(s, mcfg));

  ModelDims dims = dims_for(static_cast<int>(samples[0].features.dim(2)),
                            static_cast<int>(samples[0].embeddings.dim(1)), mcfg);

  AdamState<T> adam;
  adam.resize(dims);
  ModelParams<T> grads;
  grads.resize(dims);

  std::vector<StepLog> history;
  history.reserve(static_cast<std::size_t>(tcfg.steps));
  const std::size_t count = samples.size();
  const std::size_t batch = static_cast<std::size_t>(tcfg.batch_size);
  std::size_t cursor = 0;

  for (int step = 1; step <= tcfg.steps; ++step) {
    grads.zero();
    LossBreakdown mean;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t i = (cursor + b) % count;
      ForwardTrace<T> trace;
      forward_full(samples[i], caches[i], params, mcfg, dims, trace);
      const LossBreakdown loss = compute_losses(samples[i], caches[i], trace, mcfg);
      mean.spatial += loss.spatial;
      mean.temporal += loss.temporal;
      mean.regression += loss.regression;
      mean.diversity += loss.diversity;
      mean.total += loss.total;
      backward_full(samples[i], caches[i], params, mcfg, dims, trace, grads);
    }
    cursor = (cursor + batch) % count;

    const double inv = 1.0 / static_cast<double>(batch);
    mean.spatial *= inv;
    mean.temporal *= inv;
    mean.regression *= inv;
    mean.diversity *= inv;
    mean.total *= inv;
    if (!std::isfinite(mean.total))
      throw NumericError("train: non-finite loss at step " + std::to_string(step));

    grads.visit([&](const std::string&, Tensor<T>& t) {
      T* d = t.data();
      const T s = static_cast<T>(inv);
      for (std::size_t i = 0; i < t.size(); ++i) d[i] *= s;
    });
    adam_step(params, grads, adam, tcfg.adam);

    StepLog log;
    log.step = step;
    log.loss = mean;
    history.push_back(log);
    if (on_step) on_step(log);
  }
  return history;
}

namespace {

double batch_loss(const std::vector<VideoSample>& samples,
                  const std::vector<SampleCache<double>>& caches, const ModelParams<double>& p,
                  const ModelConfig& cfg, const ModelDims& dims) {
  double total = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ForwardTrace<double> trace;
    forward_full(samples[i], caches[i], p, cfg, dims, trace);
    total += compute_losses(samples[i], caches[i], trace, cfg).total;
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace

GradCheckReport grad_check(const std::vector<VideoSample>& samples, const ModelConfig& cfg,
                           std::uint64_t seed, double init_scale, double fd_step, double tol) {
  if (samples.empty()) throw ValidationError("grad_check: empty dataset");
  const ModelDims dims = dims_for(static_cast<int>(samples[0].features.dim(2)),
                                  static_cast<int>(samples[0].embeddings.dim(1)), cfg);
  ModelParams<double> params = init_params<double>(dims, seed, init_scale);

  std::vector<SampleCache<double>> caches;
  caches.reserve(samples.size());
  for (const VideoSample& s : samples) caches.push_back(build_cache<double>(s, cfg));

  // Analytic batch-mean gradient.
  ModelParams<double> grads;
  grads.resize(dims);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ForwardTrace<double> trace;
    forward_full(samples[i], caches[i], params, cfg, dims, trace);
    compute_losses(samples[i], caches[i], trace, cfg);  // records the regression head
    backward_full(samples[i], caches[i], params, cfg, dims, trace, grads);
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  grads.visit([&](const std::string&, Tensor<double>& t) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] *= inv;
  });

  auto p_tensors = tensor_list(params);
  auto g_tensors = tensor_list(grads);
  std::vector<std::string> names;
  params.visit([&](const std::string& name, Tensor<double>&) { names.push_back(name); });

  GradCheckReport report;
  for (std::size_t t = 0; t < p_tensors.size(); ++t) {
    Tensor<double>& pt = *p_tensors[t];
    const Tensor<double>& gt = *g_tensors[t];
    std::vector<double> numeric(pt.size());
    // Probes are independent: each thread works on its own copy of the
    // parameters, so the loop parallelizes without any ordering effects.
#pragma omp parallel
    {
      ModelParams<double> local = params;
      Tensor<double>& lt = *tensor_list(local)[t];
#pragma omp for schedule(dynamic, 8)
      for (std::size_t i = 0; i < pt.size(); ++i) {
        const double saved = lt[i];
        lt[i] = saved + fd_step;
        const double up = batch_loss(samples, caches, local, cfg, dims);
        lt[i] = saved - fd_step;
        const double down = batch_loss(samples, caches, local, cfg, dims);
        lt[i] = saved;
        numeric[i] = (up - down) / (2.0 * fd_step);
      }
    }
    for (std::size_t i = 0; i < pt.size(); ++i) {
      const double ga = gt[i];
      const double gn = numeric[i];
      const double rel = std::abs(ga - gn) / std::max(1e-8, std::abs(ga) + std::abs(gn));
      ++report.checked;
      GradCheckEntry entry{names[t], i, ga, gn, rel};
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = entry;
      }
      if (rel > tol) report.failures.push_back(entry);
    }
  }
  return report;
}

#define OMRN_INSTANTIATE(T)                                                                       \
  template void adam_step<T>(ModelParams<T>&, const ModelParams<T>&, AdamState<T>&,               \
                             const AdamConfig&);                                                  \
  template std::vector<StepLog> train<T>(const std::vector<VideoSample>&, ModelParams<T>&,        \
                                         const ModelConfig&, const TrainConfig&,                  \
                                         const std::function<void(const StepLog&)>&)

OMRN_INSTANTIATE(float);
OMRN_INSTANTIATE(double);
#undef OMRN_INSTANTIATE

}  // namespace omrn
