#include "omrn/params.hpp"

#include <cmath>

#include "omrn/rng.hpp"

namespace omrn {

void ModelDims::validate() const {
  if (region_dim <= 0 || word_dim <= 0)
    throw ValidationError("model dims: region/word dims must be positive");
  if (model <= 0 || model % 2 != 0)
    throw ValidationError("model dims: model width must be positive and even (got " +
                          std::to_string(model) + ")");
  if (num_widths <= 0) throw ValidationError("model dims: need at least one candidate width");
}

template <typename T>
void ModelParams<T>::resize(const ModelDims& dims) {
  dims.validate();
  const std::size_t d = static_cast<std::size_t>(dims.model);
  const std::size_t h = static_cast<std::size_t>(dims.hidden());
  const std::size_t dr = static_cast<std::size_t>(dims.region_dim);
  const std::size_t dw = static_cast<std::size_t>(dims.word_dim);
  const std::size_t H = static_cast<std::size_t>(dims.num_widths);
  agg_W.resize({d, dr});
  agg_b.resize({d});
  lang_gru.resize(h, dw);
  ctx_W1.resize({d, d});
  ctx_W2.resize({d, d});
  ctx_b.resize({d});
  ctx_w.resize({d});
  mod_W_gamma.resize({d, 2 * d});
  mod_b_gamma.resize({d});
  mod_W_delta.resize({d, 2 * d});
  mod_b_delta.resize({d});
  match_W.resize({d, 4 * d});
  match_b.resize({d});
  match_w.resize({d});
  rel_W1.resize({d, d});
  rel_W2.resize({d, d});
  rel_W3.resize({d, 4});
  rel_b.resize({d});
  rel_w.resize({d});
  loc_W_r.resize({d, d});
  loc_W_o.resize({d, 2 * d});
  loc_W_f1.resize({d, d});
  loc_W_f2.resize({d, 2 * d});
  loc_b_f.resize({d});
  loc_w_f.resize({d});
  tmp_gru.resize(h, d);
  loc_W_conf.resize({H, d});
  loc_b_conf.resize({H});
  loc_W_off.resize({2 * H, d});
  loc_b_off.resize({2 * H});
}

template <typename T>
void ModelParams<T>::zero() {
  visit([](const std::string&, Tensor<T>& t) { t.fill(T(0)); });
}

template <typename T>
ModelParams<T> init_params(const ModelDims& dims, std::uint64_t seed, double scale) {
  ModelParams<T> p;
  p.resize(dims);
  Rng rng(seed);
  p.visit([&](const std::string& name, Tensor<T>& t) {
    // Registry convention: the last name component starts with 'b' exactly for
    // bias vectors ('w'/'W'/'U' prefix all trainable maps).
    const std::string leaf = name.substr(name.rfind('.') + 1);
    if (leaf[0] == 'b') {
      t.fill(T(0));
      return;
    }
    // Attention row vectors are [d] tensors acting as 1 x d maps.
    std::size_t fan_out = t.rank() == 2 ? t.dim(0) : 1;
    std::size_t fan_in = t.rank() == 2 ? t.dim(1) : t.dim(0);
    double bound = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(-bound, bound));
  });
  return p;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> init_params<float>(const ModelDims&, std::uint64_t, double);
template ModelParams<double> init_params<double>(const ModelDims&, std::uint64_t, double);

}  // namespace omrn
