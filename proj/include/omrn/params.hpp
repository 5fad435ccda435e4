#pragma once

#include <cstdint>
#include <string>

#include "omrn/config.hpp"
#include "omrn/gru.hpp"
#include "omrn/tensor.hpp"

namespace omrn {

// Width bookkeeping shared by every stage.  `model` is the common projection
// width d; word features are d wide (bi-GRU with d/2 per direction), object
// features 2d (word feature plus attended context).
struct ModelDims {
  int region_dim = 0;   // raw region feature width from the dataset
  int word_dim = 0;     // word embedding width from the dataset
  int model = 256;      // d; must be even
  int num_widths = 9;   // H

  int hidden() const { return model / 2; }
  int object() const { return 2 * model; }

  void validate() const;
};

// Every trainable tensor, visitable in a fixed registry order.  The same
// struct doubles as the gradient and Adam moment holder.
template <typename T>
struct ModelParams {
  // temporal aggregation: region projection
  Tensor<T> agg_W, agg_b;  // [d, region_dim], [d]
  // language encoder
  BiGruParams<T> lang_gru;               // input word_dim, hidden d/2
  Tensor<T> ctx_W1, ctx_W2;              // [d, d]
  Tensor<T> ctx_b, ctx_w;                // [d]
  // relation network: modulation, matching
  Tensor<T> mod_W_gamma, mod_W_delta;    // [d, 2d]
  Tensor<T> mod_b_gamma, mod_b_delta;    // [d]
  Tensor<T> match_W;                     // [d, 4d]
  Tensor<T> match_b, match_w;            // [d]
  // relation reasoning
  Tensor<T> rel_W1, rel_W2;              // [d, d]
  Tensor<T> rel_W3;                      // [d, 4]
  Tensor<T> rel_b, rel_w;                // [d]
  // localizer
  Tensor<T> loc_W_r;                     // [d, d]
  Tensor<T> loc_W_o;                     // [d, 2d]
  Tensor<T> loc_W_f1;                    // [d, d]
  Tensor<T> loc_W_f2;                    // [d, 2d]
  Tensor<T> loc_b_f, loc_w_f;            // [d]
  BiGruParams<T> tmp_gru;                // input d, hidden d/2
  Tensor<T> loc_W_conf;                  // [H, d]
  Tensor<T> loc_b_conf;                  // [H]
  Tensor<T> loc_W_off;                   // [2H, d]
  Tensor<T> loc_b_off;                   // [2H]

  void resize(const ModelDims& dims);
  void zero();

  template <typename F>
  void visit(F&& f) {
    f("agg.W", agg_W);
    f("agg.b", agg_b);
    lang_gru.visit("lang_gru", f);
    f("ctx.W1", ctx_W1);
    f("ctx.W2", ctx_W2);
    f("ctx.b", ctx_b);
    f("ctx.w", ctx_w);
    f("mod.W_gamma", mod_W_gamma);
    f("mod.b_gamma", mod_b_gamma);
    f("mod.W_delta", mod_W_delta);
    f("mod.b_delta", mod_b_delta);
    f("match.W", match_W);
    f("match.b", match_b);
    f("match.w", match_w);
    f("rel.W1", rel_W1);
    f("rel.W2", rel_W2);
    f("rel.W3", rel_W3);
    f("rel.b", rel_b);
    f("rel.w", rel_w);
    f("loc.W_r", loc_W_r);
    f("loc.W_o", loc_W_o);
    f("loc.W_f1", loc_W_f1);
    f("loc.W_f2", loc_W_f2);
    f("loc.b_f", loc_b_f);
    f("loc.w_f", loc_w_f);
    tmp_gru.visit("tmp_gru", f);
    f("loc.W_conf", loc_W_conf);
    f("loc.b_conf", loc_b_conf);
    f("loc.W_off", loc_W_off);
    f("loc.b_off", loc_b_off);
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    auto* self = const_cast<ModelParams<T>*>(this);
    // Collect in registry order on both sides; shapes carry over via cast().
    std::vector<Tensor<T>*> src;
    self->visit([&](const std::string&, Tensor<T>& t) { src.push_back(&t); });
    std::size_t i = 0;
    out.visit([&](const std::string&, Tensor<U>& t) { t = src[i++]->template cast<U>(); });
    return out;
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    const_cast<ModelParams<T>*>(this)->visit(
        [&](const std::string&, Tensor<T>& t) { n += t.size(); });
    return n;
  }
};

// Uniform init with bound scale * sqrt(6 / (fan_in + fan_out)) per weight
// matrix (row vectors count as 1 x d); biases zero.  Deterministic in `seed`:
// draws happen in registry order from a single stream.
template <typename T>
ModelParams<T> init_params(const ModelDims& dims, std::uint64_t seed, double scale = 1.0);

}  // namespace omrn
