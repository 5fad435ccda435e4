#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "omrn/gru.hpp"
#include "omrn/language.hpp"
#include "omrn/training.hpp"
#include "test_util.hpp"

using namespace omrn;

TEST_SUITE_BEGIN("language");

namespace {

ModelDims lang_dims(int feature_dim, int model) {
  ModelDims dims;
  dims.region_dim = feature_dim;
  dims.word_dim = feature_dim;
  dims.model = model;
  dims.num_widths = 1;
  return dims;
}

}  // namespace

TEST_CASE("zero parameters give a zero encoding and uniform attention") {
  auto s = test::hand_sample(4, 2, 6, 2, 31);  // M = 5 words, T = 2 objects
  auto dims = lang_dims(6, 8);
  ModelParams<double> p;
  p.resize(dims);

  LanguageTrace<double> trace;
  encode_words(s, p, dims, trace);
  for (std::size_t i = 0; i < trace.gru.out.size(); ++i) CHECK(trace.gru.out[i] == 0.0);

  build_objects(s, p, dims, trace);
  const std::size_t M = trace.attn.dim(1);
  REQUIRE(M == 5);
  for (std::size_t i = 0; i < trace.attn.size(); ++i)
    CHECK(trace.attn[i] == doctest::Approx(1.0 / 5.0).epsilon(1e-15));
  for (std::size_t i = 0; i < trace.objects.size(); ++i) CHECK(trace.objects[i] == 0.0);
}

TEST_CASE("a single word attends to itself exactly") {
  auto s = test::hand_sample(3, 2, 6, 1, 32);
  s.words = {7};
  s.nouns = {0};
  s.embeddings.resize({1, 6});
  for (int i = 0; i < 6; ++i) s.embeddings[i] = 0.2f * static_cast<float>(i + 1);

  auto dims = lang_dims(6, 8);
  auto p = init_params<double>(dims, 11);
  LanguageTrace<double> trace;
  encode_words(s, p, dims, trace);
  build_objects(s, p, dims, trace);

  CHECK(trace.attn.size() == 1);
  CHECK(trace.attn[0] == 1.0);
  // The object feature is the word feature concatenated with itself.
  const int d = dims.model;
  for (int i = 0; i < d; ++i) {
    CHECK(trace.objects[i] == trace.gru.out[i]);
    CHECK(trace.objects[d + i] == trace.gru.out[i]);
  }
}

TEST_CASE("attention rows are distributions") {
  auto s = test::hand_sample(5, 3, 10, 3, 33);
  auto dims = lang_dims(10, 12);
  auto p = init_params<double>(dims, 5);
  LanguageTrace<double> trace;
  encode_words(s, p, dims, trace);
  build_objects(s, p, dims, trace);
  const std::size_t T = trace.attn.dim(0), M = trace.attn.dim(1);
  REQUIRE(T == 3);
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0;
    for (std::size_t m = 0; m < M; ++m) {
      CHECK(trace.attn[t * M + m] > 0.0);
      sum += trace.attn[t * M + m];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

namespace {

struct ScalarGru {
  double Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;

  double step(double x, double h) const {
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    double z = sig(Wz * x + Uz * h + bz);
    double r = sig(Wr * x + Ur * h + br);
    double hc = std::tanh(Wh * x + r * (Uh * h) + bh);
    return (1.0 - z) * h + z * hc;
  }
};

void assign_scalar(GruDirParams<double>& p, const ScalarGru& g) {
  p.W_z[0] = g.Wz;
  p.U_z[0] = g.Uz;
  p.b_z[0] = g.bz;
  p.W_r[0] = g.Wr;
  p.U_r[0] = g.Ur;
  p.b_r[0] = g.br;
  p.W_h[0] = g.Wh;
  p.U_h[0] = g.Uh;
  p.b_h[0] = g.bh;
}

}  // namespace

TEST_CASE("the bidirectional recurrence matches a scalar oracle") {
  // Hidden size 1 per direction reduces every gate to scalar arithmetic that
  // can be recomputed independently.
  ScalarGru fw{0.5, 0.25, 0.1, 0.3, 0.2, -0.1, 0.8, 0.5, 0.05};
  ScalarGru bw{-0.4, 0.15, 0.0, 0.6, -0.3, 0.2, 0.7, 0.35, -0.1};
  BiGruParams<double> p;
  p.resize(1, 1);
  assign_scalar(p.fw, fw);
  assign_scalar(p.bw, bw);

  const double x[2] = {1.0, -0.5};
  BiGruTrace<double> trace;
  bigru_forward(x, 2, 1, 1, p, trace);

  double f1 = fw.step(x[0], 0.0);
  double f2 = fw.step(x[1], f1);
  double b2 = bw.step(x[1], 0.0);  // backward state covering words 1..1
  double b1 = bw.step(x[0], b2);   // backward state covering words 0..1
  REQUIRE(trace.out.size() == 4);
  CHECK(trace.out[0] == doctest::Approx(f1).epsilon(1e-15));
  CHECK(trace.out[1] == doctest::Approx(b1).epsilon(1e-15));
  CHECK(trace.out[2] == doctest::Approx(f2).epsilon(1e-15));
  CHECK(trace.out[3] == doctest::Approx(b2).epsilon(1e-15));
}

TEST_CASE("encoder gradients match finite differences") {
  auto s = test::hand_sample(3, 2, 3, 2, 34);  // M = 5, word_dim = 3
  auto dims = lang_dims(3, 4);
  auto p = init_params<double>(dims, 9);

  // Fixed projection so the scalar loss sum(g * objects) exercises every
  // object coordinate.
  Rng rng(77);
  LanguageTrace<double> trace;
  encode_words(s, p, dims, trace);
  build_objects(s, p, dims, trace);
  Tensor<double> g_obj(trace.objects.shape());
  for (std::size_t i = 0; i < g_obj.size(); ++i) g_obj[i] = rng.uniform(-1, 1);

  auto loss = [&](ModelParams<double>& q) {
    LanguageTrace<double> tr;
    encode_words(s, q, dims, tr);
    build_objects(s, q, dims, tr);
    double acc = 0;
    for (std::size_t i = 0; i < g_obj.size(); ++i) acc += g_obj[i] * tr.objects[i];
    return acc;
  };

  ModelParams<double> grads;
  grads.resize(dims);
  language_backward(s, p, dims, trace, g_obj, grads);

  const double h = 1e-6;
  std::size_t checked = 0;
  p.visit([&](const std::string& name, Tensor<double>& t) {
    if (name.rfind("lang_gru", 0) != 0 && name.rfind("ctx.", 0) != 0) return;
    Tensor<double>* g = nullptr;
    grads.visit([&](const std::string& gname, Tensor<double>& gt) {
      if (gname == name) g = &gt;
    });
    for (std::size_t i = 0; i < t.size(); i += 3) {  // probe a spread of entries
      const double keep = t[i];
      t[i] = keep + h;
      const double up = loss(p);
      t[i] = keep - h;
      const double down = loss(p);
      t[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double denom = std::max(1e-8, std::abs(fd) + std::abs((*g)[i]));
      CHECK(std::abs(fd - (*g)[i]) / denom < 1e-5);
      ++checked;
    }
  });
  CHECK(checked > 30);
}

TEST_SUITE_END();
