#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "omrn/model.hpp"
#include "omrn/reference.hpp"
#include "omrn/training.hpp"
#include "test_util.hpp"

using namespace omrn;

TEST_SUITE_BEGIN("relation");

namespace {

// End-to-end forward state on a hand-built sample; relation tests mostly poke
// at trace.rel with real upstream activations feeding it.
struct Fixture {
  VideoSample s;
  ModelConfig cfg;
  ModelDims dims;
  ModelParams<double> p;
  SampleCache<double> cache;
  ForwardTrace<double> trace;

  Fixture(int N, int K, int D, int T, std::uint64_t data_seed, std::uint64_t param_seed)
      : s(test::hand_sample(N, K, D, T, data_seed)) {
    cfg.model_dim = 8;
    cfg.loc.widths = {3};
    dims = dims_for(D, D, cfg);
    p = init_params<double>(dims, param_seed);
    cache = build_cache<double>(s, cfg);
  }

  void run() { forward_full(s, cache, p, cfg, dims, trace); }
};

}  // namespace

TEST_CASE("zero matching parameters give exactly uniform distributions") {
  Fixture f(4, 4, 6, 2, 41, 3);
  f.p.match_W.fill(0);
  f.p.match_b.fill(0);
  f.p.match_w.fill(0);
  f.run();
  for (std::size_t i = 0; i < f.trace.rel.dist.size(); ++i)
    CHECK(f.trace.rel.dist[i] == 0.25);
}

TEST_CASE("a single region gets the whole distribution") {
  Fixture f(4, 1, 6, 2, 42, 4);
  f.run();
  for (std::size_t i = 0; i < f.trace.rel.dist.size(); ++i) CHECK(f.trace.rel.dist[i] == 1.0);
}

TEST_CASE("matching rows are strictly positive distributions") {
  Fixture f(5, 4, 6, 3, 43, 5);
  f.run();
  const auto& dist = f.trace.rel.dist;
  const std::size_t T = dist.dim(0), N = dist.dim(1), K = dist.dim(2);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n) {
      double sum = 0;
      for (std::size_t k = 0; k < K; ++k) {
        CHECK(dist[(t * N + n) * K + k] > 0.0);
        sum += dist[(t * N + n) * K + k];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
}

TEST_CASE("permuting regions permutes the matching distribution") {
  Fixture f(4, 5, 6, 2, 44, 6);
  f.run();
  const auto& rel = f.trace.rel;
  const std::size_t T = rel.dist.dim(0), N = rel.dist.dim(1), K = rel.dist.dim(2);
  const std::size_t d = static_cast<std::size_t>(f.dims.model);

  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  RelationTrace<double> shuffled = rel;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t k = 0; k < K; ++k) {
        const double* src = rel.modulated.data() + (((t * N) + n) * K + k) * d;
        double* dst = shuffled.modulated.data() + (((t * N) + n) * K + perm[k]) * d;
        std::copy(src, src + d, dst);
      }
  match(f.trace.lang.objects, f.p, f.dims, shuffled);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t k = 0; k < K; ++k)
        CHECK(shuffled.dist[(t * N + n) * K + perm[k]] ==
              doctest::Approx(rel.dist[(t * N + n) * K + k]).epsilon(1e-12));
}

TEST_CASE("the factored matching kernel equals the literal concatenation") {
  Fixture f(5, 4, 6, 3, 45, 7);
  f.run();
  RelationTrace<double> literal = f.trace.rel;
  ref::match_concat(f.trace.lang.objects, f.p, f.dims, literal);
  for (std::size_t i = 0; i < literal.dist.size(); ++i) {
    CHECK(f.trace.rel.match_logits[i] ==
          doctest::Approx(literal.match_logits[i]).epsilon(1e-12));
    CHECK(f.trace.rel.dist[i] == doctest::Approx(literal.dist[i]).epsilon(1e-12));
  }
}

TEST_CASE("the shared-projection relation kernel equals the literal one") {
  Fixture f(4, 4, 6, 3, 46, 8);
  f.run();
  RelationTrace<double> literal = f.trace.rel;
  ref::relate_literal(f.cache.relgeo, f.p, f.dims, literal);
  REQUIRE(literal.fused.size() == f.trace.rel.fused.size());
  for (std::size_t i = 0; i < literal.fused.size(); ++i)
    CHECK(f.trace.rel.fused[i] == doctest::Approx(literal.fused[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < literal.rel_attn.size(); ++i)
    CHECK(f.trace.rel.rel_attn[i] == doctest::Approx(literal.rel_attn[i]).epsilon(1e-12));
}

TEST_CASE("relation attention rows are distributions") {
  Fixture f(4, 3, 6, 3, 47, 9);
  f.run();
  const auto& attn = f.trace.rel.rel_attn;  // [N, K, T-1, K]
  const std::size_t rows = attn.size() / attn.dim(3);
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0;
    for (std::size_t l = 0; l < attn.dim(3); ++l) sum += attn[r * attn.dim(3) + l];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("a lone branch fuses to its rectified features") {
  Fixture f(4, 3, 6, 1, 48, 10);
  f.run();
  const auto& rel = f.trace.rel;
  REQUIRE(rel.fused.size() == rel.modulated.size());  // T = 1
  for (std::size_t i = 0; i < rel.fused.size(); ++i)
    CHECK(rel.fused[i] == std::max(0.0, rel.modulated[i]));
}

TEST_CASE("modulation applies the gate and shift verbatim") {
  Fixture f(3, 2, 6, 2, 49, 11);
  // Zero weights make the gates depend on the biases alone.
  f.p.mod_W_gamma.fill(0);
  f.p.mod_W_delta.fill(0);
  f.p.mod_b_gamma.fill(0);
  for (std::size_t i = 0; i < f.p.mod_b_delta.size(); ++i) f.p.mod_b_delta[i] = 0.5;
  f.run();
  // gamma = tanh(0) = 0, delta = tanh(0.5): the features are erased and the
  // shift broadcast everywhere.
  for (std::size_t i = 0; i < f.trace.rel.modulated.size(); ++i)
    CHECK(f.trace.rel.modulated[i] == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("diversity of uniform branches is one over the region count") {
  Fixture f(4, 4, 6, 2, 50, 12);
  f.p.match_W.fill(0);
  f.p.match_b.fill(0);
  f.p.match_w.fill(0);
  f.run();
  CHECK(diversity_loss(f.trace.rel, Segment{2, 2}) == 0.25);
  // More ground-truth frames change nothing: every pair contributes 0.25.
  CHECK(diversity_loss(f.trace.rel, Segment{1, 4}) == 0.25);
}

TEST_CASE("diversity spans its range on hand-built distributions") {
  const std::size_t T = 3, N = 4, K = 5;
  RelationTrace<double> rt;
  rt.dist.resize({T, N, K});

  SUBCASE("identical spikes maximize it") {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t n = 0; n < N; ++n) rt.dist[(t * N + n) * K + 2] = 1.0;
    CHECK(diversity_loss(rt, Segment{1, 4}) == 1.0);
  }
  SUBCASE("disjoint spikes zero it") {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t n = 0; n < N; ++n) rt.dist[(t * N + n) * K + t] = 1.0;
    CHECK(diversity_loss(rt, Segment{1, 4}) == 0.0);
  }
  SUBCASE("it only looks at ground-truth frames") {
    // Identical spikes inside the segment, disjoint outside.
    for (std::size_t t = 0; t < T; ++t) {
      rt.dist[(t * N + 0) * K + t] = 1.0;  // frame 1: disjoint
      for (std::size_t n = 1; n < N; ++n) rt.dist[(t * N + n) * K + 4] = 1.0;
    }
    CHECK(diversity_loss(rt, Segment{2, 4}) == 1.0);
  }
}

TEST_CASE("a lone branch has zero diversity") {
  Fixture f(4, 3, 6, 1, 51, 13);
  f.run();
  CHECK(diversity_loss(f.trace.rel, f.s.gt_segment) == 0.0);
}

TEST_CASE("diversity rejects segments outside the video") {
  Fixture f(4, 3, 6, 2, 52, 14);
  f.run();
  CHECK_THROWS_AS(diversity_loss(f.trace.rel, Segment{0, 2}), ValidationError);
  CHECK_THROWS_AS(diversity_loss(f.trace.rel, Segment{2, 9}), ValidationError);
}

TEST_CASE("diversity gradients match finite differences") {
  const std::size_t T = 2, N = 3, K = 4;
  Rng rng(99);
  RelationTrace<double> rt;
  rt.dist.resize({T, N, K});
  for (std::size_t i = 0; i < rt.dist.size(); ++i) rt.dist[i] = rng.uniform(0.05, 1.0);
  const Segment gt{1, 2};

  Tensor<double> g(rt.dist.shape());
  diversity_backward(rt, gt, 1.0, g);

  const double h = 1e-6;
  for (std::size_t i = 0; i < rt.dist.size(); ++i) {
    const double keep = rt.dist[i];
    rt.dist[i] = keep + h;
    const double up = diversity_loss(rt, gt);
    rt.dist[i] = keep - h;
    const double down = diversity_loss(rt, gt);
    rt.dist[i] = keep;
    const double fd = (up - down) / (2 * h);
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_SUITE_END();
