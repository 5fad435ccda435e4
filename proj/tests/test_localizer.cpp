#include <cmath>
#include <vector>

#include "doctest.h"
#include "omrn/localizer.hpp"
#include "omrn/model.hpp"
#include "omrn/training.hpp"
#include "test_util.hpp"

using namespace omrn;

TEST_SUITE_BEGIN("localizer");

TEST_CASE("candidate windows follow the clamped centering rule") {
  auto cands = candidate_segments(6, {3});
  REQUIRE(cands.size() == 6);
  CHECK(cands[4].s == 4);  // center 5, symmetric width 3
  CHECK(cands[4].e == 6);
  CHECK(cands[0].s == 1);  // center 1 loses its left wing
  CHECK(cands[0].e == 2);
  CHECK(cands[5].s == 5);  // center 6 loses its right wing
  CHECK(cands[5].e == 6);

  auto wide = candidate_segments(20, {9});
  CHECK(wide[0].s == 1);
  CHECK(wide[0].e == 5);
  CHECK(wide[9].s == 6);  // center 10 fits fully
  CHECK(wide[9].e == 14);

  // Even widths put the extra frame after the center.
  auto even = candidate_segments(20, {4});
  CHECK(even[4].s == 4);  // center 5
  CHECK(even[4].e == 7);

  // Width 1 collapses to the center itself.
  auto point = candidate_segments(5, {1});
  for (int n = 1; n <= 5; ++n) {
    CHECK(point[static_cast<std::size_t>(n - 1)].s == n);
    CHECK(point[static_cast<std::size_t>(n - 1)].e == n);
  }
}

TEST_CASE("candidates are emitted center-major with duplicates kept") {
  auto cands = candidate_segments(10, {3, 9});
  REQUIRE(cands.size() == 20);
  // Index (n-1)*H + h: center 4 with width 9 sits at 3*2 + 1.
  CHECK(cands[7].s == 1);
  CHECK(cands[7].e == 8);

  // A width beyond the video clamps every candidate to the full range.
  auto oversized = candidate_segments(6, {15});
  REQUIRE(oversized.size() == 6);
  for (const auto& c : oversized) {
    CHECK(c.s == 1);
    CHECK(c.e == 6);
  }
}

TEST_CASE("candidate generation validates its inputs") {
  CHECK_THROWS_AS(candidate_segments(0, {3}), ValidationError);
  CHECK_THROWS_AS(candidate_segments(5, {}), ValidationError);
  CHECK_THROWS_AS(candidate_segments(5, {3, 0}), ValidationError);
}

TEST_CASE("zero head parameters give indifferent confidences") {
  ModelDims dims;
  dims.region_dim = 4;
  dims.word_dim = 4;
  dims.model = 8;
  dims.num_widths = 3;
  ModelParams<double> p;
  p.resize(dims);
  LocalizerTrace<double> trace;
  trace.frame_feat.resize({5, 8});
  temporal_heads(p, dims, trace);
  REQUIRE(trace.conf.size() == 15);
  for (std::size_t i = 0; i < trace.conf.size(); ++i) CHECK(trace.conf[i] == 0.5);
  for (std::size_t i = 0; i < trace.offsets.size(); ++i) CHECK(trace.offsets[i] == 0.0);
}

TEST_CASE("spatial loss is the clamped soft cross entropy") {
  LocalizerTrace<double> tr;
  tr.spatial.resize({4, 3});
  Tensor<double> targets({4, 3});

  SUBCASE("indifferent scores cost log 2 against empty targets") {
    tr.spatial.fill(0.5);
    CHECK(spatial_loss(tr, targets, Segment{2, 3}, 1e-7) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("soft targets at one half cost the same log 2") {
    tr.spatial.fill(0.5);
    targets.fill(0.5);
    CHECK(spatial_loss(tr, targets, Segment{1, 4}, 1e-7) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("a saturated correct score costs almost nothing") {
    tr.spatial.fill(1.0);
    targets.fill(1.0);
    CHECK(spatial_loss(tr, targets, Segment{1, 4}, 1e-7) < 1e-6);
    CHECK(spatial_loss(tr, targets, Segment{1, 4}, 1e-7) > 0.0);
  }
  SUBCASE("it reproduces the scalar formula") {
    Rng rng(3);
    for (std::size_t i = 0; i < tr.spatial.size(); ++i) {
      tr.spatial[i] = rng.uniform(0.05, 0.95);
      targets[i] = rng.uniform(0.0, 1.0);
    }
    const Segment gt{2, 4};
    double expected = 0;
    for (int n = gt.s; n <= gt.e; ++n)
      for (int k = 0; k < 3; ++k) {
        const double p = tr.spatial[static_cast<std::size_t>(n - 1) * 3 + k];
        const double y = targets[static_cast<std::size_t>(n - 1) * 3 + k];
        expected += -(y * std::log(p) + (1 - y) * std::log(1 - p));
      }
    expected /= 9.0;
    CHECK(spatial_loss(tr, targets, gt, 1e-7) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("segments outside the video are rejected") {
    CHECK_THROWS_AS(spatial_loss(tr, targets, Segment{0, 3}, 1e-7), ValidationError);
    CHECK_THROWS_AS(spatial_loss(tr, targets, Segment{3, 7}, 1e-7), ValidationError);
  }
}

TEST_CASE("temporal loss is minimized where confidence equals the target") {
  LocalizerTrace<double> tr;
  tr.conf.resize({5, 2});
  Tensor<double> targets({5, 2});

  SUBCASE("indifferent confidences against empty targets cost log 2") {
    tr.conf.fill(0.5);
    CHECK(temporal_loss(tr, targets, 1e-7) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("matching the soft targets is a strict local minimum") {
    Rng rng(5);
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = rng.uniform(0.1, 0.9);
    for (std::size_t i = 0; i < targets.size(); ++i) tr.conf[i] = targets[i];
    const double at_target = temporal_loss(tr, targets, 1e-7);
    for (std::size_t i = 0; i < targets.size(); ++i) tr.conf[i] = targets[i] + 0.03;
    CHECK(temporal_loss(tr, targets, 1e-7) > at_target);
    for (std::size_t i = 0; i < targets.size(); ++i) tr.conf[i] = targets[i] - 0.03;
    CHECK(temporal_loss(tr, targets, 1e-7) > at_target);
  }
}

TEST_CASE("regression trains the single most confident head") {
  const auto candidates = candidate_segments(6, {3, 5});
  LocalizerTrace<double> tr;
  tr.conf.resize({6, 2});
  tr.conf.fill(0.2);
  tr.offsets.resize({6, 4});
  // Peak at center 3, width 5: candidate [1, 5].
  tr.conf[2 * 2 + 1] = 0.9;
  const Segment gt{2, 4};  // offset targets: start -1, end +1

  SUBCASE("exact offsets cost nothing") {
    tr.offsets[2 * 4 + 2] = -1.0;
    tr.offsets[2 * 4 + 3] = 1.0;
    CHECK(regression_loss(tr, candidates, gt, 1.0) == 0.0);
    CHECK(tr.sel_n == 2);
    CHECK(tr.sel_h == 1);
  }
  SUBCASE("a small residual is quadratic") {
    tr.offsets[2 * 4 + 2] = -0.5;  // start residual 0.5
    tr.offsets[2 * 4 + 3] = 1.0;
    CHECK(regression_loss(tr, candidates, gt, 1.0) == doctest::Approx(0.125).epsilon(1e-12));
  }
  SUBCASE("a large residual is linear") {
    tr.offsets[2 * 4 + 2] = 1.0;  // start residual 2.0
    tr.offsets[2 * 4 + 3] = 1.0;
    CHECK(regression_loss(tr, candidates, gt, 1.0) == doctest::Approx(1.5).epsilon(1e-12));
  }
  SUBCASE("both boundaries add up") {
    tr.offsets[2 * 4 + 2] = -0.5;
    tr.offsets[2 * 4 + 3] = 1.5;
    CHECK(regression_loss(tr, candidates, gt, 1.0) == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("confidence ties pick the first head in scan order") {
  Tensor<double> conf({4, 3});
  conf.fill(0.7);
  int n = -1, h = -1;
  select_best_head(conf, n, h);
  CHECK(n == 0);
  CHECK(h == 0);
  conf[7] = 0.9;  // (n=2, h=1)
  select_best_head(conf, n, h);
  CHECK(n == 2);
  CHECK(h == 1);
}

namespace {

// Sample, cache and a blank trace sized for hand-filled decoding tests.
struct DecodeFixture {
  VideoSample s;
  ModelConfig cfg;
  ModelDims dims;
  SampleCache<double> cache;
  ForwardTrace<double> trace;

  DecodeFixture() : s(test::hand_sample(6, 2, 4, 1, 61)) {
    cfg.model_dim = 8;
    cfg.loc.widths = {3};
    dims = dims_for(4, 4, cfg);
    cache = build_cache<double>(s, cfg);
    trace.loc.conf.resize({6, 1});
    trace.loc.conf.fill(0.1);
    trace.loc.offsets.resize({6, 2});
    trace.loc.spatial.resize({6, 2});
  }
};

}  // namespace

TEST_CASE("inference decodes the best head with offset refinement") {
  DecodeFixture f;
  f.trace.loc.conf[2] = 0.9;  // center 3 -> candidate [2, 4]
  f.trace.loc.offsets[4] = 0.4;
  f.trace.loc.offsets[5] = -0.6;
  for (int n = 0; n < 6; ++n) f.trace.loc.spatial[n * 2 + 1] = 0.8;  // region 1 everywhere
  f.trace.loc.spatial[3 * 2 + 1] = 0.0;  // except frame 4, where region 0 wins

  auto pred = infer_sample(f.s, f.cache, f.trace, f.dims);
  CHECK(pred.id == f.s.id);
  CHECK(pred.confidence == 0.9);
  CHECK(pred.raw_segment.s == 2);
  CHECK(pred.raw_segment.e == 4);
  CHECK(pred.offset_s == 0.4);
  CHECK(pred.offset_e == -0.6);
  // start = round(2 - 0.4) = 2, end = round(4 + 0.6) = 5
  CHECK(pred.segment.s == 2);
  CHECK(pred.segment.e == 5);
  REQUIRE(pred.boxes.size() == 4);
  auto expect_box = [&](int n, int k, const BoundingBox& b) {
    auto want = f.s.box(n, k);
    CHECK(b.x == want.x);
    CHECK(b.y == want.y);
    CHECK(b.w == want.w);
    CHECK(b.h == want.h);
  };
  expect_box(2, 1, pred.boxes[0]);
  expect_box(3, 1, pred.boxes[1]);
  expect_box(4, 0, pred.boxes[2]);  // the hand-planted argmax flip
  expect_box(5, 1, pred.boxes[3]);
}

TEST_CASE("boundary decoding rounds half away from zero") {
  DecodeFixture f;
  f.trace.loc.conf[2] = 0.9;  // candidate [2, 4]
  f.trace.loc.offsets[4] = 0.5;  // start = round(1.5) = 2
  f.trace.loc.offsets[5] = -0.5;  // end = round(4.5) = 5
  auto pred = infer_sample(f.s, f.cache, f.trace, f.dims);
  CHECK(pred.segment.s == 2);
  CHECK(pred.segment.e == 5);
}

TEST_CASE("boundary decoding clamps to the video") {
  DecodeFixture f;
  f.trace.loc.conf[2] = 0.9;  // candidate [2, 4]
  f.trace.loc.offsets[4] = 8.0;   // start would be -6
  f.trace.loc.offsets[5] = -9.0;  // end would be 13
  auto pred = infer_sample(f.s, f.cache, f.trace, f.dims);
  CHECK(pred.segment.s == 1);
  CHECK(pred.segment.e == 6);
}

TEST_CASE("inverted boundaries are reordered") {
  DecodeFixture f;
  f.trace.loc.conf[2] = 0.9;  // candidate [2, 4]
  f.trace.loc.offsets[4] = -3.0;  // start 5
  f.trace.loc.offsets[5] = 3.0;   // end 1
  auto pred = infer_sample(f.s, f.cache, f.trace, f.dims);
  CHECK(pred.segment.s == 1);
  CHECK(pred.segment.e == 5);
}

TEST_CASE("an inference tie picks the first candidate") {
  DecodeFixture f;  // conf uniformly 0.1
  auto pred = infer_sample(f.s, f.cache, f.trace, f.dims);
  CHECK(pred.raw_segment.s == f.cache.candidates[0].s);
  CHECK(pred.raw_segment.e == f.cache.candidates[0].e);
}

TEST_CASE("the composite loss weights its terms") {
  auto s = test::hand_sample(5, 3, 6, 2, 62);
  ModelConfig cfg;
  cfg.model_dim = 8;
  cfg.loc.widths = {3, 5};
  cfg.loc.weights.spatial = 1.0;
  cfg.loc.weights.temporal = 1.0;
  cfg.loc.weights.regression = 0.001;
  cfg.loc.weights.diversity = 1.0;
  auto dims = dims_for(6, 6, cfg);
  auto p = init_params<double>(dims, 19);
  auto cache = build_cache<double>(s, cfg);
  ForwardTrace<double> trace;
  forward_full(s, cache, p, cfg, dims, trace);
  auto losses = compute_losses(s, cache, trace, cfg);
  CHECK(losses.spatial >= 0.0);
  CHECK(losses.temporal >= 0.0);
  CHECK(losses.regression >= 0.0);
  CHECK(losses.diversity > 0.0);
  CHECK(losses.total == doctest::Approx(losses.spatial + losses.temporal +
                                        0.001 * losses.regression + losses.diversity)
                            .epsilon(1e-12));

  // Dropping a weight removes exactly that term.
  cfg.loc.weights.temporal = 0.0;
  auto again = compute_losses(s, cache, trace, cfg);
  CHECK(again.temporal == losses.temporal);  // the raw term is still reported
  CHECK(again.total == doctest::Approx(losses.total - losses.temporal).epsilon(1e-12));
}

TEST_SUITE_END();
