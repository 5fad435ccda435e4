#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "omrn/data.hpp"
#include "omrn/geometry.hpp"
#include "test_util.hpp"

using namespace omrn;

TEST_SUITE_BEGIN("data");

namespace {

SynthConfig small_cfg(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.num_samples = 3;
  cfg.frames = 10;
  cfg.regions = 5;
  cfg.objects = 3;
  cfg.feature_dim = 12;
  cfg.noise_std = 0.0;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  auto a = generate_synthetic(small_cfg(7));
  auto b = generate_synthetic(small_cfg(7));
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(test::bitwise_equal(a.samples[i].features, b.samples[i].features));
    CHECK(test::bitwise_equal(a.samples[i].boxes, b.samples[i].boxes));
    CHECK(test::bitwise_equal(a.samples[i].embeddings, b.samples[i].embeddings));
    CHECK(a.samples[i].words == b.samples[i].words);
    CHECK(a.samples[i].nouns == b.samples[i].nouns);
    CHECK(a.samples[i].gt_segment.s == b.samples[i].gt_segment.s);
    CHECK(a.samples[i].gt_segment.e == b.samples[i].gt_segment.e);
  }
  auto c = generate_synthetic(small_cfg(8));
  CHECK_FALSE(test::bitwise_equal(a.samples[0].features, c.samples[0].features));
}

TEST_CASE("generated samples plant a recoverable tube") {
  auto ds = generate_synthetic(small_cfg(5));
  CHECK(ds.region_dim == 12);
  CHECK(ds.word_dim == 12);
  for (const auto& s : ds.samples) {
    REQUIRE(s.gt_segment.s >= 1);
    REQUIRE(s.gt_segment.e <= s.frames);
    REQUIRE(s.gt_boxes.size() == static_cast<std::size_t>(s.gt_segment.length()));
    // The sentence is the objects plus a fixed tail of filler words.
    CHECK(s.sentence_len() == 3 + 5);
    CHECK(s.num_objects() == 3);
    for (int idx : s.nouns) {
      CHECK(idx >= 0);
      CHECK(idx < s.sentence_len());
    }

    const int D = 12;
    std::vector<float> planted;  // main-object feature, should repeat verbatim
    for (int n = s.gt_segment.s; n <= s.gt_segment.e; ++n) {
      const BoundingBox gt = s.gt_boxes[static_cast<std::size_t>(n - s.gt_segment.s)];
      int carrier = -1;
      for (int k = 0; k < s.regions; ++k) {
        BoundingBox b = s.box(n, k);
        if (b.x == gt.x && b.y == gt.y && b.w == gt.w && b.h == gt.h) {
          REQUIRE(carrier == -1);  // exactly one region rides the truth box
          carrier = k;
        } else {
          // Every other region is spatially disjoint from the truth.
          CHECK(box_iou(b, gt) == 0.0);
        }
      }
      REQUIRE(carrier >= 0);
      const float* f =
          s.features.data() + (static_cast<std::size_t>(n - 1) * s.regions + carrier) * D;
      if (planted.empty()) {
        planted.assign(f, f + D);
        // Noise-free planting copies the queried word embedding exactly.
        const float* emb = s.embeddings.data() + static_cast<std::size_t>(s.nouns[0]) * D;
        CHECK(std::memcmp(planted.data(), emb, sizeof(float) * D) == 0);
      } else {
        CHECK(std::memcmp(planted.data(), f, sizeof(float) * D) == 0);
      }
    }
  }
}

TEST_CASE("generation rejects inconsistent configs") {
  auto cfg = small_cfg(1);
  cfg.objects = 9;  // more objects than region slots
  CHECK_THROWS_AS(generate_synthetic(cfg), ValidationError);
  cfg = small_cfg(1);
  cfg.frames = 0;
  CHECK_THROWS_AS(generate_synthetic(cfg), ValidationError);
  cfg = small_cfg(1);
  cfg.noise_std = -0.1;
  CHECK_THROWS_AS(generate_synthetic(cfg), ValidationError);
}

TEST_CASE("a single-frame video is generatable") {
  auto cfg = small_cfg(2);
  cfg.frames = 1;
  cfg.num_samples = 1;
  auto ds = generate_synthetic(cfg);
  CHECK(ds.samples[0].gt_segment.s == 1);
  CHECK(ds.samples[0].gt_segment.e == 1);
  CHECK(ds.samples[0].gt_boxes.size() == 1);
}

TEST_CASE("datasets round trip through disk") {
  auto dir = test::scratch_dir("ds_roundtrip");
  auto ds = generate_synthetic(small_cfg(9));
  write_dataset(ds, dir.string());
  auto back = load_dataset((dir / "manifest.json").string());
  CHECK(back.region_dim == ds.region_dim);
  CHECK(back.word_dim == ds.word_dim);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& a = ds.samples[i];
    const auto& b = back.samples[i];
    CHECK(a.id == b.id);
    CHECK(test::bitwise_equal(a.features, b.features));
    CHECK(test::bitwise_equal(a.boxes, b.boxes));
    CHECK(test::bitwise_equal(a.embeddings, b.embeddings));
    CHECK(a.words == b.words);
    CHECK(a.nouns == b.nouns);
    CHECK(a.gt_segment.s == b.gt_segment.s);
    CHECK(a.gt_segment.e == b.gt_segment.e);
    REQUIRE(a.gt_boxes.size() == b.gt_boxes.size());
    for (std::size_t j = 0; j < a.gt_boxes.size(); ++j) {
      CHECK(a.gt_boxes[j].x == b.gt_boxes[j].x);
      CHECK(a.gt_boxes[j].w == b.gt_boxes[j].w);
    }
  }
  // Writing the same dataset twice produces identical bytes.
  auto dir2 = test::scratch_dir("ds_roundtrip2");
  write_dataset(ds, dir2.string());
  CHECK(test::slurp(dir / "manifest.json") == test::slurp(dir2 / "manifest.json"));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("loading rejects tampered files") {
  auto dir = test::scratch_dir("ds_tamper");
  auto ds = generate_synthetic(small_cfg(3));
  write_dataset(ds, dir.string());
  auto manifest = (dir / "manifest.json").string();

  SUBCASE("missing tensor file") {
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.path().extension() == ".bin") {
        std::filesystem::remove(entry.path());
        break;
      }
    CHECK_THROWS_AS(load_dataset(manifest), ValidationError);
  }
  SUBCASE("truncated tensor file") {
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.path().extension() == ".bin") {
        std::filesystem::resize_file(entry.path(),
                                     std::filesystem::file_size(entry.path()) / 2);
        break;
      }
    CHECK_THROWS_AS(load_dataset(manifest), ValidationError);
  }
  SUBCASE("broken JSON") {
    std::ofstream out(manifest, std::ios::app);
    out << "}}}";
    out.close();
    CHECK_THROWS_AS(load_dataset(manifest), ValidationError);
  }
  SUBCASE("missing manifest") {
    CHECK_THROWS_AS(load_dataset((dir / "nope.json").string()), ValidationError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("ground-truth tubes mirror the samples") {
  auto ds = generate_synthetic(small_cfg(4));
  auto tubes = ground_truth_tubes(ds);
  REQUIRE(tubes.size() == ds.samples.size());
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    CHECK(tubes[i].id == ds.samples[i].id);
    CHECK(tubes[i].segment.s == ds.samples[i].gt_segment.s);
    CHECK(tubes[i].boxes.size() == ds.samples[i].gt_boxes.size());
  }
}

TEST_SUITE_END();
